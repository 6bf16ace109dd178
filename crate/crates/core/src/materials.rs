//! Hyperelastic constitutive laws with volumetric stabilization.
//!
//! All tensors are 3×3. Two-dimensional plane-strain states embed the in-plane
//! gradient with an out-of-plane stretch of one, so every formula below applies
//! unchanged in both dimensions.
//!
//! The first Piola–Kirchhoff stress is split into three parts:
//!
//! * the isochoric part, built from the isotropic invariants and the only part
//!   that changes between [`InvariantMode`]s,
//! * the fiber part of the standard reinforcing model (`I4`, `I5` terms, never
//!   modified or projected),
//! * the volumetric penalty `κs ln(J) F⁻ᵀ`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Tensor = Matrix3<f64>;

/// Deformation gradient with a cached determinant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DefGrad {
    f: Tensor,
    det: f64,
}

impl DefGrad {
    pub fn new(f: Tensor) -> Self {
        Self {
            det: f.determinant(),
            f,
        }
    }

    /// Plane-strain embedding of a 2×2 gradient.
    pub fn from_plane(f: Matrix2<f64>) -> Self {
        let mut full = Tensor::identity();
        full.fixed_view_mut::<2, 2>(0, 0).copy_from(&f);
        Self::new(full)
    }

    pub fn identity() -> Self {
        Self::new(Tensor::identity())
    }

    pub fn tensor(&self) -> &Tensor {
        &self.f
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn ensure_admissible(&self) -> Result<()> {
        if self.det > 0.0 && self.det.is_finite() {
            Ok(())
        } else {
            Err(Error::InvertedElement {
                element: None,
                det: self.det,
            })
        }
    }

    /// `F⁻ᵀ`; fails for `det(F) ≤ 0`.
    pub fn inverse_transpose(&self) -> Result<Tensor> {
        self.ensure_admissible()?;
        self.f
            .try_inverse()
            .map(|inv| inv.transpose())
            .ok_or(Error::InvertedElement {
                element: None,
                det: self.det,
            })
    }

    pub fn right_cauchy_green(&self) -> Tensor {
        self.f.transpose() * self.f
    }

    pub fn left_cauchy_green(&self) -> Tensor {
        self.f * self.f.transpose()
    }

    /// Flory isochoric factor `J^(-1/3) F`.
    pub fn isochoric(&self) -> Result<DefGrad> {
        self.ensure_admissible()?;
        Ok(DefGrad::new(self.f * self.det.powf(-1.0 / 3.0)))
    }
}

/// Isotropic invariants, the fiber pseudo-invariants, and the modified invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantSet {
    pub i1: f64,
    pub i2: f64,
    pub i4: f64,
    pub i5: f64,
    pub ibar1: f64,
    pub ibar2: f64,
}

impl InvariantSet {
    /// Without a fiber, `I4` and `I5` are reported as 1 (their reference value).
    pub fn new(f: &DefGrad, fiber: Option<&Vector3<f64>>) -> Result<Self> {
        f.ensure_admissible()?;
        let c = f.right_cauchy_green();
        let i1 = c.trace();
        let i2 = 0.5 * (i1 * i1 - (c * c).trace());
        let (i4, i5) = match fiber {
            Some(a) => ((a.transpose() * c * a)[0], (a.transpose() * c * c * a)[0]),
            None => (1.0, 1.0),
        };
        let j = f.det();
        Ok(Self {
            i1,
            i2,
            i4,
            i5,
            ibar1: j.powf(-2.0 / 3.0) * i1,
            ibar2: j.powf(-4.0 / 3.0) * i2,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MaterialFamily {
    NeoHookean {
        mu: f64,
    },
    MooneyRivlin {
        c1: f64,
        c2: f64,
    },
    /// Modified standard reinforcing model; `fiber` is the unit reference fiber direction.
    StandardReinforcing {
        mu_t: f64,
        mu_l: f64,
        e_l: f64,
        fiber: [f64; 3],
    },
}

impl MaterialFamily {
    /// Linearized shear modulus used to convert `νs` into `κs`.
    pub fn effective_shear_modulus(&self) -> f64 {
        match *self {
            MaterialFamily::NeoHookean { mu } => mu,
            MaterialFamily::MooneyRivlin { c1, c2 } => 2.0 * (c1 + c2),
            MaterialFamily::StandardReinforcing { mu_t, .. } => mu_t,
        }
    }

    /// Largest elastic modulus of the family, used for wave-speed estimates.
    pub fn stiffest_modulus(&self) -> f64 {
        match *self {
            MaterialFamily::NeoHookean { mu } => mu,
            MaterialFamily::MooneyRivlin { c1, c2 } => 2.0 * (c1 + c2),
            MaterialFamily::StandardReinforcing { mu_t, mu_l, e_l, .. } => {
                mu_t.max(mu_l).max(e_l)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MaterialFamily::NeoHookean { .. } => "neo_hookean",
            MaterialFamily::MooneyRivlin { .. } => "mooney_rivlin",
            MaterialFamily::StandardReinforcing { .. } => "standard_reinforcing",
        }
    }

    fn fiber(&self) -> Option<Vector3<f64>> {
        match self {
            MaterialFamily::StandardReinforcing { fiber, .. } => {
                Some(Vector3::new(fiber[0], fiber[1], fiber[2]))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantMode {
    Unmodified,
    Modified,
    DevProjection,
}

impl InvariantMode {
    pub const ALL: [InvariantMode; 3] = [
        InvariantMode::Unmodified,
        InvariantMode::Modified,
        InvariantMode::DevProjection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InvariantMode::Unmodified => "unmodified",
            InvariantMode::Modified => "modified",
            InvariantMode::DevProjection => "dev_projection",
        }
    }
}

impl std::str::FromStr for InvariantMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unmodified" => Ok(InvariantMode::Unmodified),
            "modified" => Ok(InvariantMode::Modified),
            "dev_projection" | "devprojection" | "deviatoric" => Ok(InvariantMode::DevProjection),
            other => Err(Error::Parse(format!("unknown invariant mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstitutiveSpec {
    pub family: MaterialFamily,
    pub mode: InvariantMode,
    /// Numerical Poisson ratio, when the bulk modulus was derived from one.
    pub nu_s: Option<f64>,
    pub kappa_s: f64,
}

impl ConstitutiveSpec {
    /// Builds a spec whose numerical bulk modulus follows from `nu_s`.
    pub fn new(family: MaterialFamily, mode: InvariantMode, nu_s: f64) -> Result<Self> {
        validate_family(&family)?;
        let kappa_s = kappa_from_nu(family.effective_shear_modulus(), nu_s)?;
        Ok(Self {
            family,
            mode,
            nu_s: Some(nu_s),
            kappa_s,
        })
    }

    pub fn with_kappa(family: MaterialFamily, mode: InvariantMode, kappa_s: f64) -> Result<Self> {
        validate_family(&family)?;
        if !(kappa_s >= 0.0 && kappa_s.is_finite()) {
            return Err(Error::Parameter(format!(
                "numerical bulk modulus must be non-negative, got {kappa_s}"
            )));
        }
        Ok(Self {
            family,
            mode,
            nu_s: None,
            kappa_s,
        })
    }
}

fn validate_family(family: &MaterialFamily) -> Result<()> {
    let positive = |name: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{name} must be positive, got {v}")))
        }
    };
    match *family {
        MaterialFamily::NeoHookean { mu } => positive("mu", mu),
        MaterialFamily::MooneyRivlin { c1, c2 } => {
            if c1 < 0.0 || c2 < 0.0 {
                return Err(Error::Parameter(format!(
                    "Mooney-Rivlin constants must be non-negative, got c1={c1}, c2={c2}"
                )));
            }
            positive("c1 + c2", c1 + c2)
        }
        MaterialFamily::StandardReinforcing {
            mu_t,
            mu_l,
            e_l,
            fiber,
        } => {
            positive("mu_t", mu_t)?;
            positive("mu_l", mu_l)?;
            positive("e_l", e_l)?;
            let norm = fiber.iter().map(|a| a * a).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::Parameter(format!(
                    "fiber direction must have unit length, got |A| = {norm}"
                )));
            }
            Ok(())
        }
    }
}

/// Numerical bulk modulus from the numerical Poisson ratio via linearized elasticity.
pub fn kappa_from_nu(mu_eff: f64, nu_s: f64) -> Result<f64> {
    if !(mu_eff > 0.0 && mu_eff.is_finite()) {
        return Err(Error::Parameter(format!(
            "shear modulus must be positive, got {mu_eff}"
        )));
    }
    if !(-1.0..0.5).contains(&nu_s) {
        return Err(Error::Parameter(format!(
            "numerical Poisson ratio must lie in [-1, 0.5), got {nu_s}"
        )));
    }
    if nu_s == -1.0 {
        return Ok(0.0);
    }
    Ok(2.0 * mu_eff * (1.0 + nu_s) / (3.0 * (1.0 - 2.0 * nu_s)))
}

/// Spatial deviator `T - tr(T)/3 I`.
pub fn dev_spatial(t: &Tensor) -> Tensor {
    t - Tensor::identity() * (t.trace() / 3.0)
}

/// Material deviator `T - (T:F)/3 F⁻ᵀ`; its push-forward is trace-free.
pub fn dev_material(t: &Tensor, f: &DefGrad) -> Result<Tensor> {
    let f_inv_t = f.inverse_transpose()?;
    Ok(t - f_inv_t * (t.dot(f.tensor()) / 3.0))
}

/// `U(J) = κs/2 (ln J)²` and its derivative.
pub fn vol_penalty(j: f64, kappa_s: f64) -> Result<(f64, f64)> {
    if !(j > 0.0) {
        return Err(Error::InvertedElement {
            element: None,
            det: j,
        });
    }
    let ln_j = j.ln();
    Ok((0.5 * kappa_s * ln_j * ln_j, kappa_s * ln_j / j))
}

/// Cauchy stress `P Fᵀ / J`.
pub fn push_forward(p: &Tensor, f: &DefGrad) -> Tensor {
    p * f.tensor().transpose() / f.det()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressParts {
    pub isochoric: Tensor,
    pub fiber: Tensor,
    pub volumetric: Tensor,
}

impl StressParts {
    pub fn total(&self) -> Tensor {
        self.isochoric + self.fiber + self.volumetric
    }
}

/// Isotropic part of the unmodified stress, `∂W/∂F` for `W(I1, I2)`.
fn unmodified_isotropic(f: &Tensor, c: &Tensor, i1: f64, family: &MaterialFamily) -> Tensor {
    match *family {
        MaterialFamily::NeoHookean { mu } => f * mu,
        MaterialFamily::MooneyRivlin { c1, c2 } => f * (2.0 * c1) + (f * i1 - f * c) * (2.0 * c2),
        MaterialFamily::StandardReinforcing { mu_t, .. } => f * mu_t,
    }
}

pub fn stress_parts(f: &DefGrad, spec: &ConstitutiveSpec) -> Result<StressParts> {
    let f_inv_t = f.inverse_transpose()?;
    let ft = f.tensor();
    let j = f.det();
    let c = f.right_cauchy_green();
    let i1 = c.trace();
    let i2 = 0.5 * (i1 * i1 - (c * c).trace());

    let isochoric = match spec.mode {
        InvariantMode::Unmodified => unmodified_isotropic(ft, &c, i1, &spec.family),
        InvariantMode::DevProjection => {
            let p = unmodified_isotropic(ft, &c, i1, &spec.family);
            p - f_inv_t * (p.dot(ft) / 3.0)
        }
        InvariantMode::Modified => {
            let j23 = j.powf(-2.0 / 3.0);
            let first = ft - f_inv_t * (i1 / 3.0);
            match spec.family {
                MaterialFamily::NeoHookean { mu } => first * (mu * j23),
                MaterialFamily::StandardReinforcing { mu_t, .. } => first * (mu_t * j23),
                MaterialFamily::MooneyRivlin { c1, c2 } => {
                    let second = ft * i1 - ft * c - f_inv_t * (2.0 * i2 / 3.0);
                    first * (2.0 * c1 * j23) + second * (2.0 * c2 * j23 * j23)
                }
            }
        }
    };

    let fiber = match (spec.family, spec.family.fiber()) {
        (
            MaterialFamily::StandardReinforcing {
                mu_t, mu_l, e_l, ..
            },
            Some(a),
        ) => {
            let m = a * a.transpose();
            let i4 = (a.transpose() * c * a)[0];
            let fm = ft * m;
            (fm * 2.0 - fm * c - ft * c * m) * (mu_t - mu_l)
                + fm * (0.5 * (e_l + mu_t - 4.0 * mu_l) * (i4 - 1.0))
        }
        _ => Tensor::zeros(),
    };

    let volumetric = f_inv_t * (spec.kappa_s * j.ln());

    Ok(StressParts {
        isochoric,
        fiber,
        volumetric,
    })
}

/// First Piola–Kirchhoff stress for the selected family and invariant mode.
pub fn pk1_stress(f: &DefGrad, spec: &ConstitutiveSpec) -> Result<Tensor> {
    stress_parts(f, spec).map(|p| p.total())
}

/// Strain-energy density. The deviatoric projection has no energy functional.
pub fn energy(f: &DefGrad, spec: &ConstitutiveSpec) -> Result<f64> {
    if spec.mode == InvariantMode::DevProjection {
        return Err(Error::Unsupported(
            "the deviatoric projection does not derive from a strain energy".into(),
        ));
    }
    let fiber = spec.family.fiber();
    let inv = InvariantSet::new(f, fiber.as_ref())?;
    let (i1, i2) = match spec.mode {
        InvariantMode::Modified => (inv.ibar1, inv.ibar2),
        _ => (inv.i1, inv.i2),
    };
    let w = match spec.family {
        MaterialFamily::NeoHookean { mu } => 0.5 * mu * (i1 - 3.0),
        MaterialFamily::MooneyRivlin { c1, c2 } => c1 * (i1 - 3.0) + c2 * (i2 - 3.0),
        MaterialFamily::StandardReinforcing { mu_t, mu_l, e_l, .. } => {
            0.5 * mu_t * (i1 - 3.0)
                + 0.5 * (mu_t - mu_l) * (2.0 * inv.i4 - inv.i5 - 1.0)
                + 0.125 * (e_l + mu_t - 4.0 * mu_l) * (inv.i4 - 1.0).powi(2)
        }
    };
    let (u, _) = vol_penalty(f.det(), spec.kappa_s)?;
    Ok(w + u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn nh(mode: InvariantMode, kappa: f64) -> ConstitutiveSpec {
        ConstitutiveSpec::with_kappa(MaterialFamily::NeoHookean { mu: 83.3333 }, mode, kappa)
            .unwrap()
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_from_nu(83.3333, -1.0).unwrap(), 0.0);
        assert_relative_eq!(kappa_from_nu(1.5, 0.0).unwrap(), 1.0, epsilon = 1e-15);
        // 2·80.194·1.4 / (3·0.2) = 224.5432 / 0.6
        assert!((kappa_from_nu(80.194, 0.4).unwrap() - 374.2387).abs() < 1e-3);
    }

    #[test]
    fn kappa_rejects_out_of_range() {
        assert!(matches!(kappa_from_nu(1.0, 0.5), Err(Error::Parameter(_))));
        assert!(matches!(kappa_from_nu(1.0, -1.01), Err(Error::Parameter(_))));
        assert!(kappa_from_nu(0.0, 0.2).is_err());
    }

    #[test]
    fn kappa_monotone() {
        let mut last = -1.0;
        for k in 0..=149 {
            let nu = -1.0 + 0.01 * k as f64;
            let kappa = kappa_from_nu(2.0, nu).unwrap();
            assert!(kappa > last);
            last = kappa;
        }
    }

    #[test]
    fn deviators() {
        assert_eq!(dev_spatial(&Tensor::identity()), Tensor::zeros());
        let d = dev_spatial(&Tensor::from_diagonal(&Vector3::new(1.0, 2.0, 3.0)));
        assert_eq!(d, Tensor::from_diagonal(&Vector3::new(-1.0, 0.0, 1.0)));

        let t = Tensor::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0);
        assert_relative_eq!(
            dev_material(&t, &DefGrad::identity()).unwrap(),
            dev_spatial(&t),
            epsilon = 1e-14
        );
        let f = DefGrad::new(Tensor::new(1.2, 0.1, 0.0, -0.2, 0.9, 0.3, 0.05, 0.0, 1.1));
        let d = dev_material(&f.inverse_transpose().unwrap(), &f).unwrap();
        assert!(d.dot(f.tensor()).abs() < 1e-14);
    }

    #[test]
    fn dev_material_rejects_singular() {
        let f = DefGrad::new(Tensor::from_diagonal(&Vector3::new(1.0, 0.0, 1.0)));
        assert!(matches!(
            dev_material(&Tensor::identity(), &f),
            Err(Error::InvertedElement { .. })
        ));
    }

    #[test]
    fn vol_penalty_examples() {
        assert_eq!(vol_penalty(1.0, 5.0).unwrap(), (0.0, 0.0));
        let (u, du) = vol_penalty(std::f64::consts::E, 2.0).unwrap();
        assert_relative_eq!(u, 1.0, epsilon = 1e-15);
        assert_relative_eq!(du, 2.0 / std::f64::consts::E, epsilon = 1e-15);
        assert_eq!(vol_penalty(0.5, 0.0).unwrap(), (0.0, 0.0));
        assert!(matches!(
            vol_penalty(-0.1, 1.0),
            Err(Error::InvertedElement { element: None, .. })
        ));
    }

    #[test]
    fn identity_stresses() {
        let id = DefGrad::identity();
        let p = pk1_stress(&id, &nh(InvariantMode::Unmodified, 10.0)).unwrap();
        assert_relative_eq!(p, Tensor::identity() * 83.3333, epsilon = 1e-12);
        for mode in [InvariantMode::Modified, InvariantMode::DevProjection] {
            let p = pk1_stress(&id, &nh(mode, 10.0)).unwrap();
            assert!(p.norm() < 1e-12, "{mode:?}: {p}");
        }
    }

    #[test]
    fn identity_energies_vanish() {
        let families = [
            MaterialFamily::NeoHookean { mu: 2.0 },
            MaterialFamily::MooneyRivlin { c1: 9000.0, c2: 9000.0 },
            MaterialFamily::StandardReinforcing {
                mu_t: 8.0,
                mu_l: 160.0,
                e_l: 1200.0,
                fiber: [1.0 / 3f64.sqrt(); 3],
            },
        ];
        for family in families {
            for mode in [InvariantMode::Unmodified, InvariantMode::Modified] {
                let spec = ConstitutiveSpec::with_kappa(family, mode, 7.0).unwrap();
                // The unit fiber is only unit to round-off, so I4 - 1 is too.
                assert!(energy(&DefGrad::identity(), &spec).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mooney_rivlin_energy_by_hand() {
        // C = diag(4, 1, 0.25): I1 = 5.25, I2 = 4 + 1 + 0.25 = 5.25.
        let spec = ConstitutiveSpec::with_kappa(
            MaterialFamily::MooneyRivlin { c1: 9000.0, c2: 9000.0 },
            InvariantMode::Unmodified,
            0.0,
        )
        .unwrap();
        let f = DefGrad::new(Tensor::from_diagonal(&Vector3::new(2.0, 1.0, 0.5)));
        let inv = InvariantSet::new(&f, None).unwrap();
        assert_relative_eq!(inv.i1, 5.25, epsilon = 1e-14);
        assert_relative_eq!(inv.i2, 5.25, epsilon = 1e-14);
        assert_relative_eq!(
            energy(&f, &spec).unwrap(),
            9000.0 * 2.25 + 9000.0 * 2.25,
            epsilon = 1e-9
        );
    }

    #[test]
    fn identity_invariants() {
        let a = Vector3::new(1.0, 1.0, 1.0).normalize();
        let inv = InvariantSet::new(&DefGrad::identity(), Some(&a)).unwrap();
        assert_eq!((inv.i1, inv.i2), (3.0, 3.0));
        assert_relative_eq!(inv.i4, 1.0, epsilon = 1e-15);
        assert_relative_eq!(inv.i5, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn energy_rejects_projection_and_inversion() {
        assert!(matches!(
            energy(&DefGrad::identity(), &nh(InvariantMode::DevProjection, 1.0)),
            Err(Error::Unsupported(_))
        ));
        let f = DefGrad::new(Tensor::from_diagonal(&Vector3::new(-1.0, 1.0, 1.0)));
        assert!(matches!(
            pk1_stress(&f, &nh(InvariantMode::Unmodified, 0.0)),
            Err(Error::InvertedElement { .. })
        ));
    }

    #[test]
    fn fiber_must_be_unit() {
        let bad = MaterialFamily::StandardReinforcing {
            mu_t: 1.0,
            mu_l: 1.0,
            e_l: 1.0,
            fiber: [1.0, 1.0, 0.0],
        };
        assert!(ConstitutiveSpec::new(bad, InvariantMode::Modified, 0.4).is_err());
    }

    #[test]
    fn plane_embedding() {
        let f = DefGrad::from_plane(Matrix2::new(2.0, 0.0, 0.0, 0.5));
        assert_eq!(f.tensor()[(2, 2)], 1.0);
        assert_relative_eq!(f.det(), 1.0, epsilon = 1e-15);
    }
}
