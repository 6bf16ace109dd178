//! Lagrangian force densities: elastic stress, penalty Dirichlet conditions
//! and applied tractions.

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{LagrangianMesh, NodalField};
use crate::materials::{energy, pk1_stress, ConstitutiveSpec};

/// Dead-load traction on a named facet set, scaled by the load ramp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Traction {
    pub facet_set: String,
    pub value: [f64; 3],
}

/// Target positions `χ_D(X, t)` of a penalty boundary condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirichletTarget {
    /// `χ_D = X`.
    Fixed,
    /// Rotation of the reference positions about an axis through `center`,
    /// by `angle · ramp(t)`.
    Rotation {
        center: [f64; 3],
        axis: [f64; 3],
        angle: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletBc {
    pub facet_set: String,
    pub target: DirichletTarget,
    /// Constrained components; unconstrained ones receive no penalty force.
    #[serde(default = "all_components")]
    pub components: [bool; 3],
}

fn all_components() -> [bool; 3] {
    [true; 3]
}

/// Load history of a benchmark: linear ramp to full load at `T_l = α T_f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    pub t_final: f64,
    pub alpha: f64,
    #[serde(default)]
    pub tractions: Vec<Traction>,
    #[serde(default)]
    pub dirichlet: Vec<DirichletBc>,
    #[serde(default = "default_prefactor")]
    pub penalty_prefactor: f64,
}

fn default_prefactor() -> f64 {
    2.5
}

impl LoadProgram {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(Error::Config(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.penalty_prefactor > 0.0) {
            return Err(Error::Config("penalty prefactor must be positive".into()));
        }
        Ok(())
    }

    pub fn load_time(&self) -> f64 {
        self.alpha * self.t_final
    }

    /// `min(t / T_l, 1)`, clamped at zero for negative times.
    pub fn ramp(&self, t: f64) -> f64 {
        (t / self.load_time()).clamp(0.0, 1.0)
    }

    /// `κ_D = prefactor · Δx / Δt²`.
    pub fn penalty_stiffness(&self, dx: f64, dt: f64) -> f64 {
        self.penalty_prefactor * dx / (dt * dt)
    }
}

impl DirichletTarget {
    pub fn position(&self, x: &Vector3<f64>, ramp: f64) -> Vector3<f64> {
        match self {
            DirichletTarget::Fixed => *x,
            DirichletTarget::Rotation {
                center,
                axis,
                angle,
            } => {
                let c = Vector3::from(*center);
                let r = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(*axis)), angle * ramp);
                c + r * (x - c)
            }
        }
    }
}

/// First Piola–Kirchhoff stress at every quadrature point, ordered by
/// global quadrature id.
pub fn stress_at_qps(
    mesh: &LagrangianMesh,
    chi: &[Vector3<f64>],
    spec: &ConstitutiveSpec,
) -> Result<Vec<Matrix3<f64>>> {
    let nq = mesh.n_qp_per_element();
    let mut out = Vec::with_capacity(mesh.n_qp_total());
    for e in 0..mesh.n_elements() {
        for q in 0..nq {
            let f = mesh.deformation_gradient(chi, e, q);
            out.push(pk1_stress(&f, spec).map_err(|err| err.with_element(e))?);
        }
    }
    Ok(out)
}

/// Weak-form elastic load `b_ℓ = −Σ_Q P(X_Q) ∇_X φ_ℓ(X_Q) w_Q`.
pub fn internal_force(
    mesh: &LagrangianMesh,
    chi: &[Vector3<f64>],
    spec: &ConstitutiveSpec,
) -> Result<(Vec<Matrix3<f64>>, NodalField)> {
    let stresses = stress_at_qps(mesh, chi, spec)?;
    let nq = mesh.n_qp_per_element();
    let mut b = vec![Vector3::zeros(); mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        for q in 0..nq {
            let pw = stresses[e * nq + q] * mesh.weight(e, q);
            for (&n, g) in mesh.element(e).iter().zip(mesh.grad_phi(e, q)) {
                b[n] -= pw * Vector3::new(g[0], g[1], g[2]);
            }
        }
    }
    if mesh.dim() == 2 {
        b.iter_mut().for_each(|v| v[2] = 0.0);
    }
    Ok((stresses, b))
}

/// Adds `∫ ramp · T · φ_ℓ dA` over the facet set to `b`.
pub fn traction_force(
    mesh: &LagrangianMesh,
    facet_set: &str,
    traction: &Vector3<f64>,
    ramp: f64,
    b: &mut [Vector3<f64>],
) -> Result<()> {
    for &fi in mesh.facet_set(facet_set)? {
        let facet = &mesh.facets[fi];
        let conn = mesh.element(facet.element);
        for qp in &facet.qps {
            let t = traction * (ramp * qp.weight);
            for (&n, &p) in conn.iter().zip(&qp.phi) {
                b[n] += t * p;
            }
        }
    }
    Ok(())
}

/// Adds `−∫ κ_D (χ − χ_D) φ_ℓ dA` over the facet set, for the masked components.
pub fn penalty_force(
    mesh: &LagrangianMesh,
    chi: &[Vector3<f64>],
    bc: &DirichletBc,
    ramp: f64,
    kappa_d: f64,
    b: &mut [Vector3<f64>],
) -> Result<()> {
    for &fi in mesh.facet_set(&bc.facet_set)? {
        let facet = &mesh.facets[fi];
        let conn = mesh.element(facet.element);
        for qp in &facet.qps {
            let x: Vector3<f64> = conn.iter().zip(&qp.phi).map(|(&n, &p)| chi[n] * p).sum();
            let mut gap = x - bc.target.position(&qp.position, ramp);
            for (c, on) in bc.components.iter().enumerate() {
                if !on {
                    gap[c] = 0.0;
                }
            }
            let t = gap * (-kappa_d * qp.weight);
            for (&n, &p) in conn.iter().zip(&qp.phi) {
                b[n] += t * p;
            }
        }
    }
    Ok(())
}

/// Stored elastic energy `Σ_Q Ψ(F_Q) w_Q`.
pub fn strain_energy(mesh: &LagrangianMesh, chi: &[Vector3<f64>], spec: &ConstitutiveSpec) -> Result<f64> {
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        for q in 0..mesh.n_qp_per_element() {
            let f = mesh.deformation_gradient(chi, e, q);
            total += energy(&f, spec).map_err(|err| err.with_element(e))? * mesh.weight(e, q);
        }
    }
    Ok(total)
}

/// Output of one force evaluation.
#[derive(Clone, Debug)]
pub struct SolidForces {
    /// Assembled weak-form load `b_ℓ` (elastic + traction + penalty).
    pub nodal_load: NodalField,
    /// Force density coefficients `F_ℓ` with `M F = b`.
    pub density: NodalField,
    /// `F_h(X_Q)` at every quadrature point.
    pub density_at_qps: Vec<Vector3<f64>>,
}

/// Evaluates all Lagrangian forces for a fixed mesh, material and load program.
#[derive(Clone, Debug)]
pub struct ForceModel {
    pub spec: ConstitutiveSpec,
    pub loads: LoadProgram,
    pub kappa_d: f64,
    last_density: Option<NodalField>,
}

impl ForceModel {
    pub fn new(spec: ConstitutiveSpec, loads: LoadProgram, kappa_d: f64) -> Result<Self> {
        loads.validate()?;
        Ok(Self {
            spec,
            loads,
            kappa_d,
            last_density: None,
        })
    }

    /// Weak-form load at positions `chi` and time `t`.
    pub fn nodal_load(&self, mesh: &LagrangianMesh, chi: &[Vector3<f64>], t: f64) -> Result<NodalField> {
        let ramp = self.loads.ramp(t);
        let (_, mut b) = internal_force(mesh, chi, &self.spec)?;
        for tr in &self.loads.tractions {
            traction_force(mesh, &tr.facet_set, &Vector3::from(tr.value), ramp, &mut b)?;
        }
        for bc in &self.loads.dirichlet {
            penalty_force(mesh, chi, bc, ramp, self.kappa_d, &mut b)?;
        }
        if mesh.dim() == 2 {
            b.iter_mut().for_each(|v| v[2] = 0.0);
        }
        Ok(b)
    }

    /// Load, its L2 force density and the density at the quadrature points.
    pub fn evaluate(&mut self, mesh: &LagrangianMesh, chi: &[Vector3<f64>], t: f64) -> Result<SolidForces> {
        let b = self.nodal_load(mesh, chi, t)?;
        let mut density = self
            .last_density
            .take()
            .unwrap_or_else(|| vec![Vector3::zeros(); mesh.n_nodes()]);
        mesh.solve_mass(&b, &mut density)?;
        let density_at_qps = mesh.eval_at_qps(&density);
        self.last_density = Some(density.clone());
        Ok(SolidForces {
            nodal_load: b,
            density,
            density_at_qps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{quad_patch, ElementKind};
    use crate::materials::{InvariantMode, MaterialFamily};

    fn square(kind: ElementKind, a: usize) -> LagrangianMesh {
        let mut mesh = quad_patch(kind, a, a, |s, t| Vector3::new(1.0 + 2.0 * s, 1.0 + 2.0 * t, 0.0)).unwrap();
        mesh.add_facet_set("left", |c, _| c[0] < 1.0 + 1e-9);
        mesh.add_facet_set("right", |c, _| c[0] > 3.0 - 1e-9);
        mesh
    }

    fn nh(mode: InvariantMode, kappa: f64) -> ConstitutiveSpec {
        ConstitutiveSpec::with_kappa(MaterialFamily::NeoHookean { mu: 2.0 }, mode, kappa).unwrap()
    }

    #[test]
    fn ramp_is_linear_then_flat() {
        let lp = LoadProgram {
            t_final: 35.0,
            alpha: 0.4,
            tractions: vec![],
            dirichlet: vec![],
            penalty_prefactor: 2.5,
        };
        assert_eq!(lp.ramp(0.0), 0.0);
        assert!((lp.ramp(7.0) - 0.5).abs() < 1e-15);
        assert_eq!(lp.ramp(14.0), 1.0);
        assert_eq!(lp.ramp(30.0), 1.0);
        assert!((lp.penalty_stiffness(0.5, 0.1) - 125.0).abs() < 1e-9);
    }

    #[test]
    fn identity_gives_zero_force_for_modified_mode() {
        let mesh = square(ElementKind::Q2, 3);
        let (_, b) = internal_force(&mesh, &mesh.nodes, &nh(InvariantMode::Modified, 50.0)).unwrap();
        assert!(b.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn unmodified_identity_force_lives_on_boundary() {
        let mesh = square(ElementKind::Q1, 4);
        let (_, b) = internal_force(&mesh, &mesh.nodes, &nh(InvariantMode::Unmodified, 0.0)).unwrap();
        let boundary: std::collections::HashSet<usize> =
            mesh.facets.iter().flat_map(|f| f.nodes.iter().copied()).collect();
        for (i, v) in b.iter().enumerate() {
            if boundary.contains(&i) {
                assert!(v.norm() > 1e-6);
            } else {
                assert!(v.norm() < 1e-12);
            }
        }
        // −∫ μ I : ∇φ = −μ ∮ φ N, so the x-load of the left edge is μ × length.
        let left: f64 = mesh.facet_set_nodes("left").unwrap().iter().map(|&n| b[n][0]).sum();
        assert!((left - 2.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn traction_total_matches_area() {
        let mesh = square(ElementKind::P2, 2);
        let mut b = vec![Vector3::zeros(); mesh.n_nodes()];
        traction_force(&mesh, "right", &Vector3::new(0.0, 6.25, 0.0), 1.0, &mut b).unwrap();
        let total: Vector3<f64> = b.iter().sum();
        assert!((total[1] - 6.25 * 2.0).abs() < 1e-12);
        let mut zero = vec![Vector3::zeros(); mesh.n_nodes()];
        traction_force(&mesh, "right", &Vector3::new(0.0, 6.25, 0.0), 0.0, &mut zero).unwrap();
        assert!(zero.iter().all(|v| v.norm() == 0.0));
        assert!(matches!(
            traction_force(&mesh, "top", &Vector3::zeros(), 1.0, &mut zero),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn penalty_total_for_uniform_offset() {
        let mesh = square(ElementKind::Q1, 3);
        let d = Vector3::new(0.01, -0.02, 0.0);
        let chi: Vec<_> = mesh.nodes.iter().map(|x| x + d).collect();
        let bc = DirichletBc {
            facet_set: "left".into(),
            target: DirichletTarget::Fixed,
            components: [true; 3],
        };
        let mut b = vec![Vector3::zeros(); mesh.n_nodes()];
        penalty_force(&mesh, &chi, &bc, 1.0, 100.0, &mut b).unwrap();
        let total: Vector3<f64> = b.iter().sum();
        assert!((total - d * (-100.0 * 2.0)).norm() < 1e-12);

        let mut at_target = vec![Vector3::zeros(); mesh.n_nodes()];
        penalty_force(&mesh, &mesh.nodes, &bc, 1.0, 100.0, &mut at_target).unwrap();
        assert!(at_target.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rotation_target() {
        let t = DirichletTarget::Rotation {
            center: [4.5, 0.0, 4.5],
            axis: [0.0, 1.0, 0.0],
            angle: std::f64::consts::PI,
        };
        let x = t.position(&Vector3::new(5.5, 7.5, 4.5), 0.5);
        assert!((x - Vector3::new(4.5, 7.5, 3.5)).norm() < 1e-12);
    }
}
