use ibfe::fem::{hex_block, quad_patch, ElementKind, LagrangianMesh};
use ibfe::materials::{ConstitutiveSpec, InvariantMode, MaterialFamily};
use ibfe::solidforce::{internal_force, strain_energy};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn patch(kind: ElementKind) -> LagrangianMesh {
    quad_patch(kind, 3, 2, |s, t| Vector3::new(1.0 + 3.0 * s + 0.2 * t, 1.0 + 2.0 * t, 0.0)).unwrap()
}

fn perturbed(mesh: &LagrangianMesh, seed: u64, amp: f64) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = mesh.dim();
    mesh.nodes
        .iter()
        .map(|x| {
            let mut d = Vector3::zeros();
            for c in 0..dim {
                d[c] = rng.random_range(-amp..amp);
            }
            x + d
        })
        .collect()
}

fn specs() -> Vec<ConstitutiveSpec> {
    let mut out = Vec::new();
    for family in [
        MaterialFamily::NeoHookean { mu: 3.0 },
        MaterialFamily::MooneyRivlin { c1: 1.0, c2: 0.5 },
        MaterialFamily::StandardReinforcing {
            mu_t: 1.0,
            mu_l: 4.0,
            e_l: 12.0,
            fiber: [0.6, 0.8, 0.0],
        },
    ] {
        for mode in [InvariantMode::Unmodified, InvariantMode::Modified] {
            out.push(ConstitutiveSpec::with_kappa(family, mode, 25.0).unwrap());
        }
    }
    out
}

#[test]
fn nodal_force_is_negative_energy_gradient() {
    for kind in [ElementKind::P1, ElementKind::Q1, ElementKind::P2, ElementKind::Q2] {
        let mesh = patch(kind);
        let chi = perturbed(&mesh, 7, 0.08);
        for spec in specs() {
            let (_, b) = internal_force(&mesh, &chi, &spec).unwrap();
            let h = 1e-6;
            for n in [0, mesh.n_nodes() / 2, mesh.n_nodes() - 1] {
                for c in 0..2 {
                    let mut p = chi.clone();
                    p[n][c] += h;
                    let mut m = chi.clone();
                    m[n][c] -= h;
                    let fd = -(strain_energy(&mesh, &p, &spec).unwrap() - strain_energy(&mesh, &m, &spec).unwrap()) / (2.0 * h);
                    assert!((fd - b[n][c]).abs() < 1e-6 * b[n].norm().max(1.0), "{kind:?} {spec:?}");
                }
            }
        }
    }
}

#[test]
fn hexahedral_force_is_negative_energy_gradient() {
    let mesh = hex_block(2, 2, 1, |s, t, u| Vector3::new(1.0 + s, 1.0 + 2.0 * t, 1.0 + 0.5 * u)).unwrap();
    let chi = perturbed(&mesh, 3, 0.05);
    let spec = ConstitutiveSpec::with_kappa(MaterialFamily::MooneyRivlin { c1: 1.0, c2: 2.0 }, InvariantMode::Modified, 10.0).unwrap();
    let (_, b) = internal_force(&mesh, &chi, &spec).unwrap();
    let h = 1e-6;
    for n in 0..mesh.n_nodes() {
        for c in 0..3 {
            let mut p = chi.clone();
            p[n][c] += h;
            let mut m = chi.clone();
            m[n][c] -= h;
            let fd = -(strain_energy(&mesh, &p, &spec).unwrap() - strain_energy(&mesh, &m, &spec).unwrap()) / (2.0 * h);
            assert!((fd - b[n][c]).abs() < 1e-6 * b[n].norm().max(1.0));
        }
    }
}

#[test]
fn modified_forces_vanish_at_rest() {
    for kind in [ElementKind::P1, ElementKind::Q2] {
        let mesh = patch(kind);
        for spec in specs().into_iter().filter(|s| s.mode == InvariantMode::Modified) {
            let (_, b) = internal_force(&mesh, &mesh.nodes, &spec).unwrap();
            assert!(b.iter().all(|v| v.norm() < 1e-12));
        }
    }
}

#[test]
fn unmodified_rest_force_lives_on_the_boundary() {
    // P = μ I: interior rows cancel, boundary rows carry −μ ∫ ∇φ = −μ ∮ φ N.
    let mesh = quad_patch(ElementKind::Q1, 4, 4, |s, t| Vector3::new(1.0 + s, 1.0 + t, 0.0)).unwrap();
    let spec = ConstitutiveSpec::with_kappa(MaterialFamily::NeoHookean { mu: 2.0 }, InvariantMode::Unmodified, 0.0).unwrap();
    let (_, b) = internal_force(&mesh, &mesh.nodes, &spec).unwrap();
    for (x, f) in mesh.nodes.iter().zip(&b) {
        let on_x = (x[0] - 1.0).abs() < 1e-12 || (x[0] - 2.0).abs() < 1e-12;
        let on_y = (x[1] - 1.0).abs() < 1e-12 || (x[1] - 2.0).abs() < 1e-12;
        if !on_x && !on_y {
            assert!(f.norm() < 1e-12);
        }
        if on_x && !on_y {
            let sign = if x[0] < 1.5 { 1.0 } else { -1.0 };
            assert!((f[0] - sign * 2.0 * 0.25).abs() < 1e-12 && f[1].abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forces_are_translation_invariant_and_balanced(seed in 0u64..1000, dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let mesh = patch(ElementKind::P2);
        let chi = perturbed(&mesh, seed, 0.06);
        let shifted: Vec<_> = chi.iter().map(|x| x + Vector3::new(dx, dy, 0.0)).collect();
        for spec in specs() {
            let (_, b) = internal_force(&mesh, &chi, &spec).unwrap();
            let (_, bs) = internal_force(&mesh, &shifted, &spec).unwrap();
            let scale = b.iter().map(|v| v.norm()).fold(1.0, f64::max);
            for (u, v) in b.iter().zip(&bs) {
                prop_assert!((u - v).norm() <= 1e-10 * scale);
            }
            let total: Vector3<f64> = b.iter().sum();
            prop_assert!(total.norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn volumetric_term_resists_dilation(stretch in 1.01f64..1.3) {
        let mesh = patch(ElementKind::Q1);
        let c = Vector3::new(2.6, 2.0, 0.0);
        let chi: Vec<_> = mesh.nodes.iter().map(|x| c + (x - c) * stretch).collect();
        let spec = ConstitutiveSpec::with_kappa(MaterialFamily::NeoHookean { mu: 1.0 }, InvariantMode::Modified, 50.0).unwrap();
        let (_, b) = internal_force(&mesh, &chi, &spec).unwrap();
        let power: f64 = b.iter().zip(&chi).map(|(f, x)| f.dot(&(x - c))).sum();
        prop_assert!(power < 0.0);
    }
}
