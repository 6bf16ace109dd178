//! Fast self-checks behind `bench verify`.

use nalgebra::{Matrix3, Vector3};

use crate::bench::{build_geometry, Benchmark, BenchmarkConfig};
use crate::coupling::{interpolate_points, spread_points, DeltaKernel};
use crate::error::Result;
use crate::eulerian::{EulerianState, FaceField, Grid};
use crate::fem::ElementKind;
use crate::materials::{energy, pk1_stress, ConstitutiveSpec, DefGrad, InvariantMode, MaterialFamily};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        passed: value.is_finite() && value <= limit,
        detail: format!("value={value:.3e} limit={limit:.1e}"),
    }
}

fn kernel_partition() -> Check {
    let k = DeltaKernel;
    let worst = (0..100)
        .map(|i| {
            let r = i as f64 / 100.0;
            let s: f64 = (-3..=3).map(|j| k.evaluate(r - j as f64)).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max);
    check("kernel_partition_of_unity", worst, 1e-13)
}

fn stress_energy_consistency() -> Result<Check> {
    let f = Matrix3::new(1.1, 0.2, -0.05, 0.03, 0.95, 0.1, -0.02, 0.07, 1.05);
    let families = [
        MaterialFamily::NeoHookean { mu: 1.3 },
        MaterialFamily::MooneyRivlin { c1: 0.4, c2: 0.3 },
        MaterialFamily::StandardReinforcing {
            mu_t: 1.0,
            mu_l: 3.0,
            e_l: 10.0,
            fiber: [0.6, 0.8, 0.0],
        },
    ];
    let mut worst: f64 = 0.0;
    for family in families {
        for mode in [InvariantMode::Unmodified, InvariantMode::Modified] {
            let spec = ConstitutiveSpec::new(family, mode, 0.3)?;
            let p = pk1_stress(&DefGrad::new(f), &spec)?;
            let eps = 1e-6;
            for i in 0..3 {
                for j in 0..3 {
                    let mut fp = f;
                    fp[(i, j)] += eps;
                    let mut fm = f;
                    fm[(i, j)] -= eps;
                    let fd = (energy(&DefGrad::new(fp), &spec)? - energy(&DefGrad::new(fm), &spec)?) / (2.0 * eps);
                    worst = worst.max((fd - p[(i, j)]).abs() / p.norm().max(1.0));
                }
            }
        }
    }
    Ok(check("stress_is_energy_gradient", worst, 1e-6))
}

fn spread_interpolate_adjoint() -> Result<Check> {
    let grid = Grid::new(2, 32, 1.0)?;
    let pts = vec![Vector3::new(0.3, 0.41, 0.0), Vector3::new(0.62, 0.55, 0.0)];
    let forces = vec![Vector3::new(1.0, -2.0, 0.0), Vector3::new(0.5, 0.25, 0.0)];
    let weights = [0.7, 1.3];
    let u = FaceField::from_fn(&grid, |x| [(3.0 * x[1]).sin(), x[0] * x[0], 0.0]);
    let mut f = FaceField::zeros(&grid);
    spread_points(&grid, &pts, &forces, &weights, &mut f)?;
    let lhs = f.dot(&u) * grid.cell_volume();
    let samples = interpolate_points(&grid, &u, &pts)?;
    let rhs: f64 = samples.iter().zip(&forces).zip(weights).map(|((s, f), w)| s.dot(f) * w).sum();
    Ok(check("spread_interpolate_adjoint", (lhs - rhs).abs(), 1e-12))
}

fn projection_divergence() -> Result<Check> {
    let grid = Grid::new(2, 32, 1.0)?;
    let mut s = EulerianState::new(grid, 1.0, 0.01)?;
    s.u = FaceField::from_fn(&grid, |x| [x[0] * (1.0 - x[0]) * x[1], (6.0 * x[0]).cos() * x[1] * (1.0 - x[1]), 0.0]);
    s.project(1e-3);
    let div = s.divergence().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(check("projection_divergence_free", div, 1e-9))
}

fn mesh_counts() -> Result<Check> {
    let count = |b, e, level| {
        let c = BenchmarkConfig::preset(b, e, InvariantMode::Modified, 0.4, level);
        build_geometry(&c).map(|m| m.n_nodes())
    };
    let got = [
        count(Benchmark::Cook2d, ElementKind::P2, 0)?,
        count(Benchmark::CompressedBlock2d, ElementKind::Q1, 4)?,
        count(Benchmark::Torsion3d, ElementKind::P1, 0)?,
    ];
    let passed = got == [25, 4753, 65];
    Ok(Check {
        name: "benchmark_mesh_sizes",
        passed,
        detail: format!("m={got:?}"),
    })
}

/// Runs every check. Only errors in the harness itself are returned as `Err`.
pub fn run_checks() -> Result<Vec<Check>> {
    Ok(vec![
        kernel_partition(),
        stress_energy_consistency()?,
        spread_interpolate_adjoint()?,
        projection_divergence()?,
        mesh_counts()?,
    ])
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_checks().unwrap() {
            assert!(c.passed, "{} {}", c.name, c.detail);
        }
    }
}
