//! Regularized delta kernel and the spread/interpolate operator pair.

use nalgebra::Vector3;

use crate::eulerian::{FaceField, Grid};
use crate::error::{Error, Result};
use crate::fem::LagrangianMesh;

/// Peskin's four-point regularized delta function (one dimension, in grid units).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeltaKernel;

impl DeltaKernel {
    /// Half-width of the support, in cells.
    pub const SUPPORT_RADIUS: f64 = 2.0;

    pub fn evaluate(&self, r: f64) -> f64 {
        let r = r.abs();
        if r < 1.0 {
            (3.0 - 2.0 * r + (1.0 + 4.0 * r - 4.0 * r * r).sqrt()) / 8.0
        } else if r < 2.0 {
            (5.0 - 2.0 * r - (-7.0 + 12.0 * r - 4.0 * r * r).max(0.0).sqrt()) / 8.0
        } else {
            0.0
        }
    }
}

/// Stencil of one component: first face index and the four weights per axis.
struct Stencil {
    start: [usize; 3],
    weights: [[f64; 4]; 3],
}

fn stencil(grid: &Grid, c: usize, x: &Vector3<f64>) -> Stencil {
    let h = grid.h();
    let kernel = DeltaKernel;
    let mut start = [0; 3];
    let mut weights = [[0.0; 4]; 3];
    for a in 0..3 {
        if a >= grid.dim {
            weights[a] = [1.0, 0.0, 0.0, 0.0];
            continue;
        }
        let s = x[a] / h - if a == c { 0.0 } else { 0.5 };
        let first = s.floor() as isize - 1;
        start[a] = first as usize;
        for (m, w) in weights[a].iter_mut().enumerate() {
            *w = kernel.evaluate(s - (first + m as isize) as f64);
        }
    }
    Stencil { start, weights }
}

/// Checks that each point is at least two cells from every wall.
pub fn check_support(grid: &Grid, points: &[Vector3<f64>]) -> Result<()> {
    let margin = DeltaKernel::SUPPORT_RADIUS * grid.h();
    for (i, x) in points.iter().enumerate() {
        let inside = (0..grid.dim).all(|a| x[a] >= margin && x[a] <= grid.length - margin);
        if !inside || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::OutOfSupport {
                point: i,
                position: [x[0], x[1], x[2]],
            });
        }
    }
    Ok(())
}

fn visit<F: FnMut(usize, f64)>(grid: &Grid, c: usize, st: &Stencil, mut f: F) {
    let shape = grid.face_shape(c);
    let (nk, nj) = if grid.dim == 3 { (4, 4) } else { (1, 4) };
    for dk in 0..nk {
        let wk = st.weights[2][dk];
        let k = st.start[2] + dk;
        for dj in 0..nj {
            let wjk = wk * st.weights[1][dj];
            let j = st.start[1] + dj;
            for di in 0..4 {
                let w = wjk * st.weights[0][di];
                let i = st.start[0] + di;
                let idx = [i, j, k];
                if w == 0.0 || grid.is_wall_face(c, idx) {
                    continue;
                }
                f(i + shape[0] * (j + shape[1] * k), w);
            }
        }
    }
}

/// Adds `Σ_Q F_Q w_Q δ_h(x − X_Q)` to `out`. Accumulation is serial in point
/// order, so results are bitwise reproducible.
pub fn spread_points(
    grid: &Grid,
    points: &[Vector3<f64>],
    forces: &[Vector3<f64>],
    weights: &[f64],
    out: &mut FaceField,
) -> Result<()> {
    check_support(grid, points)?;
    let inv_vol = 1.0 / grid.cell_volume();
    for ((x, f), &w) in points.iter().zip(forces).zip(weights) {
        for c in 0..grid.dim {
            let amp = f[c] * w * inv_vol;
            if amp == 0.0 {
                continue;
            }
            let st = stencil(grid, c, x);
            let comp = &mut out.comps[c];
            visit(grid, c, &st, |k, phi| comp[k] += amp * phi);
        }
    }
    Ok(())
}

/// `U(X) = Σ_faces u δ_h(x − X) h^d` at each point.
pub fn interpolate_points(grid: &Grid, u: &FaceField, points: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
    check_support(grid, points)?;
    Ok(points
        .iter()
        .map(|x| {
            let mut v = Vector3::zeros();
            for c in 0..grid.dim {
                let st = stencil(grid, c, x);
                let comp = &u.comps[c];
                let mut acc = 0.0;
                visit(grid, c, &st, |k, phi| acc += comp[k] * phi);
                v[c] = acc;
            }
            v
        })
        .collect())
}

/// Spreads per-quadrature-point force densities of the mesh, placed at the
/// deformed quadrature positions `χ_h(X_Q)`, into a fresh face field.
pub fn spread(
    mesh: &LagrangianMesh,
    chi: &[Vector3<f64>],
    force_at_qps: &[Vector3<f64>],
    grid: &Grid,
) -> Result<FaceField> {
    let points = mesh.eval_at_qps(chi);
    let mut out = FaceField::zeros(grid);
    spread_points(grid, &points, force_at_qps, mesh.weights(), &mut out)?;
    Ok(out)
}

/// Interpolates the grid velocity to every deformed quadrature point.
pub fn interpolate(u: &FaceField, grid: &Grid, mesh: &LagrangianMesh, chi: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>> {
    interpolate_points(grid, u, &mesh.eval_at_qps(chi))
}
