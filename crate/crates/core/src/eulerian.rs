//! Incompressible Navier–Stokes on a uniform staggered grid.
//!
//! Sign convention: `ρ Du/Dt = μ Δu + ∇p + f`. Velocity components live on
//! cell faces, pressure at cell centres. Face `K` of component `c` sits at
//! `x_c = K_c h` and `x_o = (K_o + ½) h` in the other directions; the faces
//! with `K_c = 0` or `K_c = N` lie on the wall and always carry zero
//! velocity. Tangential no-slip uses the ghost value `-u` across the wall.

use std::io::Write;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, CgSettings};

/// Uniform cubic grid over `[0, L]^d` with `N` cells per side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Parameter(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if n < 4 {
            return Err(Error::Parameter(format!("grid needs at least 4 cells per side, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Parameter(format!("domain length must be positive, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Array extents of component `c` (trailing extent 1 in 2D).
    pub fn face_shape(&self, c: usize) -> [usize; 3] {
        let mut s = [1; 3];
        for (a, sa) in s.iter_mut().enumerate().take(self.dim) {
            *sa = self.n + usize::from(a == c);
        }
        s
    }

    pub fn cell_shape(&self) -> [usize; 3] {
        let mut s = [1; 3];
        for sa in s.iter_mut().take(self.dim) {
            *sa = self.n;
        }
        s
    }

    pub fn n_faces(&self, c: usize) -> usize {
        self.face_shape(c).iter().product()
    }

    pub fn n_cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Position of face `idx` of component `c`.
    pub fn face_position(&self, c: usize, idx: [usize; 3]) -> [f64; 3] {
        let h = self.h();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (idx[a] as f64 + if a == c { 0.0 } else { 0.5 }) * h;
        }
        x
    }

    pub fn cell_center(&self, idx: [usize; 3]) -> [f64; 3] {
        let h = self.h();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (idx[a] as f64 + 0.5) * h;
        }
        x
    }

    pub fn is_wall_face(&self, c: usize, idx: [usize; 3]) -> bool {
        idx[c] == 0 || idx[c] == self.n
    }
}

#[inline]
fn lin(shape: [usize; 3], i: [usize; 3]) -> usize {
    i[0] + shape[0] * (i[1] + shape[1] * i[2])
}

fn for_each_index(shape: [usize; 3], mut f: impl FnMut([usize; 3])) {
    for k in 0..shape[2] {
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                f([i, j, k]);
            }
        }
    }
}

/// Face-centred vector field: one array per velocity component.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    pub comps: Vec<Vec<f64>>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            comps: (0..grid.dim).map(|c| vec![0.0; grid.n_faces(c)]).collect(),
        }
    }

    /// Samples `f(x)[c]` on every face of component `c`; wall faces are set to zero.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(grid);
        for c in 0..grid.dim {
            let shape = grid.face_shape(c);
            for_each_index(shape, |idx| {
                if !grid.is_wall_face(c, idx) {
                    out.comps[c][lin(shape, idx)] = f(grid.face_position(c, idx))[c];
                }
            });
        }
        out
    }

    pub fn get(&self, grid: &Grid, c: usize, idx: [usize; 3]) -> f64 {
        self.comps[c][lin(grid.face_shape(c), idx)]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn fill(&mut self, value: f64) {
        for v in &mut self.comps {
            v.iter_mut().for_each(|x| *x = value);
        }
    }

    /// `Σ a·b` over all faces.
    pub fn dot(&self, other: &FaceField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum()
    }

    pub fn axpy(&mut self, alpha: f64, other: &FaceField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }
}

/// MAC divergence at cell centres.
pub fn divergence(grid: &Grid, u: &FaceField) -> Vec<f64> {
    let h = grid.h();
    let cs = grid.cell_shape();
    let mut div = vec![0.0; grid.n_cells()];
    for c in 0..grid.dim {
        let fs = grid.face_shape(c);
        let uc = &u.comps[c];
        for_each_index(cs, |idx| {
            let mut up = idx;
            up[c] += 1;
            div[lin(cs, idx)] += (uc[lin(fs, up)] - uc[lin(fs, idx)]) / h;
        });
    }
    div
}

/// Cell-to-face gradient; wall faces get zero (homogeneous Neumann).
pub fn gradient(grid: &Grid, p: &[f64]) -> FaceField {
    let h = grid.h();
    let cs = grid.cell_shape();
    let mut g = FaceField::zeros(grid);
    for c in 0..grid.dim {
        let fs = grid.face_shape(c);
        for_each_index(fs, |idx| {
            if grid.is_wall_face(c, idx) {
                return;
            }
            let mut lo = idx;
            lo[c] -= 1;
            g.comps[c][lin(fs, idx)] = (p[lin(cs, idx)] - p[lin(cs, lo)]) / h;
        });
    }
    g
}

/// Vector Laplacian with no-slip walls, zero on wall faces.
pub fn laplacian(grid: &Grid, u: &FaceField) -> FaceField {
    let mut out = FaceField::zeros(grid);
    for c in 0..grid.dim {
        laplacian_component(grid, c, &u.comps[c], &mut out.comps[c]);
    }
    out
}

fn laplacian_component(grid: &Grid, c: usize, u: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let fs = grid.face_shape(c);
    let n = grid.n;
    for_each_index(fs, |idx| {
        let k = lin(fs, idx);
        if grid.is_wall_face(c, idx) {
            out[k] = 0.0;
            return;
        }
        let u0 = u[k];
        let mut acc = 0.0;
        for d in 0..grid.dim {
            // Normal direction: the neighbours next to a wall are wall faces
            // holding zero. Tangential direction: ghost value -u0.
            let (first, last, ghost) = if d == c { (1, n - 1, 0.0) } else { (0, n - 1, -u0) };
            let lo = if idx[d] == first {
                ghost
            } else {
                let mut m = idx;
                m[d] -= 1;
                u[lin(fs, m)]
            };
            let hi = if idx[d] == last {
                ghost
            } else {
                let mut m = idx;
                m[d] += 1;
                u[lin(fs, m)]
            };
            acc += lo + hi - 2.0 * u0;
        }
        out[k] = acc * inv_h2;
    });
}

/// Skew-symmetric advection `½[(u·∇)u + ∇·(u⊗u)]`; conserves discrete
/// kinetic energy for divergence-free `u`.
pub fn advection(grid: &Grid, u: &FaceField) -> FaceField {
    let h = grid.h();
    let n = grid.n;
    let mut out = FaceField::zeros(grid);
    for c in 0..grid.dim {
        let fs = grid.face_shape(c);
        let uc = &u.comps[c];
        for_each_index(fs, |idx| {
            if grid.is_wall_face(c, idx) {
                return;
            }
            let mut acc = 0.0;
            for d in 0..grid.dim {
                let (a_plus, a_minus) = if d == c {
                    let mut p = idx;
                    p[c] += 1;
                    let mut m = idx;
                    m[c] -= 1;
                    let u0 = uc[lin(fs, idx)];
                    (0.5 * (u0 + uc[lin(fs, p)]), 0.5 * (uc[lin(fs, m)] + u0))
                } else {
                    let ds = grid.face_shape(d);
                    let ud = &u.comps[d];
                    let mut a = idx;
                    a[c] -= 1;
                    let b = idx;
                    let mut a1 = a;
                    a1[d] += 1;
                    let mut b1 = b;
                    b1[d] += 1;
                    (
                        0.5 * (ud[lin(ds, a1)] + ud[lin(ds, b1)]),
                        0.5 * (ud[lin(ds, a)] + ud[lin(ds, b)]),
                    )
                };
                let last = if d == c { n } else { n - 1 };
                // Beyond a wall the advecting normal velocity is zero, so the
                // neighbour value does not matter.
                let up = if idx[d] == last {
                    0.0
                } else {
                    let mut m = idx;
                    m[d] += 1;
                    uc[lin(fs, m)]
                };
                let down = if idx[d] == 0 {
                    0.0
                } else {
                    let mut m = idx;
                    m[d] -= 1;
                    uc[lin(fs, m)]
                };
                acc += a_plus * up - a_minus * down;
            }
            out.comps[c][lin(fs, idx)] = acc / (2.0 * h);
        });
    }
    out
}

/// Direct solver for the cell-centred Neumann Poisson problem `D G φ = r`,
/// diagonalized by the type-II discrete cosine transform.
pub struct PoissonSolver {
    grid: Grid,
    eig: Vec<f64>,
    dct2: Arc<dyn TransformType2And3<f64>>,
    dct3: Arc<dyn TransformType2And3<f64>>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver").field("grid", &self.grid).finish()
    }
}

impl Clone for PoissonSolver {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid,
            eig: self.eig.clone(),
            dct2: Arc::clone(&self.dct2),
            dct3: Arc::clone(&self.dct3),
        }
    }
}

impl PoissonSolver {
    pub fn new(grid: Grid) -> Self {
        let h = grid.h();
        let n = grid.n;
        let eig: Vec<f64> = (0..n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        let mut planner = DctPlanner::new();
        Self {
            grid,
            eig,
            dct2: planner.plan_dct2(n),
            dct3: planner.plan_dct3(n),
        }
    }

    fn transform(&self, data: &mut [f64], forward: bool) {
        let shape = self.grid.cell_shape();
        let n = self.grid.n;
        let mut line = vec![0.0; n];
        let mut scratch = vec![0.0; self.dct2.get_scratch_len().max(self.dct3.get_scratch_len())];
        for axis in 0..self.grid.dim {
            let mut outer = shape;
            outer[axis] = 1;
            for_each_index(outer, |base| {
                let mut idx = base;
                for (i, v) in line.iter_mut().enumerate() {
                    idx[axis] = i;
                    *v = data[lin(shape, idx)];
                }
                if forward {
                    self.dct2.process_dct2_with_scratch(&mut line, &mut scratch);
                } else {
                    self.dct3.process_dct3_with_scratch(&mut line, &mut scratch);
                }
                let scale = if forward { 1.0 } else { 2.0 / n as f64 };
                for (i, v) in line.iter().enumerate() {
                    idx[axis] = i;
                    data[lin(shape, idx)] = v * scale;
                }
            });
        }
    }

    /// Solves `D G φ = rhs` after removing the mean of `rhs`; returns the
    /// zero-mean solution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
        let mut data: Vec<f64> = rhs.iter().map(|r| r - mean).collect();
        self.transform(&mut data, true);
        let shape = self.grid.cell_shape();
        for_each_index(shape, |idx| {
            let k = lin(shape, idx);
            let lambda: f64 = (0..self.grid.dim).map(|a| self.eig[idx[a]]).sum();
            data[k] = if lambda == 0.0 { 0.0 } else { data[k] / lambda };
        });
        self.transform(&mut data, false);
        data
    }
}

/// Fluid state: velocity, pressure and the body force applied in the next step.
#[derive(Clone, Debug)]
pub struct EulerianState {
    pub grid: Grid,
    pub rho: f64,
    pub mu: f64,
    pub u: FaceField,
    pub p: Vec<f64>,
    pub f: FaceField,
    prev_advection: Option<FaceField>,
    poisson: PoissonSolver,
}

/// Advective CFL bound enforced by [`EulerianState::step`].
pub const CFL_LIMIT: f64 = 0.5;

impl EulerianState {
    pub fn new(grid: Grid, rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) || !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Parameter(format!(
                "fluid needs rho > 0 and mu >= 0, got rho={rho}, mu={mu}"
            )));
        }
        Ok(Self {
            grid,
            rho,
            mu,
            u: FaceField::zeros(&grid),
            p: vec![0.0; grid.n_cells()],
            f: FaceField::zeros(&grid),
            prev_advection: None,
            poisson: PoissonSolver::new(grid),
        })
    }

    pub fn max_speed(&self) -> f64 {
        self.u.max_abs()
    }

    /// `½ ρ Σ |u|² h^d`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.rho * self.u.dot(&self.u) * self.grid.cell_volume()
    }

    /// `ρ Σ u h^d` per component.
    pub fn momentum(&self) -> [f64; 3] {
        let mut m = [0.0; 3];
        for (c, v) in self.u.comps.iter().enumerate() {
            m[c] = self.rho * v.iter().sum::<f64>() * self.grid.cell_volume();
        }
        m
    }

    pub fn divergence(&self) -> Vec<f64> {
        divergence(&self.grid, &self.u)
    }

    /// Projects `u` onto discretely divergence-free fields. Returns the
    /// potential `φ` with `u ← u + (Δt/ρ) G φ`.
    pub fn project(&mut self, dt: f64) -> Vec<f64> {
        let div = divergence(&self.grid, &self.u);
        let scale = -self.rho / dt;
        let rhs: Vec<f64> = div.iter().map(|d| d * scale).collect();
        let phi = self.poisson.solve(&rhs);
        let g = gradient(&self.grid, &phi);
        self.u.axpy(dt / self.rho, &g);
        phi
    }

    /// Advances one step with the body force currently stored in `f`:
    /// AB2 skew-symmetric advection, Crank–Nicolson viscosity with an
    /// incremental pressure, then exact projection.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let h = self.grid.h();
        let cfl = self.max_speed() * dt / h;
        if cfl > CFL_LIMIT {
            return Err(Error::StepSize {
                cfl,
                limit: CFL_LIMIT,
            });
        }
        let grid = self.grid;
        let adv = advection(&grid, &self.u);
        let mut nonlinear = adv.clone();
        if let Some(prev) = &self.prev_advection {
            for (a, b) in nonlinear.comps.iter_mut().zip(&prev.comps) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = 1.5 * *x - 0.5 * y;
                }
            }
        }
        self.prev_advection = Some(adv);

        let gp = gradient(&grid, &self.p);
        let lap = laplacian(&grid, &self.u);
        let a_diag = self.rho / dt;
        let half_mu = 0.5 * self.mu;
        let settings = CgSettings {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_iter: 5000,
        };
        for c in 0..grid.dim {
            let fs = grid.face_shape(c);
            let mut rhs = vec![0.0; grid.n_faces(c)];
            for_each_index(fs, |idx| {
                if grid.is_wall_face(c, idx) {
                    return;
                }
                let k = lin(fs, idx);
                rhs[k] = a_diag * self.u.comps[c][k] + half_mu * lap.comps[c][k]
                    - self.rho * nonlinear.comps[c][k]
                    + self.f.comps[c][k]
                    + gp.comps[c][k];
            });
            let diag = a_diag + half_mu * 2.0 * grid.dim as f64 / (h * h);
            let inv_diag = vec![1.0 / diag; rhs.len()];
            let mut x = self.u.comps[c].clone();
            conjugate_gradient(
                "helmholtz",
                |v, out| {
                    // Wall rows reduce to the identity scaled by ρ/Δt.
                    laplacian_component(&grid, c, v, out);
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o = a_diag * vi - half_mu * *o;
                    }
                },
                &inv_diag,
                &rhs,
                &mut x,
                settings,
            )?;
            self.u.comps[c] = x;
        }

        let phi = self.project(dt);
        for (p, ph) in self.p.iter_mut().zip(&phi) {
            *p += ph;
        }
        Ok(())
    }

    /// Writes `component,i,j,k,x,y,z,value` rows for every face.
    pub fn write_velocity_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "component,i,j,k,x,y,z,value")?;
        for c in 0..self.grid.dim {
            let fs = self.grid.face_shape(c);
            let mut res = Ok(());
            for_each_index(fs, |idx| {
                if res.is_err() {
                    return;
                }
                let x = self.grid.face_position(c, idx);
                res = writeln!(
                    out,
                    "{c},{},{},{},{},{},{},{}",
                    idx[0],
                    idx[1],
                    idx[2],
                    x[0],
                    x[1],
                    x[2],
                    self.u.comps[c][lin(fs, idx)]
                );
            });
            res?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid2(n: usize) -> Grid {
        Grid::new(2, n, 1.0).unwrap()
    }

    fn vortex(x: [f64; 3]) -> [f64; 3] {
        let (sx, sy) = ((PI * x[0]).sin(), (PI * x[1]).sin());
        [sx * sx * (2.0 * PI * x[1]).sin(), -(2.0 * PI * x[0]).sin() * sy * sy, 0.0]
    }

    #[test]
    fn divergence_of_linear_fields() {
        let g = grid2(8);
        // (x, -y) is divergence free; (x, y) has divergence 2. Wall faces are
        // zeroed by `from_fn`, so compare on interior cells only.
        let div = divergence(&g, &FaceField::from_fn(&g, |x| [x[0], -x[1], 0.0]));
        let div2 = divergence(&g, &FaceField::from_fn(&g, |x| [x[0], x[1], 0.0]));
        let cs = g.cell_shape();
        for j in 1..7 {
            for i in 1..7 {
                assert!(div[lin(cs, [i, j, 0])].abs() < 1e-12);
                assert!((div2[lin(cs, [i, j, 0])] - 2.0).abs() < 1e-12);
            }
        }
        let constant = FaceField::from_fn(&g, |_| [1.0, 2.0, 0.0]);
        let div = divergence(&g, &constant);
        assert!(div[lin(cs, [3, 4, 0])].abs() < 1e-12);
    }

    #[test]
    fn poisson_solver_inverts_neumann_laplacian() {
        for dim in [2, 3] {
            let g = Grid::new(dim, 8, 2.0).unwrap();
            let solver = PoissonSolver::new(g);
            let mut rhs: Vec<f64> = (0..g.n_cells()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
            rhs.iter_mut().for_each(|r| *r -= mean);
            let phi = solver.solve(&rhs);
            let back = divergence(&g, &gradient(&g, &phi));
            for (a, b) in back.iter().zip(&rhs) {
                assert!((a - b).abs() < 1e-10, "{dim}D: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let mut s = EulerianState::new(grid2(16), 1.0, 0.16).unwrap();
        for _ in 0..5 {
            s.step(0.01).unwrap();
        }
        assert_eq!(s.max_speed(), 0.0);
        assert!(s.p.iter().all(|&p| p == s.p[0]));
    }

    #[test]
    fn uniform_force_is_a_pure_gradient() {
        let g = grid2(16);
        let mut s = EulerianState::new(g, 1.0, 0.1).unwrap();
        s.f = FaceField::from_fn(&g, |_| [3.0, -1.0, 0.0]);
        s.step(0.01).unwrap();
        let div = s.divergence();
        assert!(div.iter().all(|d| d.abs() < 1e-8));
        // The pressure absorbs the force except in the viscous wall layer.
        assert!(s.max_speed() < 0.25 * 3.0 * 0.01);
    }

    #[test]
    fn projection_is_idempotent() {
        let g = grid2(16);
        let mut s = EulerianState::new(g, 1.0, 0.0).unwrap();
        s.u = FaceField::from_fn(&g, |x| [x[1] * x[1], x[0] * x[1], 0.0]);
        s.project(0.1);
        let once = s.u.clone();
        s.project(0.1);
        let mut diff = s.u.clone();
        diff.axpy(-1.0, &once);
        assert!(diff.max_abs() <= 1e-12 * once.max_abs());
    }

    #[test]
    fn skew_advection_conserves_energy() {
        let g = grid2(24);
        let mut s = EulerianState::new(g, 1.0, 0.0).unwrap();
        s.u = FaceField::from_fn(&g, vortex);
        s.project(1.0);
        let n = advection(&g, &s.u);
        assert!(s.u.dot(&n).abs() < 1e-12 * s.u.dot(&s.u));
    }

    #[test]
    fn vortex_energy_decays_monotonically() {
        let g = grid2(32);
        let mut s = EulerianState::new(g, 1.0, 0.01).unwrap();
        s.u = FaceField::from_fn(&g, vortex);
        s.project(1.0);
        let mut last = s.kinetic_energy();
        for _ in 0..100 {
            s.step(0.005).unwrap();
            let e = s.kinetic_energy();
            assert!(e <= last * (1.0 + 1e-12), "{e} > {last}");
            last = e;
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let g = grid2(8);
        let mut s = EulerianState::new(g, 1.0, 0.0).unwrap();
        s.u = FaceField::from_fn(&g, |_| [10.0, 0.0, 0.0]);
        assert!(matches!(s.step(0.1), Err(Error::StepSize { .. })));
    }

    #[test]
    fn csv_dump_has_one_row_per_face() {
        let g = grid2(4);
        let s = EulerianState::new(g, 1.0, 0.0).unwrap();
        let mut buf = Vec::new();
        s.write_velocity_csv(&mut buf).unwrap();
        let lines = String::from_utf8(buf).unwrap().lines().count();
        assert_eq!(lines, 1 + 2 * 5 * 4);
    }
}
