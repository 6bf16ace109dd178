//! Benchmark configurations, geometry presets and sweeps.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{RunMeta, RunReport};
use crate::error::{Error, Result};
use crate::eulerian::{EulerianState, Grid};
use crate::fem::{hex_block, prism_block, quad_patch, ElementKind, LagrangianMesh};
use crate::materials::{ConstitutiveSpec, InvariantMode, MaterialFamily};
use crate::solidforce::{DirichletBc, DirichletTarget, ForceModel, LoadProgram, Traction};
use crate::timeloop::{run_problem, Integrator, Problem, RunOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Cook2d,
    CompressedBlock2d,
    AnisoCook3d,
    Torsion3d,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [
        Benchmark::Cook2d,
        Benchmark::CompressedBlock2d,
        Benchmark::AnisoCook3d,
        Benchmark::Torsion3d,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Cook2d => "cook2d",
            Benchmark::CompressedBlock2d => "compressed_block2d",
            Benchmark::AnisoCook3d => "aniso_cook3d",
            Benchmark::Torsion3d => "torsion3d",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Cook2d | Benchmark::CompressedBlock2d => 2,
            Benchmark::AnisoCook3d | Benchmark::Torsion3d => 3,
        }
    }

    /// Number of shipped resolution levels.
    pub fn levels(&self) -> usize {
        match self {
            Benchmark::Cook2d => 4,
            Benchmark::CompressedBlock2d => 5,
            Benchmark::AnisoCook3d | Benchmark::Torsion3d => 3,
        }
    }

    pub fn defaults(&self) -> BenchmarkDefaults {
        match self {
            Benchmark::Cook2d => BenchmarkDefaults {
                domain_length: 10.0,
                rho: 1.0,
                mu: 0.16,
                t_final: 35.0,
                alpha: 0.4,
                m_fac: 2.0,
                material: MaterialFamily::NeoHookean { mu: 83.3333 },
                load: [0.0, 6.25, 0.0],
            },
            Benchmark::CompressedBlock2d => BenchmarkDefaults {
                domain_length: 40.0,
                rho: 1.0,
                mu: 0.16,
                t_final: 100.0,
                alpha: 0.4,
                m_fac: 1.0,
                material: MaterialFamily::NeoHookean { mu: 80.194 },
                load: [0.0, -200.0, 0.0],
            },
            Benchmark::AnisoCook3d => BenchmarkDefaults {
                domain_length: 12.0,
                rho: 1.0,
                mu: 0.16,
                t_final: 35.0,
                alpha: 0.4,
                m_fac: 2.0,
                material: MaterialFamily::StandardReinforcing {
                    mu_t: 8.0,
                    mu_l: 160.0,
                    e_l: 1200.0,
                    fiber: [1.0 / 3f64.sqrt(); 3],
                },
                load: [0.0, 6.25, 0.0],
            },
            Benchmark::Torsion3d => BenchmarkDefaults {
                domain_length: 9.0,
                rho: 1.0,
                mu: 0.04,
                t_final: 5.0,
                alpha: 0.8,
                m_fac: 2.0,
                material: MaterialFamily::MooneyRivlin { c1: 9000.0, c2: 9000.0 },
                load: [0.0; 3],
            },
        }
    }

    /// Default grid size for a preset level.
    pub fn default_grid_n(&self, level: usize) -> usize {
        match self {
            Benchmark::Cook2d => 16 << level,
            Benchmark::CompressedBlock2d => 2 * BLOCK_CELLS[level],
            Benchmark::AnisoCook3d | Benchmark::Torsion3d => 16 << level,
        }
    }
}

impl std::str::FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown benchmark `{s}`")))
    }
}

/// Physical constants of a benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkDefaults {
    pub domain_length: f64,
    pub rho: f64,
    pub mu: f64,
    pub t_final: f64,
    pub alpha: f64,
    pub m_fac: f64,
    pub material: MaterialFamily,
    /// Traction vector on the loaded facets.
    pub load: [f64; 3],
}

/// Horizontal cell counts of the compressed block presets.
const BLOCK_CELLS: [usize; 5] = [8, 16, 32, 64, 96];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidSection {
    pub element: ElementKind,
    pub mode: InvariantMode,
    pub nu_s: f64,
    /// Overrides the benchmark material.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialFamily>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    /// Target `ΔX / Δx`; used to pick the grid when `grid_n` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_fac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    /// Fixed step; derived from the elastic wave speed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Safety factor of the automatic step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_safety: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub integrator: Integrator,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_prefactor: Option<f64>,
    /// Overrides the benchmark traction vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traction: Option<[f64; 3]>,
    /// Overrides the final torsion angle (radians).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress_every: Option<usize>,
    /// Color-scale cutoffs for plots of the element-averaged `J`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_j_range: Option<[f64; 2]>,
}

/// Lists expanded into a Cartesian product of runs by [`expand_sweep`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub element: Vec<ElementKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mode: Vec<InvariantMode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nu_s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub level: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub benchmark: Benchmark,
    /// Preset resolution level.
    #[serde(default)]
    pub level: usize,
    /// Explicit subdivision counts, overriding the level preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdivisions: Option<Vec<usize>>,
    /// Reference position of the tracked point; the nearest node is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracked_point: Option<[f64; 3]>,
    pub solid: SolidSection,
    #[serde(default)]
    pub fluid: FluidSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub load: LoadSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl BenchmarkConfig {
    /// Minimal configuration of a benchmark at a preset level.
    pub fn preset(benchmark: Benchmark, element: ElementKind, mode: InvariantMode, nu_s: f64, level: usize) -> Self {
        Self {
            benchmark,
            level,
            subdivisions: None,
            tracked_point: None,
            solid: SolidSection {
                element,
                mode,
                nu_s,
                material: None,
            },
            fluid: FluidSection::default(),
            time: TimeSection::default(),
            load: LoadSection::default(),
            output: OutputSection::default(),
            sweep: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn spec(&self) -> Result<ConstitutiveSpec> {
        let family = self.solid.material.unwrap_or(self.benchmark.defaults().material);
        ConstitutiveSpec::new(family, self.solid.mode, self.solid.nu_s)
    }

    fn subdivisions_or_preset(&self) -> Result<Vec<usize>> {
        if let Some(s) = &self.subdivisions {
            let need = self.benchmark.dim();
            if s.len() != need || s.contains(&0) {
                return Err(Error::Config(format!(
                    "{} needs {need} positive subdivision counts",
                    self.benchmark.name()
                )));
            }
            return Ok(s.clone());
        }
        if self.level >= self.benchmark.levels() {
            return Err(Error::Config(format!(
                "{} ships levels 0..{}, got {}",
                self.benchmark.name(),
                self.benchmark.levels() - 1,
                self.level
            )));
        }
        let quadratic = matches!(self.solid.element, ElementKind::P2 | ElementKind::Q2);
        let l = self.level;
        Ok(match self.benchmark {
            Benchmark::Cook2d => {
                let a = 4 << l;
                let a = if quadratic { a / 2 } else { a };
                vec![a, a]
            }
            Benchmark::CompressedBlock2d => {
                let a = BLOCK_CELLS[l];
                if quadratic {
                    vec![a / 2, a / 4]
                } else {
                    vec![a, a / 2]
                }
            }
            Benchmark::AnisoCook3d => {
                let a = 4 << l;
                vec![a, a, (a / 4).max(1)]
            }
            Benchmark::Torsion3d => {
                let a = 2 << l;
                let layers = if self.solid.element == ElementKind::P1 { 2 * a } else { 4 * a };
                vec![a, a, layers]
            }
        })
    }

    /// Grid size: explicit, from the target M_FAC, or the level preset.
    pub fn grid_n(&self, mesh: &LagrangianMesh) -> usize {
        if let Some(n) = self.fluid.grid_n {
            return n;
        }
        let length = self.fluid.domain_length.unwrap_or(self.benchmark.defaults().domain_length);
        match (self.fluid.m_fac, &self.subdivisions) {
            (Some(m_fac), _) => mesh_width_grid(mesh, length, m_fac),
            (None, Some(_)) => mesh_width_grid(mesh, length, self.benchmark.defaults().m_fac),
            (None, None) => self.benchmark.default_grid_n(self.level),
        }
    }
}

fn mesh_width_grid(mesh: &LagrangianMesh, length: f64, m_fac: f64) -> usize {
    let dx = mean_node_spacing(mesh);
    ((length * m_fac / dx).round() as usize).max(8)
}

/// Mean distance between adjacent nodes along element edges.
pub fn mean_node_spacing(mesh: &LagrangianMesh) -> f64 {
    let order = match mesh.element_type.kind() {
        ElementKind::P2 | ElementKind::Q2 => 2.0,
        _ => 1.0,
    };
    let nv = mesh.element_type.n_vertices();
    let (mut sum, mut count) = (0.0, 0usize);
    for e in 0..mesh.n_elements() {
        let conn = mesh.element(e);
        for a in 0..nv {
            let b = (a + 1) % nv;
            sum += (mesh.nodes[conn[a]] - mesh.nodes[conn[b]]).norm();
            count += 1;
        }
    }
    sum / count as f64 / order
}

fn cook_profile(s: f64, t: f64, scale: f64, offset: [f64; 2]) -> [f64; 2] {
    // Bilinear map of the unit square onto the Cook quadrilateral:
    // (0,0) → (0,0), (1,0) → (48,44), (1,1) → (48,60), (0,1) → (0,44).
    let x = 48.0 * s;
    let y = 44.0 * s * (1.0 - t) + (44.0 + 16.0 * s) * t;
    [offset[0] + scale * x, offset[1] + scale * y]
}

/// Builds the benchmark mesh with its facet sets: `clamped`, `loaded` and,
/// for the compressed block, `bottom` and `top`.
pub fn build_geometry(config: &BenchmarkConfig) -> Result<LagrangianMesh> {
    let sub = config.subdivisions_or_preset()?;
    let kind = config.solid.element;
    let tol = 1e-9;
    let mut mesh = match config.benchmark {
        Benchmark::Cook2d => {
            let mut m = quad_patch(kind, sub[0], sub[1], |s, t| {
                let p = cook_profile(s, t, 0.1, [2.6, 2.0]);
                Vector3::new(p[0], p[1], 0.0)
            })?;
            m.add_facet_set("clamped", |c, _| c[0] < 2.6 + tol);
            m.add_facet_set("loaded", |c, _| c[0] > 7.4 - tol);
            m
        }
        Benchmark::CompressedBlock2d => {
            let mut m = quad_patch(kind, sub[0], sub[1], |s, t| Vector3::new(10.0 + 20.0 * s, 15.0 + 10.0 * t, 0.0))?;
            m.add_facet_set("bottom", |c, _| c[1] < 15.0 + tol);
            m.add_facet_set("top", |c, _| c[1] > 25.0 - tol);
            m.add_facet_set("loaded", |c, _| c[1] > 25.0 - tol && c[0] > 15.0 - tol && c[0] < 25.0 + tol);
            m
        }
        Benchmark::AnisoCook3d => {
            let map = |s: f64, t: f64, u: f64| {
                let p = cook_profile(s, t, 0.12, [3.12, 2.4]);
                Vector3::new(p[0], p[1], 5.4 + 1.2 * u)
            };
            let mut m = match kind {
                ElementKind::Q1 => hex_block(sub[0], sub[1], sub[2], map)?,
                ElementKind::P1 => prism_block(sub[0], sub[1], sub[2], false, map)?,
                other => return Err(Error::Config(format!("{} is not available in 3D", other.name()))),
            };
            m.add_facet_set("clamped", |c, n| c[0] < 3.12 + tol && n[0] < -0.5);
            m.add_facet_set("loaded", |c, n| c[0] > 8.88 - tol && n[0] > 0.5);
            m
        }
        Benchmark::Torsion3d => {
            // Beam axis along y; (s, t) span the cross-section.
            let map = |s: f64, t: f64, u: f64| Vector3::new(3.75 + 1.5 * s, 1.5 + 6.0 * u, 3.75 + 1.5 * t);
            let mut m = match kind {
                ElementKind::Q1 => hex_block(sub[0], sub[2], sub[1], |s, u, t| map(s, t, u))?,
                ElementKind::P1 => prism_block(sub[0], sub[1], sub[2], true, map)?,
                other => return Err(Error::Config(format!("{} is not available in 3D", other.name()))),
            };
            m.add_facet_set("clamped", |c, _| c[1] < 1.5 + tol);
            m.add_facet_set("loaded", |c, _| c[1] > 7.5 - tol);
            m
        }
    };
    for name in ["clamped", "loaded", "bottom", "top"] {
        if let Ok(ids) = mesh.facet_set(name) {
            if ids.is_empty() {
                return Err(Error::Config(format!("facet set `{name}` is empty")));
            }
        }
    }
    let length = config.fluid.domain_length.unwrap_or(config.benchmark.defaults().domain_length);
    let n = config.grid_n(&mesh);
    let margin = 2.0 * length / n as f64;
    for (i, x) in mesh.nodes.iter().enumerate() {
        if (0..config.benchmark.dim()).any(|a| x[a] <= margin || x[a] >= length - margin) {
            return Err(Error::Config(format!(
                "node {i} at {:?} violates the {margin} wall margin",
                [x[0], x[1], x[2]]
            )));
        }
    }
    mesh.facets.shrink_to_fit();
    Ok(mesh)
}

/// Reference position of the point of interest.
pub fn default_tracked_point(benchmark: Benchmark) -> [f64; 3] {
    match benchmark {
        Benchmark::Cook2d => [7.4, 8.0, 0.0],
        Benchmark::CompressedBlock2d => [20.0, 25.0, 0.0],
        Benchmark::AnisoCook3d => [8.88, 9.6, 6.6],
        Benchmark::Torsion3d => [4.5, 7.5, 4.5],
    }
}

/// `safety · max(ΔX_min, Δx) / c` with `c² = (κs + 4/3 μ_max) / ρ`.
pub fn automatic_dt(spec: &ConstitutiveSpec, rho: f64, dx_mesh: f64, dx_grid: f64, safety: f64) -> f64 {
    let c = ((spec.kappa_s + 4.0 / 3.0 * spec.family.stiffest_modulus()) / rho).sqrt();
    safety * dx_mesh.max(dx_grid) / c
}

/// Assembles a runnable problem from a configuration.
pub fn build_problem(config: &BenchmarkConfig) -> Result<Problem> {
    let defaults = config.benchmark.defaults();
    let spec = config.spec()?;
    let mesh = build_geometry(config)?;
    let length = config.fluid.domain_length.unwrap_or(defaults.domain_length);
    let grid = Grid::new(config.benchmark.dim(), config.grid_n(&mesh), length)?;
    let rho = config.fluid.rho.unwrap_or(defaults.rho);
    let mu = config.fluid.mu.unwrap_or(defaults.mu);
    let fluid = EulerianState::new(grid, rho, mu)?;
    let dx_mesh = mesh.min_edge_length() / if matches!(config.solid.element, ElementKind::P2 | ElementKind::Q2) { 2.0 } else { 1.0 };
    let dt = match config.time.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::Config(format!("dt must be positive, got {dt}"))),
        None => automatic_dt(&spec, rho, dx_mesh, grid.h(), config.time.dt_safety.unwrap_or(0.5)),
    };
    let t_final = config.time.t_final.unwrap_or(defaults.t_final);
    let alpha = config.time.alpha.unwrap_or(defaults.alpha);
    let traction = config.load.traction.unwrap_or(defaults.load);

    let fixed = |set: &str, components: [bool; 3]| DirichletBc {
        facet_set: set.into(),
        target: DirichletTarget::Fixed,
        components,
    };
    let (tractions, dirichlet) = match config.benchmark {
        Benchmark::Cook2d | Benchmark::AnisoCook3d => (
            vec![Traction {
                facet_set: "loaded".into(),
                value: traction,
            }],
            vec![fixed("clamped", [true; 3])],
        ),
        Benchmark::CompressedBlock2d => (
            vec![Traction {
                facet_set: "loaded".into(),
                value: traction,
            }],
            vec![fixed("bottom", [false, true, false]), fixed("top", [true, false, false])],
        ),
        Benchmark::Torsion3d => (
            Vec::new(),
            vec![
                fixed("clamped", [true; 3]),
                DirichletBc {
                    facet_set: "loaded".into(),
                    target: DirichletTarget::Rotation {
                        center: [4.5, 7.5, 4.5],
                        axis: [0.0, 1.0, 0.0],
                        angle: config.load.twist.unwrap_or(2.5 * std::f64::consts::PI),
                    },
                    components: [true; 3],
                },
            ],
        ),
    };
    let loads = LoadProgram {
        t_final,
        alpha,
        tractions,
        dirichlet,
        penalty_prefactor: config.load.penalty_prefactor.unwrap_or(2.5),
    };
    let kappa_d = loads.penalty_stiffness(grid.h(), dt);
    let forces = ForceModel::new(spec, loads, kappa_d)?;
    let tracked = config.tracked_point.unwrap_or(default_tracked_point(config.benchmark));
    let tracked_node = mesh.nearest_node(&Vector3::from(tracked));
    let meta = RunMeta {
        benchmark: config.benchmark.name().into(),
        mode: config.solid.mode.name().into(),
        nu_s: config.solid.nu_s,
        element: config.solid.element.name().into(),
        n_nodes: mesh.n_nodes(),
        grid_n: grid.n,
        dt,
    };
    // Echo the resolved step and grid so the written config reproduces the run.
    let mut resolved = config.clone();
    resolved.time.dt = Some(dt);
    resolved.fluid.grid_n = Some(grid.n);
    Ok(Problem {
        meta,
        mesh,
        fluid,
        forces,
        dt,
        t_final,
        tracked_node,
        integrator: config.time.integrator,
        config_echo: resolved.to_toml()?,
    })
}

/// Builds and runs one benchmark configuration.
pub fn run_benchmark(config: &BenchmarkConfig, opts: &RunOptions) -> Result<RunReport> {
    run_problem(build_problem(config)?, opts)
}

/// Expands the `[sweep]` lists of a configuration into individual runs.
pub fn expand_sweep(config: &BenchmarkConfig) -> Vec<BenchmarkConfig> {
    let Some(sweep) = &config.sweep else {
        return vec![config.clone()];
    };
    let or = |v: &[ElementKind], d: ElementKind| if v.is_empty() { vec![d] } else { v.to_vec() };
    let elements = or(&sweep.element, config.solid.element);
    let modes = if sweep.mode.is_empty() { vec![config.solid.mode] } else { sweep.mode.clone() };
    let nus = if sweep.nu_s.is_empty() { vec![config.solid.nu_s] } else { sweep.nu_s.clone() };
    let levels = if sweep.level.is_empty() { vec![config.level] } else { sweep.level.clone() };
    let mut out = Vec::new();
    for &level in &levels {
        for &element in &elements {
            for &mode in &modes {
                for &nu_s in &nus {
                    let mut c = config.clone();
                    c.sweep = None;
                    c.level = level;
                    c.solid.element = element;
                    c.solid.mode = mode;
                    c.solid.nu_s = nu_s;
                    out.push(c);
                }
            }
        }
    }
    out
}

/// One line of a sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub benchmark: String,
    pub element: String,
    pub mode: String,
    pub nu_s: f64,
    pub m: usize,
    pub grid_n: usize,
    pub status: String,
    pub disp_x: f64,
    pub disp_y: f64,
    pub disp_z: f64,
    pub volume_change_pct: f64,
}

/// Runs every configuration file (`*.toml`) in `dir`, in name order, with
/// up to `threads` runs in parallel. Failures are recorded, not propagated.
pub fn run_sweep(dir: &Path, output: &Path, threads: usize, opts: &RunOptions) -> Result<Vec<SummaryRow>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    let mut jobs: Vec<(String, std::result::Result<BenchmarkConfig, String>)> = Vec::new();
    for f in &files {
        let name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
        match BenchmarkConfig::load(f) {
            Ok(c) => jobs.extend(expand_sweep(&c).into_iter().map(|c| (name.clone(), Ok(c)))),
            Err(e) => jobs.push((name, Err(format!("{}: {e}", e.kind())))),
        }
    }
    std::fs::create_dir_all(output)?;
    let opts = RunOptions {
        output_dir: Some(output.to_path_buf()),
        ..opts.clone()
    };
    let run_one = |(name, cfg): &(String, std::result::Result<BenchmarkConfig, String>)| -> SummaryRow {
        let failed = |status: String, c: Option<&BenchmarkConfig>| SummaryRow {
            config: name.clone(),
            benchmark: c.map_or(String::new(), |c| c.benchmark.name().into()),
            element: c.map_or(String::new(), |c| c.solid.element.name().into()),
            mode: c.map_or(String::new(), |c| c.solid.mode.name().into()),
            nu_s: c.map_or(f64::NAN, |c| c.solid.nu_s),
            m: 0,
            grid_n: 0,
            status: status.split_whitespace().collect::<Vec<_>>().join(" "),
            disp_x: f64::NAN,
            disp_y: f64::NAN,
            disp_z: f64::NAN,
            volume_change_pct: f64::NAN,
        };
        let cfg = match cfg {
            Ok(c) => c,
            Err(e) => return failed(e.clone(), None),
        };
        match run_benchmark(cfg, &opts) {
            Ok(r) => {
                let d = r.terminal_displacement();
                SummaryRow {
                    config: name.clone(),
                    benchmark: r.meta.benchmark.clone(),
                    element: r.meta.element.clone(),
                    mode: r.meta.mode.clone(),
                    nu_s: r.meta.nu_s,
                    m: r.meta.n_nodes,
                    grid_n: r.meta.grid_n,
                    status: r.failure.clone().unwrap_or_else(|| "ok".into()),
                    disp_x: d[0],
                    disp_y: d[1],
                    disp_z: d[2],
                    volume_change_pct: r.terminal_volume_change_pct(),
                }
            }
            Err(e) => failed(format!("{}: {e}", e.kind()), Some(cfg)),
        }
    };

    let threads = threads.max(1);
    let mut rows: Vec<Option<SummaryRow>> = vec![None; jobs.len()];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(&mut rows);
    std::thread::scope(|s| {
        for _ in 0..threads.min(jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let row = run_one(&jobs[i]);
                results.lock().expect("summary lock")[i] = Some(row);
            });
        }
    });
    let rows: Vec<SummaryRow> = rows.into_iter().map(|r| r.expect("every job produces a row")).collect();
    write_summary(&rows, BufWriter::new(File::create(output.join("summary.csv"))?))?;
    Ok(rows)
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "config", "benchmark", "element", "mode", "nu_s", "m", "grid_n", "status", "disp_x", "disp_y", "disp_z",
            "volume_change_pct",
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Mesh statistics for a configuration, without running it.
pub fn describe(config: &BenchmarkConfig) -> Result<BTreeMap<&'static str, String>> {
    let p = build_problem(config)?;
    let mut out = BTreeMap::new();
    out.insert("m", p.mesh.n_nodes().to_string());
    out.insert("elements", p.mesh.n_elements().to_string());
    out.insert("grid_n", p.fluid.grid.n.to_string());
    out.insert("dt", format!("{:e}", p.dt));
    out.insert("steps", ((p.t_final / p.dt).round() as usize).to_string());
    out.insert("kappa_s", p.forces.spec.kappa_s.to_string());
    out.insert("kappa_d", format!("{:e}", p.forces.kappa_d));
    out.insert("m_fac", format!("{:.3}", mean_node_spacing(&p.mesh) / p.fluid.grid.h()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(b: Benchmark, e: ElementKind, level: usize) -> BenchmarkConfig {
        BenchmarkConfig::preset(b, e, InvariantMode::Modified, 0.4, level)
    }

    #[test]
    fn preset_node_counts() {
        assert_eq!(build_geometry(&cfg(Benchmark::Cook2d, ElementKind::P1, 0)).unwrap().n_nodes(), 25);
        for (level, m) in [(1, 81), (2, 289), (3, 1089)] {
            for e in [ElementKind::P1, ElementKind::Q1, ElementKind::P2, ElementKind::Q2] {
                assert_eq!(build_geometry(&cfg(Benchmark::Cook2d, e, level)).unwrap().n_nodes(), m);
            }
        }
        let block: Vec<usize> = (0..5)
            .map(|l| build_geometry(&cfg(Benchmark::CompressedBlock2d, ElementKind::Q1, l)).unwrap().n_nodes())
            .collect();
        assert_eq!(block, vec![45, 153, 561, 2145, 4753]);
        assert_eq!(build_geometry(&cfg(Benchmark::Torsion3d, ElementKind::P1, 0)).unwrap().n_nodes(), 65);
        assert_eq!(build_geometry(&cfg(Benchmark::Torsion3d, ElementKind::Q1, 1)).unwrap().n_nodes(), 425);
    }

    #[test]
    fn geometry_volumes() {
        let cook = build_geometry(&cfg(Benchmark::Cook2d, ElementKind::Q1, 1)).unwrap();
        // Shoelace area of the scaled Cook quadrilateral: 0.01 × 1440.
        assert!((cook.reference_volume() - 14.4).abs() < 1e-10);
        let beam = build_geometry(&cfg(Benchmark::Torsion3d, ElementKind::Q1, 0)).unwrap();
        assert!((beam.reference_volume() - 13.5).abs() < 1e-10);
        let aniso = build_geometry(&cfg(Benchmark::AnisoCook3d, ElementKind::P1, 0)).unwrap();
        assert!((aniso.reference_volume() - 0.0144 * 1440.0 * 1.2).abs() < 1e-9);
    }

    #[test]
    fn facet_sets_have_expected_measure() {
        let block = build_geometry(&cfg(Benchmark::CompressedBlock2d, ElementKind::P2, 1)).unwrap();
        let loaded: f64 = block.facet_set("loaded").unwrap().iter().map(|&f| block.facets[f].measure()).sum();
        assert!((loaded - 10.0).abs() < 1e-12);
        let cook = build_geometry(&cfg(Benchmark::Cook2d, ElementKind::P1, 0)).unwrap();
        let right: f64 = cook.facet_set("loaded").unwrap().iter().map(|&f| cook.facets[f].measure()).sum();
        assert!((right - 1.6).abs() < 1e-12);
    }

    #[test]
    fn unsupported_element_is_a_config_error() {
        assert!(matches!(
            build_geometry(&cfg(Benchmark::Torsion3d, ElementKind::Q2, 0)),
            Err(Error::Config(_))
        ));
        assert!(build_geometry(&cfg(Benchmark::Cook2d, ElementKind::P1, 4)).is_err());
    }

    #[test]
    fn wall_margin_is_enforced() {
        let mut c = cfg(Benchmark::Cook2d, ElementKind::P1, 0);
        c.fluid.domain_length = Some(8.5);
        assert!(matches!(build_geometry(&c), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_expansion_and_toml_round_trip() {
        let text = r#"
benchmark = "cook2d"
level = 1

[solid]
element = "P1"
mode = "modified"
nu_s = 0.4

[sweep]
element = ["P1", "Q1", "P2", "Q2"]
nu_s = [-1.0, 0.0, 0.4, 0.49995]
"#;
        let c = BenchmarkConfig::from_toml(text).unwrap();
        assert_eq!(expand_sweep(&c).len(), 16);
        let again = BenchmarkConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml().unwrap(), c.to_toml().unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "benchmark = \"cook2d\"\nbogus = 1\n[solid]\nelement = \"P1\"\nmode = \"modified\"\nnu_s = 0.4\n";
        assert!(matches!(BenchmarkConfig::from_toml(text), Err(Error::Config(_))));
    }

    #[test]
    fn empty_sweep_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let rows = run_sweep(dir.path(), &out, 1, &RunOptions::default()).unwrap();
        assert!(rows.is_empty());
        let text = std::fs::read_to_string(out.join("summary.csv")).unwrap();
        assert_eq!(text.lines().count(), 1);
    }
}
