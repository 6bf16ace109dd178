//! Coupled fluid–structure time stepping and full benchmark runs.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::coupling::{check_support, interpolate, spread};
use crate::diagnostics::{
    element_avg_j, total_volume_change_pct, track_point, write_samples, write_vtk, RunMeta, RunReport, Sample,
};
use crate::error::{Error, Result};
use crate::eulerian::{EulerianState, FaceField};
use crate::fem::{LagrangianMesh, NodalField};
use crate::solidforce::ForceModel;

/// Structural position update used by [`fsi_step`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Midpoint predictor–corrector.
    #[default]
    Midpoint,
    /// Forces at `χⁿ`, positions advanced with the old velocity. Debugging only.
    ForwardEuler,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub eulerian: EulerianState,
    pub chi: NodalField,
    /// Most recent L2-projected structure velocity.
    pub velocity: NodalField,
    pub t: f64,
    pub dt: f64,
    pub step_index: usize,
}

impl SimState {
    pub fn new(eulerian: EulerianState, mesh: &LagrangianMesh, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            eulerian,
            chi: mesh.nodes.clone(),
            velocity: vec![Vector3::zeros(); mesh.n_nodes()],
            t: 0.0,
            dt,
            step_index: 0,
        })
    }
}

fn structure_velocity(
    mesh: &LagrangianMesh,
    state: &mut SimState,
    u: &FaceField,
    at: &[Vector3<f64>],
) -> Result<()> {
    let grid = state.eulerian.grid;
    let samples = interpolate(u, &grid, mesh, at)?;
    mesh.l2_project_into(&samples, &mut state.velocity)?;
    if mesh.dim() == 2 {
        state.velocity.iter_mut().for_each(|v| v[2] = 0.0);
    }
    Ok(())
}

/// Advances the coupled system by one step.
///
/// Midpoint scheme: predict `χ^{n+½}` from `uⁿ`, evaluate forces there at
/// `t + Δt/2`, spread and advance the fluid, then move the structure with the
/// time-centred fluid velocity interpolated at `χ^{n+½}`.
pub fn fsi_step(
    state: &mut SimState,
    mesh: &LagrangianMesh,
    forces: &mut ForceModel,
    integrator: Integrator,
) -> Result<()> {
    let dt = state.dt;
    let grid = state.eulerian.grid;
    check_support(&grid, &mesh.eval_at_qps(&state.chi))?;
    let u_old = state.eulerian.u.clone();

    match integrator {
        Integrator::Midpoint => {
            structure_velocity(mesh, state, &u_old, &state.chi.clone())?;
            let chi_half: NodalField = state
                .chi
                .iter()
                .zip(&state.velocity)
                .map(|(x, v)| x + v * (0.5 * dt))
                .collect();
            let sf = forces.evaluate(mesh, &chi_half, state.t + 0.5 * dt)?;
            state.eulerian.f = spread(mesh, &chi_half, &sf.density_at_qps, &grid)?;
            state.eulerian.step(dt)?;
            let mut u_mid = u_old;
            u_mid.axpy(1.0, &state.eulerian.u);
            for comp in &mut u_mid.comps {
                comp.iter_mut().for_each(|x| *x *= 0.5);
            }
            structure_velocity(mesh, state, &u_mid, &chi_half)?;
        }
        Integrator::ForwardEuler => {
            let sf = forces.evaluate(mesh, &state.chi, state.t)?;
            state.eulerian.f = spread(mesh, &state.chi, &sf.density_at_qps, &grid)?;
            structure_velocity(mesh, state, &u_old, &state.chi.clone())?;
            state.eulerian.step(dt)?;
        }
    }
    for (x, v) in state.chi.iter_mut().zip(&state.velocity) {
        *x += v * dt;
    }
    state.step_index += 1;
    state.t = state.step_index as f64 * dt;
    Ok(())
}

/// Everything needed to run one benchmark instance.
#[derive(Clone, Debug)]
pub struct Problem {
    pub meta: RunMeta,
    pub mesh: LagrangianMesh,
    pub fluid: EulerianState,
    pub forces: ForceModel,
    pub dt: f64,
    pub t_final: f64,
    pub tracked_node: usize,
    pub integrator: Integrator,
    pub config_echo: String,
}

/// Output and logging controls of a run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory for the CSV report, VTK snapshots and failure dumps.
    pub output_dir: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps (and at the end).
    pub snapshot_every: Option<usize>,
    /// Print a progress line every this many steps.
    pub progress_every: Option<usize>,
    /// Number of time-series samples to record (default 200).
    pub samples: Option<usize>,
}

fn sample(problem: &Problem, state: &SimState) -> Result<Sample> {
    let d = track_point(&problem.mesh, &state.chi, problem.tracked_node)?;
    let min_j = element_avg_j(&problem.mesh, &state.chi)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(Sample {
        t: state.t,
        disp_x: d[0],
        disp_y: d[1],
        disp_z: d[2],
        volume_change_pct: total_volume_change_pct(&problem.mesh, &state.chi),
        max_speed: state.eulerian.max_speed(),
        min_avg_j: min_j,
    })
}

fn write_snapshot(problem: &Problem, state: &SimState, dir: &PathBuf, suffix: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}_{suffix}.vtk", problem.meta.file_stem()));
    let title = format!("{} t={}", problem.meta.file_stem(), state.t);
    write_vtk(&problem.mesh, &state.chi, &title, BufWriter::new(File::create(path)?))
}

/// Runs a problem to its final time. Step failures end the run early and
/// are recorded in the report rather than returned.
pub fn run_problem(mut problem: Problem, opts: &RunOptions) -> Result<RunReport> {
    let n_steps = (problem.t_final / problem.dt).round() as usize;
    let n_samples = opts.samples.unwrap_or(200).max(1);
    let sample_every = (n_steps / n_samples).max(1);
    let mut state = SimState::new(problem.fluid.clone(), &problem.mesh, problem.dt)?;
    let mut samples = vec![sample(&problem, &state)?];
    let mut peak_speed: f64 = 0.0;
    let mut failure = None;
    let mut last_good = state.chi.clone();

    for step in 1..=n_steps {
        if let Err(e) = fsi_step(&mut state, &problem.mesh, &mut problem.forces, problem.integrator) {
            failure = Some(format!("{}: {e}", e.kind()));
            if let Some(dir) = &opts.output_dir {
                let mut dump = state.clone();
                dump.chi = last_good.clone();
                write_snapshot(&problem, &dump, dir, "failure")?;
            }
            break;
        }
        last_good.clone_from(&state.chi);
        let speed = state.eulerian.max_speed();
        peak_speed = peak_speed.max(speed);
        if !speed.is_finite() {
            failure = Some("solver: non-finite fluid velocity".into());
            break;
        }
        if step % sample_every == 0 || step == n_steps {
            samples.push(sample(&problem, &state)?);
        }
        if let Some(every) = opts.progress_every {
            if every > 0 && step % every == 0 {
                let s = sample(&problem, &state)?;
                println!(
                    "step={step} t={:.6} max_u={:.6e} min_J={:.6} vol_change_pct={:.6e}",
                    state.t, s.max_speed, s.min_avg_j, s.volume_change_pct
                );
            }
        }
        if let (Some(every), Some(dir)) = (opts.snapshot_every, &opts.output_dir) {
            if every > 0 && step % every == 0 {
                write_snapshot(&problem, &state, dir, &format!("{step:08}"))?;
            }
        }
    }

    let report = RunReport {
        meta: problem.meta.clone(),
        samples,
        final_avg_j: element_avg_j(&problem.mesh, &last_good),
        peak_speed,
        failure,
        config_echo: problem.config_echo.clone(),
    };
    if let Some(dir) = &opts.output_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", problem.meta.file_stem()));
        write_samples(&report.samples, BufWriter::new(File::create(path)?))?;
        std::fs::write(dir.join(format!("{}_config.toml", problem.meta.file_stem())), &report.config_echo)?;
        if opts.snapshot_every.is_some() {
            let mut end = state.clone();
            end.chi = last_good;
            write_snapshot(&problem, &end, dir, "final")?;
        }
    }
    Ok(report)
}
