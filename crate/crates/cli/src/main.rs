use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ibfe::bench::{run_benchmark, run_sweep, BenchmarkConfig};
use ibfe::timeloop::RunOptions;
use ibfe::Error;

#[derive(Parser)]
#[command(name = "bench", about = "Immersed hyperelastic benchmark runner")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write a VTK snapshot every N steps.
    #[arg(long, global = true)]
    snapshot_every: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark configuration.
    Run { config: PathBuf },
    /// Run every configuration in a directory and write summary.csv.
    Sweep { dir: PathBuf },
    /// Run the built-in consistency checks.
    Verify,
}

fn options(cli: &Cli, config: Option<&BenchmarkConfig>) -> RunOptions {
    let out = config.map(|c| &c.output);
    RunOptions {
        output_dir: cli
            .output
            .clone()
            .or_else(|| out.and_then(|o| o.dir.clone()))
            .or_else(|| Some(PathBuf::from("output"))),
        snapshot_every: cli.snapshot_every.or_else(|| out.and_then(|o| o.snapshot_every)),
        progress_every: out.and_then(|o| o.progress_every),
        samples: None,
    }
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = BenchmarkConfig::load(config)?;
            let opts = options(cli, Some(&cfg));
            let report = run_benchmark(&cfg, &opts)?;
            let d = report.terminal_displacement();
            println!(
                "run={} status={} disp=({:.6e},{:.6e},{:.6e}) vol_change_pct={:.6e}",
                report.meta.file_stem(),
                report.failure.as_deref().unwrap_or("ok"),
                d[0],
                d[1],
                d[2],
                report.terminal_volume_change_pct()
            );
            if let Some(f) = &report.failure {
                let kind = f.split(':').next().unwrap_or("solver");
                println!("error kind={kind} message={f:?}");
            }
            Ok(report.completed())
        }
        Command::Sweep { dir } => {
            let output = cli.output.clone().unwrap_or_else(|| PathBuf::from("output"));
            let opts = RunOptions {
                snapshot_every: cli.snapshot_every,
                ..Default::default()
            };
            let rows = run_sweep(dir, &output, cli.threads, &opts)?;
            for r in &rows {
                println!(
                    "config={} benchmark={} element={} mode={} nu_s={} m={} status={:?}",
                    r.config, r.benchmark, r.element, r.mode, r.nu_s, r.m, r.status
                );
            }
            println!("summary={}", output.join("summary.csv").display());
            Ok(rows.iter().all(|r| r.status == "ok"))
        }
        Command::Verify => {
            let checks = ibfe::verify::run_checks()?;
            for c in &checks {
                println!("check={} {} {}", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error kind={} message={:?}", e.kind(), e.to_string());
            ExitCode::from(2)
        }
    }
}
