use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use hydrolin::bench::{self, BenchOptions, Execution, Metric};
use hydrolin::circuit::PlantInput;
use hydrolin::linearize::linearize;
use hydrolin::sim::{simulate_linear, simulate_nonlinear, SimOptions, StepSchedule};
use hydrolin::{find_equilibrium, load_plant, BundledPlant, Error, Plant};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "hydrolin",
    version,
    about = "Hydropower plant simulation, linearization and linear-model benchmarks"
)]
struct Cli {
    /// Plant configuration (TOML).
    #[arg(long, global = true, conflicts_with = "plant")]
    config: Option<PathBuf>,
    /// Bundled plant used when no configuration file is given.
    #[arg(long, global = true, value_enum)]
    plant: Option<PlantArg>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Reserved; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Integration step (s).
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Simulation horizon (s).
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlantArg {
    Francis,
    Kaplan,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq)]
enum Model {
    Nonlinear,
    Linear,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a configuration, its curves and on-cam table.
    Validate,
    /// Simulate a guide-vane step from a steady operating point.
    Simulate {
        #[arg(long, value_enum, default_value = "nonlinear")]
        model: Model,
        /// Initial guide-vane opening (pu).
        #[arg(long, default_value_t = 0.6)]
        y0: f64,
        /// Step time (s).
        #[arg(long = "step-at", default_value_t = 0.0)]
        step_at: f64,
        /// Step size (pu).
        #[arg(long = "step-size", default_value_t = 0.0)]
        step_size: f64,
        /// Record every k-th integration step.
        #[arg(long = "record-every", default_value_t = 10)]
        record_every: usize,
    },
    /// Export the linear state-space model at an operating point as JSON.
    Linearize {
        #[arg(long, default_value_t = 0.6)]
        y0: f64,
    },
    /// Run the operating-point × step-change benchmark.
    Bench {
        /// Run cells sequentially.
        #[arg(long)]
        sequential: bool,
        /// Also render SVG heatmaps from the CSV tables.
        #[arg(long)]
        svg: bool,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Curves(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::Domain(_)
            | Error::Dimension { .. } => Failure::Validation(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("validation failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> Result<(Plant, String), Failure> {
    match (&cli.config, cli.plant) {
        (Some(path), _) => Ok((load_plant(path)?, path.display().to_string())),
        (None, Some(p)) => {
            let (b, name) = match p {
                PlantArg::Francis => (BundledPlant::Francis, "bundled:francis"),
                PlantArg::Kaplan => (BundledPlant::Kaplan, "bundled:kaplan"),
            };
            Ok((b.load(), name.to_string()))
        }
        (None, None) => Err(Failure::Validation(
            "either --config <path> or --plant <francis|kaplan> is required".into(),
        )),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (plant, source) = load(cli)?;
    let cfg = &plant.config;
    let curves = &plant.curves;
    match &cli.command {
        Command::Validate => {
            let lay = cfg.layout();
            println!(
                "ok: {} ({}), n = {}, {} states, curves {}",
                cfg.name,
                cfg.kind,
                cfg.elements,
                lay.dim(),
                match curves {
                    hydrolin::Curves::Synthetic(_) => "synthetic",
                    hydrolin::Curves::Tabulated(_) => "tabulated",
                }
            );
            Ok(())
        }
        Command::Simulate {
            model,
            y0,
            step_at,
            step_size,
            record_every,
        } => {
            let dt = cli.dt.unwrap_or_else(|| SimOptions::default_dt(cfg));
            let opts = SimOptions::new(dt, cli.t_end.unwrap_or(60.0)).record_every(*record_every);
            opts.validate(cfg)?;
            let op = find_equilibrium(cfg, curves, *y0, None, cfg.sync_speed)?;
            let y1 = y0 + step_size;
            let before = op.input();
            let after = PlantInput {
                y: y1,
                beta: if cfg.kind.has_blade_pitch() {
                    cfg.on_cam_beta(y1)?
                } else {
                    None
                },
                t_el: op.t_t0,
            };
            let traj = match model {
                Model::Nonlinear => {
                    let schedule = StepSchedule {
                        before,
                        after,
                        t_step: *step_at,
                    };
                    simulate_nonlinear(cfg, curves, &op.x0, &schedule, &opts)?
                }
                Model::Linear => {
                    let lin = linearize(cfg, curves, &op, &plant.steps)?;
                    let ub = lin.input_vector(cfg, &before);
                    let ua = lin.input_vector(cfg, &after);
                    let t_step = *step_at;
                    simulate_linear(
                        &lin,
                        cfg,
                        &op.x0,
                        |t| if t >= t_step { ua.clone() } else { ub.clone() },
                        &opts,
                    )?
                }
            };
            prepare_out(&cli.out)?;
            let path = cli.out.join("trajectory.csv");
            let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            traj.write_csv(cfg.layout(), f)?;
            write_manifest(
                cli,
                &source,
                "simulate",
                json!({
                    "model": format!("{model:?}").to_lowercase(),
                    "y0": y0,
                    "step_at": step_at,
                    "step_size": step_size,
                    "dt": opts.dt,
                    "t_end": opts.t_end,
                    "record_every": opts.record_every,
                }),
            )?;
            println!("{} samples -> {}", traj.len(), path.display());
            Ok(())
        }
        Command::Linearize { y0 } => {
            let op = find_equilibrium(cfg, curves, *y0, None, cfg.sync_speed)?;
            let lin = linearize(cfg, curves, &op, &plant.steps)?;
            prepare_out(&cli.out)?;
            let path = cli.out.join("linear_model.json");
            let text = serde_json::to_string_pretty(&lin.to_json(cfg))
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
            write_manifest(
                cli,
                &source,
                "linearize",
                json!({ "y0": y0, "steps": plant.steps }),
            )?;
            println!(
                "{} states, {} inputs -> {}",
                lin.dim(),
                lin.inputs(),
                path.display()
            );
            Ok(())
        }
        Command::Bench { sequential, svg } => {
            let mut opts = BenchOptions::new(cfg, plant.head_signal, plant.steps);
            if let Some(dt) = cli.dt {
                opts.dt = dt;
            }
            if let Some(t) = cli.t_end {
                opts.t_end = t;
            }
            let grid = bench::build_grid(cfg);
            let exec = if *sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let results = bench::run_benchmark(cfg, curves, &grid, &opts, exec)?;
            let failed = results.iter().filter(|r| !r.status.completed()).count();
            if failed == results.len() {
                return Err(Failure::Runtime(format!(
                    "all {failed} cells failed; first: {}",
                    results
                        .first()
                        .map(|r| r.status.label())
                        .unwrap_or_default()
                )));
            }
            prepare_out(&cli.out)?;
            let path = cli.out.join("results.csv");
            let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
            bench::write_results_csv(&results, f)?;
            for m in Metric::ALL {
                let hp = cli.out.join(format!("heatmap_{}.csv", m.name()));
                let mut buf = Vec::new();
                bench::write_heatmap_csv(&results, &grid, m, &mut buf)?;
                fs::write(&hp, &buf).map_err(|e| io_err(&hp, e))?;
                if *svg {
                    let text = fs::read_to_string(&hp).map_err(|e| io_err(&hp, e))?;
                    let sp = hp.with_extension("svg");
                    fs::write(&sp, bench::heatmap_svg(&text, m.name())?)
                        .map_err(|e| io_err(&sp, e))?;
                }
            }
            write_manifest(
                cli,
                &source,
                "bench",
                json!({
                    "bench": opts,
                    "execution": if *sequential { "sequential" } else { "parallel" },
                    "cells": grid.len(),
                    "failed": failed,
                }),
            )?;
            println!(
                "{} cells ({} failed) -> {}",
                results.len(),
                failed,
                path.display()
            );
            Ok(())
        }
    }
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_manifest(
    cli: &Cli,
    source: &str,
    command: &str,
    options: serde_json::Value,
) -> Result<(), Failure> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "config": source,
        "command": command,
        "options": options,
        "seed": cli.seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
        "output_dir": cli.out.display().to_string(),
    });
    let path = cli.out.join("manifest.json");
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}
