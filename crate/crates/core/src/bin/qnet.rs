use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use qnet::fluid::{generate_instance, GeneratorConfig};
use qnet::model::{NetworkModel, TOL};
use qnet::paths::enumerate_simple_paths;
use qnet::policy::{GreedyBasic, Idle, NegativePathPump, Policy};
use qnet::report::analyze;
use qnet::sim::{run_nc_experiment, write_trajectories_csv, SimConfig};

const EXIT_INVALID_MODEL: u8 = 2;
const EXIT_ASSUMPTIONS: u8 = 3;
const EXIT_POLICY: u8 = 4;

#[derive(Parser)]
#[command(name = "qnet", version, about = "Static fluid analysis and simulation of parallel server networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the static problem, enumerate simple paths and print verdicts.
    Analyze {
        model: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Exit with status 3 when a standing assumption fails.
        #[arg(long)]
        strict: bool,
        /// Zero tolerance for path weights and throughput comparisons.
        #[arg(long, default_value_t = TOL)]
        tol: f64,
    },
    /// Simulate the scaled systems and report queue occupancy per scale.
    Simulate {
        model: PathBuf,
        /// Comma-separated ascending scales.
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        /// Horizon.
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::GreedyBasic)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for trajectories.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a random critically loaded model with a planted tree solution.
    Generate {
        #[arg(long = "I")]
        classes: usize,
        #[arg(long = "J")]
        stations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PolicyArg {
    GreedyBasic,
    NegativePath,
    Idle,
}

fn load_model(path: &Path) -> Result<NetworkModel, ExitCode> {
    NetworkModel::load(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_INVALID_MODEL)
    })
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    out.with_file_name(format!("{stem}.planted.json"))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Analyze { model, json, strict, tol } => {
            let model = match load_model(&model) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let report = analyze(&model, tol).context("analysis failed")?;
            println!("{report}");
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if strict && !report.assumptions.all_hold() {
                eprintln!("error: standing assumptions fail");
                return Ok(ExitCode::from(EXIT_ASSUMPTIONS));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            model,
            n,
            horizon,
            reps,
            policy,
            seed,
            out,
        } => {
            let model = match load_model(&model) {
                Ok(m) => m,
                Err(code) => return Ok(code),
            };
            let sol = qnet::fluid::solve_static_allocation(&model).context("static allocation")?;
            let policy: Box<dyn Policy> = match policy {
                PolicyArg::GreedyBasic => Box::new(GreedyBasic::new(&model, &sol)),
                PolicyArg::Idle => Box::new(Idle),
                PolicyArg::NegativePath => {
                    let paths = enumerate_simple_paths(&model, &sol).unwrap_or_default();
                    match NegativePathPump::new(&model, &sol, &paths) {
                        Some(p) => Box::new(p),
                        None => {
                            eprintln!("error: no negative path; the negative-path policy does not apply");
                            return Ok(ExitCode::from(EXIT_POLICY));
                        }
                    }
                }
            };
            let cfg = SimConfig::new(horizon);
            let exp = run_nc_experiment(&model, &sol, policy.as_ref(), &n, &cfg, reps, seed)?;

            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let csv = fs::File::create(out.join("trajectories.csv"))?;
            write_trajectories_csv(csv, &exp.results, model.classes(), model.stations())?;
            fs::write(out.join("summary.json"), serde_json::to_string_pretty(&exp)?)?;

            if exp.heuristic_policy {
                println!("policy {} (heuristic)", exp.policy);
            } else {
                println!("policy {}", exp.policy);
            }
            println!("{:>8} {:>5} {:>10} {:>10} {:>10} {:>10}", "n", "reps", "mean", "median", "q10", "q90");
            for r in &exp.rows {
                println!(
                    "{:>8} {:>5} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
                    r.n, r.reps, r.mean, r.median, r.q10, r.q90
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Generate {
            classes,
            stations,
            seed,
            out,
        } => {
            let g = generate_instance(seed, &GeneratorConfig::new(classes, stations))?;
            fs::write(&out, g.model.to_json()).with_context(|| format!("writing {}", out.display()))?;
            let side = sidecar_path(&out);
            let planted = json!({ "seed": seed, "accepted_seed": g.seed, "xi": g.planted_xi });
            fs::write(&side, serde_json::to_string_pretty(&planted)?)?;
            println!("wrote {} and {}", out.display(), side.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
