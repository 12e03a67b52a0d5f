//! Command line front end: adaptive runs and verification suites.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use heatdg::adapt::{summary_text, Driver, RunResult, StepView, Termination, CSV_HEADER};
use heatdg::problems::preset;

use config::{ConfigError, RunConfig, DEFAULT_SIGMA};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "heatdg", version, about = "Adaptive dG/cG solver for u_t - κu_xx = f(u) with conditional error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the adaptive driver from a `key = value` configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        ttol: Option<f64>,
        /// Spatial refinement threshold.
        #[arg(long)]
        stol: Option<f64>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        r0: Option<usize>,
        /// Slope of the hp degree rule (enables hp mode).
        #[arg(long)]
        sigma: Option<f64>,
        /// Enable hp mode with the default slope unless --sigma is given.
        #[arg(long)]
        hp: bool,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Run a verification suite (or `all`) and print one line per criterion.
    Verify { suite: String },
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver error: {0}")]
    Solver(#[from] heatdg::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, ttol, stol, p, r0, sigma, hp, max_steps, out, snapshot_every } => {
            let cfg = RunConfig::from_file(&config).map(|mut cfg| {
                let a = &mut cfg.adapt;
                a.ttol = ttol.unwrap_or(a.ttol);
                a.stol_plus = stol.unwrap_or(a.stol_plus);
                a.p = p.unwrap_or(a.p);
                a.r0 = r0.unwrap_or(a.r0);
                a.max_steps = max_steps.unwrap_or(a.max_steps);
                if sigma.is_some() {
                    a.sigma = sigma;
                } else if hp {
                    a.sigma.get_or_insert(DEFAULT_SIGMA);
                }
                cfg.out = out.unwrap_or(cfg.out);
                cfg.snapshot_every = snapshot_every.unwrap_or(cfg.snapshot_every);
                cfg
            });
            match cfg.map_err(RunError::from).and_then(|cfg| run(&cfg)) {
                Ok((res, summary)) => {
                    print!("{summary}");
                    if aborted(res.termination) {
                        eprintln!("heatdg: solver aborted: {}", res.termination.as_str());
                        ExitCode::from(EXIT_SOLVER)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("heatdg: {e}");
                    ExitCode::from(match e {
                        RunError::Config(_) => EXIT_CONFIG,
                        _ => EXIT_SOLVER,
                    })
                }
            }
        }
        Command::Verify { suite } => verify(&suite),
    }
}

/// Terminations that mean the solver could not continue the run as asked.
fn aborted(t: Termination) -> bool {
    matches!(t, Termination::StepUnderflow | Termination::CycleLimit | Termination::RefinementBudget)
}

fn verify(suite: &str) -> ExitCode {
    let res = if suite == "all" { heatdg::verify::run_all() } else { heatdg::verify::run_suite(suite) };
    match res {
        Ok(criteria) => {
            for c in &criteria {
                println!("{c}");
            }
            if criteria.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(heatdg::Error::Config(msg)) => {
            eprintln!("heatdg: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("heatdg: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn snapshot(dir: &Path, m: usize, mesh: &heatdg::Mesh, field: &heatdg::Field, points: usize) -> std::io::Result<()> {
    fs::write(dir.join(format!("step_{m:06}.mesh")), mesh.to_text())?;
    fs::write(dir.join(format!("step_{m:06}.field")), field.sample_table(points))
}

/// Runs the driver and writes `steps.csv`, `summary.txt`, `config.txt` and
/// snapshots into the output directory.
fn run(cfg: &RunConfig) -> Result<(RunResult<f64>, String), RunError> {
    cfg.validate()?;
    let problem = preset::<f64>(&cfg.problem)?;
    fs::create_dir_all(&cfg.out)
        .map_err(|e| ConfigError::Invalid(format!("cannot create {}: {e}", cfg.out.display())))?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text())?;
    let snap_dir = cfg.out.join("snapshots");
    if cfg.snapshot_every > 0 {
        fs::create_dir_all(&snap_dir)?;
    }

    let start = Instant::now();
    let driver = Driver::new(&problem, cfg.adapt.clone())?;
    if cfg.snapshot_every > 0 {
        let pi1 = heatdg::fem::energy_projection(
            std::sync::Arc::new(heatdg::Space::new(driver.mesh().clone(), cfg.adapt.p)?),
            problem.u0.as_ref(),
            problem.u0_dd.as_ref(),
        )?;
        snapshot(&snap_dir, 0, driver.mesh(), &pi1, cfg.snapshot_points)?;
    }
    let mut csv = BufWriter::new(File::create(cfg.out.join("steps.csv"))?);
    writeln!(csv, "{CSV_HEADER}")?;
    let mut io_error = None;
    let mut observe = |v: &StepView<'_, f64>| {
        let mut write = || -> std::io::Result<()> {
            writeln!(csv, "{}", v.record.csv_row())?;
            if cfg.snapshot_every > 0 && v.record.m % cfg.snapshot_every == 0 {
                snapshot(&snap_dir, v.record.m, v.slab.space.mesh(), v.u_minus, cfg.snapshot_points)?;
            }
            Ok(())
        };
        if io_error.is_none() {
            io_error = write().err();
        }
    };
    let res = driver.run(&mut observe)?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    csv.flush()?;
    let n = res.records.len();
    if cfg.snapshot_every > 0 && n % cfg.snapshot_every != 0 {
        snapshot(&snap_dir, n, &res.final_mesh, &res.final_field, cfg.snapshot_points)?;
    }
    let summary = summary_text(&res, start.elapsed().as_secs_f64());
    fs::write(cfg.out.join("summary.txt"), &summary)?;
    Ok((res, summary))
}
