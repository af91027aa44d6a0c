//! `fsi` — batch driver for the monolithic fluid-structure interaction
//! workbench: configured time-stepping runs, solver benchmark tables and
//! centerline pressure extraction.

use clap::{Args, Parser, Subcommand};
use fsi_core::config::RunConfig;
use fsi_core::driver::{centerline_curve, read_snapshot, run, write_centerline_csv};
use fsi_core::{bench, Error};
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fsi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file.
    config: PathBuf,
    /// Scalar overrides, e.g. `--set solver.method=amg --set time.dt=0.25`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Output directory override.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the coupled problem and write logs, snapshots and VTK.
    Run(ConfigArgs),
    /// Solve the first-step linearized system for every configured
    /// model/tier/method cell and write the iteration table.
    Bench(ConfigArgs),
    /// Extract centerline pressure curves from run snapshots.
    Centerline {
        /// Directory holding `snapshot_t*.snap` files from a run.
        trajectory: PathBuf,
        /// Times (ms) to extract, comma separated.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Number of axial sample points.
        #[arg(long, default_value_t = 120)]
        samples: usize,
    },
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = RunConfig::parse_with_overrides(&text, &args.set)?;
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let out = run(&cfg)?;
            let steps = out.records.len();
            let last = out.records.last();
            println!(
                "completed {steps} steps to t = {} ms; log in {}/run_log.csv",
                last.map(|r| r.time).unwrap_or(0.0),
                cfg.output.dir
            );
            for (t, path) in &out.snapshots {
                println!("snapshot t = {t} ms -> {}", path.display());
            }
            Ok(())
        }
        Command::Bench(args) => {
            let cfg = load_config(&args)?;
            let table = bench::bench(&cfg)?;
            std::fs::create_dir_all(&cfg.output.dir)?;
            let path = std::path::Path::new(&cfg.output.dir).join("bench.csv");
            let mut f = std::fs::File::create(&path)?;
            table.to_csv(&mut f)?;
            // short console summary
            for row in &table.rows {
                match &row.error {
                    None => println!(
                        "{:>13} {:>12} {:>12}: {:>4} its ({:.2}s)",
                        row.model, row.tier, row.method, row.iterations, row.wall_time
                    ),
                    Some(e) => println!(
                        "{:>13} {:>12} {:>12}: failed: {e}",
                        row.model, row.tier, row.method
                    ),
                }
            }
            println!("table written to {}", path.display());
            Ok(())
        }
        Command::Centerline {
            trajectory,
            times,
            samples,
        } => {
            if times.is_empty() {
                return Err(Error::config("--times", "no times requested"));
            }
            for t in times {
                let snap_path = trajectory.join(format!("snapshot_t{t:.3}.snap"));
                let file = std::fs::File::open(&snap_path).map_err(|e| {
                    Error::config(
                        snap_path.display().to_string(),
                        format!("cannot open snapshot: {e}"),
                    )
                })?;
                let snap = read_snapshot(&mut BufReader::new(file))?;
                let p_f = snap.field("p_f").ok_or_else(|| {
                    Error::MeshFormat("snapshot carries no p_f field".into())
                })?;
                let curve = centerline_curve(&snap.mesh, p_f, samples)?;
                let out = trajectory.join(format!("centerline_t{t:.3}.csv"));
                let mut f = std::fs::File::create(&out)?;
                write_centerline_csv(&curve, &mut f)?;
                println!("t = {t} ms -> {}", out.display());
            }
            Ok(())
        }
    }
}
