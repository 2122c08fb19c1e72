use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slsem::cli::{run_to_dir, sweep_to_dir, RunConfig, SweepConfig};
use slsem::problems::{make_problem, verify_exact, ProblemId};
use slsem::Error;

const VERIFY_SAMPLES: usize = 1000;
const VERIFY_STEP: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "slsem", version, about = "Semi-Lagrangian spectral-element transport solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write timeseries.csv and solution.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` from the file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides `threads` from the file.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a P/H/scheme sweep and write convergence.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the closed-form solutions of the built-in problems against their PDE.
    Verify,
}

fn output_dir(flag: Option<PathBuf>, file: &Option<PathBuf>) -> PathBuf {
    flag.or_else(|| file.clone()).unwrap_or_else(|| PathBuf::from("."))
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, out, threads } => {
            let mut c = RunConfig::from_file(&config)?;
            c.threads = threads.or(c.threads);
            c.validate()?;
            let dir = output_dir(out, &c.out_dir);
            let result = run_to_dir(&c, &dir)?;
            let r = result.final_report();
            println!(
                "{} {}: dt = {:.6e}, steps = {}, l2_error = {:.6e}, mass_raw = {:.6e}",
                c.problem,
                c.scheme.name(),
                result.dt,
                result.steps,
                r.l2_error,
                r.mass_raw
            );
            if result.energy_diverged_steps > 0 {
                eprintln!(
                    "warning: energy iteration hit its cap in {} of {} steps",
                    result.energy_diverged_steps, result.steps
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, out, threads } => {
            let mut s = SweepConfig::from_file(&config)?;
            s.base.threads = threads.or(s.base.threads);
            s.validate()?;
            let dir = output_dir(out, &s.base.out_dir);
            for row in sweep_to_dir(&s, &dir)? {
                let slope = row.slope.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
                println!(
                    "{}{} P={} H={} l2_error={:.4e} slope={slope}",
                    row.scheme.label(),
                    row.time_order.as_int(),
                    row.degree,
                    row.count,
                    row.l2_error
                );
            }
            println!("wrote {}", dir.join("convergence.csv").display());
        }
        Command::Verify => {
            for id in ProblemId::ALL {
                let r = verify_exact(&make_problem::<f64>(id), VERIFY_SAMPLES, VERIFY_STEP)?;
                println!("{id}: max residual {r:.3e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
