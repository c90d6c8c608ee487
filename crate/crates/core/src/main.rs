use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hinged_plate::cli::commands::{cmd_lift, cmd_solve, cmd_sweep};
use hinged_plate::cli::config::{load_config, ExportFormat, RunConfig};
use hinged_plate::cli::verify::{run_verify, Fault};
use hinged_plate::cli::{exit_code, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use hinged_plate::Error;

#[derive(Parser)]
#[command(
    name = "hinged-plate",
    version,
    about = "Stationary hinged-free plate under flow"
)]
struct Cli {
    /// Flat JSON configuration; defaults apply for absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Field export format (overrides `export`).
    #[arg(long, global = true, value_enum)]
    export: Option<ExportFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the linearized problem at the configured alpha and export the field.
    Solve,
    /// Sweep alpha and write the sweep and threshold tables.
    Sweep {
        /// Use `coarse_step` (default 10) instead of `alpha_step`.
        #[arg(long)]
        coarse: bool,
    },
    /// Lift a linear solution (nodal CSV written by `solve`) to the nonlinear problem.
    Lift {
        /// Nodal coefficient file, e.g. out/nodes.csv.
        field: PathBuf,
    },
    /// Run the oracle and invariant self-checks on a small grid.
    Verify {
        #[arg(long, value_enum, default_value_t = Fault::None, hide = true)]
        inject_fault: Fault,
    },
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(e) = cli.export {
        cfg.export = e;
    }
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    match cli.command {
        Command::Solve => {
            let s = cmd_solve(&cfg, &out, cfg.export)?;
            println!("{s}");
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { coarse } => {
            let s = cmd_sweep(&cfg, &out, coarse)?;
            println!("{s}");
            for iv in &s.intervals {
                println!("  m={} alpha in [{}, {}]", iv.m, iv.alpha_lo, iv.alpha_hi);
            }
            println!("wrote {}", s.sweep_path.display());
            println!("wrote {}", s.thresholds_path.display());
        }
        Command::Lift { field } => {
            let s = cmd_lift(&cfg, &field, &out, cfg.export)?;
            println!("{s}");
            for f in &s.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Verify { inject_fault } => {
            let report = run_verify(&cfg.params(), inject_fault)?;
            for c in &report.checks {
                println!("{c}");
            }
            if !report.passed() {
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
