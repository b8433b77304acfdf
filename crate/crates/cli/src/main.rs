use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sleepcell_cli::commands::{execute, Command, Manifest, Mode};
use sleepcell_cli::config::load_scenario;
use sleepcell_cli::output::{write_csv, Metadata};
use sleepcell_cli::sweep::Sweep;
use sleepcell_cli::CliError;

/// Spectral efficiency, outage and energy of sleeping-cell users under cell zooming.
#[derive(Debug, Parser)]
#[command(name = "sleepcell", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Scenario file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Sweep as axis=start:step:end with axis U2, U_th or alpha.
    #[arg(long, global = true)]
    sweep: Option<String>,
    /// Master seed, overriding the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Both)]
    mode: Mode,
    /// Worker threads, overriding the scenario file; 0 uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    let path = args
        .scenario
        .ok_or_else(|| CliError::Usage("--scenario <path> is required".into()))?;
    let mut loaded = load_scenario(&path)?;
    if let Some(t) = args.threads {
        loaded.sim.threads = t;
    }
    let sweep = args.sweep.as_deref().map(str::parse::<Sweep>).transpose()?;
    let manifest = Manifest {
        command: args.command,
        seed: args.seed.unwrap_or(loaded.sim.seed),
        sweep,
        mode: args.mode,
        loaded,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.loaded.sim.threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (table, failures) = pool.install(|| execute(&manifest))?;
    let meta = Metadata {
        command: manifest.command.name().into(),
        seed: manifest.seed,
        scenario_hash: manifest.loaded.hash.clone(),
        mode: if manifest.command == Command::Validate {
            Mode::Both.name().into()
        } else {
            manifest.mode.name().into()
        },
        sweep: args.sweep,
    };
    match &args.out {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(f);
            write_csv(&mut w, &meta, &table)?;
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        None => write_csv(std::io::stdout().lock(), &meta, &table)?,
    }
    if failures > 0 {
        return Err(CliError::Tolerance(failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sleepcell: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
