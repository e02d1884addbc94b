use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinbus_harness::{default_plot, plot, run, HarnessError, RunConfig};

#[derive(Parser)]
#[command(name = "spinbus", version, about = "Sweeps of the dressed-spin mechanical bus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mechanical pull from exact diagonalization over (Omega_R, delta_nu).
    EigenMap(Common),
    /// Pull versus coupling: diagonalization, closed form, optionally full dynamics.
    ShiftSweep(Common),
    /// Smallest coupling giving the target pull over detuning and temperature.
    ThresholdMap(Common),
    /// Best sqrt(iSWAP) fidelity over coupling and detuning.
    GateSweep(Common),
    /// Gate fidelity versus the noise scale.
    GammaSweep(Common),
    /// Donor coupling along a field-gradient or strain profile.
    DonorCoupling(Common),
    /// Mechanical displacement spectrum with the qubit in a dressed state.
    Spectrum(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML), or a CSV produced earlier to rerun its embedded config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `run.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Also write an SVG plot.
    #[arg(long)]
    plot: bool,
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Command::EigenMap(c) => ("eigen-map", c),
            Command::ShiftSweep(c) => ("shift-sweep", c),
            Command::ThresholdMap(c) => ("threshold-map", c),
            Command::GateSweep(c) => ("gate-sweep", c),
            Command::GammaSweep(c) => ("gamma-sweep", c),
            Command::DonorCoupling(c) => ("donor-coupling", c),
            Command::Spectrum(c) => ("spectrum", c),
        }
    }
}

fn writable(dir: &Path) -> Result<(), HarnessError> {
    let fail = |e: std::io::Error| HarnessError::Validation(vec![format!("output directory {}: {e}", dir.display())]);
    std::fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".spinbus-write-test");
    std::fs::write(&probe, b"").map_err(fail)?;
    std::fs::remove_file(&probe).map_err(fail)
}

fn execute(cli: &Cli) -> Result<usize, HarnessError> {
    let (kind, args) = cli.command.split();
    let config = RunConfig::load(&args.config)?;
    if config.experiment.kind() != kind {
        return Err(HarnessError::Validation(vec![format!(
            "{} describes a {} experiment, not {kind}",
            args.config.display(),
            config.experiment.kind()
        )]));
    }
    let out = args.out.clone().unwrap_or_else(|| config.run.out.clone());
    let workers = args.workers.unwrap_or(config.run.workers);
    if workers == 0 {
        return Err(HarnessError::Validation(vec!["--workers must be at least 1".into()]));
    }
    writable(&out)?;
    let table = run(&config, workers)?;
    let csv = out.join(format!("{kind}.csv"));
    table.export_csv(&csv)?;
    eprintln!("wrote {}", csv.display());
    if args.plot {
        let svg = out.join(format!("{kind}.svg"));
        plot(&table, &default_plot(&config), &svg)?;
        eprintln!("wrote {}", svg.display());
    }
    Ok(table.failures())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} sweep point(s) failed; see the status column");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
