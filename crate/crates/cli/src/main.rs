use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use sublevel_core::harness::{report, run, Experiment, Tolerances};
use sublevel_core::lattice::CountPath;
use sublevel_core::{Error, ExperimentConfig};

/// Sublevel-set growth, oscillatory integral and lattice discrepancy
/// experiments.
#[derive(Parser)]
#[command(name = "sublevel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical growth index of a sublevel function.
    Index(RunArgs),
    /// Decay of the indicator transform along a direction.
    Fourier(RunArgs),
    /// Decay of a boundary chart's surface-measure transform.
    Surface(RunArgs),
    /// Lattice counts and discrepancy envelope of dilates.
    Lattice {
        #[command(flatten)]
        run: RunArgs,
        /// Counting path; by default exact wherever it applies.
        #[arg(long, value_enum)]
        count_path: Option<PathArg>,
    },
    /// Perturbation sweeps and the degradation construction.
    Stability(RunArgs),
    /// Seeded Van der Corput instances.
    Vdc(RunArgs),
    /// Aggregates manifests (files or output directories) into one table.
    Report {
        manifests: Vec<PathBuf>,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Named tolerance set (`acceptance` or `exploratory`) replacing the
    /// config tolerances.
    #[arg(long)]
    tolerance_profile: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Exact,
    Guarded,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn load(args: &RunArgs, kind: &str) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if cfg.experiment.kind() != kind {
        return Err(Error::Config(format!("config describes a {} experiment, not {kind}", cfg.experiment.kind())));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(name) = &args.tolerance_profile {
        cfg.tolerances = Tolerances::profile(name)?;
    }
    Ok(cfg)
}

fn execute(args: &RunArgs, kind: &str, path: Option<PathArg>) -> ExitCode {
    let mut cfg = match load(args, kind) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let (Some(p), Experiment::Lattice { count_path, .. }) = (path, &mut cfg.experiment) {
        *count_path = Some(match p {
            PathArg::Exact => CountPath::Exact,
            PathArg::Guarded => CountPath::Guarded,
        });
    }
    let workers =
        args.workers.map(|w| w as usize).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    info!("running {} ({kind}) with {workers} workers", cfg.name);
    let rec = match run(&cfg, args.out.as_deref(), workers) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for c in &rec.checks {
        let status = match c.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "N/A",
        };
        let measured = c.measured.map_or("-".to_string(), |m| format!("{m:.4}"));
        println!("{status} {}: predicted {}, measured {measured} ({})", c.quantity, c.predicted, c.rule);
    }
    if let Some(e) = &rec.error {
        eprintln!("error: {}", e.message);
    }
    println!("{} files written in {:.2} s", rec.files.len(), rec.wall_time_s);
    ExitCode::from(rec.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Index(a) => execute(a, "index", None),
        Command::Fourier(a) => execute(a, "fourier", None),
        Command::Surface(a) => execute(a, "surface", None),
        Command::Lattice { run, count_path } => execute(run, "lattice", *count_path),
        Command::Stability(a) => execute(a, "stability", None),
        Command::Vdc(a) => execute(a, "vdc", None),
        Command::Report { manifests, out } => {
            let summary = report(manifests);
            print!("{}", summary.markdown);
            if let Some(path) = out {
                if let Err(e) = fs::write(path, &summary.markdown) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(summary.exit_code as u8)
        }
    }
}
