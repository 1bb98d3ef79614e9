//! Command-line experiment runner.
//!
//! Exit codes: 0 when every verdict passes, 2 when any certification fails,
//! 3 on refusals (precondition violations) and malformed configs, so CI
//! pipelines can gate on inequality certification.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gaussdev::suite::{emit, run, ExperimentConfig, Format, SuiteKind};
use gaussdev::Error;

#[derive(Parser)]
#[command(
    name = "gaussdev",
    version,
    about = "Monte Carlo certification of small-deviation and small-ball bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Both,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Both => Format::Both,
        }
    }
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count override (0 = all cores). The GAUSSDEV_WORKERS
    /// environment variable takes effect when the flag is absent.
    #[arg(long)]
    workers: Option<usize>,
    /// Output path prefix for report files.
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Catalog name of the test function, e.g. lp:2:64.
    #[arg(long)]
    function: Option<String>,
    /// Source distribution, e.g. gaussian:64, exponential:64, chi_squared:2.
    #[arg(long)]
    dist: Option<String>,
    /// Sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Print the fully resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Deviation-bound certification (median, variance and CLT forms).
    Verify(CommonArgs),
    /// Small-ball geometry parameters (beta, k, b, d).
    Params(CommonArgs),
    /// Small-ball probability certification.
    Smallball(CommonArgs),
    /// Negative-moment reverse Holder estimates (fit-and-report).
    Negmoments(CommonArgs),
    /// Gaussian-process supremum small-ball certification.
    Gp(CommonArgs),
    /// Johnson-Lindenstrauss distortion trials.
    Jl(CommonArgs),
    /// Closed-form calibration of the estimators on the linear functional.
    Calibrate(CommonArgs),
}

impl Command {
    fn suite(&self) -> SuiteKind {
        match self {
            Command::Verify(_) => SuiteKind::Deviation,
            Command::Params(_) => SuiteKind::Params,
            Command::Smallball(_) => SuiteKind::Smallball,
            Command::Negmoments(_) => SuiteKind::Negmoments,
            Command::Gp(_) => SuiteKind::Gp,
            Command::Jl(_) => SuiteKind::Jl,
            Command::Calibrate(_) => SuiteKind::Calibration,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Verify(a)
            | Command::Params(a)
            | Command::Smallball(a)
            | Command::Negmoments(a)
            | Command::Gp(a)
            | Command::Jl(a)
            | Command::Calibrate(a) => a,
        }
    }
}

fn resolve_config(cmd: &Command) -> Result<ExperimentConfig, Error> {
    let args = cmd.args();
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => ExperimentConfig::default_for(cmd.suite()),
    };
    // the subcommand pins the suite regardless of the file
    config.suite = cmd.suite();
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    } else if let Ok(env_workers) = std::env::var("GAUSSDEV_WORKERS") {
        config.workers = env_workers
            .parse()
            .map_err(|_| Error::Config("GAUSSDEV_WORKERS must be an integer".into()))?;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if let Some(format) = args.format {
        config.format = format.into();
    }
    if let Some(function) = &args.function {
        config.function = function.clone();
    }
    if let Some(dist) = &args.dist {
        config.dist = dist.clone();
    }
    if let Some(samples) = args.samples {
        config.n_samples = samples;
    }
    Ok(config)
}

fn execute(cmd: &Command) -> Result<bool, Error> {
    let config = resolve_config(cmd)?;
    if cmd.args().print_config {
        print!("{}", config.to_toml_string());
        return Ok(true);
    }
    let report = run(&config)?;
    for (name, pass) in &report.payload.verdicts {
        println!(
            "{} {} [{}]",
            if *pass { "PASS" } else { "FAIL" },
            name,
            config.suite.label()
        );
    }
    println!(
        "{} overall [{}] in {:.1}s",
        if report.payload.overall_pass {
            "PASS"
        } else {
            "FAIL"
        },
        config.suite.label(),
        report.runtime_seconds
    );
    if let Some(out) = &config.out {
        let files = emit(&report, out, config.format)?;
        for f in files {
            eprintln!("wrote {f}");
        }
    }
    Ok(report.payload.overall_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
