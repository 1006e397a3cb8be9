use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ftl_core::report::{self, CampaignConfig, PlotFormat, SimulateConfig};
use ftl_core::Error;

const SEED_ENV: &str = "FTL_SEED";

#[derive(Parser, Debug)]
#[command(name = "ftl", version, about = "Fault-tolerant evaluation of performance estimators")]
struct Cli {
    /// Base seed; the FTL_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Significance level for all tests.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Suppress progress and summary output.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic evaluation pool.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a campaign and write trajectories, comparison and manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare two trajectory CSVs and report the conflict rate.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Search for the smallest margin that separates two estimators.
    DeltaSearch {
        #[arg(long)]
        config: PathBuf,
    },
    /// Export a result directory as long-format plot data.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn effective_seed(flag: Option<u64>) -> Result<Option<u64>, Error> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(flag),
    }
}

fn load_campaign(cli: &Cli, path: &PathBuf) -> anyhow::Result<CampaignConfig> {
    let mut cfg = CampaignConfig::load(path)?;
    if let Some(seed) = effective_seed(cli.seed)? {
        cfg.base_seed = seed;
    }
    if let Some(alpha) = cli.alpha {
        cfg.alpha = alpha;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match &cli.command {
        Command::Simulate { config } => {
            let mut cfg = SimulateConfig::load(config)?;
            if let Some(seed) = effective_seed(cli.seed)? {
                cfg.pool.set_seed(seed);
            }
            let (pool, manifest) = cfg.run()?;
            say(format!(
                "pool {}: {} items, ground truth {}",
                pool.name(),
                pool.len(),
                report::format_number(pool.ground_truth())
            ));
            say(format!("wrote {}", manifest.display()));
        }
        Command::Run { config } => {
            let cfg = load_campaign(cli, config)?;
            let outcome = report::run_config(&cfg)?;
            say(format!("ground truth {}", report::format_number(outcome.ground_truth)));
            if let Some(m) = &outcome.margin {
                match m.delta_star {
                    Some(d) => say(format!("delta* {}", report::format_number(d))),
                    None => say("delta* null: estimators not distinguished; using delta = 0".into()),
                }
            }
            if let Some(rate) = outcome.conflict_rate {
                say(format!("conflict rate {}", report::format_number(rate)));
            }
            for f in &outcome.files {
                say(format!("wrote {}", f.display()));
            }
        }
        Command::Compare { a, b, out } => {
            let (table, rate, path) = report::compare_files(a, b, out)?;
            say(format!(
                "{} budgets, conflict rate {}",
                table.rows.len(),
                report::format_number(rate)
            ));
            say(format!("wrote {}", path.display()));
        }
        Command::DeltaSearch { config } => {
            let cfg = load_campaign(cli, config)?;
            let (result, path) = report::delta_search(&cfg)?;
            for step in &result.trace {
                say(format!(
                    "delta {:<10} {:?} -> [{}, {}]",
                    report::format_number(step.delta),
                    step.branch,
                    report::format_number(step.low),
                    report::format_number(step.high)
                ));
            }
            match result.delta_star {
                Some(d) => say(format!("delta* {}", report::format_number(d))),
                None => say("delta* null: estimators not distinguished".into()),
            }
            say(format!("wrote {}", path.display()));
        }
        Command::Report { input, format } => {
            let format = match format {
                Format::Csv => PlotFormat::Csv,
                Format::Json => PlotFormat::Json,
            };
            let path = report::write_plot_data(input, format)?;
            say(format!("wrote {}", path.display()));
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
