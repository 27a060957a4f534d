use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use gaugenet::commands::{self, BaselineMethod, ConfigArgs, ScoreInputs};

#[derive(Parser)]
#[command(name = "gaugenet", version, about = "Donor gauge selection with graphical models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download daily discharge into a panel CSV.
    Fetch {
        /// Comma-separated site numbers.
        #[arg(long, value_delimiter = ',')]
        sites: Vec<String>,
        #[arg(long)]
        start: NaiveDate,
        #[arg(long)]
        end: NaiveDate,
        /// Service URL; defaults to $GAUGENET_NWIS_ENDPOINT or the USGS service.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search, Pareto front and graph selection.
    Select {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also write scatter.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Distance or correlation donor graph.
    Baseline {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict test-period flows from a graph.
    Infer {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        graph: PathBuf,
        /// Output directory (defaults to --out-dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy gauge removal plan.
    Remove {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        graph: PathBuf,
        /// Evaluation report or {gauge_id: nse} JSON; evaluated from --panel if absent.
        #[arg(long)]
        nse: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graph scores with a shared M_rem, and t-tests on resampled errors.
    Score {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long = "nse-file")]
        nse: Vec<PathBuf>,
        #[arg(long = "plan")]
        plans: Vec<PathBuf>,
        #[arg(long = "resample")]
        resamples: Vec<PathBuf>,
        #[arg(long)]
        m_rem: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test error of a fixed graph over re-drawn splits.
    Resample {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 30)]
        runs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic panel, coordinates and true graph.
    Synth {
        #[arg(long, default_value_t = 10)]
        p: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        edges: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::Level::Warn
    }

    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            eprintln!("{}: {}", r.level().as_str().to_lowercase(), r.args());
        }
    }

    fn flush(&self) {}
}

fn run(cli: Cli) -> gaugenet::Result<()> {
    let show = |paths: &[PathBuf]| paths.iter().for_each(|p| println!("{}", p.display()));
    match cli.command {
        Command::Fetch { mut sites, start, end, endpoint, out } => {
            sites.retain(|s| !s.trim().is_empty());
            show(&[commands::cmd_fetch(&sites, start, end, endpoint.as_deref(), &out)?]);
        }
        Command::Select { cfg, svg } => {
            let o = commands::cmd_select(&cfg.resolve()?, svg)?;
            eprintln!(
                "{} points, {} on the front; chose {} edges at validation error {:.4}",
                o.points, o.front_size, o.chosen_edges, o.chosen_error
            );
            show(&o.files);
        }
        Command::Baseline { cfg, method, m, out } => {
            show(&[commands::cmd_baseline(&cfg.resolve()?, method, m, out.as_deref())?]);
        }
        Command::Infer { cfg, graph, out } => {
            show(&commands::cmd_infer(&cfg.resolve()?, &graph, out.as_deref())?);
        }
        Command::Remove { cfg, graph, nse, out } => {
            show(&[commands::cmd_remove(&cfg.resolve()?, &graph, nse.as_deref(), out.as_deref())?]);
        }
        Command::Score { cfg, nse, plans, resamples, m_rem, out } => {
            let inputs = ScoreInputs { nse, plans, resamples, m_rem };
            show(&[commands::cmd_score(&cfg.resolve()?, &inputs, out.as_deref())?]);
        }
        Command::Resample { cfg, graph, runs, out } => {
            show(&[commands::cmd_resample(&cfg.resolve()?, &graph, runs, out.as_deref())?]);
        }
        Command::Synth { p, n, edges, seed, out_dir } => {
            show(&commands::cmd_synth(p, n, edges, seed, &out_dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let _ = log::set_logger(&StderrLogger).map(|_| log::set_max_level(log::LevelFilter::Warn));
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
