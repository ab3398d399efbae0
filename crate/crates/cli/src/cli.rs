//! Command-line grammar and its translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Analysis, FileConfig, RunConfig, ShockTarget, Source};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tenet", version, about = "Correlation and transfer-entropy networks of stock returns")]
pub struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "TENET_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Repeat for more log output on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Input {
    /// Price CSV with header date,ticker,close.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Taxonomy CSV with header ticker,sector,industry,subindustry.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// Minimum fraction of dates a ticker must be quoted on.
    #[arg(long, allow_negative_numbers = true)]
    pub min_presence: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load prices, filter illiquid tickers, write log-returns.
    Ingest {
        #[command(flatten)]
        input: Input,
    },
    /// Correlation matrix, node strengths, histogram and shuffle null.
    Corr {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        n_sims: Option<usize>,
    },
    /// Transfer-entropy matrix of lagged and original stocks.
    Te {
        #[command(flatten)]
        input: Input,
        /// s11, s21, s12, s22 or all.
        #[arg(long)]
        quadrant: Option<String>,
        #[arg(long = "bin", allow_negative_numbers = true)]
        bin_width: Option<f64>,
        #[arg(long)]
        n_sims: Option<usize>,
    },
    /// Threshold asset graph, components and GraphML/DOT export.
    Net {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        source: Option<Source>,
        #[arg(long, allow_negative_numbers = true)]
        threshold: Option<f64>,
        #[arg(long = "bin", allow_negative_numbers = true)]
        bin_width: Option<f64>,
        /// Also build eigenvector-weighted sector indices (needs --taxonomy).
        #[arg(long)]
        sector_index: bool,
    },
    /// Classical multidimensional scaling of the distance matrix.
    Embed {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        source: Option<Source>,
        #[arg(long)]
        dims: Option<usize>,
        #[arg(long = "bin", allow_negative_numbers = true)]
        bin_width: Option<f64>,
    },
    /// Rolling-window mean correlation and TE, volatility panel.
    Windows {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        step: Option<usize>,
        #[arg(long = "bin", allow_negative_numbers = true)]
        bin_width: Option<f64>,
        /// Also write per-semester statistics.
        #[arg(long)]
        semesters: bool,
        #[arg(long = "semester-bin", allow_negative_numbers = true)]
        semester_bin_width: Option<f64>,
    },
    /// Volatility shock propagation over the S21 network.
    Shock {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with_all = ["sector", "systemic"])]
        stock: Option<String>,
        #[arg(long, conflicts_with = "systemic")]
        sector: Option<String>,
        #[arg(long)]
        systemic: bool,
        /// Rank every stock by Shock Propagation Strength.
        #[arg(long)]
        rank: bool,
        #[arg(long, allow_negative_numbers = true)]
        magnitude: Option<f64>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        peak_day: Option<usize>,
        #[arg(long = "bin", allow_negative_numbers = true)]
        bin_width: Option<f64>,
    },
    /// Every analysis in one run, with a JSON summary.
    Report {
        #[command(flatten)]
        input: Input,
    },
    /// Write a seeded synthetic price and taxonomy corpus.
    Synth {
        #[arg(long)]
        stocks: Option<usize>,
        #[arg(long)]
        days: Option<usize>,
    },
}

impl Command {
    fn analysis(&self) -> Analysis {
        match self {
            Command::Ingest { .. } => Analysis::Ingest,
            Command::Corr { .. } => Analysis::Corr,
            Command::Te { .. } => Analysis::Te,
            Command::Net { .. } => Analysis::Net,
            Command::Embed { .. } => Analysis::Embed,
            Command::Windows { .. } => Analysis::Windows,
            Command::Shock { .. } => Analysis::Shock,
            Command::Report { .. } => Analysis::Report,
            Command::Synth { .. } => Analysis::Synth,
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    /// Defaults, then the config file, then flags.
    pub fn resolve(self) -> Result<(RunConfig, u8), CliError> {
        let mut cfg = RunConfig::defaults(self.command.analysis());
        if let Some(path) = &self.config {
            cfg.apply_file(FileConfig::load(path)?);
        }
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.out_dir, self.out_dir);
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        let apply_input = |cfg: &mut RunConfig, input: Input| {
            if input.prices.is_some() {
                cfg.prices = input.prices;
            }
            if input.taxonomy.is_some() {
                cfg.taxonomy = input.taxonomy;
            }
            set(&mut cfg.min_presence, input.min_presence);
        };
        match self.command {
            Command::Ingest { input } | Command::Report { input } => apply_input(&mut cfg, input),
            Command::Corr { input, n_sims } => {
                apply_input(&mut cfg, input);
                set(&mut cfg.corr_sims, n_sims);
            }
            Command::Te { input, quadrant, bin_width, n_sims } => {
                apply_input(&mut cfg, input);
                if let Some(q) = quadrant {
                    cfg.set_quadrant(q);
                }
                set(&mut cfg.bin_width, bin_width);
                set(&mut cfg.te_sims, n_sims);
            }
            Command::Net { input, source, threshold, bin_width, sector_index } => {
                apply_input(&mut cfg, input);
                set(&mut cfg.source, source);
                set(&mut cfg.bin_width, bin_width);
                if let Some(t) = threshold {
                    match cfg.source {
                        Source::Corr => cfg.corr_threshold = t,
                        Source::Te => cfg.te_threshold = t,
                    }
                }
                cfg.sector_index = sector_index;
            }
            Command::Embed { input, source, dims, bin_width } => {
                apply_input(&mut cfg, input);
                set(&mut cfg.source, source);
                set(&mut cfg.dims, dims);
                set(&mut cfg.bin_width, bin_width);
            }
            Command::Windows { input, width, step, bin_width, semesters, semester_bin_width } => {
                apply_input(&mut cfg, input);
                set(&mut cfg.width, width);
                set(&mut cfg.step, step);
                set(&mut cfg.bin_width, bin_width);
                set(&mut cfg.semester_bin_width, semester_bin_width);
                cfg.semesters |= semesters;
            }
            Command::Shock { input, stock, sector, systemic, rank, magnitude, horizon, peak_day, bin_width } => {
                apply_input(&mut cfg, input);
                cfg.shock_target = match (stock, sector, systemic) {
                    (Some(t), _, _) => Some(ShockTarget::Stock(t)),
                    (None, Some(s), _) => Some(ShockTarget::Sector(s)),
                    (None, None, true) => Some(ShockTarget::Systemic),
                    _ => None,
                };
                cfg.rank = rank;
                if magnitude.is_some() {
                    cfg.magnitude = magnitude;
                }
                set(&mut cfg.horizon, horizon);
                set(&mut cfg.peak_day, peak_day);
                set(&mut cfg.bin_width, bin_width);
            }
            Command::Synth { stocks, days } => {
                set(&mut cfg.stocks, stocks);
                set(&mut cfg.days, days);
            }
        }
        Ok((cfg, self.verbose))
    }
}
