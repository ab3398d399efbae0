//! Run configuration: defaults, TOML file, then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tenet::entropy::Quadrant;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Ingest,
    Corr,
    Te,
    Net,
    Embed,
    Windows,
    Shock,
    Report,
    Synth,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Ingest => "ingest",
            Analysis::Corr => "corr",
            Analysis::Te => "te",
            Analysis::Net => "net",
            Analysis::Embed => "embed",
            Analysis::Windows => "windows",
            Analysis::Shock => "shock",
            Analysis::Report => "report",
            Analysis::Synth => "synth",
        }
    }
}

/// Network whose weights drive `net` and `embed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Corr,
    Te,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Corr => "corr",
            Source::Te => "te",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadrantChoice {
    All,
    One(Quadrant),
}

impl QuadrantChoice {
    pub fn parse(text: &str) -> Option<QuadrantChoice> {
        if text.eq_ignore_ascii_case("all") {
            Some(QuadrantChoice::All)
        } else {
            Quadrant::parse(text).map(QuadrantChoice::One)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShockTarget {
    Stock(String),
    Sector(String),
    Systemic,
}

/// Keys accepted in the `--config` TOML file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub prices: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub min_presence: Option<f64>,
    pub bin_width: Option<f64>,
    pub semester_bin_width: Option<f64>,
    pub quadrant: Option<String>,
    pub source: Option<Source>,
    pub corr_threshold: Option<f64>,
    pub te_threshold: Option<f64>,
    pub dims: Option<usize>,
    pub width: Option<usize>,
    pub step: Option<usize>,
    pub corr_sims: Option<usize>,
    pub te_sims: Option<usize>,
    pub histogram_bins: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub horizon: Option<usize>,
    pub magnitude: Option<f64>,
    pub peak_day: Option<usize>,
    pub semesters: Option<bool>,
    pub out_dir: Option<PathBuf>,
    pub stocks: Option<usize>,
    pub days: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub analysis: Analysis,
    pub prices: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub min_presence: f64,
    pub bin_width: f64,
    pub semester_bin_width: f64,
    pub quadrant: QuadrantChoice,
    pub source: Source,
    pub corr_threshold: f64,
    pub te_threshold: f64,
    pub dims: usize,
    pub width: usize,
    pub step: usize,
    pub corr_sims: usize,
    pub te_sims: usize,
    pub histogram_bins: usize,
    pub seed: u64,
    pub horizon: usize,
    pub magnitude: Option<f64>,
    pub peak_day: usize,
    pub shock_target: Option<ShockTarget>,
    pub rank: bool,
    pub semesters: bool,
    pub sector_index: bool,
    pub stocks: usize,
    pub days: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub quadrant_text: Option<String>,
}

impl RunConfig {
    pub fn defaults(analysis: Analysis) -> RunConfig {
        RunConfig {
            analysis,
            prices: None,
            taxonomy: None,
            min_presence: tenet::corpus::DEFAULT_MIN_FRACTION,
            bin_width: tenet::entropy::DEFAULT_BIN_WIDTH,
            semester_bin_width: tenet::entropy::SEMESTER_BIN_WIDTH,
            quadrant: QuadrantChoice::One(Quadrant::S21),
            source: Source::Corr,
            corr_threshold: tenet::netmetrics::CORRELATION_GRAPH_THRESHOLD,
            te_threshold: tenet::netmetrics::TE_GRAPH_THRESHOLD,
            dims: 2,
            width: tenet::windows::DEFAULT_WIDTH,
            step: tenet::windows::DEFAULT_STEP,
            corr_sims: 1000,
            te_sims: 10,
            histogram_bins: 40,
            seed: 1,
            horizon: tenet::shockwave::DEFAULT_HORIZON,
            magnitude: None,
            peak_day: tenet::shockwave::DEFAULT_PEAK_DAY,
            shock_target: None,
            rank: false,
            semesters: false,
            sector_index: false,
            stocks: 30,
            days: 500,
            threads: None,
            out_dir: PathBuf::from("out"),
            quadrant_text: None,
        }
    }

    /// Overlays every key present in `file`.
    pub fn apply_file(&mut self, file: FileConfig) {
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = file.$field { self.$field = v; })* };
        }
        take!(min_presence, bin_width, semester_bin_width, source, corr_threshold, te_threshold, dims, width, step,
              corr_sims, te_sims, histogram_bins, seed, horizon, peak_day, semesters, out_dir, stocks, days);
        if file.prices.is_some() {
            self.prices = file.prices;
        }
        if file.taxonomy.is_some() {
            self.taxonomy = file.taxonomy;
        }
        if file.magnitude.is_some() {
            self.magnitude = file.magnitude;
        }
        if file.threads.is_some() {
            self.threads = file.threads;
        }
        if let Some(q) = file.quadrant {
            self.set_quadrant(q);
        }
    }

    pub fn set_quadrant(&mut self, text: String) {
        match QuadrantChoice::parse(&text) {
            Some(q) => {
                self.quadrant = q;
                self.quadrant_text = None;
            }
            None => self.quadrant_text = Some(text),
        }
    }

    pub fn single_magnitude(&self) -> f64 {
        self.magnitude.unwrap_or(tenet::shockwave::DEFAULT_SINGLE_MAGNITUDE)
    }

    pub fn group_magnitude(&self) -> f64 {
        self.magnitude.unwrap_or(tenet::shockwave::DEFAULT_GROUP_MAGNITUDE)
    }

    fn needs_prices(&self) -> bool {
        self.analysis != Analysis::Synth
    }

    fn needs_taxonomy(&self) -> bool {
        self.sector_index || matches!(self.shock_target, Some(ShockTarget::Sector(_)))
    }
}

/// One violated constraint, named by its configuration key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every configuration problem that would stop `run` before touching data.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut bad = |field: &'static str, message: String| out.push(Diagnostic { field, message });

    if cfg.needs_prices() {
        match &cfg.prices {
            None => bad("prices", "a price file is required".into()),
            Some(p) if !p.is_file() => bad("prices", format!("{} does not exist", p.display())),
            _ => {}
        }
    }
    match &cfg.taxonomy {
        Some(p) if !p.is_file() => bad("taxonomy", format!("{} does not exist", p.display())),
        None if cfg.needs_taxonomy() => bad("taxonomy", "sector analysis requested without a taxonomy file".into()),
        _ => {}
    }
    if !(0.0..=1.0).contains(&cfg.min_presence) {
        bad("min_presence", format!("must lie in [0, 1], got {}", cfg.min_presence));
    }
    for (field, v) in [("bin_width", cfg.bin_width), ("semester_bin_width", cfg.semester_bin_width)] {
        if !(v > 0.0 && v.is_finite()) {
            bad(field, format!("must be positive, got {v}"));
        }
    }
    if let Some(text) = &cfg.quadrant_text {
        bad("quadrant", format!("unknown quadrant {text:?}; use s11, s21, s12, s22 or all"));
    }
    if !(-1.0..=1.0).contains(&cfg.corr_threshold) {
        bad("corr_threshold", format!("must lie in [-1, 1], got {}", cfg.corr_threshold));
    }
    if !cfg.te_threshold.is_finite() {
        bad("te_threshold", "must be finite".into());
    }
    if cfg.dims < 1 {
        bad("dims", "must be at least 1".into());
    }
    if cfg.width < 3 {
        bad("width", format!("must be at least 3, got {}", cfg.width));
    }
    if cfg.step < 1 {
        bad("step", "must be at least 1".into());
    }
    if cfg.histogram_bins < 1 {
        bad("histogram_bins", "must be at least 1".into());
    }
    if let Some(m) = cfg.magnitude {
        if !(m >= 0.0 && m.is_finite()) {
            bad("magnitude", format!("must be non-negative, got {m}"));
        }
    }
    if cfg.peak_day < 1 {
        bad("peak_day", "must be at least 1".into());
    }
    if cfg.threads == Some(0) {
        bad("threads", "must be at least 1".into());
    }
    if cfg.analysis == Analysis::Shock && cfg.shock_target.is_none() && !cfg.rank {
        bad("shock", "choose --stock, --sector, --systemic or --rank".into());
    }
    if cfg.analysis == Analysis::Synth {
        if cfg.stocks < 2 {
            bad("stocks", "must be at least 2".into());
        }
        if cfg.days < 3 {
            bad("days", "must be at least 3".into());
        }
    }
    out
}
