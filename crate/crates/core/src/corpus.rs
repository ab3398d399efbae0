//! Price ingestion, liquidity filtering, log-returns and lag expansion.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{s, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::matrix::Variable;
use crate::scalar::Scalar;

pub const DEFAULT_MIN_FRACTION: f64 = 0.80;

const DATE_FORMAT: &str = "%Y-%m-%d";

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), DATE_FORMAT).ok()
}

/// Daily closing prices on a date × ticker grid. `None` marks a missing observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel<S> {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Array2<Option<S>>,
}

impl<S: Scalar> PricePanel<S> {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Array2<Option<S>>) -> Result<Self> {
        if prices.nrows() != dates.len() {
            return Err(Error::DimensionMismatch { expected: dates.len(), found: prices.nrows() });
        }
        if prices.ncols() != tickers.len() {
            return Err(Error::DimensionMismatch { expected: tickers.len(), found: prices.ncols() });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::param("dates", format!("not strictly increasing at {}", w[1])));
        }
        let mut seen = HashSet::new();
        if let Some(t) = tickers.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::param("tickers", format!("duplicate ticker {t}")));
        }
        for ((r, c), p) in prices.indexed_iter() {
            if let Some(p) = p {
                if !(*p > S::zero()) || !p.is_finite() {
                    return Err(Error::NonPositivePrice {
                        row: r,
                        ticker: tickers[c].clone(),
                        price: p.as_f64(),
                    });
                }
            }
        }
        Ok(PricePanel { dates, tickers, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn prices(&self) -> &Array2<Option<S>> {
        &self.prices
    }

    pub fn missing_count(&self) -> usize {
        self.prices.iter().filter(|p| p.is_none()).count()
    }

    /// Fraction of dates on which `ticker_index` has a price.
    pub fn presence(&self, ticker_index: usize) -> f64 {
        if self.dates.is_empty() {
            return 0.0;
        }
        let present = self.prices.column(ticker_index).iter().filter(|p| p.is_some()).count();
        present as f64 / self.dates.len() as f64
    }
}

/// Reads a `date,ticker,close` CSV file.
pub fn load_prices<S: Scalar>(path: impl AsRef<Path>) -> Result<PricePanel<S>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    read_prices(file)
}

pub fn read_prices<S: Scalar, R: Read>(reader: R) -> Result<PricePanel<S>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Malformed { row: 1, message: e.to_string() })?.clone();
    if header.is_empty() {
        return PricePanel::new(Vec::new(), Vec::new(), Array2::from_elem((0, 0), None));
    }
    let expected = ["date", "ticker", "close"];
    if header.len() != 3 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Malformed {
            row: 1,
            message: format!("expected header date,ticker,close, found {}", header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut observations: HashMap<(NaiveDate, String), f64> = HashMap::new();
    let mut dates = BTreeSet::new();
    let mut tickers = BTreeSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Malformed {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let date = parse_date(&record[0]).ok_or_else(|| Error::Malformed {
            row,
            message: format!("invalid ISO-8601 date {:?}", &record[0]),
        })?;
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(Error::Malformed { row, message: "empty ticker".into() });
        }
        let close: f64 = record[2].parse().map_err(|_| Error::Malformed {
            row,
            message: format!("invalid close {:?}", &record[2]),
        })?;
        if !(close > 0.0) || !close.is_finite() {
            return Err(Error::NonPositivePrice { row, ticker, price: close });
        }
        if observations.insert((date, ticker.clone()), close).is_some() {
            return Err(Error::DuplicateObservation { row, date: date.to_string(), ticker });
        }
        dates.insert(date);
        tickers.insert(ticker);
    }

    let dates: Vec<NaiveDate> = dates.into_iter().collect();
    let tickers: Vec<String> = tickers.into_iter().collect();
    let date_index: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let ticker_index: HashMap<&str, usize> = tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut prices = Array2::from_elem((dates.len(), tickers.len()), None);
    for ((date, ticker), close) in &observations {
        prices[[date_index[date], ticker_index[ticker.as_str()]]] = Some(S::of(*close));
    }
    PricePanel::new(dates, tickers, prices)
}

/// Keeps tickers that have a price on at least `min_fraction` of all dates.
///
/// The date axis is left untouched, so the filter is idempotent.
pub fn filter_liquidity<S: Scalar>(panel: &PricePanel<S>, min_fraction: f64) -> PricePanel<S> {
    assert!((0.0..=1.0).contains(&min_fraction), "min_fraction must lie in [0, 1]");
    let keep: Vec<usize> = (0..panel.tickers.len())
        .filter(|&i| panel.presence(i) >= min_fraction)
        .collect();
    let tickers = keep.iter().map(|&i| panel.tickers[i].clone()).collect();
    let prices = panel.prices.select(Axis(1), &keep);
    PricePanel { dates: panel.dates.clone(), tickers, prices }
}

/// Date × variable matrix of log-returns with no missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<S> {
    dates: Vec<NaiveDate>,
    variables: Vec<Variable>,
    returns: Array2<S>,
}

impl<S: Scalar> ReturnPanel<S> {
    pub fn new(dates: Vec<NaiveDate>, variables: Vec<Variable>, returns: Array2<S>) -> Result<Self> {
        if returns.nrows() != dates.len() {
            return Err(Error::DimensionMismatch { expected: dates.len(), found: returns.nrows() });
        }
        if returns.ncols() != variables.len() {
            return Err(Error::DimensionMismatch { expected: variables.len(), found: returns.ncols() });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::param("dates", format!("not strictly increasing at {}", w[1])));
        }
        let mut seen = HashSet::new();
        if let Some(v) = variables.iter().find(|v| !seen.insert(*v)) {
            return Err(Error::param("variables", format!("duplicate variable {v}")));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::param("returns", "non-finite entry"));
        }
        Ok(ReturnPanel { dates, variables, returns })
    }

    /// Builds a lag-0 panel with consecutive synthetic dates starting 2000-01-03.
    /// Intended for simulations where calendar dates carry no meaning.
    pub fn from_columns(tickers: &[String], returns: Array2<S>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
        let dates = start.iter_days().take(returns.nrows()).collect();
        ReturnPanel::new(dates, tickers.iter().map(Variable::new).collect(), returns)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn returns(&self) -> &Array2<S> {
        &self.returns
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, S> {
        self.returns.column(i)
    }

    pub fn is_expanded(&self) -> bool {
        self.variables.iter().any(|v| v.lag > 0)
    }

    /// Rows `start..end` as a new panel.
    pub fn slice_rows(&self, start: usize, end: usize) -> ReturnPanel<S> {
        ReturnPanel {
            dates: self.dates[start..end].to_vec(),
            variables: self.variables.clone(),
            returns: self.returns.slice(s![start..end, ..]).to_owned(),
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> ReturnPanel<S> {
        ReturnPanel {
            dates: self.dates.clone(),
            variables: columns.iter().map(|&c| self.variables[c].clone()).collect(),
            returns: self.returns.select(Axis(1), columns),
        }
    }

    /// Same dates and variables, new values.
    pub fn with_returns(&self, returns: Array2<S>) -> Result<ReturnPanel<S>> {
        ReturnPanel::new(self.dates.clone(), self.variables.clone(), returns)
    }

    pub fn index_of(&self, variable: &Variable) -> Option<usize> {
        self.variables.iter().position(|v| v == variable)
    }

    pub fn tickers(&self) -> Vec<String> {
        self.variables.iter().filter(|v| v.lag == 0).map(|v| v.ticker.clone()).collect()
    }
}

/// Log-returns between consecutive present prices of each ticker, followed by
/// complete-case alignment: only dates where every ticker has a return survive.
pub fn compute_log_returns<S: Scalar>(panel: &PricePanel<S>) -> Result<ReturnPanel<S>> {
    let t = panel.dates.len();
    if t < 2 {
        return Err(Error::TooFewDates { needed: 2, found: t });
    }
    let n = panel.tickers.len();
    let mut raw: Array2<Option<S>> = Array2::from_elem((t, n), None);
    for c in 0..n {
        let mut last: Option<S> = None;
        for r in 0..t {
            if let Some(p) = panel.prices[[r, c]] {
                if let Some(prev) = last {
                    raw[[r, c]] = Some(p.ln() - prev.ln());
                }
                last = Some(p);
            }
        }
    }
    let rows: Vec<usize> = (1..t).filter(|&r| raw.row(r).iter().all(Option::is_some)).collect();
    let mut returns = Array2::zeros((rows.len(), n));
    for (out, &r) in rows.iter().enumerate() {
        for c in 0..n {
            returns[[out, c]] = raw[[r, c]].expect("complete row");
        }
    }
    let dates = rows.iter().map(|&r| panel.dates[r]).collect();
    let variables = panel.tickers.iter().map(Variable::new).collect();
    ReturnPanel::new(dates, variables, returns)
}

/// Appends a one-day-lagged copy of every variable.
///
/// The result has 2N variables (lag-0 block, then lag-1 block in the same ticker
/// order) and T−1 rows; row `t` of lag-1 column `i` is row `t` of the input's
/// column `i`, while lag-0 column `i` holds row `t + 1`.
pub fn lag_expand<S: Scalar>(panel: &ReturnPanel<S>) -> Result<ReturnPanel<S>> {
    if panel.is_expanded() {
        return Err(Error::AlreadyExpanded);
    }
    let t = panel.n_rows();
    if t < 2 {
        return Err(Error::TooFewDates { needed: 2, found: t });
    }
    let n = panel.n_vars();
    let mut returns = Array2::zeros((t - 1, 2 * n));
    returns.slice_mut(s![.., ..n]).assign(&panel.returns.slice(s![1.., ..]));
    returns.slice_mut(s![.., n..]).assign(&panel.returns.slice(s![..t - 1, ..]));
    let mut variables = panel.variables.clone();
    variables.extend(panel.variables.iter().map(|v| Variable::lagged(v.ticker.clone())));
    ReturnPanel::new(panel.dates[1..].to_vec(), variables, returns)
}

/// Sector / industry / sub-industry of one ticker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub sector: String,
    pub industry: String,
    pub subindustry: String,
}

const DIVERSIFIED: &str = "Diversified";
const FINANCIAL: &str = "Financial";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SectorTaxonomy {
    entries: BTreeMap<String, Classification>,
}

impl SectorTaxonomy {
    /// Inserts an entry; the lone "Diversified" sector is folded into "Financial".
    pub fn insert(&mut self, ticker: impl Into<String>, mut class: Classification) {
        if class.sector == DIVERSIFIED {
            class.sector = FINANCIAL.to_string();
        }
        self.entries.insert(ticker.into(), class);
    }

    pub fn get(&self, ticker: &str) -> Option<&Classification> {
        self.entries.get(ticker)
    }

    pub fn sector_of(&self, ticker: &str) -> Result<&str> {
        self.entries
            .get(ticker)
            .map(|c| c.sector.as_str())
            .ok_or_else(|| Error::MissingTaxonomy { ticker: ticker.to_string() })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fails with the first ticker lacking an entry.
    pub fn require<'a>(&self, tickers: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for t in tickers {
            self.sector_of(t)?;
        }
        Ok(())
    }

    /// Sector name → member tickers (in the order given), restricted to `tickers`.
    pub fn group_by_sector(&self, tickers: &[String]) -> Result<BTreeMap<String, Vec<String>>> {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for t in tickers {
            groups.entry(self.sector_of(t)?.to_string()).or_default().push(t.clone());
        }
        Ok(groups)
    }
}

/// Reads a `ticker,sector,industry,subindustry` CSV file.
pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<SectorTaxonomy> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    read_taxonomy(file)
}

pub fn read_taxonomy<R: Read>(reader: R) -> Result<SectorTaxonomy> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Malformed { row: 1, message: e.to_string() })?.clone();
    let mut taxonomy = SectorTaxonomy::default();
    if header.is_empty() {
        return Ok(taxonomy);
    }
    let expected = ["ticker", "sector", "industry", "subindustry"];
    if header.len() != 4 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Malformed {
            row: 1,
            message: "expected header ticker,sector,industry,subindustry".into(),
        });
    }
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Malformed {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let ticker = &record[0];
        if ticker.is_empty() || record[1].is_empty() {
            return Err(Error::Malformed { row, message: "empty ticker or sector".into() });
        }
        if taxonomy.get(ticker).is_some() {
            return Err(Error::Malformed { row, message: format!("duplicate ticker {ticker}") });
        }
        taxonomy.insert(
            ticker,
            Classification {
                sector: record[1].to_string(),
                industry: record[2].to_string(),
                subindustry: record[3].to_string(),
            },
        );
    }
    Ok(taxonomy)
}
