//! Binned (plug-in) transfer entropy with one-step histories.
//!
//! For a source `j` and destination `i`, with states observed at steps `n = 0..T−1`,
//!
//! ```text
//! TE(j → i) = Σ p(i[n+1], i[n], j[n]) · log2( p(i[n+1] | i[n], j[n]) / p(i[n+1] | i[n]) )
//! ```
//!
//! estimated from the empirical frequencies of the `T − 1` transitions. Cells with zero
//! joint frequency contribute nothing.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use ndarray::{s, Array2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlate::{sim_rng, shuffle_columns, CorrelationMatrix, NullBand};
use crate::corpus::ReturnPanel;
use crate::error::{Error, Result};
use crate::matrix::{LabeledMatrix, Variable};
use crate::scalar::Scalar;
use crate::stats;

/// Default bin width for full-period matrices, in return units.
pub const DEFAULT_BIN_WIDTH: f64 = 0.02;
/// Coarser bin width for short (semester) samples.
pub const SEMESTER_BIN_WIDTH: f64 = 0.1;

/// A return panel mapped onto integer bin indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePanel<S> {
    dates: Vec<NaiveDate>,
    variables: Vec<Variable>,
    bin_width: S,
    origin: S,
    codes: Array2<u32>,
}

impl<S: Scalar> DiscretePanel<S> {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn bin_width(&self) -> S {
        self.bin_width
    }

    pub fn origin(&self) -> S {
        self.origin
    }

    pub fn codes(&self) -> &Array2<u32> {
        &self.codes
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn is_expanded(&self) -> bool {
        self.variables.iter().any(|v| v.lag > 0)
    }

    /// Code-level lag expansion; identical to binning the lag-expanded return panel,
    /// because expansion does not change the global minimum.
    pub fn lag_expand(&self) -> Result<DiscretePanel<S>> {
        if self.is_expanded() {
            return Err(Error::AlreadyExpanded);
        }
        let t = self.codes.nrows();
        if t < 2 {
            return Err(Error::TooFewDates { needed: 2, found: t });
        }
        let n = self.n_vars();
        let mut codes = Array2::zeros((t - 1, 2 * n));
        codes.slice_mut(s![.., ..n]).assign(&self.codes.slice(s![1.., ..]));
        codes.slice_mut(s![.., n..]).assign(&self.codes.slice(s![..t - 1, ..]));
        let mut variables = self.variables.clone();
        variables.extend(self.variables.iter().map(|v| Variable::lagged(v.ticker.clone())));
        Ok(DiscretePanel {
            dates: self.dates[1..].to_vec(),
            variables,
            bin_width: self.bin_width,
            origin: self.origin,
            codes,
        })
    }
}

/// Bins returns as `floor((r − origin) / bin_width)` with the origin at the
/// panel's global minimum.
pub fn bin_panel<S: Scalar>(panel: &ReturnPanel<S>, bin_width: S) -> Result<DiscretePanel<S>> {
    if !(bin_width > S::zero()) || !bin_width.is_finite() {
        return Err(Error::param("bin_width", format!("must be positive, got {bin_width}")));
    }
    let origin = panel.returns().iter().copied().fold(S::infinity(), S::min);
    let origin = if origin.is_finite() { origin } else { S::zero() };
    let codes = panel.returns().mapv(|r| {
        ((r - origin) / bin_width)
            .floor()
            .to_u32()
            .expect("bin index fits in u32")
    });
    Ok(DiscretePanel {
        dates: panel.dates().to_vec(),
        variables: panel.variables().to_vec(),
        bin_width,
        origin,
        codes,
    })
}

/// A code sequence relabeled onto `0..alphabet`.
#[derive(Debug, Clone)]
struct Compact {
    symbols: Vec<u32>,
    alphabet: usize,
}

impl Compact {
    fn new<'a>(codes: impl IntoIterator<Item = &'a u32>) -> Compact {
        let raw: Vec<u32> = codes.into_iter().copied().collect();
        let mut distinct = raw.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let symbols = raw
            .iter()
            .map(|c| distinct.binary_search(c).expect("present") as u32)
            .collect();
        Compact { symbols, alphabet: distinct.len().max(1) }
    }
}

/// Destination-only counts: (next, now) pairs and `now` marginals.
struct DestCounts<'a> {
    dest: &'a Compact,
    pair: Vec<u32>,
    now: Vec<u32>,
}

impl<'a> DestCounts<'a> {
    fn new(dest: &'a Compact) -> Self {
        let k = dest.alphabet;
        let mut pair = vec![0u32; k * k];
        let mut now = vec![0u32; k];
        for w in dest.symbols.windows(2) {
            pair[w[1] as usize * k + w[0] as usize] += 1;
            now[w[0] as usize] += 1;
        }
        DestCounts { dest, pair, now }
    }
}

/// Reusable scratch tables so that each pair costs O(T).
#[derive(Default)]
struct Scratch {
    triple: Vec<u32>,
    cond: Vec<u32>,
    touched: Vec<usize>,
}

impl Scratch {
    fn transfer<S: Scalar>(&mut self, source: &Compact, dc: &DestCounts<'_>) -> S {
        let kd = dc.dest.alphabet;
        let ks = source.alphabet;
        let triple_len = kd * kd * ks;
        if self.triple.len() < triple_len {
            self.triple.resize(triple_len, 0);
        }
        if self.cond.len() < kd * ks {
            self.cond.resize(kd * ks, 0);
        }
        self.touched.clear();

        let d = &dc.dest.symbols;
        let src = &source.symbols;
        let transitions = d.len() - 1;
        for n in 0..transitions {
            let (next, now, s) = (d[n + 1] as usize, d[n] as usize, src[n] as usize);
            let key = (next * kd + now) * ks + s;
            if self.triple[key] == 0 {
                self.touched.push(key);
            }
            self.triple[key] += 1;
            self.cond[now * ks + s] += 1;
        }

        let total = S::from_count(transitions);
        let mut te = S::zero();
        for &key in &self.touched {
            let s = key % ks;
            let now = (key / ks) % kd;
            let next = key / (ks * kd);
            let c_xyz = S::from_count(self.triple[key] as usize);
            let c_y = S::from_count(dc.now[now] as usize);
            let c_xy = S::from_count(dc.pair[next * kd + now] as usize);
            let c_yz = S::from_count(self.cond[now * ks + s] as usize);
            te += c_xyz / total * (c_xyz * c_y / (c_xy * c_yz)).log2();
        }
        for &key in &self.touched {
            let s = key % ks;
            let now = (key / ks) % kd;
            self.triple[key] = 0;
            self.cond[now * ks + s] = 0;
        }
        te
    }
}

/// Plug-in transfer entropy from `source` to `dest`, in bits.
pub fn transfer_entropy<S: Scalar>(source: &[u32], dest: &[u32]) -> Result<S> {
    if source.len() != dest.len() {
        return Err(Error::LengthMismatch { left: source.len(), right: dest.len() });
    }
    if dest.len() < 2 {
        return Err(Error::TooFewDates { needed: 2, found: dest.len() });
    }
    let src = Compact::new(source);
    let dst = Compact::new(dest);
    let counts = DestCounts::new(&dst);
    Ok(Scratch::default().transfer(&src, &counts))
}

/// Transfer entropy between every (source, dest) pair of the listed columns.
/// Entry `(a, b)` is TE from `sources[a]` to `dests[b]`.
fn te_grid<S: Scalar>(codes: &Array2<u32>, sources: &[usize], dests: &[usize]) -> Array2<S> {
    let compact: Vec<Compact> = codes.axis_iter(Axis(1)).map(|c| Compact::new(c.iter())).collect();
    let columns: Vec<Vec<S>> = dests
        .par_iter()
        .map_init(Scratch::default, |scratch, &d| {
            let counts = DestCounts::new(&compact[d]);
            sources.iter().map(|&s| scratch.transfer(&compact[s], &counts)).collect()
        })
        .collect();
    let mut out = Array2::zeros((sources.len(), dests.len()));
    for (b, col) in columns.into_iter().enumerate() {
        for (a, v) in col.into_iter().enumerate() {
            out[[a, b]] = v;
        }
    }
    out
}

/// N×N matrix on an unexpanded panel; entry `(i, j)` is TE from `i` to `j`.
pub fn te_matrix<S: Scalar>(panel: &DiscretePanel<S>) -> Result<LabeledMatrix<S>> {
    if panel.codes.nrows() < 2 {
        return Err(Error::TooFewDates { needed: 2, found: panel.codes.nrows() });
    }
    let all: Vec<usize> = (0..panel.n_vars()).collect();
    LabeledMatrix::new(panel.variables.clone(), te_grid(&panel.codes, &all, &all))
}

/// Quadrants of the 2N×2N expanded matrix, named `S<row block><column block>`
/// with block 1 = original stocks and block 2 = lagged stocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Quadrant {
    /// Original → original.
    S11,
    /// Lagged → original.
    S21,
    /// Original → lagged.
    S12,
    /// Lagged → lagged.
    S22,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::S11, Quadrant::S21, Quadrant::S12, Quadrant::S22];

    /// (row block, column block), 0 = original, 1 = lagged.
    pub fn blocks(self) -> (usize, usize) {
        match self {
            Quadrant::S11 => (0, 0),
            Quadrant::S21 => (1, 0),
            Quadrant::S12 => (0, 1),
            Quadrant::S22 => (1, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quadrant::S11 => "s11",
            Quadrant::S21 => "s21",
            Quadrant::S12 => "s12",
            Quadrant::S22 => "s22",
        }
    }

    pub fn parse(text: &str) -> Option<Quadrant> {
        Quadrant::ALL.into_iter().find(|q| q.name().eq_ignore_ascii_case(text))
    }
}

/// Panel columns backing a quadrant block.
///
/// In a lag-expanded panel the lag-1 column of a stock holds the day before its
/// lag-0 column. One-step TE already looks one row ahead on the destination, so the
/// original block is read from the lag-1 columns and the lagged block from the
/// lag-0 columns. With this layout `S21[i][j] = I(x_j(t); x_i(t) | x_j(t−1))`, whose
/// diagonal is the self-transfer `H(x_j(t) | x_j(t−1))`, and `S12` pairs a
/// destination's next value with a source two days older.
fn block_columns(block: usize, n: usize) -> Vec<usize> {
    match block {
        0 => (n..2 * n).collect(),
        _ => (0..n).collect(),
    }
}

fn stock_variables(variables: &[Variable], n: usize) -> Vec<Variable> {
    variables[..n].iter().map(|v| Variable::new(v.ticker.clone())).collect()
}

fn expanded_stock_count<S: Scalar>(panel: &DiscretePanel<S>) -> Result<usize> {
    let total = panel.n_vars();
    let n = total / 2;
    let layout_ok = total.is_multiple_of(2)
        && panel.variables[..n].iter().all(|v| v.lag == 0)
        && panel.variables[n..].iter().zip(&panel.variables[..n]).all(|(l, o)| l.lag == 1 && l.ticker == o.ticker);
    if !layout_ok || n == 0 {
        return Err(Error::NotExpanded);
    }
    if panel.codes.nrows() < 2 {
        return Err(Error::TooFewDates { needed: 2, found: panel.codes.nrows() });
    }
    Ok(n)
}

/// One N×N quadrant of the expanded matrix, labeled by ticker.
pub fn te_quadrant<S: Scalar>(panel: &DiscretePanel<S>, quadrant: Quadrant) -> Result<LabeledMatrix<S>> {
    let n = expanded_stock_count(panel)?;
    let (rb, cb) = quadrant.blocks();
    let values = te_grid(&panel.codes, &block_columns(rb, n), &block_columns(cb, n));
    LabeledMatrix::new(stock_variables(&panel.variables, n), values)
}

/// 2N×2N transfer-entropy matrix over original and lagged stocks; entry `(a, b)`
/// is TE from variable `a` to variable `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTEMatrix<S> {
    variables: Vec<Variable>,
    values: Array2<S>,
}

impl<S: Scalar> QuadTEMatrix<S> {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn n_stocks(&self) -> usize {
        self.variables.len() / 2
    }

    pub fn quadrant(&self, quadrant: Quadrant) -> LabeledMatrix<S> {
        let n = self.n_stocks();
        let (rb, cb) = quadrant.blocks();
        let block = self.values.slice(s![rb * n..(rb + 1) * n, cb * n..(cb + 1) * n]).to_owned();
        LabeledMatrix::new(stock_variables(&self.variables, n), block).expect("square block")
    }

    pub fn s21(&self) -> LabeledMatrix<S> {
        self.quadrant(Quadrant::S21)
    }
}

/// All four quadrants of the expanded matrix. The diagonal is kept.
pub fn te_matrix_expanded<S: Scalar>(panel: &DiscretePanel<S>) -> Result<QuadTEMatrix<S>> {
    let n = expanded_stock_count(panel)?;
    let mut order = block_columns(0, n);
    order.extend(block_columns(1, n));
    let values = te_grid(&panel.codes, &order, &order);
    let mut variables = stock_variables(&panel.variables, n);
    variables.extend(panel.variables[..n].iter().map(|v| Variable::lagged(v.ticker.clone())));
    Ok(QuadTEMatrix { variables, values })
}

/// Divides each column by its diagonal entry.
pub fn normalize_columns<S: Scalar>(matrix: &LabeledMatrix<S>) -> Result<LabeledMatrix<S>> {
    let mut values = matrix.values().clone();
    for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
        let diag = matrix.get(j, j);
        if !(diag > S::zero()) {
            return Err(Error::ZeroSelfTransfer { variable: matrix.variables()[j].to_string() });
        }
        col.mapv_inplace(|v| v / diag);
        col[j] = S::one();
    }
    LabeledMatrix::new(matrix.variables().to_vec(), values)
}

/// S21 with each column divided by the stock's self-transfer.
pub fn normalize_te<S: Scalar>(matrix: &QuadTEMatrix<S>) -> Result<LabeledMatrix<S>> {
    normalize_columns(&matrix.s21())
}

/// `E[i][j] = M[i][j] − M[j][i]`.
pub fn antisymmetric_part<S: Scalar>(matrix: &LabeledMatrix<S>) -> LabeledMatrix<S> {
    let m = matrix.values();
    let values = m - &m.t();
    LabeledMatrix::new(matrix.variables().to_vec(), values).expect("same shape")
}

/// Excess transfer entropy: net S21 flow between each ordered pair.
pub fn excess_te<S: Scalar>(matrix: &QuadTEMatrix<S>) -> LabeledMatrix<S> {
    antisymmetric_part(&matrix.s21())
}

/// Null bands of every quadrant, computed over off-diagonal (i ≠ j) entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrantNulls {
    pub bands: BTreeMap<Quadrant, NullBand>,
}

impl QuadrantNulls {
    pub fn get(&self, quadrant: Quadrant) -> &NullBand {
        &self.bands[&quadrant]
    }
}

fn offdiag_extremes<S: Scalar>(m: &LabeledMatrix<S>) -> (f64, f64) {
    m.off_diagonal()
        .into_iter()
        .map(Scalar::as_f64)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Shuffles every stock's series independently (before lag expansion), rebuilds the
/// expanded matrix, and summarizes the extreme off-diagonal values per quadrant.
///
/// `panel` is the binned, unexpanded panel. Shuffling codes is the same as shuffling
/// returns before binning since the bin origin is permutation invariant.
pub fn te_shuffle_null<S: Scalar>(panel: &DiscretePanel<S>, n_sims: usize, seed: u64) -> Result<QuadrantNulls> {
    if n_sims == 0 {
        return Err(Error::param("n_sims", "must be at least 1"));
    }
    if panel.is_expanded() {
        return Err(Error::AlreadyExpanded);
    }
    if panel.n_vars() < 2 {
        return Err(Error::param("panel", "at least two stocks needed for off-diagonal nulls"));
    }
    let mut per_sim = Vec::with_capacity(n_sims);
    for sim in 0..n_sims {
        let mut rng = sim_rng(seed, sim);
        let mut shuffled = panel.clone();
        shuffle_columns(&mut shuffled.codes, &mut rng);
        let full = te_matrix_expanded(&shuffled.lag_expand()?)?;
        per_sim.push(Quadrant::ALL.map(|q| offdiag_extremes(&full.quadrant(q))));
    }
    let bands = Quadrant::ALL
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let extremes: Vec<(f64, f64)> = per_sim.iter().map(|row| row[k]).collect();
            (q, NullBand::from_extremes(n_sims, seed, &extremes))
        })
        .collect();
    Ok(QuadrantNulls { bands })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub pearson: f64,
    pub spearman: f64,
    pub kendall: f64,
}

impl Coefficients {
    fn between(x: &[f64], y: &[f64]) -> Coefficients {
        Coefficients {
            pearson: stats::pearson(x, y),
            spearman: stats::spearman(x, y),
            kendall: stats::kendall(x, y),
        }
    }
}

/// Agreement between vectorized S21 and correlation entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeCorrelationComparison {
    pub with_diagonal: Coefficients,
    pub without_diagonal: Coefficients,
}

pub fn te_correlation_comparison<S: Scalar>(
    te_s21: &LabeledMatrix<S>,
    corr: &CorrelationMatrix<S>,
) -> Result<TeCorrelationComparison> {
    let same = te_s21.len() == corr.len()
        && te_s21.variables().iter().zip(corr.variables()).all(|(a, b)| a.ticker == b.ticker);
    if !same {
        return Err(Error::VariableMismatch);
    }
    let te_all: Vec<f64> = te_s21.values().iter().map(|v| v.as_f64()).collect();
    let corr_all: Vec<f64> = corr.values().iter().map(|v| v.as_f64()).collect();
    let te_off: Vec<f64> = te_s21.off_diagonal().into_iter().map(Scalar::as_f64).collect();
    let corr_off: Vec<f64> = corr.matrix().off_diagonal().into_iter().map(Scalar::as_f64).collect();
    Ok(TeCorrelationComparison {
        with_diagonal: Coefficients::between(&te_all, &corr_all),
        without_diagonal: Coefficients::between(&te_off, &corr_off),
    })
}
