//! Rolling-window and semester statistics.

use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use ndarray::Array2;
use rayon::prelude::*;

use crate::correlate::{pearson_matrix, CorrelationMatrix};
use crate::corpus::ReturnPanel;
use crate::entropy::{bin_panel, te_quadrant, Quadrant};
use crate::error::{Error, Result};
use crate::matrix::LabeledMatrix;
use crate::netmetrics::{in_out_node_strength, node_strength};
use crate::scalar::Scalar;

pub const DEFAULT_WIDTH: usize = 100;
pub const DEFAULT_STEP: usize = 1;

/// Row ranges `[k·step, k·step + width)` that fit inside `len` rows.
pub fn window_slices(len: usize, width: usize, step: usize) -> Result<Vec<Range<usize>>> {
    if width < 2 {
        return Err(Error::param("width", format!("must be at least 2, got {width}")));
    }
    if step < 1 {
        return Err(Error::param("step", "must be at least 1"));
    }
    if width > len {
        return Ok(Vec::new());
    }
    Ok((0..=(len - width) / step).map(|k| k * step..k * step + width).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semester {
    /// `"2003-S1"` for January to June, `"2003-S2"` for July to December.
    pub label: String,
    pub rows: Range<usize>,
}

fn semester_key(date: NaiveDate) -> (i32, u8) {
    (date.year(), if date.month() <= 6 { 1 } else { 2 })
}

/// Splits a sorted date list at every January 1 and July 1.
pub fn semester_slices(dates: &[NaiveDate]) -> Vec<Semester> {
    let mut out: Vec<Semester> = Vec::new();
    for (i, &d) in dates.iter().enumerate() {
        let (year, half) = semester_key(d);
        let label = format!("{year}-S{half}");
        match out.last_mut() {
            Some(last) if last.label == label => last.rows.end = i + 1,
            _ => out.push(Semester { label, rows: i..i + 1 }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedWindow {
    pub anchor_date: NaiveDate,
    pub variable: String,
}

/// One scalar per window, anchored at the window's last date.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries<S> {
    pub anchor_dates: Vec<NaiveDate>,
    pub values: Vec<S>,
    pub skipped: Vec<SkippedWindow>,
}

impl<S> WindowSeries<S> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_width(width: usize) -> Result<()> {
    if width < 3 {
        return Err(Error::param("width", format!("must be at least 3, got {width}")));
    }
    Ok(())
}

/// Mean correlation node strength divided by N. Windows where a column has zero
/// variance are skipped and reported.
pub fn rolling_mean_correlation<S: Scalar>(panel: &ReturnPanel<S>, width: usize, step: usize) -> Result<WindowSeries<S>> {
    check_width(width)?;
    let slices = window_slices(panel.n_rows(), width, step)?;
    let n = S::from_count(panel.n_vars());
    let results: Vec<(NaiveDate, Result<S>)> = slices
        .par_iter()
        .map(|r| {
            let anchor = panel.dates()[r.end - 1];
            let value = pearson_matrix(&panel.slice_rows(r.start, r.end)).map(|c| node_strength(&c).mean().unwrap() / n);
            (anchor, value)
        })
        .collect();
    let mut series = WindowSeries { anchor_dates: Vec::new(), values: Vec::new(), skipped: Vec::new() };
    for (anchor, value) in results {
        match value {
            Ok(v) => {
                series.anchor_dates.push(anchor);
                series.values.push(v);
            }
            Err(Error::ZeroVariance { variable }) => {
                tracing::warn!(%anchor, %variable, "window skipped: zero variance");
                series.skipped.push(SkippedWindow { anchor_date: anchor, variable });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(series)
}

/// S21 of one window: lag-expand, bin with a window-local origin, estimate.
pub fn window_s21<S: Scalar>(panel: &ReturnPanel<S>, bin_width: S) -> Result<LabeledMatrix<S>> {
    let discrete = bin_panel(panel, bin_width)?.lag_expand()?;
    te_quadrant(&discrete, Quadrant::S21)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeWindowSeries<S> {
    /// Mean in-strength of S21 divided by N.
    pub incoming: WindowSeries<S>,
    /// Mean out-strength of S21 divided by N.
    pub outgoing: WindowSeries<S>,
}

/// Mean S21 in- and out-strength divided by N for every window.
pub fn rolling_mean_te<S: Scalar>(
    panel: &ReturnPanel<S>,
    width: usize,
    step: usize,
    bin_width: S,
) -> Result<TeWindowSeries<S>> {
    check_width(width)?;
    if panel.is_expanded() {
        return Err(Error::AlreadyExpanded);
    }
    let slices = window_slices(panel.n_rows(), width, step)?;
    let n = S::from_count(panel.n_vars());
    let rows: Vec<(NaiveDate, S, S)> = slices
        .par_iter()
        .map(|r| {
            let s21 = window_s21(&panel.slice_rows(r.start, r.end), bin_width)?;
            let strengths = in_out_node_strength(&s21);
            Ok((
                panel.dates()[r.end - 1],
                strengths.in_strength.mean().unwrap() / n,
                strengths.out_strength.mean().unwrap() / n,
            ))
        })
        .collect::<Result<_>>()?;
    let anchor_dates: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
    Ok(TeWindowSeries {
        incoming: WindowSeries { anchor_dates: anchor_dates.clone(), values: rows.iter().map(|r| r.1).collect(), skipped: Vec::new() },
        outgoing: WindowSeries { anchor_dates, values: rows.iter().map(|r| r.2).collect(), skipped: Vec::new() },
    })
}

/// Entrywise absolute returns.
pub fn volatility_panel<S: Scalar>(panel: &ReturnPanel<S>) -> Array2<S> {
    panel.returns().mapv(|r| r.abs())
}

/// Cross-sectional mean volatility per row.
pub fn mean_volatility<S: Scalar>(panel: &ReturnPanel<S>) -> Vec<S> {
    let n = S::from_count(panel.n_vars());
    volatility_panel(panel).rows().into_iter().map(|r| r.iter().copied().sum::<S>() / n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemesterCorrelation<S> {
    pub label: String,
    pub matrix: CorrelationMatrix<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemesterTe<S> {
    pub label: String,
    pub s21: LabeledMatrix<S>,
}

/// Correlation matrix of every semester with at least 3 rows.
pub fn semester_correlations<S: Scalar>(panel: &ReturnPanel<S>) -> Result<Vec<SemesterCorrelation<S>>> {
    semester_slices(panel.dates())
        .into_iter()
        .filter(|s| s.rows.len() >= 3)
        .map(|s| {
            let matrix = pearson_matrix(&panel.slice_rows(s.rows.start, s.rows.end))?;
            Ok(SemesterCorrelation { label: s.label, matrix })
        })
        .collect()
}

/// S21 of every semester with at least 3 rows, lag-expanded within the semester.
pub fn semester_te<S: Scalar>(panel: &ReturnPanel<S>, bin_width: S) -> Result<Vec<SemesterTe<S>>> {
    semester_slices(panel.dates())
        .into_iter()
        .filter(|s| s.rows.len() >= 3)
        .map(|s| {
            let s21 = window_s21(&panel.slice_rows(s.rows.start, s.rows.end), bin_width)?;
            Ok(SemesterTe { label: s.label, s21 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn slices() {
        let w = window_slices(5, 3, 1).unwrap();
        assert_eq!(w, vec![0..3, 1..4, 2..5]);
        assert_eq!(window_slices(6, 2, 2).unwrap(), vec![0..2, 2..4, 4..6]);
        assert_eq!(window_slices(5, 5, 1).unwrap(), vec![0..5]);
        assert!(window_slices(4, 5, 1).unwrap().is_empty());
        assert!(window_slices(4, 1, 1).is_err());
        assert!(window_slices(4, 2, 0).is_err());
    }

    #[test]
    fn semesters() {
        assert!(semester_slices(&[]).is_empty());
        let june = [date(2005, 6, 1), date(2005, 6, 2), date(2005, 6, 30)];
        assert_eq!(semester_slices(&june), vec![Semester { label: "2005-S1".into(), rows: 0..3 }]);
        let mut dates = Vec::new();
        let mut d = date(2003, 1, 2);
        while d <= date(2012, 12, 31) {
            if d.weekday().num_days_from_monday() < 5 {
                dates.push(d);
            }
            d = d.succ_opt().unwrap();
        }
        let s = semester_slices(&dates);
        assert_eq!(s.len(), 20);
        assert_eq!(s[0].label, "2003-S1");
        assert_eq!(s[19].label, "2012-S2");
        assert_eq!(dates[s[1].rows.start], date(2003, 7, 1));
    }

    #[test]
    fn identical_columns_have_unit_mean_correlation() {
        let names: Vec<String> = (0..4).map(|i| format!("s{i}")).collect();
        let col: Vec<f64> = (0..30).map(|t| ((t * 7 % 11) as f64 - 5.0) * 0.01).collect();
        let x = Array2::from_shape_fn((30, 4), |(t, _)| col[t]);
        let panel = ReturnPanel::from_columns(&names, x).unwrap();
        let s = rolling_mean_correlation(&panel, 10, 1).unwrap();
        assert_eq!(s.len(), 21);
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn full_width_matches_full_sample() {
        let names: Vec<String> = (0..3).map(|i| format!("s{i}")).collect();
        let x = Array2::from_shape_fn((20, 3), |(t, i)| (((t + 1) * (i + 3) * 37 % 17) as f64 - 8.0) * 0.01);
        let panel = ReturnPanel::from_columns(&names, x).unwrap();
        let s = rolling_mean_correlation(&panel, 20, 1).unwrap();
        let full = node_strength(&pearson_matrix(&panel).unwrap()).mean().unwrap() / 3.0;
        assert_eq!(s.values, vec![full]);
        assert_eq!(s.anchor_dates, vec![*panel.dates().last().unwrap()]);
    }

    #[test]
    fn zero_variance_window_skipped() {
        let names: Vec<String> = vec!["a".into(), "b".into()];
        let mut x = Array2::from_shape_fn((8, 2), |(t, i)| ((t * (i + 2)) % 5) as f64 * 0.01);
        for t in 0..4 {
            x[[t, 0]] = 0.0;
        }
        let panel = ReturnPanel::from_columns(&names, x).unwrap();
        let s = rolling_mean_correlation(&panel, 4, 1).unwrap();
        assert_eq!(s.skipped.len(), 1);
        assert_eq!(s.skipped[0].variable, "a");
        assert_eq!(s.len(), 4);
        // TE stays defined on the same window.
        assert_eq!(rolling_mean_te(&panel, 4, 1, 0.01).unwrap().incoming.len(), 5);
    }

    #[test]
    fn in_and_out_totals_agree() {
        let names: Vec<String> = (0..5).map(|i| format!("s{i}")).collect();
        let x = Array2::from_shape_fn((40, 5), |(t, i)| (((t * 13 + i * 7) % 9) as f64 - 4.0) * 0.01);
        let panel = ReturnPanel::from_columns(&names, x).unwrap();
        let te = rolling_mean_te(&panel, 12, 3, 0.02).unwrap();
        for (a, b) in te.incoming.values.iter().zip(&te.outgoing.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn volatility_is_absolute_return() {
        let names = vec!["a".to_string()];
        let panel = ReturnPanel::from_columns(&names, Array2::from_shape_vec((2, 1), vec![-0.02, 0.0]).unwrap()).unwrap();
        assert_eq!(volatility_panel(&panel).into_raw_vec_and_offset().0, vec![0.02, 0.0]);
        assert_eq!(mean_volatility(&panel), vec![0.02, 0.0]);
    }
}
