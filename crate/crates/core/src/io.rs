//! CSV writers and readers for panels, matrices and analysis outputs.

use std::io::{self, Read, Write};

use chrono::NaiveDate;
use ndarray::{Array1, Array2};

use crate::corpus::{PricePanel, ReturnPanel, SectorTaxonomy};
use crate::embed::Embedding;
use crate::error::{Error, Result};
use crate::matrix::{LabeledMatrix, Variable};
use crate::scalar::Scalar;
use crate::shockwave::{rank_descending, ShockTrajectory};
use crate::windows::WindowSeries;

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> io::Result<()> {
    w.flush()
}

/// Square matrix with a header row and a leading column of variable names.
pub fn write_matrix_csv<S: Scalar, W: Write>(matrix: &LabeledMatrix<S>, w: W) -> io::Result<()> {
    let mut out = writer(w);
    let mut header = vec!["variable".to_string()];
    header.extend(matrix.variables().iter().map(Variable::to_string));
    out.write_record(&header)?;
    for (i, v) in matrix.variables().iter().enumerate() {
        let mut row = vec![v.to_string()];
        row.extend(matrix.values().row(i).iter().map(|x| x.to_string()));
        out.write_record(&row)?;
    }
    finish(out)
}

fn parse_variable(text: &str) -> Variable {
    match text.strip_suffix("_lag1") {
        Some(t) => Variable::lagged(t),
        None => Variable::new(text),
    }
}

pub fn read_matrix_csv<S: Scalar, R: Read>(r: R) -> Result<LabeledMatrix<S>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rdr.headers().map_err(|e| Error::Malformed { row: 1, message: e.to_string() })?.clone();
    let variables: Vec<Variable> = header.iter().skip(1).map(parse_variable).collect();
    let n = variables.len();
    let mut values = Array2::zeros((n, n));
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Malformed { row, message: e.to_string() })?;
        if i >= n || record.len() != n + 1 || parse_variable(&record[0]) != variables[i] {
            return Err(Error::Malformed { row, message: "row does not match header".into() });
        }
        for j in 0..n {
            let v: f64 = record[j + 1]
                .parse()
                .map_err(|_| Error::Malformed { row, message: format!("bad number {:?}", &record[j + 1]) })?;
            values[[i, j]] = S::of(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::DimensionMismatch { expected: n, found: rows });
    }
    LabeledMatrix::new(variables, values)
}

/// Long-format `date,ticker,close`, skipping missing observations.
pub fn write_prices_csv<S: Scalar, W: Write>(panel: &PricePanel<S>, w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(["date", "ticker", "close"])?;
    for (t, date) in panel.dates().iter().enumerate() {
        for (i, ticker) in panel.tickers().iter().enumerate() {
            if let Some(p) = panel.prices()[[t, i]] {
                out.write_record([date.to_string(), ticker.clone(), p.to_string()])?;
            }
        }
    }
    finish(out)
}

pub fn write_taxonomy_csv<W: Write>(taxonomy: &SectorTaxonomy, tickers: &[String], w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(["ticker", "sector", "industry", "subindustry"])?;
    for t in tickers {
        if let Some(c) = taxonomy.get(t) {
            out.write_record([t.as_str(), &c.sector, &c.industry, &c.subindustry])?;
        }
    }
    finish(out)
}

/// Wide `date,<variables...>`.
pub fn write_returns_csv<S: Scalar, W: Write>(panel: &ReturnPanel<S>, w: W) -> io::Result<()> {
    let mut out = writer(w);
    let mut header = vec!["date".to_string()];
    header.extend(panel.variables().iter().map(Variable::to_string));
    out.write_record(&header)?;
    for (t, date) in panel.dates().iter().enumerate() {
        let mut row = vec![date.to_string()];
        row.extend(panel.returns().row(t).iter().map(|x| x.to_string()));
        out.write_record(&row)?;
    }
    finish(out)
}

/// `anchor_date,statistic,value` for each named series in turn.
pub fn write_window_means<S: Scalar, W: Write>(series: &[(&str, &WindowSeries<S>)], w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(["anchor_date", "statistic", "value"])?;
    for (name, s) in series {
        for (d, v) in s.anchor_dates.iter().zip(&s.values) {
            out.write_record([d.to_string(), name.to_string(), v.to_string()])?;
        }
    }
    finish(out)
}

/// `anchor_date,variable,statistic,value` for a dates × variables matrix.
pub fn write_per_variable<S: Scalar, W: Write>(
    dates: &[NaiveDate],
    variables: &[Variable],
    statistic: &str,
    values: &Array2<S>,
    w: W,
) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(["anchor_date", "variable", "statistic", "value"])?;
    for (t, d) in dates.iter().enumerate() {
        for (i, v) in variables.iter().enumerate() {
            out.write_record([d.to_string(), v.to_string(), statistic.to_string(), values[[t, i]].to_string()])?;
        }
    }
    finish(out)
}

/// `t,variable,volatility`.
pub fn write_trajectory_csv<S: Scalar, W: Write>(trajectory: &ShockTrajectory<S>, w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(["t", "variable", "volatility"])?;
    for (t, row) in trajectory.volatilities.rows().into_iter().enumerate() {
        for (v, x) in trajectory.variables.iter().zip(row.iter()) {
            out.write_record([t.to_string(), v.to_string(), x.to_string()])?;
        }
    }
    finish(out)
}

/// `variable,strength,rank`, strongest first, rank starting at 1.
pub fn write_ranking_csv<S: Scalar, W: Write>(variables: &[Variable], strengths: &Array1<S>, w: W) -> io::Result<()> {
    let mut out = writer(w);
    out.write_record(["variable", "strength", "rank"])?;
    for (rank, i) in rank_descending(strengths).into_iter().enumerate() {
        out.write_record([variables[i].to_string(), strengths[i].to_string(), (rank + 1).to_string()])?;
    }
    finish(out)
}

fn axis_name(k: usize) -> String {
    match k {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        _ => format!("d{}", k + 1),
    }
}

/// `variable,x,y,...`.
pub fn write_coords_csv<S: Scalar, W: Write>(embedding: &Embedding<S>, w: W) -> io::Result<()> {
    let mut out = writer(w);
    let mut header = vec!["variable".to_string()];
    header.extend((0..embedding.dims()).map(axis_name));
    out.write_record(&header)?;
    for (v, row) in embedding.variables.iter().zip(embedding.coords.rows()) {
        let mut rec = vec![v.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        out.write_record(&rec)?;
    }
    finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_round_trip() {
        let vars = vec![Variable::new("A"), Variable::lagged("A")];
        let m = LabeledMatrix::new(vars, array![[1.0, 0.25], [-0.5, 1e-17]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("variable,A,A_lag1\nA,1,0.25\n"));
        let back: LabeledMatrix<f64> = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ranking_sorted() {
        let vars = vec![Variable::new("a"), Variable::new("b"), Variable::new("c")];
        let mut buf = Vec::new();
        write_ranking_csv(&vars, &array![0.1, 0.3, 0.2], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "variable,strength,rank\nb,0.3,1\nc,0.2,2\na,0.1,3\n");
    }

    #[test]
    fn malformed_matrix_rejected() {
        assert!(read_matrix_csv::<f64, _>("variable,A,B\nA,1,0\n".as_bytes()).is_err());
        assert!(read_matrix_csv::<f64, _>("variable,A\nA,x\n".as_bytes()).is_err());
    }
}
