//! Variables and labeled square matrices shared across the analyses.

use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A return series identifier: a ticker plus its lag in trading days (0 or 1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    pub ticker: String,
    pub lag: u8,
}

impl Variable {
    pub fn new(ticker: impl Into<String>) -> Self {
        Variable { ticker: ticker.into(), lag: 0 }
    }

    pub fn lagged(ticker: impl Into<String>) -> Self {
        Variable { ticker: ticker.into(), lag: 1 }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lag {
            0 => f.write_str(&self.ticker),
            lag => write!(f, "{}_lag{}", self.ticker, lag),
        }
    }
}

/// An N×N matrix whose rows and columns are indexed by the same variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix<S> {
    variables: Vec<Variable>,
    values: Array2<S>,
}

impl<S: Scalar> LabeledMatrix<S> {
    pub fn new(variables: Vec<Variable>, values: Array2<S>) -> Result<Self> {
        let n = variables.len();
        if values.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.nrows() });
        }
        if values.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: values.ncols() });
        }
        Ok(LabeledMatrix { variables, values })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[[i, j]]
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.ticker == ticker)
    }

    pub fn into_parts(self) -> (Vec<Variable>, Array2<S>) {
        (self.variables, self.values)
    }

    /// Upper-triangle entries (i < j) in row-major order.
    pub fn upper_triangle(&self) -> Vec<S> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.values[[i, j]]);
            }
        }
        out
    }

    /// Off-diagonal entries (i ≠ j) in row-major order.
    pub fn off_diagonal(&self) -> Vec<S> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.push(self.values[[i, j]]);
                }
            }
        }
        out
    }

    pub fn max_asymmetry(&self) -> S {
        let n = self.len();
        let mut worst = S::zero();
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.values[[i, j]] - self.values[[j, i]]).abs());
            }
        }
        worst
    }
}
