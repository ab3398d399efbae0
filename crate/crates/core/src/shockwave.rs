//! Linear volatility propagation over the lagged-to-original TE network.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::entropy::QuadTEMatrix;
use crate::error::{Error, Result};
use crate::matrix::{LabeledMatrix, Variable};
use crate::scalar::Scalar;

pub const DEFAULT_SINGLE_MAGNITUDE: f64 = 0.3;
pub const DEFAULT_GROUP_MAGNITUDE: f64 = 0.1;
pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_PEAK_DAY: usize = 4;

/// Non-negative S21 with a zero diagonal; entry `(i, j)` is the flow from stock `i`
/// to stock `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix<S>(LabeledMatrix<S>);

impl<S: Scalar> PropagationMatrix<S> {
    /// Zeroes the diagonal of any non-negative square matrix.
    pub fn from_matrix(matrix: LabeledMatrix<S>) -> Result<Self> {
        if let Some(v) = matrix.values().iter().find(|v| !(**v >= S::zero()) || !v.is_finite()) {
            return Err(Error::param("mte", format!("entries must be finite and non-negative, found {v}")));
        }
        let (variables, mut values) = matrix.into_parts();
        values.diag_mut().fill(S::zero());
        Ok(PropagationMatrix(LabeledMatrix::new(variables, values)?))
    }

    pub fn matrix(&self) -> &LabeledMatrix<S> {
        &self.0
    }

    pub fn values(&self) -> &Array2<S> {
        self.0.values()
    }

    pub fn variables(&self) -> &[Variable] {
        self.0.variables()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest total inflow into a single stock.
    pub fn max_in_strength(&self) -> S {
        self.values()
            .columns()
            .into_iter()
            .map(|c| c.iter().copied().sum::<S>())
            .fold(S::zero(), S::max)
    }
}

pub fn build_propagation_matrix<S: Scalar>(te: &QuadTEMatrix<S>) -> Result<PropagationMatrix<S>> {
    PropagationMatrix::from_matrix(te.s21())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShockOrigin {
    Stock(Variable),
    Group(Vec<Variable>),
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockTrajectory<S> {
    pub variables: Vec<Variable>,
    /// `(horizon + 1) × N`; row 0 is the initial condition.
    pub volatilities: Array2<S>,
    pub origin: ShockOrigin,
}

impl<S: Scalar> ShockTrajectory<S> {
    pub fn horizon(&self) -> usize {
        self.volatilities.nrows() - 1
    }

    /// Cross-sectional mean volatility at day `t`.
    pub fn mean_at(&self, t: usize) -> S {
        self.volatilities.row(t).mean().unwrap_or_else(S::zero)
    }
}

fn step_into<S: Scalar>(mte: &Array2<S>, prev: &[S], factor: S, next: &mut [S]) {
    next.iter_mut().for_each(|v| *v = S::zero());
    for (j, &vj) in prev.iter().enumerate() {
        if vj == S::zero() {
            continue;
        }
        for (n, &w) in next.iter_mut().zip(mte.row(j).iter()) {
            *n += w * vj;
        }
    }
    next.iter_mut().for_each(|v| *v *= factor);
}

/// `V_{t+1}[i] = e^{−(t+1)} Σ_j MTE[j][i] V_t[j]`: each stock receives the volatility
/// of every other stock weighted by the flow from that stock into it.
pub fn propagate<S: Scalar>(mte: &PropagationMatrix<S>, v0: &Array1<S>, horizon: usize) -> Result<ShockTrajectory<S>> {
    let n = mte.len();
    if v0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v0.len() });
    }
    if let Some(v) = v0.iter().find(|v| !(**v >= S::zero())) {
        return Err(Error::param("v0", format!("volatilities must be non-negative, found {v}")));
    }
    let mut vol = Array2::zeros((horizon + 1, n));
    vol.row_mut(0).assign(v0);
    let mut prev = v0.to_vec();
    let mut next = vec![S::zero(); n];
    for t in 0..horizon {
        let factor = (-S::from_count(t + 1)).exp();
        step_into(mte.values(), &prev, factor, &mut next);
        vol.row_mut(t + 1).iter_mut().zip(&next).for_each(|(d, s)| *d = *s);
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(ShockTrajectory { variables: mte.variables().to_vec(), volatilities: vol, origin: ShockOrigin::Custom })
}

pub fn single_stock_shock<S: Scalar>(
    mte: &PropagationMatrix<S>,
    stock: usize,
    magnitude: S,
    horizon: usize,
) -> Result<ShockTrajectory<S>> {
    let n = mte.len();
    if stock >= n {
        return Err(Error::param("stock", format!("index {stock} out of range for {n} stocks")));
    }
    let mut v0 = Array1::zeros(n);
    v0[stock] = magnitude;
    let mut traj = propagate(mte, &v0, horizon)?;
    traj.origin = ShockOrigin::Stock(mte.variables()[stock].clone());
    Ok(traj)
}

/// Shocks every stock in `stocks` with the same magnitude. The full index set is a
/// systemic shock.
pub fn group_shock<S: Scalar>(
    mte: &PropagationMatrix<S>,
    stocks: &[usize],
    magnitude: S,
    horizon: usize,
) -> Result<ShockTrajectory<S>> {
    if stocks.is_empty() {
        return Err(Error::EmptyShockSet);
    }
    let n = mte.len();
    let mut v0 = Array1::zeros(n);
    for &s in stocks {
        if s >= n {
            return Err(Error::param("stocks", format!("index {s} out of range for {n} stocks")));
        }
        v0[s] = magnitude;
    }
    let mut traj = propagate(mte, &v0, horizon)?;
    let mut members: Vec<usize> = stocks.to_vec();
    members.sort_unstable();
    members.dedup();
    traj.origin = ShockOrigin::Group(members.iter().map(|&i| mte.variables()[i].clone()).collect());
    Ok(traj)
}

/// Mean volatility across all stocks at `peak_day` after shocking each stock alone.
pub fn shock_propagation_strength<S: Scalar>(
    mte: &PropagationMatrix<S>,
    magnitude: S,
    peak_day: usize,
) -> Result<Array1<S>> {
    if peak_day < 1 {
        return Err(Error::param("peak_day", "must be at least 1"));
    }
    let strengths: Vec<S> = (0..mte.len())
        .into_par_iter()
        .map(|i| single_stock_shock(mte, i, magnitude, peak_day).map(|t| t.mean_at(peak_day)))
        .collect::<Result<_>>()?;
    Ok(Array1::from(strengths))
}

/// Descending order of strength; ties keep the lower index first.
pub fn rank_descending<S: Scalar>(values: &Array1<S>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn mte(values: Array2<f64>) -> PropagationMatrix<f64> {
        let vars = (0..values.nrows()).map(|i| Variable::new(format!("s{i}"))).collect();
        PropagationMatrix::from_matrix(LabeledMatrix::new(vars, values).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_zeroed_and_idempotent() {
        let m = mte(array![[2.8, 0.1], [0.2, 2.7]]);
        assert_eq!(m.values(), &array![[0.0, 0.1], [0.2, 0.0]]);
        let again = PropagationMatrix::from_matrix(m.matrix().clone()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn two_stock_hand_iteration() {
        let (a, b, v) = (0.4, 0.7, 0.3);
        let m = mte(array![[0.0, a], [b, 0.0]]);
        let t = propagate(&m, &array![v, 0.0], 2).unwrap();
        let e1 = (-1.0f64).exp();
        let e2 = (-2.0f64).exp();
        assert_eq!(t.volatilities.row(1)[0], 0.0);
        assert!((t.volatilities.row(1)[1] - a * v * e1).abs() < 1e-15);
        assert!((t.volatilities.row(2)[0] - b * a * v * e1 * e2).abs() < 1e-15);
        assert_eq!(t.volatilities.row(2)[1], 0.0);
    }

    #[test]
    fn zero_cases() {
        let m = mte(array![[0.0, 0.5, 0.0], [0.0, 0.0, 0.0], [0.3, 0.1, 0.0]]);
        let t = single_stock_shock(&m, 0, 0.0, 10).unwrap();
        assert!(t.volatilities.iter().all(|&v| v == 0.0));
        assert_eq!(t.volatilities.nrows(), 11);
        let t = single_stock_shock(&m, 1, 0.3, 10).unwrap();
        assert!(t.volatilities.rows().into_iter().skip(1).all(|r| r.iter().all(|&v| v == 0.0)));
        assert!(single_stock_shock(&m, 3, 0.3, 10).is_err());
        assert!(propagate(&m, &array![1.0, 0.0], 3).is_err());
        assert!(matches!(group_shock(&m, &[], 0.1, 3), Err(Error::EmptyShockSet)));
        let zero = mte(Array2::zeros((3, 3)));
        assert!(shock_propagation_strength(&zero, 0.3, 4).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn group_equals_superposition() {
        let m = mte(array![[0.0, 0.5, 0.2], [0.1, 0.0, 0.3], [0.3, 0.1, 0.0]]);
        let all = group_shock(&m, &[0, 1, 2], 0.1, 6).unwrap();
        let mut sum = Array2::zeros((7, 3));
        for i in 0..3 {
            sum += &single_stock_shock(&m, i, 0.1, 6).unwrap().volatilities;
        }
        assert!((&all.volatilities - &sum).iter().all(|d| d.abs() < 1e-15));
        let single = group_shock(&m, &[1], 0.3, 6).unwrap();
        assert_eq!(single.volatilities, single_stock_shock(&m, 1, 0.3, 6).unwrap().volatilities);
    }

    #[test]
    fn ranking_order() {
        assert_eq!(rank_descending(&array![0.1, 0.3, 0.3, 0.0]), vec![1, 2, 0, 3]);
    }
}
