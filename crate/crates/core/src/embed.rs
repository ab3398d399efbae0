//! Classical (Torgerson) multidimensional scaling with a stress diagnostic.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::matrix::Variable;
use crate::netmetrics::DistanceMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<S> {
    pub variables: Vec<Variable>,
    /// N×m coordinates, centroid at the origin.
    pub coords: Array2<S>,
    pub stress: S,
    /// Number of negative eigenvalues of the centered Gram matrix that were zeroed.
    pub truncated_count: usize,
    /// Sum of the absolute values of those eigenvalues.
    pub truncated_mass: S,
}

impl<S: Scalar> Embedding<S> {
    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }

    pub fn embedded_distance(&self, i: usize, j: usize) -> S {
        euclidean(&self.coords, i, j)
    }
}

fn euclidean<S: Scalar>(coords: &Array2<S>, i: usize, j: usize) -> S {
    coords
        .row(i)
        .iter()
        .zip(coords.row(j).iter())
        .map(|(a, b)| (*a - *b) * (*a - *b))
        .sum::<S>()
        .sqrt()
}

/// Embeds `dist` in `dims` dimensions: double-center `−½ D²`, keep the top eigenpairs,
/// scale eigenvectors by √λ (negative λ → 0). Each axis is oriented so that its
/// largest-magnitude coordinate is positive.
pub fn classical_mds<S: Scalar>(dist: &DistanceMatrix<S>, dims: usize) -> Result<Embedding<S>> {
    let n = dist.len();
    if dims == 0 {
        return Err(Error::param("dims", "must be at least 1"));
    }
    if n < dims + 1 {
        return Err(Error::param("dims", format!("need at least {} points for {dims} dimensions, have {n}", dims + 1)));
    }
    let half = S::of(0.5);
    let sq = dist.values().mapv(|d| d * d);
    let nf = S::from_count(n);
    let row_mean: Vec<S> = sq.rows().into_iter().map(|r| r.iter().copied().sum::<S>() / nf).collect();
    let grand = row_mean.iter().copied().sum::<S>() / nf;
    let mut b = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            b[[i, j]] = -half * (sq[[i, j]] - row_mean[i] - row_mean[j] + grand);
        }
    }
    let eig = symmetric_eigen(&b);
    let negatives: Vec<S> = eig.values.iter().copied().filter(|&l| l < S::zero()).collect();
    let truncated_mass = negatives.iter().map(|l| l.abs()).sum();

    let mut coords = Array2::zeros((n, dims));
    for k in 0..dims {
        let lambda = eig.values[k].max(S::zero());
        let scale = lambda.sqrt();
        let v = eig.vectors.column(k);
        let pivot = v.iter().copied().fold(S::zero(), |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < S::zero() { -S::one() } else { S::one() };
        for i in 0..n {
            coords[[i, k]] = sign * scale * v[i];
        }
    }
    // Eigenvectors of a centered matrix are orthogonal to 1; remove residual drift.
    for mut col in coords.columns_mut() {
        let mean = col.iter().copied().sum::<S>() / nf;
        col.mapv_inplace(|x| x - mean);
    }
    let mut emb = Embedding {
        variables: dist.variables().to_vec(),
        coords,
        stress: S::zero(),
        truncated_count: negatives.len(),
        truncated_mass,
    };
    emb.stress = stress(dist, &emb)?;
    Ok(emb)
}

/// Kruskal stress-1: `sqrt( Σ_{i<j} (d_ij − d̂_ij)² / Σ_{i<j} d_ij² )`.
pub fn stress<S: Scalar>(dist: &DistanceMatrix<S>, emb: &Embedding<S>) -> Result<S> {
    if dist.variables() != emb.variables.as_slice() {
        return Err(Error::VariableMismatch);
    }
    let n = dist.len();
    let (mut num, mut den) = (S::zero(), S::zero());
    for i in 0..n {
        for j in i + 1..n {
            let d = dist.get(i, j);
            let diff = d - emb.embedded_distance(i, j);
            num += diff * diff;
            den += d * d;
        }
    }
    if den == S::zero() {
        return if num == S::zero() { Ok(S::zero()) } else { Err(Error::DegenerateStress) };
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::LabeledMatrix;
    use ndarray::array;

    fn dm(values: Array2<f64>) -> DistanceMatrix<f64> {
        let vars = (0..values.nrows()).map(|i| Variable::new(format!("p{i}"))).collect();
        DistanceMatrix::from_matrix(LabeledMatrix::new(vars, values).unwrap()).unwrap()
    }

    #[test]
    fn collinear_points_in_one_dimension() {
        let d = dm(array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]);
        let e = classical_mds(&d, 1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((e.embedded_distance(i, j) - d.get(i, j)).abs() < 1e-9);
            }
        }
        assert!(e.stress < 1e-9);
        assert!(e.coords.column(0).iter().sum::<f64>().abs() < 1e-12);
        // Sign gauge: the largest-magnitude coordinate is positive.
        let pivot = e.coords.column(0).iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
        assert!(pivot > 0.0);
    }

    #[test]
    fn zero_distances_collapse_to_origin() {
        let d = dm(Array2::zeros((4, 4)));
        let e = classical_mds(&d, 2).unwrap();
        assert!(e.coords.iter().all(|&x| x == 0.0));
        assert_eq!(e.stress, 0.0);
    }

    #[test]
    fn origin_embedding_has_unit_stress() {
        let d = dm(array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]]);
        let mut e = classical_mds(&d, 2).unwrap();
        e.coords.fill(0.0);
        assert!((stress(&d, &e).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_stress() {
        let d = dm(Array2::zeros((3, 3)));
        let mut e = classical_mds(&d, 1).unwrap();
        e.coords[[0, 0]] = 1.0;
        assert!(matches!(stress(&d, &e), Err(Error::DegenerateStress)));
    }

    #[test]
    fn dimension_preconditions() {
        let d = dm(array![[0.0, 1.0], [1.0, 0.0]]);
        assert!(classical_mds(&d, 0).is_err());
        assert!(classical_mds(&d, 2).is_err());
        assert!(classical_mds(&d, 1).is_ok());
    }

    #[test]
    fn non_euclidean_input_reports_truncation() {
        // Violates the triangle inequality, so −½ J D² J has a negative eigenvalue.
        let d = dm(array![[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]]);
        let e = classical_mds(&d, 2).unwrap();
        assert!(e.truncated_count >= 1);
        assert!(e.truncated_mass > 0.0);
        assert!(e.stress.is_finite());
    }
}
