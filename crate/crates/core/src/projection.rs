//! Orthonormal basis of the discriminative directions (hyperplane normals)
//! and projection onto it.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Default relative residual below which a direction counts as dependent.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("no input directions")]
    NoDirections,
    #[error("direction {0} is the zero vector")]
    ZeroDirection(usize),
    #[error("every direction was dropped as linearly dependent")]
    EmptyBasis,
    #[error("dimension mismatch: basis has {expected} columns, data has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// `r × d` matrix with orthonormal rows, `r ≤ K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionBasis {
    #[serde(with = "crate::serde_arrays::matrix")]
    pub rows: Array2<f64>,
    /// Input rows eliminated as dependent on earlier ones.
    pub dropped: Vec<usize>,
}

impl DirectionBasis {
    pub fn rank(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.rows.ncols()
    }
}

/// Modified Gram-Schmidt in input order with one re-orthogonalization pass.
/// A row whose residual norm falls below `tol ×` its original norm is
/// recorded in `dropped`; the others are normalized.
pub fn gram_schmidt(directions: ArrayView2<f64>, tol: f64) -> Result<DirectionBasis, ProjectionError> {
    if directions.nrows() == 0 {
        return Err(ProjectionError::NoDirections);
    }
    let mut kept: Vec<Array1<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for (i, row) in directions.rows().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 {
            return Err(ProjectionError::ZeroDirection(i));
        }
        let mut v = row.to_owned();
        for _ in 0..2 {
            for q in &kept {
                let c = q.dot(&v);
                v.scaled_add(-c, q);
            }
        }
        let residual = v.dot(&v).sqrt();
        if residual < tol * norm {
            dropped.push(i);
        } else {
            kept.push(v / residual);
        }
    }
    if kept.is_empty() {
        return Err(ProjectionError::EmptyBasis);
    }
    let d = directions.ncols();
    let mut rows = Array2::zeros((kept.len(), d));
    for (r, q) in kept.iter().enumerate() {
        rows.row_mut(r).assign(q);
    }
    Ok(DirectionBasis { rows, dropped })
}

/// `X · basisᵀ`.
pub fn project(x: ArrayView2<f64>, basis: &DirectionBasis) -> Result<Array2<f64>, ProjectionError> {
    if x.ncols() != basis.n_features() {
        return Err(ProjectionError::DimensionMismatch { expected: basis.n_features(), actual: x.ncols() });
    }
    Ok(x.dot(&basis.rows.t()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn forced_residual() {
        let b = gram_schmidt(array![[2.0, 0.0], [1.0, 1.0]].view(), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(b.rows, array![[1.0, 0.0], [0.0, 1.0]]);
        assert!(b.dropped.is_empty());
    }

    #[test]
    fn collinear_row_dropped() {
        let b = gram_schmidt(array![[1.0, 0.0], [2.0, 0.0]].view(), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(b.rows, array![[1.0, 0.0]]);
        assert_eq!(b.dropped, vec![1]);
    }

    #[test]
    fn orthonormal_input_unchanged() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = array![[s, s, 0.0], [s, -s, 0.0], [0.0, 0.0, 1.0]];
        let b = gram_schmidt(d.view(), DEFAULT_TOLERANCE).unwrap();
        assert!((&b.rows - &d).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_row_and_empty_input() {
        assert_eq!(gram_schmidt(array![[1.0, 0.0], [0.0, 0.0]].view(), 1e-6), Err(ProjectionError::ZeroDirection(1)));
        assert_eq!(gram_schmidt(Array2::<f64>::zeros((0, 3)).view(), 1e-6), Err(ProjectionError::NoDirections));
    }

    #[test]
    fn projection_shape_and_mismatch() {
        let b = gram_schmidt(array![[0.0, 3.0, 0.0]].view(), 1e-6).unwrap();
        let x = array![[1.0, 2.0, 3.0], [4.0, -5.0, 6.0]];
        assert_eq!(project(x.view(), &b).unwrap(), array![[2.0], [-5.0]]);
        assert!(project(array![[1.0, 2.0]].view(), &b).is_err());
    }
}
