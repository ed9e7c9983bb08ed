//! Weighted linear models for `p(y | x, c)`.
//!
//! All three kinds minimize the same L2-regularized empirical risk
//!
//! ```text
//! F(w, b) = ½‖w‖² + C · Σᵢ sᵢ · ℓ(yᵢ, xᵢ·w + b)
//! ```
//!
//! with `C` the inverse regularization strength, `sᵢ ≥ 0` the sample weights
//! and the intercept `b` left unpenalized. The losses are the logistic loss,
//! a quadratically smoothed hinge, and half the squared error. `F` is solved
//! by a damped Newton method with Armijo backtracking, full batch and
//! deterministic, stopping once `‖∇F‖₂ ≤ tol`.

use crate::linalg::{cholesky, cholesky_solve, sigmoid, softplus};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Width of the quadratic zone of the smoothed hinge: the loss is
/// `(1 - m)² / (2h)` for margins `m` in `(1 - h, 1)`.
pub const HINGE_SMOOTHING: f64 = 0.5;

/// Class-weight totals at or below this count as "no weight".
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    Logistic,
    Hinge,
    Regression,
}

impl EstimatorKind {
    pub fn is_classifier(self) -> bool {
        !matches!(self, EstimatorKind::Regression)
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logistic" => Ok(EstimatorKind::Logistic),
            "hinge" | "svc" | "svm" => Ok(EstimatorKind::Hinge),
            "regression" | "ridge" => Ok(EstimatorKind::Regression),
            _ => Err(format!("unknown estimator `{s}` (expected logistic, hinge or regression)")),
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FitError {
    #[error("total sample weight of class {class} is {total:e}; need a positive amount")]
    DegenerateWeights { class: f64, total: f64 },
    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{0} is not available for regression models")]
    Unsupported(&'static str),
}

/// One fitted hyperplane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: EstimatorKind,
    #[serde(with = "crate::serde_arrays::vector")]
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub regularization: f64,
}

impl LinearModel {
    fn check_dim(&self, x: ArrayView2<f64>) -> Result<(), FitError> {
        if x.ncols() != self.weights.len() {
            return Err(FitError::DimensionMismatch { expected: self.weights.len(), actual: x.ncols() });
        }
        Ok(())
    }

    /// `X·w + b`.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, FitError> {
        self.check_dim(x)?;
        Ok(x.dot(&self.weights) + self.intercept)
    }

    /// `p(y = +1 | x)`: the logistic link of the score for logistic models,
    /// `sigmoid(2·score)` for hinge models.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, FitError> {
        let slope = match self.kind {
            EstimatorKind::Logistic => 1.0,
            EstimatorKind::Hinge => 2.0,
            EstimatorKind::Regression => return Err(FitError::Unsupported("predict_proba")),
        };
        Ok(self.decision_function(x)?.mapv(|z| sigmoid(slope * z)))
    }

    /// Class labels (`±1`) for classifiers, fitted values for regression.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>, FitError> {
        let scores = self.decision_function(x)?;
        Ok(match self.kind {
            EstimatorKind::Regression => scores,
            _ => scores.mapv(|z| if z >= 0.0 { 1.0 } else { -1.0 }),
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 500 }
    }
}

/// The regularized weighted risk `F` as a function of `θ = [w, b]`.
#[derive(Clone, Copy, Debug)]
pub struct WeightedObjective<'a> {
    pub kind: EstimatorKind,
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView1<'a, f64>,
    pub sample_weights: ArrayView1<'a, f64>,
    pub regularization: f64,
}

impl WeightedObjective<'_> {
    fn scores(&self, theta: ArrayView1<f64>) -> Array1<f64> {
        let d = self.x.ncols();
        self.x.dot(&theta.slice(ndarray::s![..d])) + theta[d]
    }

    /// `(ℓ, ∂ℓ/∂z, ∂²ℓ/∂z²)` for one sample.
    fn loss_terms(&self, y: f64, z: f64) -> (f64, f64, f64) {
        match self.kind {
            EstimatorKind::Logistic => {
                let m = y * z;
                (softplus(-m), -y * sigmoid(-m), sigmoid(z) * sigmoid(-z))
            }
            EstimatorKind::Hinge => {
                let m = y * z;
                let h = HINGE_SMOOTHING;
                if m >= 1.0 {
                    (0.0, 0.0, 0.0)
                } else if m > 1.0 - h {
                    let r = 1.0 - m;
                    (r * r / (2.0 * h), -y * r / h, 1.0 / h)
                } else {
                    (1.0 - m - h / 2.0, -y, 0.0)
                }
            }
            EstimatorKind::Regression => {
                let r = z - y;
                (0.5 * r * r, r, 1.0)
            }
        }
    }

    pub fn value(&self, theta: ArrayView1<f64>) -> f64 {
        self.value_and_gradient(theta).0
    }

    pub fn value_and_gradient(&self, theta: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let d = self.x.ncols();
        let w = theta.slice(ndarray::s![..d]);
        let z = self.scores(theta);
        let c = self.regularization;
        let mut risk = 0.0;
        let mut dz = Array1::<f64>::zeros(z.len());
        for i in 0..z.len() {
            let s = self.sample_weights[i];
            if s == 0.0 {
                continue;
            }
            let (l, dl, _) = self.loss_terms(self.y[i], z[i]);
            risk += s * l;
            dz[i] = c * s * dl;
        }
        let mut grad = Array1::<f64>::zeros(d + 1);
        grad.slice_mut(ndarray::s![..d]).assign(&(&w + &self.x.t().dot(&dz)));
        grad[d] = dz.sum();
        (0.5 * w.dot(&w) + c * risk, grad)
    }

    pub fn hessian(&self, theta: ArrayView1<f64>) -> Array2<f64> {
        let (n, d) = self.x.dim();
        let z = self.scores(theta);
        let c = self.regularization;
        let curvature: Array1<f64> =
            (0..n).map(|i| c * self.sample_weights[i] * self.loss_terms(self.y[i], z[i]).2).collect();
        let root = curvature.mapv(f64::sqrt);
        let scaled = &self.x * &root.view().insert_axis(Axis(1));
        let mut h = Array2::<f64>::zeros((d + 1, d + 1));
        h.slice_mut(ndarray::s![..d, ..d]).assign(&scaled.t().dot(&scaled));
        let cross = self.x.t().dot(&curvature);
        for j in 0..d {
            h[[j, j]] += 1.0;
            h[[j, d]] = cross[j];
            h[[d, j]] = cross[j];
        }
        h[[d, d]] = curvature.sum();
        h
    }
}

fn validate(kind: EstimatorKind, x: ArrayView2<f64>, y: ArrayView1<f64>, w: ArrayView1<f64>, c: f64) -> Result<(), FitError> {
    let n = x.nrows();
    if y.len() != n {
        return Err(FitError::DimensionMismatch { expected: n, actual: y.len() });
    }
    if w.len() != n {
        return Err(FitError::DimensionMismatch { expected: n, actual: w.len() });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(FitError::InvalidInput(format!("regularization must be positive, got {c}")));
    }
    if w.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(FitError::InvalidInput("sample weights must be finite and non-negative".into()));
    }
    if kind.is_classifier() {
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(FitError::InvalidInput("classification labels must be -1 or +1".into()));
        }
        for class in [-1.0, 1.0] {
            let total: f64 = y.iter().zip(w).filter(|(&v, _)| v == class).map(|(_, &s)| s).sum();
            if total <= WEIGHT_TOLERANCE {
                return Err(FitError::DegenerateWeights { class, total });
            }
        }
    } else {
        let total = w.sum();
        if total <= WEIGHT_TOLERANCE {
            return Err(FitError::DegenerateWeights { class: f64::NAN, total });
        }
    }
    Ok(())
}

/// Fits one weighted linear model with the default solver settings.
pub fn fit_weighted(
    kind: EstimatorKind,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    sample_weights: ArrayView1<f64>,
    regularization: f64,
) -> Result<LinearModel, FitError> {
    fit_weighted_with(kind, x, y, sample_weights, regularization, &SolverOptions::default(), None)
}

/// Like [`fit_weighted`], optionally starting Newton from a previous model.
/// The objective is strictly convex, so the start only changes the number of
/// iterations, not the optimum.
pub fn fit_weighted_with(
    kind: EstimatorKind,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    sample_weights: ArrayView1<f64>,
    regularization: f64,
    options: &SolverOptions,
    warm_start: Option<&LinearModel>,
) -> Result<LinearModel, FitError> {
    validate(kind, x, y, sample_weights, regularization)?;
    let d = x.ncols();
    let objective = WeightedObjective { kind, x, y, sample_weights, regularization };
    let mut theta = Array1::<f64>::zeros(d + 1);
    if let Some(start) = warm_start.filter(|m| m.weights.len() == d && m.kind == kind) {
        theta.slice_mut(ndarray::s![..d]).assign(&start.weights);
        theta[d] = start.intercept;
    }

    let (mut f, mut grad) = objective.value_and_gradient(theta.view());
    let mut iterations = 0;
    loop {
        let gnorm = grad.dot(&grad).sqrt();
        if gnorm <= options.tol {
            break;
        }
        if iterations == options.max_iter {
            return Err(FitError::NotConverged { iterations, gradient_norm: gnorm });
        }
        iterations += 1;

        let step = newton_direction(objective.hessian(theta.view()), &grad);
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        let noise = 1e-12 * f.abs().max(1.0);
        for _ in 0..60 {
            let candidate = &theta + &(t * &step);
            if candidate == theta {
                break;
            }
            let (fc, gc) = objective.value_and_gradient(candidate.view());
            // near the optimum the decrease drops below the rounding noise of
            // `f`; a smaller gradient is then the better progress signal
            let armijo = fc <= f + 1e-4 * t * slope;
            let flat = fc <= f + noise && gc.dot(&gc) < grad.dot(&grad);
            if armijo || flat {
                accepted = Some((candidate, fc, gc));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((next, fc, gc)) => {
                theta = next;
                f = fc;
                grad = gc;
            }
            // Stuck at the floating-point floor: accept when the Newton
            // decrement says nothing measurable is left to gain.
            None if -slope <= noise => break,
            None => return Err(FitError::NotConverged { iterations, gradient_norm: gnorm }),
        }
    }
    Ok(LinearModel {
        kind,
        weights: theta.slice(ndarray::s![..d]).to_owned(),
        intercept: theta[d],
        regularization,
    })
}

/// Solves `H p = -g`, adding a growing ridge when `H` is not numerically
/// positive definite (the smoothed hinge can have a flat intercept direction).
fn newton_direction(mut h: Array2<f64>, grad: &Array1<f64>) -> Array1<f64> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[[i, i]].abs()).fold(1.0, f64::max);
    let mut ridge = 0.0;
    loop {
        if let Some(l) = cholesky(h.view()) {
            return -cholesky_solve(&l, grad.view());
        }
        let bump = if ridge == 0.0 { 1e-10 * scale } else { ridge * 9.0 };
        for i in 0..n {
            h[[i, i]] += bump;
        }
        ridge += bump;
        if ridge > 1e6 * scale {
            // gradient descent as a last resort
            return -grad / scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn two_symmetric_points() {
        let x = array![[-1.0, 0.0], [1.0, 0.0]];
        let y = array![-1.0, 1.0];
        let w = Array1::ones(2);
        for kind in [EstimatorKind::Logistic, EstimatorKind::Hinge] {
            let m = fit_weighted(kind, x.view(), y.view(), w.view(), 1.0).unwrap();
            assert!(m.weights[0] > 0.0, "{kind:?}");
            assert!(m.intercept.abs() < 1e-8, "{kind:?} boundary should cross x = 0");
            assert!(m.weights[1].abs() < 1e-8);
        }
    }

    #[test]
    fn decision_function_examples() {
        let zero = LinearModel { kind: EstimatorKind::Logistic, weights: array![0.0, 0.0], intercept: 1.5, regularization: 1.0 };
        let x = array![[3.0, 9.0], [-2.0, 4.0]];
        assert_eq!(zero.decision_function(x.view()).unwrap(), array![1.5, 1.5]);
        let e1 = LinearModel { weights: array![1.0, 0.0], intercept: 0.0, ..zero.clone() };
        assert_eq!(e1.decision_function(x.view()).unwrap(), array![3.0, -2.0]);
        assert!(matches!(e1.decision_function(array![[1.0]].view()), Err(FitError::DimensionMismatch { .. })));
    }

    #[test]
    fn probability_links() {
        let m = LinearModel { kind: EstimatorKind::Logistic, weights: array![1.0], intercept: 0.0, regularization: 1.0 };
        let p = m.predict_proba(array![[0.0], [20.0], [-1.0], [1.0]].view()).unwrap();
        assert_eq!(p[0], 0.5);
        assert!(p[1] >= 1.0 - 1e-8);
        assert!(p[2] < p[0] && p[0] < p[3]);
        let hinge = LinearModel { kind: EstimatorKind::Hinge, ..m.clone() };
        let ph = hinge.predict_proba(array![[1.0]].view()).unwrap();
        assert!((ph[0] - sigmoid(2.0)).abs() < 1e-15);
        let reg = LinearModel { kind: EstimatorKind::Regression, ..m };
        assert_eq!(reg.predict_proba(array![[1.0]].view()), Err(FitError::Unsupported("predict_proba")));
    }

    #[test]
    fn zero_class_weight_is_degenerate() {
        let x = array![[0.0], [1.0], [2.0]];
        let y = array![-1.0, 1.0, 1.0];
        let w = array![0.0, 1.0, 1.0];
        let err = fit_weighted(EstimatorKind::Logistic, x.view(), y.view(), w.view(), 1.0).unwrap_err();
        assert!(matches!(err, FitError::DegenerateWeights { class, .. } if class == -1.0));
    }

    #[test]
    fn iteration_cap_reports_gradient() {
        let x = array![[0.0], [1.0], [3.0], [4.0]];
        let y = array![-1.0, -1.0, 1.0, 1.0];
        let w = Array1::ones(4);
        let opts = SolverOptions { tol: 1e-6, max_iter: 0 };
        let err = fit_weighted_with(EstimatorKind::Logistic, x.view(), y.view(), w.view(), 1.0, &opts, None).unwrap_err();
        assert!(matches!(err, FitError::NotConverged { iterations: 0, gradient_norm } if gradient_norm > 0.0));
    }

    #[test]
    fn ridge_matches_normal_equations() {
        // with one feature and intercept: minimize ½w² + C Σ ½ s (w x + b - y)²
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = array![1.0, 3.1, 4.9, 7.2];
        let s = array![1.0, 2.0, 1.0, 0.5];
        let c = 3.0;
        let m = fit_weighted(EstimatorKind::Regression, x.view(), y.view(), s.view(), c).unwrap();
        // stationarity: w + C Σ s r x = 0 and Σ s r = 0
        let r: Vec<f64> = (0..4).map(|i| m.weights[0] * x[[i, 0]] + m.intercept - y[i]).collect();
        let gw = m.weights[0] + c * (0..4).map(|i| s[i] * r[i] * x[[i, 0]]).sum::<f64>();
        let gb: f64 = (0..4).map(|i| s[i] * r[i]).sum();
        assert!(gw.abs() < 1e-9 && gb.abs() < 1e-9);
    }
}
