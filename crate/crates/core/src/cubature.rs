//! Cubature rules for the standard Gaussian and their transformation to
//! arbitrary Gaussians in square-root form.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::TriangularFactor;
use crate::matrix::Matrix;
use crate::quadrature::gauss_hermite_1d;
use crate::scalar::Real;

/// Default cap on the number of tensor-product Gauss-Hermite nodes.
pub const DEFAULT_NODE_CAP: usize = 1 << 20;

/// Weights `w` and standard-normal nodes `Z` (one node per column).
#[derive(Clone, Debug, PartialEq)]
pub struct CubatureRule<T> {
    weights: Vec<T>,
    nodes: Matrix<T>,
    degree2_exact: bool,
    all_weights_positive: bool,
}

/// Why a rule fails the requirements of the square-root regression
/// (degree-2 exactness and strictly positive weights).
#[derive(Debug, Clone, PartialEq)]
pub enum AssumptionViolation {
    /// First or second standard moment not reproduced: `Z w != 0` or
    /// `Z diag(w) Z^* != I` (largest absolute deviations).
    NotDegreeTwoExact {
        mean_error: f64,
        covariance_error: f64,
    },
    NonPositiveWeight {
        index: usize,
        weight: f64,
    },
}

impl fmt::Display for AssumptionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionViolation::NotDegreeTwoExact {
                mean_error,
                covariance_error,
            } => write!(
                f,
                "not exact to polynomial degree 2 (mean moment error {mean_error:e}, covariance moment error {covariance_error:e})"
            ),
            AssumptionViolation::NonPositiveWeight { index, weight } => {
                write!(f, "weight {index} is not positive ({weight})")
            }
        }
    }
}

/// Deviations `(|Z w|_max, |Z W Z^* - I|_max, |Σw - 1|)`.
fn moment_errors<T: Real>(weights: &[T], nodes: &Matrix<T>) -> (T, T, T) {
    let n = nodes.nrows();
    let mean = nodes.mul_vec(weights);
    let mean_err = mean.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let cov = nodes.scale_columns(weights).mul_transpose(nodes);
    let cov_err = (&cov - &Matrix::identity(n)).max_abs();
    let sum_err = (weights.iter().copied().sum::<T>() - T::one()).abs();
    (mean_err, cov_err, sum_err)
}

fn exactness_tolerance<T: Real>(n: usize) -> T {
    T::of(64.0) * T::epsilon() * T::of(n.max(1) as f64)
}

impl<T: Real> CubatureRule<T> {
    /// Build a rule from explicit weights and nodes (`n x p`, one node per
    /// column). The exactness and positivity flags are computed numerically.
    pub fn new(weights: Vec<T>, nodes: Matrix<T>) -> Result<Self> {
        if weights.len() != nodes.ncols() {
            return Err(Error::DimensionMismatch {
                context: "cubature weights vs nodes",
                expected: nodes.ncols(),
                found: weights.len(),
            });
        }
        if weights.is_empty() || nodes.nrows() == 0 {
            return Err(Error::InvalidParameter("empty cubature rule".into()));
        }
        let (mean_err, cov_err, _) = moment_errors(&weights, &nodes);
        let tol = exactness_tolerance::<T>(nodes.nrows());
        let degree2_exact = mean_err <= tol && cov_err <= tol;
        let all_weights_positive = weights.iter().all(|&w| w > T::zero());
        Ok(CubatureRule {
            weights,
            nodes,
            degree2_exact,
            all_weights_positive,
        })
    }

    pub fn dim(&self) -> usize {
        self.nodes.nrows()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn nodes(&self) -> &Matrix<T> {
        &self.nodes
    }

    pub fn degree2_exact(&self) -> bool {
        self.degree2_exact
    }

    pub fn all_weights_positive(&self) -> bool {
        self.all_weights_positive
    }

    pub fn cast<U: Real>(&self) -> Result<CubatureRule<U>> {
        CubatureRule::new(self.weights.iter().map(|w| w.cast()).collect(), self.nodes.cast())
    }
}

/// Third-degree spherical-radial rule: `2n` nodes `±√n e_i` with weights
/// `1/(2n)`, positives first.
pub fn spherical_radial<T: Real>(n: usize) -> Result<CubatureRule<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let r = T::of(n as f64).sqrt();
    let nodes = Matrix::from_fn(n, 2 * n, |i, j| {
        if j == i {
            r
        } else if j == i + n {
            -r
        } else {
            T::zero()
        }
    });
    let w = T::one() / T::of(2.0 * n as f64);
    CubatureRule::new(vec![w; 2 * n], nodes)
}

/// Tensor product of `order`-point probabilists' Gauss-Hermite rules,
/// capped at [`DEFAULT_NODE_CAP`] nodes.
pub fn gauss_hermite<T: Real>(n: usize, order: usize) -> Result<CubatureRule<T>> {
    gauss_hermite_capped(n, order, DEFAULT_NODE_CAP)
}

pub fn gauss_hermite_capped<T: Real>(n: usize, order: usize, cap: usize) -> Result<CubatureRule<T>> {
    if n == 0 || order == 0 {
        return Err(Error::InvalidParameter("dimension and order must be at least 1".into()));
    }
    let p = u32::try_from(n)
        .ok()
        .and_then(|e| order.checked_pow(e))
        .unwrap_or(usize::MAX);
    if p > cap {
        return Err(Error::RuleTooLarge { nodes: p, cap });
    }

    let (x, w) = gauss_hermite_1d(order);
    let mut weights = Vec::with_capacity(p);
    let mut nodes = Matrix::zeros(n, p);
    // Column j enumerates the multi-index of j in base `order`, first axis fastest.
    for j in 0..p {
        let mut rest = j;
        let mut wj = 1.0;
        for i in 0..n {
            let k = rest % order;
            rest /= order;
            nodes[(i, j)] = T::of(x[k]);
            wj *= w[k];
        }
        weights.push(T::of(wj));
    }
    CubatureRule::new(weights, nodes)
}

/// Unscented rule with spread `κ`: center node weight `κ/(n+κ)`, nodes
/// `±√(n+κ) e_i` with weights `1/(2(n+κ))`.
///
/// Always degree-2 exact; the center weight is zero or negative for
/// `κ <= 0`, which [`check_assumption`] rejects. Fails only if `n + κ <= 0`.
pub fn unscented<T: Real>(n: usize, kappa: T) -> Result<CubatureRule<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let spread = T::of(n as f64) + kappa;
    if !(spread > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "n + kappa must be positive, got {spread}"
        )));
    }
    let r = spread.sqrt();
    let nodes = Matrix::from_fn(n, 2 * n + 1, |i, j| {
        if j == i + 1 {
            r
        } else if j == i + 1 + n {
            -r
        } else {
            T::zero()
        }
    });
    let mut weights = vec![T::one() / (T::of(2.0) * spread); 2 * n + 1];
    weights[0] = kappa / spread;
    CubatureRule::new(weights, nodes)
}

/// Pass iff the rule reproduces the first two standard moments and every
/// weight is strictly positive.
pub fn check_assumption<T: Real>(rule: &CubatureRule<T>) -> Result<(), AssumptionViolation> {
    let (mean_err, cov_err, _) = moment_errors(&rule.weights, &rule.nodes);
    let tol = exactness_tolerance::<T>(rule.dim());
    if !(mean_err <= tol && cov_err <= tol) {
        return Err(AssumptionViolation::NotDegreeTwoExact {
            mean_error: mean_err.to_f64_exact(),
            covariance_error: cov_err.to_f64_exact(),
        });
    }
    if let Some((index, &w)) = rule.weights.iter().enumerate().find(|(_, &w)| !(w > T::zero())) {
        return Err(AssumptionViolation::NonPositiveWeight {
            index,
            weight: w.to_f64_exact(),
        });
    }
    Ok(())
}

/// A rule mapped onto `N(ū, Π)` through a lower factor of `Π`.
#[derive(Clone, Debug)]
pub struct TransformedNodes<T> {
    /// `ū`.
    pub mean: Vec<T>,
    /// `ΔU`, columns `Π^{1/2} z_i`.
    pub centered: Matrix<T>,
    /// `U`, columns `ū + Δu_i`.
    pub nodes: Matrix<T>,
    pub weights: Vec<T>,
    /// Diagonal of `W^{1/2}`.
    pub weight_sqrt: Vec<T>,
}

impl<T: Real> TransformedNodes<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> Vec<T> {
        self.nodes.column(i)
    }
}

pub fn transform<T: Real>(
    rule: &CubatureRule<T>,
    mean: &[T],
    factor: &TriangularFactor<T>,
) -> Result<TransformedNodes<T>> {
    let n = rule.dim();
    if mean.len() != n {
        return Err(Error::DimensionMismatch {
            context: "transform mean",
            expected: n,
            found: mean.len(),
        });
    }
    if factor.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "transform factor",
            expected: n,
            found: factor.dim(),
        });
    }
    if let Some((index, &w)) = rule.weights.iter().enumerate().find(|(_, &w)| w < T::zero()) {
        return Err(Error::AssumptionViolated(AssumptionViolation::NonPositiveWeight {
            index,
            weight: w.to_f64_exact(),
        }));
    }
    let centered = factor.lower_matrix().matmul(&rule.nodes);
    let nodes = Matrix::from_fn(n, rule.len(), |i, j| mean[i] + centered[(i, j)]);
    Ok(TransformedNodes {
        mean: mean.to_vec(),
        centered,
        nodes,
        weights: rule.weights.clone(),
        weight_sqrt: rule.weights.iter().map(|w| w.sqrt()).collect(),
    })
}
