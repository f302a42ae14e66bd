//! Square-root linear algebra kernels.
//!
//! Everything here works on Cholesky-type factors: QR triangularization of
//! pre-arrays (only the R factor is ever formed), the block conditioning
//! factorization used by every predict/update/backward-kernel step, right
//! triangular solves, and the rank-one downdate used by the reference
//! residual route.

use crate::error::{Error, Result};
use crate::instrument::{bump, Kernel};
use crate::matrix::{norm2, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Lower,
    Upper,
}

/// A square triangular matrix with nonnegative diagonal, standing for a
/// Cholesky-type factor of a positive (semi)definite matrix.
///
/// A lower factor `L` represents `L L^*`; an upper factor `U` represents
/// `U^* U`. Entries on the wrong side of the diagonal are exactly zero.
#[derive(Clone, PartialEq, Debug)]
pub struct TriangularFactor<T> {
    data: Matrix<T>,
    orientation: Orientation,
}

impl<T: Real> TriangularFactor<T> {
    pub fn new(data: Matrix<T>, orientation: Orientation) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::InvalidFactor("factor must be square"));
        }
        let n = data.nrows();
        for i in 0..n {
            if !(data[(i, i)] >= T::zero()) {
                return Err(Error::InvalidFactor("negative or NaN diagonal entry"));
            }
            for j in 0..n {
                let wrong_side = match orientation {
                    Orientation::Lower => j > i,
                    Orientation::Upper => j < i,
                };
                if wrong_side && data[(i, j)] != T::zero() {
                    return Err(Error::InvalidFactor("nonzero entry on the wrong side of the diagonal"));
                }
            }
        }
        Ok(TriangularFactor { data, orientation })
    }

    pub(crate) fn new_unchecked(data: Matrix<T>, orientation: Orientation) -> Self {
        debug_assert!(data.is_square());
        TriangularFactor { data, orientation }
    }

    pub fn identity(n: usize) -> Self {
        Self::new_unchecked(Matrix::identity(n), Orientation::Lower)
    }

    /// Diagonal factor `diag(d)`; `d` must be nonnegative.
    pub fn from_diagonal(d: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(d), Orientation::Lower)
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "cholesky",
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d = d - l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self::new_unchecked(l, Orientation::Lower))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.data
    }

    /// Adjoint; flips the orientation and represents the same matrix.
    pub fn transpose(&self) -> Self {
        let orientation = match self.orientation {
            Orientation::Lower => Orientation::Upper,
            Orientation::Upper => Orientation::Lower,
        };
        Self::new_unchecked(self.data.transpose(), orientation)
    }

    pub fn to_lower(&self) -> Self {
        match self.orientation {
            Orientation::Lower => self.clone(),
            Orientation::Upper => self.transpose(),
        }
    }

    pub fn to_upper(&self) -> Self {
        match self.orientation {
            Orientation::Upper => self.clone(),
            Orientation::Lower => self.transpose(),
        }
    }

    pub fn lower_matrix(&self) -> Matrix<T> {
        self.to_lower().data
    }

    pub fn upper_matrix(&self) -> Matrix<T> {
        self.to_upper().data
    }

    /// The represented positive semidefinite matrix.
    pub fn covariance(&self) -> Matrix<T> {
        match self.orientation {
            Orientation::Lower => self.data.outer_gram(),
            Orientation::Upper => self.data.gram(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.is_finite()
    }

    pub fn cast<U: Real>(&self) -> TriangularFactor<U> {
        TriangularFactor::new_unchecked(self.data.cast(), self.orientation)
    }
}

/// Threshold under which a diagonal entry counts as zero: `16 ε max|entry|`.
fn zero_threshold<T: Real>(scale: T) -> T {
    T::of(16.0) * T::epsilon() * scale
}

/// Upper triangular `T` with `T^* T = M^* M` and nonnegative diagonal.
///
/// Householder reflections are applied to a copy of `M`; the orthogonal
/// factor is never formed. Wide inputs are padded with zero rows so the
/// result is always `ncols x ncols`.
pub fn triangularize<T: Real>(m: &Matrix<T>) -> TriangularFactor<T> {
    bump(Kernel::Triangularize);
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let steps = rows.min(cols);
    let mut v = vec![T::zero(); rows];

    for k in 0..steps {
        if k + 1 == rows {
            break;
        }
        let seg: Vec<T> = (k..rows).map(|i| a[(i, k)]).collect();
        let norm = norm2(&seg);
        if norm == T::zero() || !norm.is_finite() {
            continue;
        }
        let x0 = seg[0];
        let sign = if x0 >= T::zero() { T::one() } else { -T::one() };
        let alpha = -sign * norm;
        // Normalized reflector v / norm; v^* v = 2 (1 + |x0| / norm).
        for (vi, &si) in v[k..].iter_mut().zip(&seg) {
            *vi = si / norm;
        }
        v[k] = v[k] + sign;
        let beta = T::of(2.0) / v[k..].iter().fold(T::zero(), |s, &x| s + x * x);
        for j in k + 1..cols {
            let mut s = T::zero();
            for i in k..rows {
                s = s + v[i] * a[(i, j)];
            }
            let s = s * beta;
            for i in k..rows {
                a[(i, j)] = a[(i, j)] - s * v[i];
            }
        }
        a[(k, k)] = alpha;
        for i in k + 1..rows {
            a[(i, k)] = T::zero();
        }
    }

    let mut r = Matrix::zeros(cols, cols);
    for i in 0..steps {
        for j in i..cols {
            r[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..cols {
        if r[(i, i)] < T::zero() {
            for x in r.row_mut(i) {
                *x = -*x;
            }
        }
    }
    TriangularFactor::new_unchecked(r, Orientation::Upper)
}

/// Output of [`block_condition`], with `P = Ψ Π Ψ^* + Ω`,
/// `Γ = Π Ψ^* P^{-1}` and `Σ = Π - Γ P Γ^*`.
#[derive(Clone, Debug)]
pub struct ConditioningResult<T> {
    /// Upper factor `P^{*/2}` of the marginal covariance of `v`.
    pub marginal_factor: TriangularFactor<T>,
    /// Gain `Γ`, `dim(u) x dim(v)`.
    pub gain: Matrix<T>,
    /// Upper factor `Σ^{*/2}` of the conditional covariance of `u | v`.
    pub conditional_factor: TriangularFactor<T>,
    /// `Γ̄ = Γ P^{1/2}`, read straight off the triangularized pre-array.
    pub raw_gain: Matrix<T>,
}

/// Condition the linear Gaussian pair `u ~ N(ū, Π)`, `v | u ~ N(Ψ u, Ω)`
/// in square-root form.
///
/// Triangularizes `[[Ω^{*/2}, 0], [Π^{*/2} Ψ^*, Π^{*/2}]]` once and solves
/// once against `P^{1/2}` for the gain. Factors may be passed in either
/// orientation.
pub fn block_condition<T: Real>(
    prior_factor: &TriangularFactor<T>,
    map: &Matrix<T>,
    noise_factor: &TriangularFactor<T>,
) -> Result<ConditioningResult<T>> {
    let n = prior_factor.dim();
    let d = noise_factor.dim();
    if map.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "block_condition map columns",
            expected: n,
            found: map.ncols(),
        });
    }
    if map.nrows() != d {
        return Err(Error::DimensionMismatch {
            context: "block_condition map rows",
            expected: d,
            found: map.nrows(),
        });
    }

    let prior_upper = prior_factor.upper_matrix();
    let mut pre = Matrix::zeros(d + n, d + n);
    pre.set_block(0, 0, &noise_factor.upper_matrix());
    pre.set_block(d, 0, &prior_upper.mul_transpose(map));
    pre.set_block(d, d, &prior_upper);

    bump(Kernel::ConditioningQr);
    let r = triangularize(&pre).into_matrix();

    let marginal_upper = r.block(0, 0, d, d);
    let raw_gain = r.block(0, d, d, n).transpose();
    let conditional_upper = r.block(d, d, n, n);

    let tol = zero_threshold(pre.max_abs());
    if let Some(index) = (0..d).find(|&i| !(marginal_upper[(i, i)] > tol)) {
        return Err(Error::SingularMarginal { index });
    }

    bump(Kernel::GainSolve);
    let marginal_lower = marginal_upper.transpose();
    let gain = solve_right_lower(&raw_gain, &marginal_lower);

    Ok(ConditioningResult {
        marginal_factor: TriangularFactor::new_unchecked(marginal_upper, Orientation::Upper),
        gain,
        conditional_factor: TriangularFactor::new_unchecked(conditional_upper, Orientation::Upper),
        raw_gain,
    })
}

/// Solve `X F = B` for `X`, where `F` is the factor's matrix as stored
/// (lower: back substitution over columns, upper: forward substitution).
///
/// Fails with `SingularMarginal` when a diagonal entry of `F` is below
/// `16 ε max|F|`.
pub fn solve_right_triangular<T: Real>(b: &Matrix<T>, factor: &TriangularFactor<T>) -> Result<Matrix<T>> {
    let f = factor.matrix();
    if b.ncols() != f.nrows() {
        return Err(Error::DimensionMismatch {
            context: "solve_right_triangular",
            expected: f.nrows(),
            found: b.ncols(),
        });
    }
    if let Some(index) = singular_diagonal(f) {
        return Err(Error::SingularMarginal { index });
    }
    Ok(match factor.orientation() {
        Orientation::Lower => solve_right_lower(b, f),
        Orientation::Upper => solve_right_upper(b, f),
    })
}

/// Index of the first diagonal entry below the zero threshold.
pub(crate) fn singular_diagonal<T: Real>(f: &Matrix<T>) -> Option<usize> {
    let tol = zero_threshold(f.max_abs());
    (0..f.nrows()).find(|&i| !(f[(i, i)].abs() > tol))
}

fn solve_right_lower<T: Real>(b: &Matrix<T>, l: &Matrix<T>) -> Matrix<T> {
    bump(Kernel::TriangularSolve);
    let n = l.nrows();
    let mut x = Matrix::zeros(b.nrows(), n);
    for r in 0..b.nrows() {
        for j in (0..n).rev() {
            let mut s = b[(r, j)];
            for k in j + 1..n {
                s = s - x[(r, k)] * l[(k, j)];
            }
            x[(r, j)] = s / l[(j, j)];
        }
    }
    x
}

fn solve_right_upper<T: Real>(b: &Matrix<T>, u: &Matrix<T>) -> Matrix<T> {
    bump(Kernel::TriangularSolve);
    let n = u.nrows();
    let mut x = Matrix::zeros(b.nrows(), n);
    for r in 0..b.nrows() {
        for j in 0..n {
            let mut s = b[(r, j)];
            for k in 0..j {
                s = s - x[(r, k)] * u[(k, j)];
            }
            x[(r, j)] = s / u[(j, j)];
        }
    }
    x
}

/// Lower factor `L'` with `L' L'^* = L L^* - v v^*`.
///
/// Uses hyperbolic rotations pivot by pivot. When a pivot would need the
/// square root of a nonpositive number, or produces a non-finite entry, the
/// downdate fails with the pivot index.
pub fn rank_one_downdate<T: Real>(factor: &TriangularFactor<T>, v: &[T]) -> Result<TriangularFactor<T>> {
    bump(Kernel::Downdate);
    let n = factor.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            context: "rank_one_downdate",
            expected: n,
            found: v.len(),
        });
    }
    let mut l = factor.lower_matrix();
    let mut w = v.to_vec();
    for k in 0..n {
        let lkk = l[(k, k)];
        let wk = w[k];
        let r2 = (lkk - wk) * (lkk + wk);
        if !(r2 > T::zero()) || !r2.is_finite() {
            return Err(Error::DowndateFailure { pivot: k, column: None });
        }
        let r = r2.sqrt();
        let c = r / lkk;
        let s = wk / lkk;
        l[(k, k)] = r;
        for i in k + 1..n {
            let lik = (l[(i, k)] - s * w[i]) / c;
            l[(i, k)] = lik;
            w[i] = c * w[i] - s * lik;
            if !lik.is_finite() || !w[i].is_finite() {
                return Err(Error::DowndateFailure { pivot: k, column: None });
            }
        }
    }
    Ok(TriangularFactor::new_unchecked(l, Orientation::Lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) {
        let err = (a - b).frobenius_norm();
        assert!(err <= tol, "error {err} > {tol}\n{a:?}\n{b:?}");
    }

    #[test]
    fn triangularize_pythagorean_column() {
        let m = Matrix::<f64>::column_vector(&[3.0, 4.0]);
        let t = triangularize(&m);
        assert_eq!(t.dim(), 1);
        assert!((t.matrix()[(0, 0)] - 5.0).abs() < 1e-15);
    }

    #[test]
    fn triangularize_identity_is_identity() {
        let t = triangularize(&Matrix::<f64>::identity(2));
        assert_eq!(t.matrix(), &Matrix::identity(2));
        assert_eq!(t.orientation(), Orientation::Upper);
    }

    #[test]
    fn triangularize_wide_input_pads() {
        let m = Matrix::<f64>::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let t = triangularize(&m);
        assert_eq!(t.dim(), 3);
        assert_close(&t.covariance(), &m.gram(), 1e-14);
        assert!(TriangularFactor::new(t.matrix().clone(), Orientation::Upper).is_ok());
    }

    #[test]
    fn triangularize_nonnegative_diagonal() {
        let m = Matrix::<f64>::from_rows(&[vec![-1.0, 0.5], vec![0.0, -2.0], vec![0.3, 0.1]]);
        let t = triangularize(&m);
        assert!(t.matrix().diagonal().iter().all(|&d| d >= 0.0));
        assert_close(&t.covariance(), &m.gram(), 1e-14);
    }

    #[test]
    fn block_condition_scalar() {
        let one = TriangularFactor::<f64>::identity(1);
        let psi = Matrix::from_rows(&[vec![1.0]]);
        let res = block_condition(&one, &psi, &one).unwrap();
        assert!((res.marginal_factor.matrix()[(0, 0)] - 2f64.sqrt()).abs() < 1e-15);
        assert!((res.gain[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((res.conditional_factor.matrix()[(0, 0)] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn block_condition_zero_map() {
        let prior = TriangularFactor::cholesky(&Matrix::<f64>::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]])).unwrap();
        let noise = TriangularFactor::from_diagonal(&[0.7]).unwrap();
        let res = block_condition(&prior, &Matrix::zeros(1, 2), &noise).unwrap();
        assert_close(&res.marginal_factor.covariance(), &noise.covariance(), 1e-15);
        assert_close(&res.gain, &Matrix::zeros(2, 1), 0.0);
        assert_close(&res.conditional_factor.covariance(), &prior.covariance(), 1e-14);
    }

    #[test]
    fn block_condition_singular_marginal() {
        let prior = TriangularFactor::<f64>::identity(2);
        let noise = TriangularFactor::from_diagonal(&[0.0]).unwrap();
        let err = block_condition(&prior, &Matrix::zeros(1, 2), &noise).unwrap_err();
        assert_eq!(err, Error::SingularMarginal { index: 0 });
    }

    #[test]
    fn block_condition_rejects_bad_dims() {
        let prior = TriangularFactor::<f64>::identity(2);
        let noise = TriangularFactor::identity(1);
        assert!(matches!(
            block_condition(&prior, &Matrix::zeros(1, 3), &noise),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_self_and_diagonal() {
        let l = TriangularFactor::cholesky(&Matrix::<f64>::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ]))
        .unwrap();
        let x = solve_right_triangular(l.matrix(), &l).unwrap();
        assert_close(&x, &Matrix::identity(3), 1e-15);

        let d = TriangularFactor::from_diagonal(&[2.0, 4.0]).unwrap();
        let x = solve_right_triangular(&Matrix::from_rows(&[vec![2.0, 4.0]]), &d).unwrap();
        assert_eq!(x.row(0), &[1.0, 1.0]);

        let u = l.to_upper();
        let b = Matrix::from_rows(&[vec![1.0, -2.0, 0.5]]);
        let x = solve_right_triangular(&b, &u).unwrap();
        assert_close(&x.matmul(u.matrix()), &b, 1e-15);
    }

    #[test]
    fn solve_zero_diagonal_is_singular() {
        let d = TriangularFactor::from_diagonal(&[1.0, 0.0]).unwrap();
        let err = solve_right_triangular(&Matrix::<f64>::zeros(1, 2), &d).unwrap_err();
        assert_eq!(err, Error::SingularMarginal { index: 1 });
    }

    #[test]
    fn downdate_examples() {
        let l = TriangularFactor::<f64>::identity(2);
        let out = rank_one_downdate(&l, &[0.6, 0.0]).unwrap();
        assert_close(out.matrix(), &Matrix::from_diagonal(&[0.8, 1.0]), 1e-15);

        let err = rank_one_downdate(&l, &[1.5, 0.0]).unwrap_err();
        assert_eq!(err, Error::DowndateFailure { pivot: 0, column: None });
    }

    #[test]
    fn factor_validation() {
        let bad = Matrix::<f64>::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        assert!(TriangularFactor::new(bad.clone(), Orientation::Lower).is_err());
        assert!(TriangularFactor::new(bad, Orientation::Upper).is_ok());
        let neg = Matrix::<f64>::from_diagonal(&[1.0, -1.0]);
        assert!(TriangularFactor::new(neg, Orientation::Lower).is_err());
        assert!(TriangularFactor::<f64>::cholesky(&Matrix::from_diagonal(&[1.0, -1.0])).is_err());
    }
}
