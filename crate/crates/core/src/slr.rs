//! Statistical linear regression in square-root form.
//!
//! Given a Gaussian `N(ū, Π)` in square-root form, a cubature rule and a
//! conditional mean `a(u)`, compute the affine approximation
//! `a(u) ≈ Ψ̄ u + b̄` and a Cholesky factor of the residual covariance
//! `Ω̄ = Ω + E W E^*`, with `E = ΔA - Ψ̄ ΔU`.
//!
//! Two routes produce the residual factor: [`residual_factor_qr`] stacks
//! `E W^{1/2}` next to the noise factor and triangularizes (updates only),
//! while [`residual_factor_downdate`] first factors `Ω + ΔA W ΔA^*` and then
//! downdates by the columns of `Ψ̄ Π^{1/2}`.

use std::fmt;

use crate::cubature::{transform, CubatureRule, TransformedNodes};
use crate::error::{Error, Result};
use crate::linalg::{rank_one_downdate, singular_diagonal, solve_right_triangular, triangularize, TriangularFactor};
use crate::matrix::{vec_sub, Matrix};
use crate::scalar::Real;

pub type FactorFn<T> = Box<dyn Fn(&[T]) -> Result<TriangularFactor<T>> + Send + Sync>;

/// Additive Gaussian noise of a conditional density, given by a Cholesky
/// factor that is either fixed or a function of the conditioning state.
pub enum NoiseModel<T> {
    Constant(TriangularFactor<T>),
    StateDependent(FactorFn<T>),
}

impl<T: Real> NoiseModel<T> {
    pub fn constant(factor: TriangularFactor<T>) -> Self {
        NoiseModel::Constant(factor.to_lower())
    }

    pub fn state_dependent(f: impl Fn(&[T]) -> Result<TriangularFactor<T>> + Send + Sync + 'static) -> Self {
        NoiseModel::StateDependent(Box::new(f))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, NoiseModel::Constant(_))
    }

    /// Lower factor `Ω^{1/2}(u)`.
    pub fn factor_at(&self, u: &[T]) -> Result<TriangularFactor<T>> {
        match self {
            NoiseModel::Constant(f) => Ok(f.clone()),
            NoiseModel::StateDependent(f) => f(u).map(|f| f.to_lower()),
        }
    }
}

impl<T> fmt::Debug for NoiseModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Constant(_) => f.write_str("NoiseModel::Constant"),
            NoiseModel::StateDependent(_) => f.write_str("NoiseModel::StateDependent"),
        }
    }
}

/// Which residual factorization to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResidualRoute {
    /// Downdate-free: triangularize `(Ω^{1/2} | E W^{1/2})^*`.
    Qr,
    /// Update with `ΔA W^{1/2}`, then downdate by `Ψ̄ Π^{1/2}` column by column.
    Downdate,
}

/// Regression moments before the residual factor is formed.
#[derive(Clone, Debug)]
pub struct SlrMoments<T> {
    /// `ā = A w`.
    pub mean: Vec<T>,
    /// `Ψ̄`, solving `Ψ̄ Π = ΔA W ΔU^*`.
    pub slope: Matrix<T>,
    /// `b̄ = ā - Ψ̄ ū`.
    pub offset: Vec<T>,
    /// `ΔA`, columns `a(u_i) - ā`.
    pub centered_images: Matrix<T>,
    /// `E = ΔA - Ψ̄ ΔU`.
    pub residual_nodes: Matrix<T>,
}

/// Affine approximation `a(u) ≈ Ψ̄ u + b̄` with residual covariance factor.
#[derive(Clone, Debug)]
pub struct AffineApprox<T> {
    pub slope: Matrix<T>,
    pub offset: Vec<T>,
    pub mean: Vec<T>,
    /// Lower factor `Ω̄^{1/2}`.
    pub residual_factor: TriangularFactor<T>,
    pub centered_images: Matrix<T>,
    pub residual_nodes: Matrix<T>,
}

pub fn slr_moments<T: Real, F>(
    nodes: &TransformedNodes<T>,
    f: F,
    prior_factor: &TriangularFactor<T>,
) -> Result<SlrMoments<T>>
where
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let n = nodes.mean.len();
    if prior_factor.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "slr prior factor",
            expected: n,
            found: prior_factor.dim(),
        });
    }
    if let Some(index) = singular_diagonal(prior_factor.matrix()) {
        return Err(Error::SingularPrior { index });
    }

    let p = nodes.len();
    let mut images = Vec::with_capacity(p);
    for i in 0..p {
        let a = f(&nodes.node(i))?;
        if let Some(first) = images.first().map(Vec::len) {
            if a.len() != first {
                return Err(Error::DimensionMismatch {
                    context: "slr function image",
                    expected: first,
                    found: a.len(),
                });
            }
        }
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteImage { node: i });
        }
        images.push(a);
    }
    let images = Matrix::from_columns(&images);

    let mean = images.mul_vec(&nodes.weights);
    let centered_images = Matrix::from_fn(images.nrows(), p, |i, j| images[(i, j)] - mean[i]);

    // Ψ̄ Π^{1/2} Π^{*/2} = ΔA W ΔU^*: one solve per triangle, no explicit inverse.
    let cross = centered_images
        .scale_columns(&nodes.weights)
        .mul_transpose(&nodes.centered);
    let lower = prior_factor.to_lower();
    let half = solve_right_triangular(&cross, &lower.transpose()).map_err(as_prior_error)?;
    let slope = solve_right_triangular(&half, &lower).map_err(as_prior_error)?;

    let offset = vec_sub(&mean, &slope.mul_vec(&nodes.mean));
    let residual_nodes = &centered_images - &slope.matmul(&nodes.centered);

    Ok(SlrMoments {
        mean,
        slope,
        offset,
        centered_images,
        residual_nodes,
    })
}

fn as_prior_error(e: Error) -> Error {
    match e {
        Error::SingularMarginal { index } => Error::SingularPrior { index },
        e => e,
    }
}

/// Rows `(√w_i Ω^{1/2}(u_i))^*` for every node, or the single constant
/// `Ω^{*/2}` block.
fn noise_blocks<T: Real>(noise: &NoiseModel<T>, nodes: &TransformedNodes<T>, d: usize) -> Result<Vec<Matrix<T>>> {
    let check = |f: &TriangularFactor<T>, node: usize| -> Result<()> {
        if f.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "noise factor",
                expected: d,
                found: f.dim(),
            });
        }
        if !f.is_finite() {
            return Err(Error::NonFiniteImage { node });
        }
        Ok(())
    };
    match noise {
        NoiseModel::Constant(f) => {
            check(f, 0)?;
            Ok(vec![f.upper_matrix()])
        }
        NoiseModel::StateDependent(_) => (0..nodes.len())
            .map(|i| {
                let f = noise.factor_at(&nodes.node(i))?;
                check(&f, i)?;
                Ok(f.upper_matrix().scale(nodes.weight_sqrt[i]))
            })
            .collect(),
    }
}

/// Stack `(deviations W^{1/2})^*` with the noise blocks and triangularize.
fn stacked_factor<T: Real>(
    deviations: &Matrix<T>,
    noise: &NoiseModel<T>,
    nodes: &TransformedNodes<T>,
) -> Result<TriangularFactor<T>> {
    if deviations.ncols() != nodes.len() {
        return Err(Error::DimensionMismatch {
            context: "residual columns vs nodes",
            expected: nodes.len(),
            found: deviations.ncols(),
        });
    }
    if nodes.weights.iter().any(|&w| w < T::zero()) {
        return Err(Error::InvalidParameter("negative cubature weight".into()));
    }
    let d = deviations.nrows();
    let mut blocks = noise_blocks(noise, nodes, d)?;
    blocks.push(deviations.scale_columns(&nodes.weight_sqrt).transpose());
    let refs: Vec<&Matrix<T>> = blocks.iter().collect();
    Ok(triangularize(&Matrix::vstack(&refs)).to_lower())
}

/// Lower factor of `Ω̄ = Σ w_i Ω(u_i) + E W E^*` (or `Ω + E W E^*` for
/// constant noise) by a single triangularization; no Gram matrix is ever
/// subtracted.
pub fn residual_factor_qr<T: Real>(
    residual_nodes: &Matrix<T>,
    noise: &NoiseModel<T>,
    nodes: &TransformedNodes<T>,
) -> Result<TriangularFactor<T>> {
    stacked_factor(residual_nodes, noise, nodes)
}

/// Reference route: factor `Ω + ΔA W ΔA^*`, then downdate by each column of
/// `Ψ̄ Π^{1/2}`, left to right.
///
/// A failing downdate reports the pivot and the downdate column.
pub fn residual_factor_downdate<T: Real>(
    centered_images: &Matrix<T>,
    slope: &Matrix<T>,
    prior_factor: &TriangularFactor<T>,
    noise: &NoiseModel<T>,
    nodes: &TransformedNodes<T>,
) -> Result<TriangularFactor<T>> {
    let mut factor = stacked_factor(centered_images, noise, nodes)?;
    let downdates = slope.matmul(&prior_factor.lower_matrix());
    for j in 0..downdates.ncols() {
        factor = rank_one_downdate(&factor, &downdates.column(j)).map_err(|e| match e {
            Error::DowndateFailure { pivot, .. } => Error::DowndateFailure { pivot, column: Some(j) },
            e => e,
        })?;
    }
    Ok(factor)
}

/// Full regression of `f` about `N(mean, factor factor^*)`.
pub fn linearize<T: Real, F>(
    mean: &[T],
    factor: &TriangularFactor<T>,
    rule: &CubatureRule<T>,
    f: F,
    noise: &NoiseModel<T>,
    route: ResidualRoute,
) -> Result<AffineApprox<T>>
where
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let nodes = transform(rule, mean, factor)?;
    let m = slr_moments(&nodes, f, factor)?;
    let residual_factor = match route {
        ResidualRoute::Qr => residual_factor_qr(&m.residual_nodes, noise, &nodes)?,
        ResidualRoute::Downdate => residual_factor_downdate(&m.centered_images, &m.slope, factor, noise, &nodes)?,
    };
    Ok(AffineApprox {
        slope: m.slope,
        offset: m.offset,
        mean: m.mean,
        residual_factor,
        centered_images: m.centered_images,
        residual_nodes: m.residual_nodes,
    })
}
