//! Square-root Gaussian filters and smoothers linearized by statistical
//! linear regression.
//!
//! Every prediction and update is one regression followed by one
//! [`block_condition`]: the prediction conditions `x_{m-1}` on `x_m` (giving
//! the predictive factor and the backward kernel), the update conditions
//! `x_m` on `y_m`. Smoothing runs the backward kernels in reverse with
//! stacked triangularizations only.

use std::fmt;

use crate::cubature::{check_assumption, CubatureRule};
use crate::error::{Error, Result};
use crate::linalg::{block_condition, triangularize, TriangularFactor};
use crate::matrix::{cast_vec, vec_add, vec_sub, Matrix};
use crate::scalar::Real;
use crate::slr::{linearize, NoiseModel, ResidualRoute};

/// Gaussian with mean and lower Cholesky factor of the covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSqrt<T> {
    pub mean: Vec<T>,
    pub cov_factor: TriangularFactor<T>,
}

impl<T: Real> GaussianSqrt<T> {
    pub fn new(mean: Vec<T>, cov_factor: TriangularFactor<T>) -> Result<Self> {
        if mean.len() != cov_factor.dim() {
            return Err(Error::DimensionMismatch {
                context: "gaussian mean vs factor",
                expected: cov_factor.dim(),
                found: mean.len(),
            });
        }
        Ok(GaussianSqrt {
            mean,
            cov_factor: cov_factor.to_lower(),
        })
    }

    pub fn from_covariance(mean: Vec<T>, cov: &Matrix<T>) -> Result<Self> {
        Self::new(mean, TriangularFactor::cholesky(cov)?)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> Matrix<T> {
        self.cov_factor.covariance()
    }

    pub fn cast<U: Real>(&self) -> GaussianSqrt<U> {
        GaussianSqrt {
            mean: cast_vec(&self.mean),
            cov_factor: self.cov_factor.cast(),
        }
    }
}

/// Parameters of `x_m | x_{m+1}, y_{1:m} ~ N(Γ x_{m+1} + offset, B B^*)`.
#[derive(Clone, Debug)]
pub struct BackwardKernel<T> {
    pub gain: Matrix<T>,
    pub offset: Vec<T>,
    /// Lower factor `B`.
    pub cov_factor: TriangularFactor<T>,
}

pub type MeanFn<T> = Box<dyn Fn(&[T]) -> Result<Vec<T>> + Send + Sync>;

/// Observation mean evaluated as `c(x, y)`: the observed value is passed so
/// that periodic components (bearings) can be placed on the branch nearest
/// to the measurement.
pub type AnchoredMeanFn<T> = Box<dyn Fn(&[T], &[T]) -> Result<Vec<T>> + Send + Sync>;

/// `x_m | x_{m-1} ~ N(f(x_{m-1}), Q(x_{m-1}))`, `y_m | x_m ~ N(c(x_m), R(x_m))`.
pub struct StateSpaceModel<T> {
    state_dim: usize,
    obs_dim: usize,
    transition_mean: MeanFn<T>,
    transition_noise: NoiseModel<T>,
    observation_mean: AnchoredMeanFn<T>,
    observation_noise: NoiseModel<T>,
}

impl<T: Real> StateSpaceModel<T> {
    pub fn new(
        state_dim: usize,
        obs_dim: usize,
        transition_mean: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
        transition_noise: NoiseModel<T>,
        observation_mean: impl Fn(&[T]) -> Result<Vec<T>> + Send + Sync + 'static,
        observation_noise: NoiseModel<T>,
    ) -> Self {
        StateSpaceModel {
            state_dim,
            obs_dim,
            transition_mean: Box::new(transition_mean),
            transition_noise,
            observation_mean: Box::new(move |x, _| observation_mean(x)),
            observation_noise,
        }
    }

    /// Replace the observation mean by one that also sees the measurement.
    pub fn with_anchored_observation(
        mut self,
        observation_mean: impl Fn(&[T], &[T]) -> Result<Vec<T>> + Send + Sync + 'static,
    ) -> Self {
        self.observation_mean = Box::new(observation_mean);
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn transition_mean(&self, x: &[T]) -> Result<Vec<T>> {
        (self.transition_mean)(x)
    }

    pub fn observation_mean(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        (self.observation_mean)(x, y)
    }

    pub fn transition_noise(&self) -> &NoiseModel<T> {
        &self.transition_noise
    }

    pub fn observation_noise(&self) -> &NoiseModel<T> {
        &self.observation_noise
    }
}

impl<T> fmt::Debug for StateSpaceModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSpaceModel")
            .field("state_dim", &self.state_dim)
            .field("obs_dim", &self.obs_dim)
            .field("transition_noise", &self.transition_noise)
            .field("observation_noise", &self.observation_noise)
            .finish_non_exhaustive()
    }
}

/// Filter output on the time grid `0..T`.
#[derive(Clone, Debug)]
pub struct FilterOutput<T> {
    pub filtered: Vec<GaussianSqrt<T>>,
    /// `predicted[0]` is the initial distribution.
    pub predicted: Vec<GaussianSqrt<T>>,
    /// `kernels[m]` maps `x_{m+1}` back to `x_m`.
    pub kernels: Vec<BackwardKernel<T>>,
}

/// SLR filter/smoother for one model, rule and residual route.
pub struct Estimator<'m, T> {
    model: &'m StateSpaceModel<T>,
    rule: CubatureRule<T>,
    route: ResidualRoute,
}

impl<'m, T: Real> Estimator<'m, T> {
    /// Fails if the rule is not degree-2 exact with positive weights, or
    /// does not match the state dimension.
    pub fn new(model: &'m StateSpaceModel<T>, rule: CubatureRule<T>, route: ResidualRoute) -> Result<Self> {
        check_assumption(&rule).map_err(Error::AssumptionViolated)?;
        if rule.dim() != model.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "cubature rule dimension",
                expected: model.state_dim(),
                found: rule.dim(),
            });
        }
        Ok(Estimator { model, rule, route })
    }

    pub fn route(&self) -> ResidualRoute {
        self.route
    }

    pub fn rule(&self) -> &CubatureRule<T> {
        &self.rule
    }

    fn check_state(&self, g: &GaussianSqrt<T>) -> Result<()> {
        if g.dim() != self.model.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "state dimension",
                expected: self.model.state_dim(),
                found: g.dim(),
            });
        }
        Ok(())
    }

    /// Time update. The transition is regressed about `linearization_point`
    /// (default: `posterior`); one block conditioning then yields the
    /// predictive factor together with the backward kernel.
    pub fn predict(
        &self,
        posterior: &GaussianSqrt<T>,
        linearization_point: Option<&GaussianSqrt<T>>,
    ) -> Result<(GaussianSqrt<T>, BackwardKernel<T>)> {
        self.check_state(posterior)?;
        let lin = linearization_point.unwrap_or(posterior);
        self.check_state(lin)?;
        let approx = linearize(
            &lin.mean,
            &lin.cov_factor,
            &self.rule,
            |x| self.model.transition_mean(x),
            self.model.transition_noise(),
            self.route,
        )?;
        let cond = block_condition(&posterior.cov_factor, &approx.slope, &approx.residual_factor)?;

        let mean = vec_add(&approx.slope.mul_vec(&posterior.mean), &approx.offset);
        let offset = vec_sub(&posterior.mean, &cond.gain.mul_vec(&mean));
        let kernel = BackwardKernel {
            gain: cond.gain,
            offset,
            cov_factor: cond.conditional_factor.to_lower(),
        };
        let predicted = GaussianSqrt {
            mean,
            cov_factor: cond.marginal_factor.to_lower(),
        };
        Ok((predicted, kernel))
    }

    /// Measurement update; returns the filtered density and the lower
    /// factor of the innovation covariance.
    pub fn update(
        &self,
        predicted: &GaussianSqrt<T>,
        observation: &[T],
        linearization_point: Option<&GaussianSqrt<T>>,
    ) -> Result<(GaussianSqrt<T>, TriangularFactor<T>)> {
        self.check_state(predicted)?;
        if observation.len() != self.model.obs_dim() {
            return Err(Error::DimensionMismatch {
                context: "observation dimension",
                expected: self.model.obs_dim(),
                found: observation.len(),
            });
        }
        if !observation.iter().all(|y| y.is_finite()) {
            return Err(Error::InvalidParameter("non-finite observation".into()));
        }
        let lin = linearization_point.unwrap_or(predicted);
        self.check_state(lin)?;
        let approx = linearize(
            &lin.mean,
            &lin.cov_factor,
            &self.rule,
            |x| self.model.observation_mean(x, observation),
            self.model.observation_noise(),
            self.route,
        )?;
        let cond = block_condition(&predicted.cov_factor, &approx.slope, &approx.residual_factor)?;

        let expected = vec_add(&approx.slope.mul_vec(&predicted.mean), &approx.offset);
        let innovation = vec_sub(observation, &expected);
        let mean = vec_add(&predicted.mean, &cond.gain.mul_vec(&innovation));
        let filtered = GaussianSqrt {
            mean,
            cov_factor: cond.conditional_factor.to_lower(),
        };
        Ok((filtered, cond.marginal_factor.to_lower()))
    }

    /// Filter on the grid `0..observations.len()`. `observations[m]` is the
    /// measurement at time `m` (or `None`); `init` is the distribution of
    /// `x_0` before any measurement. With a linearization trajectory, the
    /// prediction into `m` is regressed about entry `m - 1` and the update
    /// at `m` about entry `m`.
    pub fn filter_timeline(
        &self,
        init: &GaussianSqrt<T>,
        observations: &[Option<Vec<T>>],
        linearization: Option<&[GaussianSqrt<T>]>,
    ) -> Result<FilterOutput<T>> {
        let len = observations.len();
        if len == 0 {
            return Err(Error::InvalidParameter("empty observation sequence".into()));
        }
        if let Some(traj) = linearization {
            if traj.len() != len {
                return Err(Error::DimensionMismatch {
                    context: "linearization trajectory length",
                    expected: len,
                    found: traj.len(),
                });
            }
        }
        let lin_at = |m: usize| linearization.map(|t| &t[m]);

        let mut filtered = Vec::with_capacity(len);
        let mut predicted = Vec::with_capacity(len);
        let mut kernels = Vec::with_capacity(len.saturating_sub(1));
        for (m, y) in observations.iter().enumerate() {
            let prior = if m == 0 {
                init.clone()
            } else {
                let (pred, kernel) = self
                    .predict(&filtered[m - 1], lin_at(m - 1))
                    .map_err(|e| e.at_step(m))?;
                kernels.push(kernel);
                pred
            };
            let post = match y {
                Some(y) => self.update(&prior, y, lin_at(m)).map_err(|e| e.at_step(m))?.0,
                None => prior.clone(),
            };
            predicted.push(prior);
            filtered.push(post);
        }
        Ok(FilterOutput {
            filtered,
            predicted,
            kernels,
        })
    }

    /// Predict/update for `m = 1..=n` with `observations[m - 1]` observed at
    /// time `m`; `init` is the filtering density at time 0.
    pub fn filter_pass(
        &self,
        init: &GaussianSqrt<T>,
        observations: &[Vec<T>],
        linearization: Option<&[GaussianSqrt<T>]>,
    ) -> Result<FilterOutput<T>> {
        if observations.is_empty() {
            return Err(Error::InvalidParameter("empty observation sequence".into()));
        }
        let timeline: Vec<Option<Vec<T>>> = std::iter::once(None)
            .chain(observations.iter().cloned().map(Some))
            .collect();
        self.filter_timeline(init, &timeline, linearization)
    }

    /// Iterated posterior linearization smoother over the grid
    /// `0..observations.len()` (see [`Estimator::filter_timeline`]).
    ///
    /// Pass 1 regresses about the running predictive/filtering densities;
    /// every later pass regresses about the previous pass's smoothed
    /// marginals. Exactly `iterations` passes are run.
    pub fn ipls(
        &self,
        init: &GaussianSqrt<T>,
        observations: &[Option<Vec<T>>],
        iterations: usize,
    ) -> Result<Vec<GaussianSqrt<T>>> {
        if iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        let mut smoothed: Option<Vec<GaussianSqrt<T>>> = None;
        for iteration in 1..=iterations {
            let out = self
                .filter_timeline(init, observations, smoothed.as_deref())
                .map_err(|e| e.at_iteration(iteration))?;
            smoothed = Some(smooth_pass(&out.filtered, &out.kernels).map_err(|e| e.at_iteration(iteration))?);
        }
        Ok(smoothed.unwrap())
    }
}

/// Backward pass: `μ_m = offset_m + Γ_m μ_{m+1}` and
/// `Σ_m = B_m B_m^* + Γ_m Σ_{m+1} Γ_m^*`, the latter by triangularizing
/// `[B_m^*; S_{m+1}^* Γ_m^*]`.
pub fn smooth_pass<T: Real>(
    filtered: &[GaussianSqrt<T>],
    kernels: &[BackwardKernel<T>],
) -> Result<Vec<GaussianSqrt<T>>> {
    if filtered.is_empty() || kernels.len() + 1 != filtered.len() {
        return Err(Error::DimensionMismatch {
            context: "smooth_pass kernels",
            expected: filtered.len().saturating_sub(1),
            found: kernels.len(),
        });
    }
    let n = filtered.len();
    let mut smoothed = vec![filtered[n - 1].clone()];
    for m in (0..n - 1).rev() {
        let next = smoothed.last().unwrap();
        let k = &kernels[m];
        if k.gain.shape() != (filtered[m].dim(), next.dim()) {
            return Err(Error::DimensionMismatch {
                context: "backward kernel gain",
                expected: next.dim(),
                found: k.gain.ncols(),
            });
        }
        let mean = vec_add(&k.offset, &k.gain.mul_vec(&next.mean));
        let spread = next.cov_factor.matrix().transpose().mul_transpose(&k.gain);
        let pre = Matrix::vstack(&[&k.cov_factor.upper_matrix(), &spread]);
        let cov_factor = triangularize(&pre).to_lower();
        smoothed.push(GaussianSqrt { mean, cov_factor });
    }
    smoothed.reverse();
    Ok(smoothed)
}
