//! Coordinated-turn target tracking with range/bearing measurements.
//!
//! State `(p1, p2, v1, v2, ω)`. Between samples the turn rate is frozen at
//! its value at the start of the interval, which makes the dynamics linear:
//! `dx = A(ω) x dt + B dw` with the velocity rotating at rate `ω`. The
//! transition matrix `exp(A(ω) δt)` has a closed form; the process noise
//! factor is obtained by triangularizing the quadrature-weighted stack of
//! `exp(A(ω)(δt - s)) B`, so the Gramian itself is never formed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimators::{GaussianSqrt, StateSpaceModel};
use crate::linalg::{triangularize, TriangularFactor};
use crate::matrix::Matrix;
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;
use crate::slr::NoiseModel;

pub const STATE_DIM: usize = 5;
pub const OBS_DIM: usize = 2;

/// Gauss-Legendre nodes used for the process noise Gramian.
pub const GRAMIAN_NODES: usize = 20;

/// How the initial covariance diagonal is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma0Reading {
    /// Entries are variances.
    #[default]
    Variance,
    /// Entries are standard deviations.
    StdDev,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtParams {
    pub dt: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_omega: f64,
    pub sigma_r: f64,
    pub sigma_theta: f64,
    pub mu0: [f64; STATE_DIM],
    pub sigma0_diag: [f64; STATE_DIM],
    pub sigma0_reading: Sigma0Reading,
}

impl Default for CtParams {
    fn default() -> Self {
        CtParams {
            dt: 1.0,
            sigma_x: 0.03,
            sigma_y: 0.03,
            sigma_omega: 0.013,
            sigma_r: 10.0,
            sigma_theta: 0.0031,
            mu0: [1000.0, 1000.0, 300.0, 0.0, -0.0523],
            sigma0_diag: [10.0, 10.0, 3.162, 3.162, 0.316],
            sigma0_reading: Sigma0Reading::Variance,
        }
    }
}

impl CtParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
            ("sigma_omega", self.sigma_omega),
            ("sigma_r", self.sigma_r),
            ("sigma_theta", self.sigma_theta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.mu0.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("mu0 must be finite".into()));
        }
        if !self.sigma0_diag.iter().all(|&x| x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter("sigma0 diagonal must be positive".into()));
        }
        Ok(())
    }

    /// Standard deviations of the initial state.
    pub fn prior_std(&self) -> [f64; STATE_DIM] {
        match self.sigma0_reading {
            Sigma0Reading::Variance => self.sigma0_diag.map(f64::sqrt),
            Sigma0Reading::StdDev => self.sigma0_diag,
        }
    }

    pub fn prior<T: Real>(&self) -> GaussianSqrt<T> {
        let std: Vec<T> = self.prior_std().iter().map(|&s| T::of(s)).collect();
        GaussianSqrt::new(
            self.mu0.iter().map(|&m| T::of(m)).collect(),
            TriangularFactor::from_diagonal(&std).expect("validated prior"),
        )
        .expect("prior dimensions")
    }
}

/// `sin(y) / y`, by series near zero.
fn sinc<T: Real>(y: T) -> T {
    if y.abs() < T::of(1e-2) {
        let y2 = y * y;
        T::one() - y2 / T::of(6.0) + y2 * y2 / T::of(120.0)
    } else {
        y.sin() / y
    }
}

/// Coordinated-turn model in precision `T`.
#[derive(Debug, Clone)]
pub struct CtModel<T> {
    dt: T,
    diffusion: Matrix<T>,
    sigma_r: T,
    sigma_theta: T,
    gl_nodes: Vec<T>,
    gl_weight_sqrt: Vec<T>,
}

impl<T: Real> CtModel<T> {
    pub fn new(params: &CtParams) -> Result<Self> {
        params.validate()?;
        let mut diffusion = Matrix::zeros(STATE_DIM, 3);
        diffusion[(2, 0)] = T::of(params.sigma_x);
        diffusion[(3, 1)] = T::of(params.sigma_y);
        diffusion[(4, 2)] = T::of(params.sigma_omega);
        let (s, v) = gauss_legendre(GRAMIAN_NODES, 0.0, params.dt);
        Ok(CtModel {
            dt: T::of(params.dt),
            diffusion,
            sigma_r: T::of(params.sigma_r),
            sigma_theta: T::of(params.sigma_theta),
            gl_nodes: s.into_iter().map(T::of).collect(),
            gl_weight_sqrt: v.into_iter().map(|w| T::of(w.sqrt())).collect(),
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// The diffusion matrix `B` (zeros on positions, `diag(σx, σy)` on
    /// velocities, `σω` on the turn rate).
    pub fn diffusion(&self) -> &Matrix<T> {
        &self.diffusion
    }

    /// `exp(A(ω) t)` in closed form.
    pub fn propagator(&self, omega: T, t: T) -> Matrix<T> {
        let theta = omega * t;
        let (s, c) = theta.sin_cos();
        let half = theta / T::of(2.0);
        // ∫_0^t R(ω u) du = [[a, -b], [b, a]]
        let a = t * sinc(theta);
        let b = t * half.sin() * sinc(half);
        let mut phi = Matrix::identity(STATE_DIM);
        phi[(0, 2)] = a;
        phi[(0, 3)] = -b;
        phi[(1, 2)] = b;
        phi[(1, 3)] = a;
        phi[(2, 2)] = c;
        phi[(2, 3)] = -s;
        phi[(3, 2)] = s;
        phi[(3, 3)] = c;
        phi
    }

    pub fn transition_matrix(&self, omega: T) -> Matrix<T> {
        self.propagator(omega, self.dt)
    }

    /// Lower factor of `Q(ω) = ∫_0^δt exp(A s) B B^* exp(A^* s) ds`.
    pub fn process_noise_factor(&self, omega: T) -> TriangularFactor<T> {
        let blocks: Vec<Matrix<T>> = self
            .gl_nodes
            .iter()
            .zip(&self.gl_weight_sqrt)
            .map(|(&s, &w)| {
                self.propagator(omega, self.dt - s)
                    .matmul(&self.diffusion)
                    .transpose()
                    .scale(w)
            })
            .collect();
        let refs: Vec<&Matrix<T>> = blocks.iter().collect();
        triangularize(&Matrix::vstack(&refs)).to_lower()
    }

    pub fn discretize(&self, omega: T) -> (Matrix<T>, TriangularFactor<T>) {
        (self.transition_matrix(omega), self.process_noise_factor(omega))
    }

    pub fn transition_mean(&self, x: &[T]) -> Vec<T> {
        self.transition_matrix(x[4]).mul_vec(x)
    }

    pub fn observation_noise_factor(&self) -> TriangularFactor<T> {
        TriangularFactor::from_diagonal(&[self.sigma_r, self.sigma_theta]).expect("positive noise")
    }

    /// State-space model with ω-dependent process noise. The bearing image
    /// is placed on the branch within π of the measured bearing.
    pub fn state_space_model(self) -> StateSpaceModel<T> {
        let model = Arc::new(self);
        let (f, q) = (Arc::clone(&model), Arc::clone(&model));
        StateSpaceModel::new(
            STATE_DIM,
            OBS_DIM,
            move |x| Ok(f.transition_mean(x)),
            NoiseModel::state_dependent(move |x| Ok(q.process_noise_factor(x[4]))),
            |x| ct_observe(x).map(|(r, th)| vec![r, th]),
            NoiseModel::constant(model.observation_noise_factor()),
        )
        .with_anchored_observation(|x, y| {
            let (r, th) = ct_observe(x)?;
            Ok(vec![r, y[1] + wrap_angle(th - y[1])])
        })
    }
}

/// `(Φ, Q^{1/2})` for turn rate `omega`.
pub fn ct_discretize<T: Real>(omega: T, params: &CtParams) -> Result<(Matrix<T>, TriangularFactor<T>)> {
    Ok(CtModel::new(params)?.discretize(omega))
}

pub fn ct_transition_mean<T: Real>(x: &[T], params: &CtParams) -> Result<Vec<T>> {
    Ok(CtModel::new(params)?.transition_mean(x))
}

/// Range `‖p‖` and bearing `atan2(p2, p1)` in `(-π, π]`.
pub fn ct_observe<T: Real>(x: &[T]) -> Result<(T, T)> {
    let r = x[0].hypot(x[1]);
    if !(r >= T::epsilon()) {
        return Err(Error::OriginSingularity);
    }
    let mut theta = x[1].atan2(x[0]);
    if theta <= -T::of(std::f64::consts::PI) {
        theta = -theta;
    }
    Ok((r, theta))
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let pi = T::of(std::f64::consts::PI);
    let two_pi = pi + pi;
    let mut w = a - two_pi * ((a + pi) / two_pi).floor();
    if w <= -pi {
        w = w + two_pi;
    }
    w
}

/// Ground-truth states and noisy measurements, one measurement per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<[f64; STATE_DIM]>,
    pub observations: Vec<[f64; OBS_DIM]>,
}

pub fn simulate_trajectory(params: &CtParams, length: usize, seed: u64) -> Result<Trajectory> {
    simulate_with_rng(params, length, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `x_0 ~ N(μ0, Σ0)`, `x_m ~ N(Φ(ω_{m-1}) x_{m-1}, Q(ω_{m-1}))`, each state
/// observed with independent range and bearing noise.
pub fn simulate_with_rng<R: Rng>(params: &CtParams, length: usize, rng: &mut R) -> Result<Trajectory> {
    if length == 0 {
        return Err(Error::InvalidParameter("trajectory length must be at least 1".into()));
    }
    let model = CtModel::<f64>::new(params)?;
    let mut normal = || -> f64 { rng.sample(StandardNormal) };

    let std = params.prior_std();
    let mut x: Vec<f64> = (0..STATE_DIM).map(|i| params.mu0[i] + std[i] * normal()).collect();
    let mut states = Vec::with_capacity(length);
    let mut observations = Vec::with_capacity(length);
    for m in 0..length {
        if m > 0 {
            let (phi, q) = model.discretize(x[4]);
            let z: Vec<f64> = (0..STATE_DIM).map(|_| normal()).collect();
            let noise = q.matrix().mul_vec(&z);
            x = phi.mul_vec(&x).iter().zip(&noise).map(|(a, b)| a + b).collect();
        }
        let (r, th) = ct_observe(&x)?;
        let y = [
            r + params.sigma_r * normal(),
            wrap_angle(th + params.sigma_theta * normal()),
        ];
        states.push([x[0], x[1], x[2], x[3], x[4]]);
        observations.push(y);
    }
    Ok(Trajectory { states, observations })
}
