use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sqrt_slr::matrix::norm2;
use sqrt_slr::tracking::{simulate_with_rng, CtModel, CtParams, Trajectory, STATE_DIM};
use sqrt_slr::{Estimator, GaussianSqrt, Real};

use crate::config::{ExperimentConfig, Method, Precision, RuleSpec};
use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Ok,
    /// A Cholesky downdate failed; the cell produced no estimates.
    DowndateFailure,
    /// Any other numerical failure of the estimator.
    EstimatorFailure,
}

impl Status {
    pub fn tag(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::DowndateFailure => "downdate_failure",
            Status::EstimatorFailure => "estimator_failure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(Status::Ok),
            "downdate_failure" => Some(Status::DowndateFailure),
            "estimator_failure" => Some(Status::EstimatorFailure),
            _ => None,
        }
    }
}

/// One time step of one (trial, method, precision) cell. A failed cell
/// contributes a single record at its failure step with no errors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub time: usize,
    pub method: Method,
    pub precision: Precision,
    pub pos_err: Option<f64>,
    pub vel_err: Option<f64>,
    pub omega_err: Option<f64>,
    pub status: Status,
    pub failure_step: Option<usize>,
}

impl TrialRecord {
    pub fn sort_key(&self) -> (usize, usize, Method, Precision) {
        (self.trial, self.time, self.method, self.precision)
    }
}

/// Trial seeds are separate ChaCha streams of the master seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Run the iterated smoother for one cell in precision `T`. Model
/// parameters and measurements are rounded to `T` once, here.
pub fn smooth_in<T: Real>(
    params: &CtParams,
    trajectory: &Trajectory,
    rule: &RuleSpec,
    method: Method,
    iterations: usize,
) -> Result<Vec<GaussianSqrt<T>>, BenchError> {
    let model = CtModel::<T>::new(params)?.state_space_model();
    let estimator = Estimator::new(&model, rule.build::<T>(STATE_DIM)?, method.route())?;
    let observations: Vec<Option<Vec<T>>> = trajectory
        .observations
        .iter()
        .map(|y| Some(y.iter().map(|&v| T::of(v)).collect()))
        .collect();
    Ok(estimator.ipls(&params.prior::<T>(), &observations, iterations)?)
}

fn cell_records<T: Real>(
    trial: usize,
    params: &CtParams,
    trajectory: &Trajectory,
    config: &ExperimentConfig,
    method: Method,
    precision: Precision,
) -> Result<Vec<TrialRecord>, BenchError> {
    let record = |time, errs: Option<[f64; 3]>, status, failure_step| TrialRecord {
        trial,
        time,
        method,
        precision,
        pos_err: errs.map(|e| e[0]),
        vel_err: errs.map(|e| e[1]),
        omega_err: errs.map(|e| e[2]),
        status,
        failure_step,
    };
    match smooth_in::<T>(params, trajectory, &config.rule, method, config.iterations) {
        Ok(smoothed) => Ok(smoothed
            .iter()
            .zip(&trajectory.states)
            .enumerate()
            .map(|(time, (est, truth))| {
                let e: Vec<f64> = est
                    .mean
                    .iter()
                    .zip(truth)
                    .map(|(&m, &x)| m.to_f64_exact() - x)
                    .collect();
                let errs = [norm2(&e[0..2]), norm2(&e[2..4]), e[4].abs()];
                record(time, Some(errs), Status::Ok, None)
            })
            .collect()),
        Err(BenchError::Model(err)) => {
            let status = if err.is_downdate_failure() {
                Status::DowndateFailure
            } else {
                Status::EstimatorFailure
            };
            let step = err.step().unwrap_or(0);
            Ok(vec![record(step, None, status, Some(step))])
        }
        Err(e) => Err(e),
    }
}

/// Simulate `trials` trajectories and smooth each one in every configured
/// cell. Numerical failures are recorded, never propagated; records come
/// back sorted by (trial, time, method, precision).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>, BenchError> {
    config.validate()?;
    let params = config.ct_params();
    let cells = config.cells();

    let per_trial: Result<Vec<Vec<TrialRecord>>, BenchError> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let trajectory = simulate_with_rng(&params, config.length, &mut trial_rng(config.seed, trial))?;
            let mut out = Vec::new();
            for &(method, precision) in &cells {
                out.extend(match precision {
                    Precision::Binary32 => cell_records::<f32>(trial, &params, &trajectory, config, method, precision)?,
                    Precision::Binary64 => cell_records::<f64>(trial, &params, &trajectory, config, method, precision)?,
                });
            }
            Ok(out)
        })
        .collect();

    let mut records: Vec<TrialRecord> = per_trial?.into_iter().flatten().collect();
    records.sort_by_key(TrialRecord::sort_key);
    Ok(records)
}
