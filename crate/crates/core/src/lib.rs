//! Square-root statistical linear regression (SLR) filters and smoothers.
//!
//! Covariances are carried as triangular Cholesky-type factors. Every
//! factor is produced by QR triangularization of a stacked pre-array, so
//! no Gram matrix is ever subtracted on the default path; the
//! downdate-based residual factorization is kept as a reference route.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the precision for the common cases.
//!
//! ```
//! use sqrt_slr::{cubature, slr::ResidualRoute, tracking::{CtModel, CtParams}, Estimator64};
//!
//! let params = CtParams::default();
//! let model = CtModel::<f64>::new(&params).unwrap().state_space_model();
//! let rule = cubature::spherical_radial(5).unwrap();
//! let est = Estimator64::new(&model, rule, ResidualRoute::Qr).unwrap();
//! let (predicted, _kernel) = est.predict(&params.prior(), None).unwrap();
//! assert_eq!(predicted.dim(), 5);
//! ```

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubature;
pub mod error;
pub mod estimators;
pub mod instrument;
pub mod linalg;
pub mod matrix;
pub mod quadrature;
pub mod scalar;
pub mod slr;
pub mod tracking;

pub use cubature::{check_assumption, AssumptionViolation, CubatureRule, TransformedNodes};
pub use error::{Error, Result};
pub use estimators::{smooth_pass, BackwardKernel, Estimator, FilterOutput, GaussianSqrt, StateSpaceModel};
pub use linalg::{
    block_condition, rank_one_downdate, solve_right_triangular, triangularize, ConditioningResult, Orientation,
    TriangularFactor,
};
pub use matrix::Matrix;
pub use scalar::Real;
pub use slr::{AffineApprox, NoiseModel, ResidualRoute};

pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type TriangularFactor32 = TriangularFactor<f32>;
pub type TriangularFactor64 = TriangularFactor<f64>;
pub type GaussianSqrt32 = GaussianSqrt<f32>;
pub type GaussianSqrt64 = GaussianSqrt<f64>;
pub type CubatureRule32 = CubatureRule<f32>;
pub type CubatureRule64 = CubatureRule<f64>;
pub type StateSpaceModel32 = StateSpaceModel<f32>;
pub type StateSpaceModel64 = StateSpaceModel<f64>;
pub type Estimator32<'m> = Estimator<'m, f32>;
pub type Estimator64<'m> = Estimator<'m, f64>;
