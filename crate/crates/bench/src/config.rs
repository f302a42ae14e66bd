use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sqrt_slr::cubature::{check_assumption, gauss_hermite, spherical_radial, unscented};
use sqrt_slr::tracking::{CtParams, Sigma0Reading, STATE_DIM};
use sqrt_slr::{CubatureRule, Real, ResidualRoute};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// QR residual factorization.
    Proposed,
    /// Downdate residual factorization.
    Reference,
}

impl Method {
    pub fn route(self) -> ResidualRoute {
        match self {
            Method::Proposed => ResidualRoute::Qr,
            Method::Reference => ResidualRoute::Downdate,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Reference => "reference",
        }
    }

    /// Legend prefix, `prop` / `ref`.
    pub fn short(self) -> &'static str {
        match self {
            Method::Proposed => "prop",
            Method::Reference => "ref",
        }
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.trim() {
            "proposed" | "prop" => Ok(Method::Proposed),
            "reference" | "ref" => Ok(Method::Reference),
            other => Err(BenchError::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Precision {
    Binary32,
    Binary64,
}

impl Precision {
    pub fn tag(self) -> &'static str {
        match self {
            Precision::Binary32 => f32::NAME,
            Precision::Binary64 => f64::NAME,
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Precision::Binary32 => 32,
            Precision::Binary64 => 64,
        }
    }
}

impl FromStr for Precision {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.trim() {
            "32" | "binary32" | "f32" => Ok(Precision::Binary32),
            "64" | "binary64" | "f64" => Ok(Precision::Binary64),
            other => Err(BenchError::Config(format!("unknown precision `{other}`"))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Cubature rule selection: `cubature`, `gh:<order>` or `ut:<kappa>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleSpec {
    SphericalRadial,
    GaussHermite(usize),
    Unscented(f64),
}

impl RuleSpec {
    pub fn build<T: Real>(&self, dim: usize) -> Result<CubatureRule<T>, BenchError> {
        Ok(match *self {
            RuleSpec::SphericalRadial => spherical_radial(dim)?,
            RuleSpec::GaussHermite(order) => gauss_hermite(dim, order)?,
            RuleSpec::Unscented(kappa) => unscented(dim, T::of(kappa))?,
        })
    }
}

impl FromStr for RuleSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        let s = s.trim();
        let bad = || BenchError::Config(format!("bad rule `{s}`; expected cubature, gh:<order> or ut:<kappa>"));
        if s == "cubature" {
            return Ok(RuleSpec::SphericalRadial);
        }
        if let Some(order) = s.strip_prefix("gh:") {
            return order.parse().map(RuleSpec::GaussHermite).map_err(|_| bad());
        }
        if let Some(kappa) = s.strip_prefix("ut:") {
            return kappa.parse().map(RuleSpec::Unscented).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for RuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleSpec::SphericalRadial => f.write_str("cubature"),
            RuleSpec::GaussHermite(q) => write!(f, "gh:{q}"),
            RuleSpec::Unscented(k) => write!(f, "ut:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub length: usize,
    pub iterations: usize,
    pub methods: Vec<Method>,
    pub precisions: Vec<Precision>,
    pub rule: RuleSpec,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub sigma0_reading: Sigma0Reading,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 100,
            length: 101,
            iterations: 10,
            methods: vec![Method::Proposed, Method::Reference],
            precisions: vec![Precision::Binary32, Precision::Binary64],
            rule: RuleSpec::SphericalRadial,
            seed: 0,
            output_path: None,
            sigma0_reading: Sigma0Reading::Variance,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials < 1 {
            return Err(BenchError::Config("trials must be at least 1".into()));
        }
        if self.length < 2 {
            return Err(BenchError::Config("length must be at least 2".into()));
        }
        if self.iterations < 1 {
            return Err(BenchError::Config("iterations must be at least 1".into()));
        }
        if self.methods.is_empty() || self.precisions.is_empty() {
            return Err(BenchError::Config(
                "at least one method and one precision are required".into(),
            ));
        }
        let rule = self
            .rule
            .build::<f64>(STATE_DIM)
            .map_err(|e| BenchError::Config(format!("rule {}: {e}", self.rule)))?;
        check_assumption(&rule).map_err(|v| BenchError::Config(format!("rule {} rejected: {v}", self.rule)))?;
        Ok(())
    }

    pub fn ct_params(&self) -> CtParams {
        CtParams {
            sigma0_reading: self.sigma0_reading,
            ..CtParams::default()
        }
    }

    /// Cells in output order.
    pub fn cells(&self) -> Vec<(Method, Precision)> {
        let mut cells: Vec<_> = self
            .methods
            .iter()
            .flat_map(|&m| self.precisions.iter().map(move |&p| (m, p)))
            .collect();
        cells.sort();
        cells.dedup();
        cells
    }
}

pub fn parse_list<T: FromStr<Err = BenchError>>(s: &str) -> Result<Vec<T>, BenchError> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(str::parse).collect()
}

pub fn parse_sigma0(s: &str) -> Result<Sigma0Reading, BenchError> {
    match s.trim() {
        "variance" => Ok(Sigma0Reading::Variance),
        "stddev" => Ok(Sigma0Reading::StdDev),
        other => Err(BenchError::Config(format!("unknown sigma0 reading `{other}`"))),
    }
}
