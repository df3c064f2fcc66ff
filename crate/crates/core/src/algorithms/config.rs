use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::StrategyProfile;
use crate::projection::ProjectionOptions;

/// Step sizes as a function of the iteration counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSchedule {
    Constant(f64),
    /// `eta_t = 1 / sqrt(T)` for every step of a run with horizon `T`.
    InverseSqrtHorizon(usize),
}

impl StepSchedule {
    pub fn eta(&self, _t: usize) -> f64 {
        match *self {
            Self::Constant(eta) => eta,
            Self::InverseSqrtHorizon(horizon) => 1.0 / (horizon as f64).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant(eta) if eta > 0.0 && eta.is_finite() => Ok(()),
            Self::InverseSqrtHorizon(h) if h >= 1 => Ok(()),
            other => Err(Error::Config(format!("invalid step schedule {other:?}"))),
        }
    }
}

/// Parameters shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Number of update steps `T`; iterates `1..=T` are produced.
    pub horizon: usize,
    pub eta_lambda: StepSchedule,
    pub eta_x: StepSchedule,
    pub eta_y: StepSchedule,
    pub initial: StrategyProfile,
    /// Seeds the uniform output draw of GDALO.
    pub seed: u64,
    /// Keep every `record_every`-th iterate (plus the first and last).
    pub record_every: usize,
    /// Project the inner step onto the slice of the previous outer iterate
    /// instead of the current one.
    pub lagged_constraint: bool,
    pub projection: ProjectionOptions,
}

impl RunConfig {
    /// Equal step schedules on every block, recording every iterate.
    pub fn new(horizon: usize, eta: StepSchedule, initial: StrategyProfile) -> Self {
        Self {
            horizon,
            eta_lambda: eta,
            eta_x: eta,
            eta_y: eta,
            initial,
            seed: 0,
            record_every: 1,
            lagged_constraint: false,
            projection: ProjectionOptions::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        self.eta_lambda.validate()?;
        self.eta_x.validate()?;
        self.eta_y.validate()
    }
}
