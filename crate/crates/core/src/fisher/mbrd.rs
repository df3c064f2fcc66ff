use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::market::{FisherMarket, MarketState};
use super::program::{eg_objective, exploitability};
use crate::algorithms::{Recorder, StepSchedule, Trajectory};
use crate::error::{check_len, Error, Result};
use crate::game::StrategyProfile;
use crate::linalg::norm;
use crate::projection::{project_budget_row, ProjectionOptions};

/// Parameters of a myopic best-response run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbrdConfig {
    pub horizon: usize,
    pub eta_price: StepSchedule,
    pub eta_alloc: StepSchedule,
    /// Shift inside each buyer's logarithm.
    pub delta: f64,
    pub projection: ProjectionOptions,
    /// Project allocations onto the budget sets of the previous prices.
    pub lagged_constraint: bool,
    pub seed: u64,
    pub record_every: usize,
}

impl MbrdConfig {
    pub fn new(horizon: usize, eta_price: f64, eta_alloc: f64) -> Self {
        Self {
            horizon,
            eta_price: StepSchedule::Constant(eta_price),
            eta_alloc: StepSchedule::Constant(eta_alloc),
            delta: 0.0,
            projection: ProjectionOptions::default(),
            lagged_constraint: false,
            seed: 0,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.record_every == 0 {
            return Err(Error::Config("horizon and record_every must be at least 1".into()));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Config(format!("delta must be nonnegative, got {}", self.delta)));
        }
        self.eta_price.validate()?;
        self.eta_alloc.validate()
    }
}

#[derive(Debug, Clone)]
pub struct MbrdOutput {
    /// Iterate drawn uniformly from `1..=T` with the configured seed.
    pub selected: MarketState,
    pub selected_t: usize,
    /// Prices are the outer variable, the flattened allocation the inner one.
    pub trajectory: Trajectory,
    /// `|sum_i x_i - 1|` for every recorded point.
    pub excess_demand_norm: Vec<f64>,
}

impl MbrdOutput {
    /// Exploitability of the running average price at every recorded point.
    pub fn average_price_exploitability(&self, market: &FisherMarket, f_star: f64) -> Result<Vec<f64>> {
        self.trajectory
            .points
            .iter()
            .map(|pt| Ok(exploitability(market, &pt.x_avg, f_star, 0.0)?.value))
            .collect()
    }

    /// Trajectory CSV with `excess_demand_norm` and `exploitability` columns.
    pub fn write_csv<W: Write>(&self, out: W, market: &FisherMarket, f_star: f64) -> Result<()> {
        let expl = self.average_price_exploitability(market, f_star)?;
        self.trajectory.write_csv(
            out,
            &[
                ("excess_demand_norm", &self.excess_demand_norm),
                ("exploitability", &expl),
            ],
        )
    }
}

fn as_profile(state: &MarketState) -> StrategyProfile {
    StrategyProfile::new(state.prices.clone(), state.flat_allocation())
}

/// Myopic best-response dynamics: a projected descent step on prices along
/// the excess demand and a projected ascent step on each buyer's log utility,
/// both computed from the same state.
pub fn run_mbrd(market: &FisherMarket, initial: &MarketState, config: &MbrdConfig) -> Result<MbrdOutput> {
    market.validate()?;
    config.validate()?;
    check_len("initial prices", market.m, initial.prices.len())?;
    check_len("initial allocation", market.n, initial.allocation.len())?;
    if initial.prices.iter().any(|p| *p < 0.0) {
        return Err(Error::Domain("initial prices must be nonnegative".into()));
    }
    let objective = |s: &MarketState| {
        eg_objective(market, &s.prices, &s.allocation, config.delta).unwrap_or(f64::NEG_INFINITY)
    };
    let mut rec = Recorder::new(&as_profile(initial), objective(initial), config.record_every, config.horizon);
    let mut excess_norms = vec![norm(&initial.excess_demand())];
    let selected_t = ChaCha8Rng::seed_from_u64(config.seed).random_range(1..=config.horizon);
    let mut selected = None;

    let mut state = initial.clone();
    let mut prev_prices = state.prices.clone();
    for t in 0..config.horizon {
        let eta_p = config.eta_price.eta(t);
        let eta_x = config.eta_alloc.eta(t);
        let anchor = if config.lagged_constraint { &prev_prices } else { &state.prices };
        let prices: Vec<f64> = state
            .prices
            .iter()
            .zip(state.excess_demand())
            .map(|(p, z)| (p + eta_p * z).max(0.0))
            .collect();
        let allocation = state
            .allocation
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let dir = market.buyer(i).log_gradient(x, market.budgets[i], config.delta);
                let step: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + eta_x * d).collect();
                project_budget_row(&step, anchor, market.budgets[i], &config.projection)
            })
            .collect::<Result<Vec<_>>>()?;
        prev_prices = std::mem::replace(&mut state.prices, prices);
        state.allocation = allocation;

        if t + 1 == selected_t {
            selected = Some(state.clone());
        }
        rec.push(t + 1, &as_profile(&state), || objective(&state));
        if (t + 1).is_multiple_of(config.record_every) || t + 1 == config.horizon {
            excess_norms.push(norm(&state.excess_demand()));
        }
    }
    Ok(MbrdOutput {
        selected: selected.expect("selected index lies in 1..=T"),
        selected_t,
        trajectory: rec.finish(),
        excess_demand_norm: excess_norms,
    })
}
