use std::ops::RangeInclusive;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::utility::{Utility, UtilityClass};
use crate::error::{check_len, Error, Result};
use crate::linalg::dot;

/// `n` budgeted buyers sharing one unit of each of `m` divisible goods.
///
/// Every buyer has a utility of the same class; serializes to the market
/// JSON format `{n, m, budgets, utility, valuations, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMarket {
    pub n: usize,
    pub m: usize,
    pub budgets: Vec<f64>,
    pub utility: UtilityClass,
    pub valuations: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl FisherMarket {
    pub fn new(budgets: Vec<f64>, utility: UtilityClass, valuations: Vec<Vec<f64>>) -> Result<Self> {
        let market = Self {
            n: budgets.len(),
            m: valuations.first().map_or(0, Vec::len),
            budgets,
            utility,
            valuations,
            seed: None,
        };
        market.validate()?;
        Ok(market)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config("a market needs at least one buyer and one good".into()));
        }
        check_len("budgets", self.n, self.budgets.len())?;
        check_len("valuations", self.n, self.valuations.len())?;
        for (i, (b, v)) in self.budgets.iter().zip(&self.valuations).enumerate() {
            check_len("valuation row", self.m, v.len())?;
            if !(*b > 0.0 && b.is_finite()) {
                return Err(Error::Domain(format!("buyer {i} has budget {b}")));
            }
            if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || !v.iter().any(|x| *x > 0.0) {
                return Err(Error::Domain(format!(
                    "buyer {i} needs nonnegative valuations with a positive entry"
                )));
            }
        }
        Ok(())
    }

    pub fn buyer(&self, i: usize) -> Utility<'_> {
        Utility::new(self.utility, &self.valuations[i])
    }

    pub fn total_budget(&self) -> f64 {
        self.budgets.iter().sum()
    }

    /// The same market with a different utility class.
    pub fn with_class(&self, class: UtilityClass) -> Self {
        Self {
            utility: class,
            ..self.clone()
        }
    }

    /// Closed-form demands of every buyer at `prices`.
    pub fn demands(&self, prices: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.n)
            .map(|i| self.buyer(i).demand(self.budgets[i], prices))
            .collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let market: Self = serde_json::from_str(s)?;
        market.validate()?;
        Ok(market)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Prices and an allocation, one row per buyer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub prices: Vec<f64>,
    pub allocation: Vec<Vec<f64>>,
}

impl MarketState {
    /// Each buyer spends an equal share of their budget on every good.
    pub fn equal_spending(market: &FisherMarket, prices: Vec<f64>) -> Result<Self> {
        check_len("prices", market.m, prices.len())?;
        if prices.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Domain("equal spending needs positive prices".into()));
        }
        let allocation = market
            .budgets
            .iter()
            .map(|b| prices.iter().map(|p| b / (market.m as f64 * p)).collect())
            .collect();
        Ok(Self { prices, allocation })
    }

    /// `sum_i x_i - 1` per good.
    pub fn excess_demand(&self) -> Vec<f64> {
        let mut z = vec![-1.0; self.prices.len()];
        for row in &self.allocation {
            z.iter_mut().zip(row).for_each(|(z, x)| *z += x);
        }
        z
    }

    /// Largest budget overspend `max_i (x_i . p - b_i)` against `prices`.
    pub fn budget_violation(&self, market: &FisherMarket, prices: &[f64]) -> f64 {
        self.allocation
            .iter()
            .zip(&market.budgets)
            .map(|(x, b)| dot(x, prices) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn flat_allocation(&self) -> Vec<f64> {
        self.allocation.concat()
    }
}

/// Parameters of [`generate_market`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub n: usize,
    pub m: usize,
    pub budget_range: (f64, f64),
    pub valuation_range: (f64, f64),
}

impl Default for MarketSpec {
    fn default() -> Self {
        Self {
            n: 5,
            m: 8,
            budget_range: (10.0, 20.0),
            valuation_range: (5.0, 15.0),
        }
    }
}

fn range(r: (f64, f64), what: &str) -> Result<RangeInclusive<f64>> {
    if r.0 > 0.0 && r.0 <= r.1 && r.1.is_finite() {
        Ok(r.0..=r.1)
    } else {
        Err(Error::Config(format!("{what} range {r:?} must be positive and ordered")))
    }
}

/// Draws budgets and then valuations uniformly from one seeded stream, so
/// the numbers do not depend on `class`.
pub fn generate_market(seed: u64, spec: &MarketSpec, class: UtilityClass) -> Result<FisherMarket> {
    let budgets = range(spec.budget_range, "budget")?;
    let values = range(spec.valuation_range, "valuation")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budgets: Vec<f64> = (0..spec.n).map(|_| rng.random_range(budgets.clone())).collect();
    let valuations = (0..spec.n)
        .map(|_| (0..spec.m).map(|_| rng.random_range(values.clone())).collect())
        .collect();
    let mut market = FisherMarket::new(budgets, class, valuations)?;
    market.seed = Some(seed);
    Ok(market)
}
