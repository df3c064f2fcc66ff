use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::market::{FisherMarket, MarketState};
use super::program::{eg_objective, value_function};
use super::utility::UtilityClass;
use crate::error::{Error, Result};
use crate::linalg::{dot, update_mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumMethod {
    AnalyticCd,
    ReferenceDescent,
}

impl fmt::Display for EquilibriumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AnalyticCd => "analytic-cd",
            Self::ReferenceDescent => "reference-descent",
        })
    }
}

impl FromStr for EquilibriumMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic-cd" | "analytic_cd" => Ok(Self::AnalyticCd),
            "reference-descent" | "reference_descent" => Ok(Self::ReferenceDescent),
            other => Err(Error::Unknown {
                kind: "equilibrium method",
                name: other.into(),
            }),
        }
    }
}

/// Equilibrium prices and allocation with their quality measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub method: EquilibriumMethod,
    pub p_star: Vec<f64>,
    pub x_star: Vec<Vec<f64>>,
    /// `V(p_star)`, an upper bound on the min-max value.
    pub f_star: f64,
    /// Worst market-clearing violation of `x_star`: `|sum_i x_ij - 1|` for
    /// priced goods, the overshoot for free ones.
    pub clearing_residual: f64,
    /// `max_i |x_i . p_star - b_i|`.
    pub budget_residual: f64,
    /// `f_star` minus the value of a supply-feasible allocation; bounds the
    /// error of `f_star`.
    pub duality_gap: f64,
    pub certified: bool,
    pub iterations: usize,
}

impl EquilibriumCertificate {
    pub fn state(&self) -> MarketState {
        MarketState {
            prices: self.p_star.clone(),
            allocation: self.x_star.clone(),
        }
    }
}

/// `sum_i b_i + sum_i b_i log u_i(x_i)` after scaling every good's column to
/// total at most one. Lower-bounds the min-max value.
pub fn supply_feasible_value(market: &FisherMarket, allocation: &[Vec<f64>]) -> Result<f64> {
    let mut load = vec![0.0; market.m];
    for row in allocation {
        load.iter_mut().zip(row).for_each(|(l, x)| *l += x);
    }
    let scaled: Vec<Vec<f64>> = allocation
        .iter()
        .map(|row| row.iter().zip(&load).map(|(x, l)| x / l.max(1.0)).collect())
        .collect();
    let zero = vec![0.0; market.m];
    Ok(market.total_budget() + eg_objective(market, &zero, &scaled, 0.0)?)
}

fn clearing_residual(prices: &[f64], allocation: &[Vec<f64>], tol: f64) -> f64 {
    let state = MarketState {
        prices: prices.to_vec(),
        allocation: allocation.to_vec(),
    };
    state
        .excess_demand()
        .iter()
        .zip(prices)
        .map(|(z, p)| if *p > tol { z.abs() } else { z.max(0.0) })
        .fold(0.0, f64::max)
}

fn certificate(
    market: &FisherMarket,
    method: EquilibriumMethod,
    p_star: Vec<f64>,
    x_star: Vec<Vec<f64>>,
    tol: f64,
    iterations: usize,
) -> Result<EquilibriumCertificate> {
    let f_star = value_function(market, &p_star, 0.0)?;
    let duality_gap = f_star - supply_feasible_value(market, &x_star)?;
    let budget_residual = x_star
        .iter()
        .zip(&market.budgets)
        .map(|(x, b)| (dot(x, &p_star) - b).abs())
        .fold(0.0, f64::max);
    Ok(EquilibriumCertificate {
        method,
        clearing_residual: clearing_residual(&p_star, &x_star, tol),
        budget_residual,
        duality_gap,
        certified: duality_gap <= tol * f_star.abs().max(1.0),
        p_star,
        x_star,
        f_star,
        iterations,
    })
}

/// Closed-form equilibrium of an all-Cobb-Douglas market:
/// `p_j = sum_i b_i alpha_ij` with demands at those prices.
pub fn analytic_cobb_douglas(market: &FisherMarket, tol: f64) -> Result<EquilibriumCertificate> {
    if market.utility != UtilityClass::CobbDouglas {
        return Err(Error::Config(format!(
            "analytic equilibrium needs a cobb-douglas market, got {}",
            market.utility
        )));
    }
    let mut prices = vec![0.0; market.m];
    for i in 0..market.n {
        let alpha = market.buyer(i).exponents();
        prices.iter_mut().zip(alpha).for_each(|(p, a)| *p += market.budgets[i] * a);
    }
    // goods nobody wants stay free and unallocated
    let allocation = (0..market.n)
        .map(|i| {
            let alpha = market.buyer(i).exponents();
            prices
                .iter()
                .zip(alpha)
                .map(|(p, a)| if a > 0.0 { market.budgets[i] * a / p } else { 0.0 })
                .collect()
        })
        .collect();
    certificate(market, EquilibriumMethod::AnalyticCd, prices, allocation, tol, 0)
}

/// Settings of the projected subgradient method on the outer value function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDescentOptions {
    pub iterations: usize,
    /// Step `c / sqrt(t)` with `c = step_scale * sum(b) / m`. `None` picks a
    /// per-class default.
    pub step_scale: Option<f64>,
    /// Relative duality gap required for certification.
    pub tol: f64,
}

impl Default for ReferenceDescentOptions {
    fn default() -> Self {
        Self {
            iterations: 200_000,
            step_scale: None,
            tol: 1e-4,
        }
    }
}

fn default_step_scale(class: UtilityClass) -> f64 {
    match class {
        UtilityClass::Linear => 0.01,
        UtilityClass::CobbDouglas => 0.5,
        UtilityClass::Leontief => 10.0,
    }
}

/// Minimizes `V(p)` by projected subgradient steps along `1 - sum_i x_i(p)`.
///
/// Returns the best of the iterates and their running average by `V`, with
/// the average of the second half of the demands as the allocation.
pub fn reference_descent(market: &FisherMarket, opts: &ReferenceDescentOptions) -> Result<EquilibriumCertificate> {
    market.validate()?;
    if opts.iterations == 0 {
        return Err(Error::Config("reference descent needs at least one iteration".into()));
    }
    let m = market.m;
    let mean_price = market.total_budget() / m as f64;
    let c = opts.step_scale.unwrap_or(default_step_scale(market.utility)) * mean_price;
    let floor = 1e-9 * mean_price;

    let mut p = vec![mean_price; m];
    let mut p_avg = p.clone();
    let mut best = (f64::INFINITY, p.clone());
    let half = opts.iterations / 2;
    let mut x_avg: Vec<Vec<f64>> = vec![vec![0.0; m]; market.n];
    for t in 1..=opts.iterations {
        let demands = market.demands(&p)?;
        let v = eg_objective(market, &p, &demands, 0.0)?;
        if v < best.0 {
            best = (v, p.clone());
        }
        if t > half {
            for (avg, x) in x_avg.iter_mut().zip(&demands) {
                update_mean(avg, x, t - half);
            }
        }
        let step = c / (t as f64).sqrt();
        let mut excess = vec![-1.0; m];
        for x in &demands {
            excess.iter_mut().zip(x).for_each(|(z, xj)| *z += xj);
        }
        p.iter_mut()
            .zip(&excess)
            .for_each(|(pj, z)| *pj = (*pj + step * z).max(floor));
        update_mean(&mut p_avg, &p, t + 1);
        if t % 1000 == 0 || t == opts.iterations {
            let v = value_function(market, &p_avg, 0.0)?;
            if v < best.0 {
                best = (v, p_avg.clone());
            }
        }
    }
    certificate(
        market,
        EquilibriumMethod::ReferenceDescent,
        best.1,
        x_avg,
        opts.tol,
        opts.iterations,
    )
}

/// Dispatches to the requested method; `tol` is the relative duality gap
/// needed for `certified`.
pub fn equilibrium_oracle(market: &FisherMarket, method: EquilibriumMethod, tol: f64) -> Result<EquilibriumCertificate> {
    match method {
        EquilibriumMethod::AnalyticCd => analytic_cobb_douglas(market, tol),
        EquilibriumMethod::ReferenceDescent => reference_descent(
            market,
            &ReferenceDescentOptions {
                tol,
                ..Default::default()
            },
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{exploitability, generate_market, MarketSpec};

    #[test]
    fn decoupled_cobb_douglas() {
        let mk = FisherMarket::new(
            vec![1.0, 1.0],
            UtilityClass::CobbDouglas,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let cert = equilibrium_oracle(&mk, EquilibriumMethod::AnalyticCd, 1e-9).unwrap();
        assert_eq!(cert.p_star, vec![1.0, 1.0]);
        assert_eq!(cert.x_star, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!((cert.f_star - 2.0).abs() < 1e-12);
        assert!(cert.certified && cert.duality_gap.abs() < 1e-12);
    }

    #[test]
    fn analytic_rejects_other_classes() {
        let mk = FisherMarket::new(vec![1.0], UtilityClass::Linear, vec![vec![1.0]]).unwrap();
        assert!(analytic_cobb_douglas(&mk, 1e-9).is_err());
    }

    #[test]
    fn one_linear_buyer_two_goods() {
        let mk = FisherMarket::new(vec![3.0], UtilityClass::Linear, vec![vec![2.0, 1.0]]).unwrap();
        let cert = reference_descent(
            &mk,
            &ReferenceDescentOptions {
                iterations: 50_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(cert.certified, "{cert:?}");
        assert!((cert.p_star[0] - 2.0).abs() < 1e-2 && (cert.p_star[1] - 1.0).abs() < 1e-2, "{cert:?}");
        assert!(exploitability(&mk, &cert.p_star, cert.f_star, 0.0).unwrap().value.abs() < 1e-9);
        // at p = (2, 1) the buyer reaches utility 3 on either good
        assert!((cert.f_star - (3.0 + 3.0 * 3f64.ln())).abs() < 1e-4, "{}", cert.f_star);
    }

    #[test]
    fn descent_agrees_with_closed_form_on_cobb_douglas() {
        let mk = generate_market(21, &MarketSpec::default(), UtilityClass::CobbDouglas).unwrap();
        let exact = analytic_cobb_douglas(&mk, 1e-9).unwrap();
        let approx = reference_descent(
            &mk,
            &ReferenceDescentOptions {
                iterations: 20_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(approx.f_star >= exact.f_star - 1e-9);
        assert!(approx.f_star - exact.f_star <= approx.duality_gap + 1e-9);
        assert!(approx.f_star - exact.f_star < 1e-4, "{} vs {}", approx.f_star, exact.f_star);
    }
}
