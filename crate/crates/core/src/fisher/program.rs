use std::sync::Arc;

use serde::Serialize;

use super::market::FisherMarket;
use crate::error::{check_len, Error, Result};
use crate::game::GameDefinition;
use crate::kkt::{LogSeparableGame, StructuredGameSpec};
use crate::linalg::dot;
use crate::projection::{budget_set, ProjectionSpec};

/// Tolerance below which exploitability is treated as zero.
pub const EXPLOITABILITY_TOL: f64 = 1e-9;

/// `sum_j p_j + sum_i b_i log(u_i(x_i) + delta)`.
pub fn eg_objective(market: &FisherMarket, prices: &[f64], allocation: &[Vec<f64>], delta: f64) -> Result<f64> {
    check_len("prices", market.m, prices.len())?;
    check_len("allocation", market.n, allocation.len())?;
    let mut total: f64 = prices.iter().sum();
    for (i, x) in allocation.iter().enumerate() {
        check_len("allocation row", market.m, x.len())?;
        let u = market.buyer(i).value(x) + delta;
        if !(u > 0.0) {
            return Err(Error::Domain(format!("buyer {i} has log argument {u}")));
        }
        total += market.budgets[i] * u.ln();
    }
    Ok(total)
}

/// The market's min-max program as a game: prices are the outer variable,
/// the flattened allocation the inner one, and buyer `i`'s constraint is
/// `b_i - x_i . p >= 0`. The inner slice is the product of budget sets.
pub fn fisher_game(market: &FisherMarket, delta: f64) -> Result<GameDefinition> {
    market.validate()?;
    let (n, m) = (market.n, market.m);
    let mk = Arc::new(market.clone());
    let rows = move |y: &[f64]| y.chunks(m).map(<[f64]>::to_vec).collect::<Vec<_>>();

    let value = {
        let mk = mk.clone();
        move |p: &[f64], y: &[f64]| eg_objective(&mk, p, &rows(y), delta).unwrap_or(f64::NEG_INFINITY)
    };
    let grad_y = {
        let mk = mk.clone();
        move |_: &[f64], y: &[f64]| {
            y.chunks(m)
                .enumerate()
                .flat_map(|(i, x)| mk.buyer(i).log_gradient(x, mk.budgets[i], delta))
                .collect()
        }
    };
    let cons = {
        let mk = mk.clone();
        move |p: &[f64], y: &[f64]| y.chunks(m).zip(&mk.budgets).map(|(x, b)| b - dot(x, p)).collect()
    };
    let cons_x = move |_: &[f64], y: &[f64]| y.chunks(m).map(|x| x.iter().map(|v| -v).collect()).collect();
    let cons_y = move |p: &[f64], _: &[f64]| {
        (0..n)
            .map(|i| {
                let mut row = vec![0.0; n * m];
                row[i * m..(i + 1) * m].iter_mut().zip(p).for_each(|(r, pj)| *r = -pj);
                row
            })
            .collect()
    };
    let slice = {
        let mk = mk.clone();
        move |p: &[f64]| {
            if p.iter().any(|v| *v < 0.0) {
                return Err(Error::Domain("prices must be nonnegative".into()));
            }
            Ok(ProjectionSpec::Product(
                mk.budgets.iter().map(|b| (m, budget_set(p, *b))).collect(),
            ))
        }
    };
    GameDefinition::builder(format!("fisher-{}", market.utility), m, n * m)
        .objective(value, move |_, _| vec![1.0; m], grad_y)
        .constraints(n, cons, cons_x, cons_y)
        .inner_slice(slice)
        .outer_set(ProjectionSpec::NonnegativeOrthant)
        .inner_set(ProjectionSpec::NonnegativeOrthant)
        .build()
}

/// The outer value `V(p) = max_{X : X p <= b} objective`, using closed-form
/// demands for the inner maximization.
pub fn value_function(market: &FisherMarket, prices: &[f64], delta: f64) -> Result<f64> {
    eg_objective(market, prices, &market.demands(prices)?, delta)
}

/// `V(p) - f*`, kept alongside the raw difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exploitability {
    /// Clipped below at `-EXPLOITABILITY_TOL`.
    pub value: f64,
    pub raw: f64,
}

pub fn exploitability(market: &FisherMarket, prices: &[f64], f_star: f64, delta: f64) -> Result<Exploitability> {
    if prices.iter().any(|p| *p < 0.0) {
        return Err(Error::Domain("prices must be nonnegative".into()));
    }
    let raw = value_function(market, prices, delta)? - f_star;
    Ok(Exploitability {
        value: raw.max(-EXPLOITABILITY_TOL),
        raw,
    })
}

/// The market program in log-separable form with `a = c = budgets`,
/// `b = 0` and `delta = 0`.
#[derive(Debug, Clone)]
pub struct FisherKktForm {
    pub market: FisherMarket,
    spec: StructuredGameSpec,
}

impl FisherKktForm {
    pub fn new(market: FisherMarket) -> Result<Self> {
        let spec = StructuredGameSpec::fisher(&market.budgets)?;
        Ok(Self { market, spec })
    }
}

impl LogSeparableGame for FisherKktForm {
    fn spec(&self) -> &StructuredGameSpec {
        &self.spec
    }

    fn outer_dim(&self) -> usize {
        self.market.m
    }

    fn block_dim(&self) -> usize {
        self.market.m
    }

    fn f1(&self, p: &[f64]) -> f64 {
        p.iter().sum()
    }

    fn grad_f1(&self, p: &[f64]) -> Vec<f64> {
        vec![1.0; p.len()]
    }

    fn f2(&self, _p: &[f64], block: usize, x: &[f64]) -> f64 {
        self.market.buyer(block).value(x)
    }

    fn grad_f2(&self, p: &[f64], block: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; p.len()], self.market.buyer(block).gradient(x))
    }

    fn f3(&self, _block: usize, _x: &[f64]) -> f64 {
        1.0
    }

    fn grad_f3(&self, _block: usize, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn constraint(&self, p: &[f64], _block: usize, x: &[f64]) -> f64 {
        dot(p, x)
    }

    fn grad_constraint(&self, p: &[f64], _block: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (x.to_vec(), p.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{generate_market, MarketSpec, UtilityClass};
    use crate::kkt::{closed_form_multipliers, verify_kkt_stationarity};

    #[test]
    fn single_unit_objective() {
        let mk = FisherMarket::new(vec![1.0], UtilityClass::Linear, vec![vec![1.0]]).unwrap();
        assert_eq!(eg_objective(&mk, &[1.0], &[vec![1.0]], 0.0).unwrap(), 1.0);
        let err = eg_objective(&mk, &[1.0], &[vec![0.0]], 0.0).unwrap_err();
        assert!(err.to_string().contains("buyer 0"), "{err}");
    }

    #[test]
    fn delta_shift_identity() {
        let mk = generate_market(2, &MarketSpec::default(), UtilityClass::Linear).unwrap();
        let p = vec![7.0; 8];
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 + 0.01 * i as f64; 8]).collect();
        let shift: f64 = (0..5)
            .map(|i| {
                let u = mk.buyer(i).value(&x[i]);
                mk.budgets[i] * ((u + 0.3).ln() - u.ln())
            })
            .sum();
        let diff = eg_objective(&mk, &p, &x, 0.3).unwrap() - eg_objective(&mk, &p, &x, 0.0).unwrap();
        assert!((diff - shift).abs() < 1e-10);
    }

    #[test]
    fn price_gradient_is_excess_supply() {
        let mk = generate_market(4, &MarketSpec::default(), UtilityClass::CobbDouglas).unwrap();
        let game = fisher_game(&mk, 0.0).unwrap();
        let p: Vec<f64> = (0..8).map(|j| 5.0 + j as f64).collect();
        let y: Vec<f64> = (0..40).map(|k| 0.05 + 0.001 * k as f64).collect();
        let grads = game.lagrangian_gradients(&p, &y, &[1.0; 5]).unwrap();
        for j in 0..8 {
            let demand: f64 = (0..5).map(|i| y[i * 8 + j]).sum();
            assert_eq!(grads.x[j], 1.0 - demand);
            let h = 1e-6;
            let mut up = p.clone();
            let mut down = p.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (game.eval_lagrangian(&up, &y, &[1.0; 5]).unwrap()
                - game.eval_lagrangian(&down, &y, &[1.0; 5]).unwrap())
                / (2.0 * h);
            assert!((fd - grads.x[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn decoupled_cobb_douglas_exploitability() {
        let mk = FisherMarket::new(
            vec![1.0, 1.0],
            UtilityClass::CobbDouglas,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let e = exploitability(&mk, &[2.0, 1.0], 2.0, 0.0).unwrap();
        assert!((e.value - (1.0 - 2f64.ln())).abs() < 1e-12);
        assert!(exploitability(&mk, &[1.0, 1.0], 2.0, 0.0).unwrap().value.abs() < 1e-12);
        // swapping goods together with valuations changes nothing
        let swapped = FisherMarket::new(
            vec![1.0, 1.0],
            UtilityClass::CobbDouglas,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let s = exploitability(&swapped, &[1.0, 2.0], 2.0, 0.0).unwrap();
        assert!((s.value - e.value).abs() < 1e-12);
    }

    #[test]
    fn fisher_multipliers_satisfy_kkt() {
        let single = FisherKktForm::new(
            FisherMarket::new(vec![1.0], UtilityClass::Linear, vec![vec![1.0]]).unwrap(),
        )
        .unwrap();
        let lambda = closed_form_multipliers(single.spec()).unwrap();
        assert_eq!(lambda, vec![1.0]);
        let r = verify_kkt_stationarity(&single, &lambda, |p| single.market.demands(p), &[vec![0.5], vec![3.0]])
            .unwrap();
        assert!(r.max_residual() < 1e-8, "{r:?}");

        let cd = FisherKktForm::new(
            FisherMarket::new(vec![2.0], UtilityClass::CobbDouglas, vec![vec![1.0, 1.0]]).unwrap(),
        )
        .unwrap();
        assert_eq!(cd.market.demands(&[1.0, 1.0]).unwrap(), vec![vec![1.0, 1.0]]);
        let r = verify_kkt_stationarity(&cd, &[1.0], |p| cd.market.demands(p), &[vec![1.0, 1.0]]).unwrap();
        assert!(r.max_residual() < 1e-6, "{r:?}");

        let linear = FisherKktForm::new(generate_market(9, &MarketSpec::default(), UtilityClass::Linear).unwrap())
            .unwrap();
        let ps: Vec<Vec<f64>> = (0..5).map(|k| (0..8).map(|j| 3.0 + ((j * 7 + k) % 5) as f64).collect()).collect();
        let r = verify_kkt_stationarity(&linear, &[1.0; 5], |p| linear.market.demands(p), &ps).unwrap();
        assert!(r.max_residual() < 1e-9, "{r:?}");
    }
}
