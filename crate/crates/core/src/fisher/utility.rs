use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::dot;

/// Coordinates below this are lifted before differentiating a Cobb-Douglas
/// utility.
pub const COBB_DOUGLAS_GRADIENT_FLOOR: f64 = 1e-9;

/// The utility families supported by the market model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityClass {
    Linear,
    CobbDouglas,
    Leontief,
}

impl UtilityClass {
    pub const ALL: [UtilityClass; 3] = [Self::Linear, Self::CobbDouglas, Self::Leontief];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::CobbDouglas => "cobb-douglas",
            Self::Leontief => "leontief",
        }
    }
}

impl fmt::Display for UtilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for UtilityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "cobb-douglas" | "cd" => Ok(Self::CobbDouglas),
            "leontief" => Ok(Self::Leontief),
            other => Err(Error::Unknown {
                kind: "utility class",
                name: other.into(),
            }),
        }
    }
}

/// A utility function: a class together with a valuation vector.
#[derive(Debug, Clone, Copy)]
pub struct Utility<'a> {
    pub class: UtilityClass,
    pub valuations: &'a [f64],
}

impl<'a> Utility<'a> {
    pub fn new(class: UtilityClass, valuations: &'a [f64]) -> Self {
        Self { class, valuations }
    }

    /// Cobb-Douglas exponents `v / sum(v)`.
    pub fn exponents(&self) -> Vec<f64> {
        let total: f64 = self.valuations.iter().sum();
        self.valuations.iter().map(|v| v / total).collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let v = self.valuations;
        match self.class {
            UtilityClass::Linear => dot(v, x),
            UtilityClass::CobbDouglas => self
                .exponents()
                .iter()
                .zip(x)
                .filter(|(a, _)| **a > 0.0)
                .map(|(a, xj)| xj.max(0.0).powf(*a))
                .product(),
            UtilityClass::Leontief => v
                .iter()
                .zip(x)
                .filter(|(vj, _)| **vj > 0.0)
                .map(|(vj, xj)| xj / vj)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Gradient, or for Leontief the subgradient supported on the lowest
    /// minimizing index.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let v = self.valuations;
        match self.class {
            UtilityClass::Linear => v.to_vec(),
            UtilityClass::CobbDouglas => {
                let lifted: Vec<f64> = x.iter().map(|xj| xj.max(COBB_DOUGLAS_GRADIENT_FLOOR)).collect();
                let u = self.value(&lifted);
                self.exponents()
                    .iter()
                    .zip(&lifted)
                    .map(|(a, xj)| if *a > 0.0 { a * u / xj } else { 0.0 })
                    .collect()
            }
            UtilityClass::Leontief => {
                let mut grad = vec![0.0; x.len()];
                if let Some(k) = leontief_binding(v, x) {
                    grad[k] = 1.0 / v[k];
                }
                grad
            }
        }
    }

    /// Ascent direction `budget / (u(x) + delta) * grad u(x)` of the buyer's
    /// log-utility term. Cobb-Douglas evaluates both factors at the lifted
    /// bundle so that boundary bundles keep a finite direction.
    pub fn log_gradient(&self, x: &[f64], budget: f64, delta: f64) -> Vec<f64> {
        let u = match self.class {
            UtilityClass::CobbDouglas => {
                let lifted: Vec<f64> = x.iter().map(|xj| xj.max(COBB_DOUGLAS_GRADIENT_FLOOR)).collect();
                self.value(&lifted)
            }
            _ => self.value(x),
        };
        let scale = budget / (u + delta);
        self.gradient(x).into_iter().map(|g| scale * g).collect()
    }

    /// Utility-maximizing bundle under `x . p <= budget`.
    ///
    /// Linear buyers spend everything on a good of maximal bang-per-buck,
    /// breaking ties by lowest index.
    pub fn demand(&self, budget: f64, prices: &[f64]) -> Result<Vec<f64>> {
        check_len("prices", self.valuations.len(), prices.len())?;
        let v = self.valuations;
        let m = v.len();
        let unbounded = |j: usize| {
            Error::UnboundedDemand(format!("good {j} is valued but has price {}", prices[j]))
        };
        match self.class {
            UtilityClass::Linear => {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..m {
                    if v[j] <= 0.0 {
                        continue;
                    }
                    if prices[j] <= 0.0 {
                        return Err(unbounded(j));
                    }
                    let bang = v[j] / prices[j];
                    if best.is_none_or(|(_, b)| bang > b) {
                        best = Some((j, bang));
                    }
                }
                let (j, _) = best.ok_or_else(|| Error::Domain("valuations are all zero".into()))?;
                let mut x = vec![0.0; m];
                x[j] = budget / prices[j];
                Ok(x)
            }
            UtilityClass::CobbDouglas => self
                .exponents()
                .iter()
                .enumerate()
                .map(|(j, a)| match *a > 0.0 {
                    false => Ok(0.0),
                    true if prices[j] > 0.0 => Ok(budget * a / prices[j]),
                    true => Err(unbounded(j)),
                })
                .collect(),
            UtilityClass::Leontief => {
                let cost = dot(v, prices);
                if !(cost > 0.0) {
                    return Err(Error::UnboundedDemand("valued goods are all free".into()));
                }
                Ok(v.iter().map(|vj| vj * budget / cost).collect())
            }
        }
    }

    /// `u(demand(budget, p))` without materializing the bundle.
    pub fn indirect_utility(&self, budget: f64, prices: &[f64]) -> Result<f64> {
        Ok(self.value(&self.demand(budget, prices)?))
    }
}

fn leontief_binding(v: &[f64], x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, (vj, xj)) in v.iter().zip(x).enumerate() {
        if *vj > 0.0 {
            let r = xj / vj;
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((j, r));
            }
        }
    }
    best.map(|(j, _)| j)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn utility_values() {
        let lin = Utility::new(UtilityClass::Linear, &[2.0, 1.0]);
        assert_eq!(lin.value(&[1.0, 1.0]), 3.0);
        assert_eq!(lin.gradient(&[1.0, 1.0]), vec![2.0, 1.0]);
        let leo = Utility::new(UtilityClass::Leontief, &[1.0, 2.0]);
        assert_eq!(leo.value(&[2.0, 2.0]), 1.0);
        assert_eq!(leo.gradient(&[2.0, 2.0]), vec![0.0, 0.5]);
        let cd = Utility::new(UtilityClass::CobbDouglas, &[1.0, 1.0]);
        assert!((cd.value(&[4.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn leontief_ties_pick_lowest_index() {
        let leo = Utility::new(UtilityClass::Leontief, &[1.0, 2.0, 1.0]);
        assert_eq!(leo.gradient(&[1.0, 2.0, 1.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn cobb_douglas_boundary_gradient_is_finite() {
        let cd = Utility::new(UtilityClass::CobbDouglas, &[1.0, 3.0]);
        assert_eq!(cd.value(&[0.0, 2.0]), 0.0);
        let g = cd.gradient(&[0.0, 2.0]);
        assert!(g.iter().all(|v| v.is_finite() && *v > 0.0), "{g:?}");
        let d = cd.log_gradient(&[0.0, 2.0], 4.0, 0.0);
        assert!((d[0] - 4.0 * 0.25 / COBB_DOUGLAS_GRADIENT_FLOOR).abs() < 1e-3);
        assert!((d[1] - 4.0 * 0.75 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_demands() {
        let lin = Utility::new(UtilityClass::Linear, &[2.0, 1.0]);
        assert_eq!(lin.demand(10.0, &[1.0, 1.0]).unwrap(), vec![10.0, 0.0]);
        let tie = Utility::new(UtilityClass::Linear, &[2.0, 1.0]);
        assert_eq!(tie.demand(4.0, &[2.0, 1.0]).unwrap(), vec![2.0, 0.0]);
        let leo = Utility::new(UtilityClass::Leontief, &[1.0, 2.0]);
        assert!(close(&leo.demand(10.0, &[2.0, 1.0]).unwrap(), &[2.5, 5.0]));
        let cd = Utility::new(UtilityClass::CobbDouglas, &[1.0, 1.0]);
        assert!(close(&cd.demand(10.0, &[1.0, 1.0]).unwrap(), &[5.0, 5.0]));
    }

    #[test]
    fn free_valued_goods_make_demand_unbounded() {
        let lin = Utility::new(UtilityClass::Linear, &[2.0, 1.0]);
        assert!(matches!(lin.demand(1.0, &[0.0, 1.0]), Err(Error::UnboundedDemand(_))));
        // a free good nobody values is harmless
        let lin = Utility::new(UtilityClass::Linear, &[0.0, 1.0]);
        assert_eq!(lin.demand(1.0, &[0.0, 2.0]).unwrap(), vec![0.0, 0.5]);
        let leo = Utility::new(UtilityClass::Leontief, &[1.0, 0.0]);
        assert!(leo.demand(1.0, &[0.0, 3.0]).is_err());
        let cd = Utility::new(UtilityClass::CobbDouglas, &[1.0, 1.0]);
        assert!(cd.demand(1.0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn class_names_round_trip() {
        for c in UtilityClass::ALL {
            assert_eq!(c.as_str().parse::<UtilityClass>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{c}\""));
        }
        assert!("ces".parse::<UtilityClass>().is_err());
    }
}
