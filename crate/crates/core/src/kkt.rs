//! Closed-form optimal KKT multipliers for log-separable games.
//!
//! The games covered here have the shape
//!
//! ```text
//! min_x max_{Y : g_i(x, y_i) <= c_i}  f1(x) + sum_i a_i log f2(x, y_i) + sum_i b_i log f3(y_i)
//! ```
//!
//! with `f2`, `f3` concave and homogeneous of degree one in `y_i` and each
//! `g_i` concave. Euler's identity then pins the multiplier of block `i` at
//! `(a_i + b_i) / c_i`, independently of `x`.
//!
//! Constraints are stored here in the `g_i <= c_i` form; [`to_game_definition`]
//! emits the `c_i - g_i >= 0` form used everywhere else in the crate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::game::GameDefinition;
use crate::linalg::dot;
use crate::projection::ProjectionSpec;

/// Per-block weights `a`, `b` and constraint levels `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredGameSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl StructuredGameSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let spec = Self { a, b, c };
        spec.validate()?;
        Ok(spec)
    }

    /// The Fisher program: `a = budgets`, `b = 0`, `c = budgets`.
    pub fn fisher(budgets: &[f64]) -> Result<Self> {
        Self::new(budgets.to_vec(), vec![0.0; budgets.len()], budgets.to_vec())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("b", self.a.len(), self.b.len())?;
        check_len("c", self.a.len(), self.c.len())?;
        if let Some(i) = self.c.iter().position(|c| !(*c > 0.0)) {
            return Err(Error::Domain(format!("c[{i}] = {} must be positive", self.c[i])));
        }
        if let Some(i) = self.a.iter().chain(&self.b).position(|w| !(*w >= 0.0)) {
            return Err(Error::Domain(format!("log weight #{i} must be nonnegative")));
        }
        Ok(())
    }
}

/// `lambda*_i = (a_i + b_i) / c_i`.
pub fn closed_form_multipliers(spec: &StructuredGameSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(spec
        .a
        .iter()
        .zip(&spec.b)
        .zip(&spec.c)
        .map(|((a, b), c)| (a + b) / c)
        .collect())
}

/// Worst relative violations of degree-one homogeneity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// `max |f(k y) - k f(y)|`, relative.
    pub scaling: f64,
    /// `max |grad f(y) . y - f(y)|`, relative, with a finite-difference gradient.
    pub euler: f64,
}

impl HomogeneityReport {
    pub fn max_violation(&self) -> f64 {
        self.scaling.max(self.euler)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Checks `f(k y) = k f(y)` and Euler's identity `grad f(y) . y = f(y)` on
/// every sample point and positive scale.
pub fn verify_homogeneity(
    f: impl Fn(&[f64]) -> f64,
    points: &[Vec<f64>],
    scales: &[f64],
) -> HomogeneityReport {
    let mut report = HomogeneityReport::default();
    for y in points {
        let fy = f(y);
        for &k in scales {
            let ky: Vec<f64> = y.iter().map(|v| k * v).collect();
            report.scaling = report.scaling.max(rel(f(&ky), k * fy));
        }
        let grad: Vec<f64> = (0..y.len())
            .map(|j| {
                let h = 1e-6 * 1f64.max(y[j].abs());
                let mut up = y.clone();
                let mut down = y.clone();
                up[j] += h;
                down[j] -= h;
                (f(&up) - f(&down)) / (2.0 * h)
            })
            .collect();
        report.euler = report.euler.max(rel(dot(&grad, y), fy));
    }
    report
}

/// A game in the log-separable form above, one inner block per constraint.
///
/// The inner player's base set is the nonnegative orthant in every block.
pub trait LogSeparableGame: Send + Sync {
    fn spec(&self) -> &StructuredGameSpec;
    fn outer_dim(&self) -> usize;
    fn block_dim(&self) -> usize;

    fn f1(&self, x: &[f64]) -> f64;
    fn grad_f1(&self, x: &[f64]) -> Vec<f64>;
    fn f2(&self, x: &[f64], block: usize, y: &[f64]) -> f64;
    /// Gradients of `f2` with respect to `(x, y_i)`.
    fn grad_f2(&self, x: &[f64], block: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>);
    fn f3(&self, block: usize, y: &[f64]) -> f64;
    fn grad_f3(&self, block: usize, y: &[f64]) -> Vec<f64>;
    /// `g_i(x, y_i)`, feasible when `<= c_i`.
    fn constraint(&self, x: &[f64], block: usize, y: &[f64]) -> f64;
    fn grad_constraint(&self, x: &[f64], block: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>);
}

fn weighted_log_grad(weight: f64, value: f64, grad: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let s = if weight == 0.0 { 0.0 } else { weight / value };
    grad.iter().map(move |g| s * g)
}

/// Residuals of the first-order KKT conditions at the oracle's maximizers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KktReport {
    /// `max_i |lambda_i (c_i - g_i)|`, relative to `max(1, lambda_i c_i)`.
    pub complementarity: f64,
    /// Distance of `grad_y L` from the orthant's normal cone, relative to
    /// the size of the multiplier term.
    pub stationarity: f64,
    /// `max_i max(g_i - c_i, 0)` and negativity of `y`.
    pub primal_feasibility: f64,
    pub samples: usize,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.complementarity.max(self.stationarity).max(self.primal_feasibility)
    }
}

/// Checks that `lambda_star` satisfies complementary slackness and
/// stationarity with the inner maximizers returned by `inner_argmax` at each
/// sampled outer point.
pub fn verify_kkt_stationarity<G, O>(
    game: &G,
    lambda_star: &[f64],
    inner_argmax: O,
    outer_points: &[Vec<f64>],
) -> Result<KktReport>
where
    G: LogSeparableGame + ?Sized,
    O: Fn(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    let spec = game.spec();
    check_len("lambda_star", spec.len(), lambda_star.len())?;
    let mut report = KktReport {
        samples: outer_points.len(),
        ..Default::default()
    };
    for x in outer_points {
        check_len("x", game.outer_dim(), x.len())?;
        let blocks = inner_argmax(x)?;
        check_len("argmax blocks", spec.len(), blocks.len())?;
        for (i, y) in blocks.iter().enumerate() {
            check_len("argmax block", game.block_dim(), y.len())?;
            let lambda = lambda_star[i];
            let g = game.constraint(x, i, y);
            let slack = spec.c[i] - g;
            report.complementarity = report
                .complementarity
                .max((lambda * slack).abs() / 1f64.max(lambda * spec.c[i]));
            report.primal_feasibility = report
                .primal_feasibility
                .max((-slack).max(0.0))
                .max(y.iter().fold(0.0, |m, v| m.max(-v)));

            let (_, grad_f2) = game.grad_f2(x, i, y);
            let grad_f3 = game.grad_f3(i, y);
            let (_, grad_g) = game.grad_constraint(x, i, y);
            let f2 = game.f2(x, i, y);
            let f3 = game.f3(i, y);
            let objective: Vec<f64> = weighted_log_grad(spec.a[i], f2, &grad_f2)
                .zip(weighted_log_grad(spec.b[i], f3, &grad_f3))
                .map(|(u, v)| u + v)
                .collect();
            for ((dobj, dg), yj) in objective.iter().zip(&grad_g).zip(y) {
                let penalty = lambda * dg;
                let d = dobj - penalty;
                // at y_j = 0 the orthant's normal cone admits d <= 0
                let r = if *yj > 1e-12 { d.abs() } else { d.max(0.0) };
                report.stationarity = report.stationarity.max(r / 1f64.max(penalty.abs()));
            }
        }
    }
    Ok(report)
}

/// Builds the min-max game `min_x max_{Y >= 0 : c_i - g_i(x, y_i) >= 0} f`.
///
/// The inner variable is the concatenation of all blocks.
pub fn to_game_definition<G: LogSeparableGame + 'static>(
    game: Arc<G>,
    outer_set: ProjectionSpec,
) -> Result<GameDefinition> {
    let blocks = game.spec().len();
    let k = game.block_dim();
    let n = game.outer_dim();

    let value = {
        let g = game.clone();
        move |x: &[f64], y: &[f64]| {
            let s = g.spec();
            (0..blocks).fold(g.f1(x), |acc, i| {
                let yi = &y[i * k..(i + 1) * k];
                let mut v = acc;
                if s.a[i] != 0.0 {
                    v += s.a[i] * g.f2(x, i, yi).ln();
                }
                if s.b[i] != 0.0 {
                    v += s.b[i] * g.f3(i, yi).ln();
                }
                v
            })
        }
    };
    let grad_x = {
        let g = game.clone();
        move |x: &[f64], y: &[f64]| {
            let s = g.spec();
            let mut out = g.grad_f1(x);
            for i in 0..blocks {
                if s.a[i] == 0.0 {
                    continue;
                }
                let yi = &y[i * k..(i + 1) * k];
                let (gx, _) = g.grad_f2(x, i, yi);
                let scale = s.a[i] / g.f2(x, i, yi);
                out.iter_mut().zip(gx).for_each(|(o, v)| *o += scale * v);
            }
            out
        }
    };
    let grad_y = {
        let g = game.clone();
        move |x: &[f64], y: &[f64]| {
            let s = g.spec();
            let mut out = Vec::with_capacity(blocks * k);
            for i in 0..blocks {
                let yi = &y[i * k..(i + 1) * k];
                let (_, g2) = g.grad_f2(x, i, yi);
                let g3 = g.grad_f3(i, yi);
                out.extend(
                    weighted_log_grad(s.a[i], g.f2(x, i, yi), &g2)
                        .zip(weighted_log_grad(s.b[i], g.f3(i, yi), &g3))
                        .map(|(u, v)| u + v),
                );
            }
            out
        }
    };
    let cons = {
        let g = game.clone();
        move |x: &[f64], y: &[f64]| {
            (0..blocks)
                .map(|i| g.spec().c[i] - g.constraint(x, i, &y[i * k..(i + 1) * k]))
                .collect()
        }
    };
    let cons_x = {
        let g = game.clone();
        move |x: &[f64], y: &[f64]| {
            (0..blocks)
                .map(|i| {
                    let (gx, _) = g.grad_constraint(x, i, &y[i * k..(i + 1) * k]);
                    gx.into_iter().map(|v| -v).collect()
                })
                .collect()
        }
    };
    let cons_y = {
        let g = game.clone();
        move |x: &[f64], y: &[f64]| {
            (0..blocks)
                .map(|i| {
                    let (_, gy) = g.grad_constraint(x, i, &y[i * k..(i + 1) * k]);
                    let mut row = vec![0.0; blocks * k];
                    for (j, v) in gy.into_iter().enumerate() {
                        row[i * k + j] = -v;
                    }
                    row
                })
                .collect()
        }
    };
    let _ = n;
    GameDefinition::builder("log-separable", game.outer_dim(), blocks * k)
        .objective(value, grad_x, grad_y)
        .constraints(blocks, cons, cons_x, cons_y)
        .outer_set(outer_set)
        .inner_set(ProjectionSpec::NonnegativeOrthant)
        .build()
}

/// Toy instance of the log-separable form with Cobb-Douglas pieces.
///
/// The outer variable `x` acts as a price vector: `f1(x) = sum_j x_j`,
/// `f2(x, y) = prod_j (x_j y_j)^alpha_j`, `f3(y) = prod_j y_j^beta_j` and
/// `g_i(x, y_i) = x . y_i`. Exponent rows sum to one, so both pieces are
/// homogeneous of degree one in `y_i`, and the inner maximizer is known in
/// closed form.
#[derive(Debug, Clone)]
pub struct CobbDouglasToyGame {
    pub spec: StructuredGameSpec,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl CobbDouglasToyGame {
    pub fn new(spec: StructuredGameSpec, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        spec.validate()?;
        check_len("alpha", spec.len(), alpha.len())?;
        check_len("beta", spec.len(), beta.len())?;
        let k = alpha.first().map_or(0, Vec::len);
        for row in alpha.iter().chain(&beta) {
            check_len("exponent row", k, row.len())?;
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 || row.iter().any(|e| *e < 0.0) {
                return Err(Error::Domain("exponent rows must be nonnegative and sum to one".into()));
            }
        }
        Ok(Self { spec, alpha, beta })
    }

    /// `y_ij = c_i w_ij / ((a_i + b_i) x_j)` with `w = a alpha + b beta`.
    pub fn inner_argmax(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len("x", self.block_dim(), x.len())?;
        if x.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Domain("toy game needs strictly positive x".into()));
        }
        Ok((0..self.spec.len())
            .map(|i| {
                let total = self.spec.a[i] + self.spec.b[i];
                if total == 0.0 {
                    return vec![0.0; x.len()];
                }
                x.iter()
                    .enumerate()
                    .map(|(j, p)| {
                        let w = self.spec.a[i] * self.alpha[i][j] + self.spec.b[i] * self.beta[i][j];
                        self.spec.c[i] * w / (total * p)
                    })
                    .collect()
            })
            .collect())
    }
}

fn cobb_douglas(exps: &[f64], z: impl Iterator<Item = f64>) -> f64 {
    exps.iter()
        .zip(z)
        .filter(|(e, _)| **e > 0.0)
        .map(|(e, v)| v.powf(*e))
        .product()
}

fn cobb_douglas_grad(exps: &[f64], value: f64, z: &[f64]) -> Vec<f64> {
    exps.iter()
        .zip(z)
        .map(|(e, v)| if *e > 0.0 { e * value / v } else { 0.0 })
        .collect()
}

impl LogSeparableGame for CobbDouglasToyGame {
    fn spec(&self) -> &StructuredGameSpec {
        &self.spec
    }

    fn outer_dim(&self) -> usize {
        self.block_dim()
    }

    fn block_dim(&self) -> usize {
        self.alpha.first().map_or(0, Vec::len)
    }

    fn f1(&self, x: &[f64]) -> f64 {
        x.iter().sum()
    }

    fn grad_f1(&self, x: &[f64]) -> Vec<f64> {
        vec![1.0; x.len()]
    }

    fn f2(&self, x: &[f64], block: usize, y: &[f64]) -> f64 {
        cobb_douglas(&self.alpha[block], x.iter().zip(y).map(|(p, q)| p * q))
    }

    fn grad_f2(&self, x: &[f64], block: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = self.f2(x, block, y);
        (
            cobb_douglas_grad(&self.alpha[block], v, x),
            cobb_douglas_grad(&self.alpha[block], v, y),
        )
    }

    fn f3(&self, block: usize, y: &[f64]) -> f64 {
        cobb_douglas(&self.beta[block], y.iter().copied())
    }

    fn grad_f3(&self, block: usize, y: &[f64]) -> Vec<f64> {
        cobb_douglas_grad(&self.beta[block], self.f3(block, y), y)
    }

    fn constraint(&self, x: &[f64], _block: usize, y: &[f64]) -> f64 {
        dot(x, y)
    }

    fn grad_constraint(&self, x: &[f64], _block: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (y.to_vec(), x.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_formula() {
        let spec = StructuredGameSpec::new(vec![1.0, 2.0], vec![0.0, 3.0], vec![1.0, 5.0]).unwrap();
        assert_eq!(closed_form_multipliers(&spec).unwrap(), vec![1.0, 1.0]);
        let zero = StructuredGameSpec::new(vec![0.0; 3], vec![0.0; 3], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(closed_form_multipliers(&zero).unwrap(), vec![0.0; 3]);
        let fisher = StructuredGameSpec::fisher(&[10.0, 12.5, 19.0]).unwrap();
        assert_eq!(closed_form_multipliers(&fisher).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn nonpositive_levels_are_domain_errors() {
        assert!(StructuredGameSpec::new(vec![1.0], vec![0.0], vec![0.0]).is_err());
        let bad = StructuredGameSpec {
            a: vec![1.0],
            b: vec![1.0],
            c: vec![-2.0],
        };
        assert!(matches!(closed_form_multipliers(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn homogeneity_checks() {
        let pts = vec![vec![1.0, 2.0], vec![0.3, 4.0], vec![2.5, 0.7]];
        let scales = [0.5, 2.0, 3.7];
        let linear = verify_homogeneity(|y| 2.0 * y[0] + 3.0 * y[1], &pts, &scales);
        assert!(linear.max_violation() < 1e-9, "{linear:?}");
        let cd = verify_homogeneity(|y| y[0].powf(0.3) * y[1].powf(0.7), &pts, &scales);
        assert!(cd.max_violation() < 1e-6, "{cd:?}");
        let square = verify_homogeneity(|y| y[0] * y[0], &[vec![1.0]], &[2.0]);
        assert!((square.scaling - 0.5).abs() < 1e-12, "{square:?}");
    }

    #[test]
    fn toy_game_satisfies_kkt() {
        let spec = StructuredGameSpec::new(vec![2.0, 0.0], vec![1.0, 0.0], vec![3.0, 1.0]).unwrap();
        let game = CobbDouglasToyGame::new(
            spec.clone(),
            vec![vec![0.2, 0.8], vec![0.5, 0.5]],
            vec![vec![0.6, 0.4], vec![1.0, 0.0]],
        )
        .unwrap();
        let lambda = closed_form_multipliers(&spec).unwrap();
        assert_eq!(lambda[1], 0.0);
        let xs = vec![vec![1.0, 2.0], vec![0.4, 7.0]];
        let r = verify_kkt_stationarity(&game, &lambda, |x| game.inner_argmax(x), &xs).unwrap();
        assert!(r.max_residual() < 1e-12, "{r:?}");
        // a wrong multiplier breaks stationarity
        let r = verify_kkt_stationarity(&game, &[2.0, 0.0], |x| game.inner_argmax(x), &xs).unwrap();
        assert!(r.stationarity > 0.1, "{r:?}");
    }

    #[test]
    fn emitted_game_uses_nonnegative_constraint_form() {
        let spec = StructuredGameSpec::new(vec![1.0], vec![1.0], vec![2.0]).unwrap();
        let game = Arc::new(
            CobbDouglasToyGame::new(spec, vec![vec![0.5, 0.5]], vec![vec![0.25, 0.75]]).unwrap(),
        );
        let def = to_game_definition(game.clone(), ProjectionSpec::NonnegativeOrthant).unwrap();
        let x = [1.0, 2.0];
        let y = game.inner_argmax(&x).unwrap().concat();
        assert!(def.constraints(&x, &y)[0].abs() < 1e-12);
        assert!(def.constraints(&x, &[0.1, 0.1])[0] > 0.0);
        let report = crate::game::check_gradients(&def, 20, 1e-6, 5).unwrap();
        assert!(report.max_error() < 1e-5, "{report:?}");
        let lambda = closed_form_multipliers(&game.spec).unwrap();
        let grads = def.lagrangian_gradients(&x, &y, &lambda).unwrap();
        assert!(grads.y.iter().all(|v| v.abs() < 1e-9), "{grads:?}");
    }
}
