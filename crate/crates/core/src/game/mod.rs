//! Min-max Stackelberg games with dependent strategy sets.
//!
//! The outer player picks `x` in `X`, the inner player then picks `y` in
//! `{y in Y : g(x, y) >= 0}`, and the payoff `f(x, y)` is minimized by the
//! outer player and maximized by the inner one.

mod catalog;
mod gradcheck;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result, Violation};
use crate::linalg::{dot, transpose_mul};
use crate::projection::ProjectionSpec;

pub use catalog::{builtin_games, catalog_game, CatalogGame, CATALOG_IDS};
pub use gradcheck::{check_gradients, sample_interior, GradientCheckReport};

/// Slack under which a constraint value still counts as satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
/// Returns a matrix as a list of rows.
pub type MatrixFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<Vec<f64>> + Send + Sync>;
pub type SliceFn = Arc<dyn Fn(&[f64]) -> Result<ProjectionSpec> + Send + Sync>;

/// A min-max Stackelberg game given by value and gradient evaluators.
///
/// Constraints use the `g(x, y) >= 0` convention. Values are immutable once
/// built and cheap to clone (evaluators are reference counted).
#[derive(Clone)]
pub struct GameDefinition {
    pub name: String,
    pub outer_dim: usize,
    pub inner_dim: usize,
    pub num_constraints: usize,
    objective: ScalarFn,
    grad_x_objective: VectorFn,
    grad_y_objective: VectorFn,
    constraints: VectorFn,
    grad_x_constraints: MatrixFn,
    grad_y_constraints: MatrixFn,
    pub outer_set: ProjectionSpec,
    pub inner_base_set: ProjectionSpec,
    inner_slice: Option<SliceFn>,
    affine_in_y: bool,
}

impl fmt::Debug for GameDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameDefinition")
            .field("name", &self.name)
            .field("outer_dim", &self.outer_dim)
            .field("inner_dim", &self.inner_dim)
            .field("num_constraints", &self.num_constraints)
            .field("outer_set", &self.outer_set)
            .field("inner_base_set", &self.inner_base_set)
            .finish_non_exhaustive()
    }
}

impl GameDefinition {
    pub fn builder(name: impl Into<String>, outer_dim: usize, inner_dim: usize) -> GameBuilder {
        GameBuilder::new(name.into(), outer_dim, inner_dim)
    }

    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.objective)(x, y)
    }

    pub fn grad_x_objective(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_x_objective)(x, y)
    }

    pub fn grad_y_objective(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_y_objective)(x, y)
    }

    pub fn constraints(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.constraints)(x, y)
    }

    pub fn grad_x_constraints(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        (self.grad_x_constraints)(x, y)
    }

    pub fn grad_y_constraints(&self, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
        (self.grad_y_constraints)(x, y)
    }

    /// The inner player's feasible set `{y in Y : g(x, y) >= 0}` at a fixed `x`.
    ///
    /// Games either supply this directly or declare their constraints affine
    /// in `y`, in which case the slice is `Y` intersected with halfspaces.
    pub fn constraint_slice(&self, x: &[f64]) -> Result<ProjectionSpec> {
        check_len("x", self.outer_dim, x.len())?;
        if let Some(slice) = &self.inner_slice {
            return slice(x);
        }
        if self.num_constraints == 0 {
            return Ok(self.inner_base_set.clone());
        }
        if !self.affine_in_y {
            return Err(Error::InvalidSet(format!(
                "game `{}` has no constraint-slice description",
                self.name
            )));
        }
        let zero = vec![0.0; self.inner_dim];
        let g0 = self.constraints(x, &zero);
        let jac = self.grad_y_constraints(x, &zero);
        let mut members = vec![self.inner_base_set.clone()];
        for (k, (row, g)) in jac.iter().zip(&g0).enumerate() {
            if row.iter().all(|a| *a == 0.0) {
                if *g < -FEASIBILITY_TOL {
                    return Err(Error::Infeasible {
                        violations: vec![Violation {
                            what: "g".into(),
                            index: k,
                            value: *g,
                        }],
                    });
                }
                continue;
            }
            // g0 + row.y >= 0  <=>  -row.y <= g0
            members.push(ProjectionSpec::Halfspace {
                normal: row.iter().map(|a| -a).collect(),
                offset: *g,
            });
        }
        Ok(if members.len() == 1 {
            members.pop().unwrap()
        } else {
            ProjectionSpec::Intersection(members)
        })
    }

    fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        check_len("x", self.outer_dim, x.len())?;
        check_len("y", self.inner_dim, y.len())
    }

    fn check_multipliers(&self, lambda: &[f64]) -> Result<()> {
        check_len("lambda", self.num_constraints, lambda.len())?;
        if let Some(k) = lambda.iter().position(|l| !(*l >= 0.0)) {
            return Err(Error::Domain(format!(
                "multiplier lambda[{k}] = {} is negative",
                lambda[k]
            )));
        }
        Ok(())
    }

    /// `L(x, y, lambda) = f(x, y) + lambda . g(x, y)`.
    pub fn eval_lagrangian(&self, x: &[f64], y: &[f64], lambda: &[f64]) -> Result<f64> {
        self.check_point(x, y)?;
        self.check_multipliers(lambda)?;
        Ok(self.lagrangian_unchecked(x, y, lambda))
    }

    pub(crate) fn lagrangian_unchecked(&self, x: &[f64], y: &[f64], lambda: &[f64]) -> f64 {
        let f = self.objective(x, y);
        if lambda.iter().all(|l| *l == 0.0) {
            return f;
        }
        f + dot(lambda, &self.constraints(x, y))
    }

    /// Gradients of the Lagrangian with respect to `x`, `y` and `lambda`.
    pub fn lagrangian_gradients(
        &self,
        x: &[f64],
        y: &[f64],
        lambda: &[f64],
    ) -> Result<LagrangianGradients> {
        self.check_point(x, y)?;
        self.check_multipliers(lambda)?;
        Ok(LagrangianGradients {
            x: self.lagrangian_grad_x(x, y, lambda),
            y: self.lagrangian_grad_y(x, y, lambda),
            lambda: self.constraints(x, y),
        })
    }

    pub(crate) fn lagrangian_grad_x(&self, x: &[f64], y: &[f64], lambda: &[f64]) -> Vec<f64> {
        let mut g = self.grad_x_objective(x, y);
        if lambda.iter().any(|l| *l != 0.0) {
            let jt = transpose_mul(&self.grad_x_constraints(x, y), lambda, self.outer_dim);
            g.iter_mut().zip(jt).for_each(|(a, b)| *a += b);
        }
        g
    }

    pub(crate) fn lagrangian_grad_y(&self, x: &[f64], y: &[f64], lambda: &[f64]) -> Vec<f64> {
        let mut g = self.grad_y_objective(x, y);
        if lambda.iter().any(|l| *l != 0.0) {
            let jt = transpose_mul(&self.grad_y_constraints(x, y), lambda, self.inner_dim);
            g.iter_mut().zip(jt).for_each(|(a, b)| *a += b);
        }
        g
    }

    /// Lists every violated membership or constraint condition of a profile.
    pub fn violations(&self, x: &[f64], y: &[f64]) -> Result<Vec<Violation>> {
        self.check_point(x, y)?;
        let mut out = Vec::new();
        let vx = self.outer_set.violation(x);
        if vx > FEASIBILITY_TOL {
            out.push(Violation {
                what: "x outside X".into(),
                index: 0,
                value: vx,
            });
        }
        let vy = self.inner_base_set.violation(y);
        if vy > FEASIBILITY_TOL {
            out.push(Violation {
                what: "y outside Y".into(),
                index: 0,
                value: vy,
            });
        }
        for (k, g) in self.constraints(x, y).into_iter().enumerate() {
            if g < -FEASIBILITY_TOL {
                out.push(Violation {
                    what: "g".into(),
                    index: k,
                    value: g,
                });
            }
        }
        Ok(out)
    }
}

/// Incrementally assembles a [`GameDefinition`].
pub struct GameBuilder {
    name: String,
    outer_dim: usize,
    inner_dim: usize,
    num_constraints: usize,
    objective: Option<ScalarFn>,
    grad_x_objective: Option<VectorFn>,
    grad_y_objective: Option<VectorFn>,
    constraints: Option<VectorFn>,
    grad_x_constraints: Option<MatrixFn>,
    grad_y_constraints: Option<MatrixFn>,
    outer_set: ProjectionSpec,
    inner_base_set: ProjectionSpec,
    inner_slice: Option<SliceFn>,
    affine_in_y: bool,
}

impl GameBuilder {
    fn new(name: String, outer_dim: usize, inner_dim: usize) -> Self {
        Self {
            name,
            outer_dim,
            inner_dim,
            num_constraints: 0,
            objective: None,
            grad_x_objective: None,
            grad_y_objective: None,
            constraints: None,
            grad_x_constraints: None,
            grad_y_constraints: None,
            outer_set: ProjectionSpec::FullSpace,
            inner_base_set: ProjectionSpec::FullSpace,
            inner_slice: None,
            affine_in_y: false,
        }
    }

    pub fn objective(
        mut self,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_y: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.objective = Some(Arc::new(value));
        self.grad_x_objective = Some(Arc::new(grad_x));
        self.grad_y_objective = Some(Arc::new(grad_y));
        self
    }

    pub fn constraints(
        mut self,
        count: usize,
        value: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        grad_x: impl Fn(&[f64], &[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
        grad_y: impl Fn(&[f64], &[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.num_constraints = count;
        self.constraints = Some(Arc::new(value));
        self.grad_x_constraints = Some(Arc::new(grad_x));
        self.grad_y_constraints = Some(Arc::new(grad_y));
        self
    }

    /// Declares `g(x, .)` affine for every `x`, which lets the game derive
    /// its constraint slice as an intersection of halfspaces.
    pub fn affine_in_y(mut self) -> Self {
        self.affine_in_y = true;
        self
    }

    pub fn inner_slice(
        mut self,
        slice: impl Fn(&[f64]) -> Result<ProjectionSpec> + Send + Sync + 'static,
    ) -> Self {
        self.inner_slice = Some(Arc::new(slice));
        self
    }

    pub fn outer_set(mut self, set: ProjectionSpec) -> Self {
        self.outer_set = set;
        self
    }

    pub fn inner_set(mut self, set: ProjectionSpec) -> Self {
        self.inner_base_set = set;
        self
    }

    pub fn build(self) -> Result<GameDefinition> {
        let missing = |what: &str| Error::Config(format!("game `{}` is missing {what}", self.name));
        if self.outer_dim == 0 || self.inner_dim == 0 {
            return Err(Error::Config("player dimensions must be positive".into()));
        }
        self.outer_set.validate(self.outer_dim)?;
        self.inner_base_set.validate(self.inner_dim)?;
        let objective = self.objective.clone().ok_or_else(|| missing("an objective"))?;
        let (constraints, gx, gy): (VectorFn, MatrixFn, MatrixFn) = match self.constraints.clone() {
            Some(c) => (
                c,
                self.grad_x_constraints.clone().unwrap(),
                self.grad_y_constraints.clone().unwrap(),
            ),
            None => (
                Arc::new(|_: &[f64], _: &[f64]| Vec::new()),
                Arc::new(|_: &[f64], _: &[f64]| Vec::new()),
                Arc::new(|_: &[f64], _: &[f64]| Vec::new()),
            ),
        };
        Ok(GameDefinition {
            name: self.name,
            outer_dim: self.outer_dim,
            inner_dim: self.inner_dim,
            num_constraints: self.num_constraints,
            objective,
            grad_x_objective: self.grad_x_objective.unwrap(),
            grad_y_objective: self.grad_y_objective.unwrap(),
            constraints,
            grad_x_constraints: gx,
            grad_y_constraints: gy,
            outer_set: self.outer_set,
            inner_base_set: self.inner_base_set,
            inner_slice: self.inner_slice,
            affine_in_y: self.affine_in_y,
        })
    }
}

/// Gradients of the Lagrangian, one vector per block.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianGradients {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// A point `(x, y)` with optional constraint multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
}

impl StrategyProfile {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y, lambda: None }
    }

    pub fn with_lambda(x: Vec<f64>, y: Vec<f64>, lambda: Vec<f64>) -> Self {
        Self {
            x,
            y,
            lambda: Some(lambda),
        }
    }

    pub fn check_dims(&self, game: &GameDefinition) -> Result<()> {
        check_len("x", game.outer_dim, self.x.len())?;
        check_len("y", game.inner_dim, self.y.len())?;
        if let Some(l) = &self.lambda {
            check_len("lambda", game.num_constraints, l.len())?;
        }
        Ok(())
    }
}

/// How far a profile is from being a Stackelberg equilibrium.
///
/// `epsilon` is the outer player's excess over the min-max value and `delta`
/// the inner player's shortfall from a constrained best response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackelbergGap {
    pub epsilon: f64,
    pub delta: f64,
}

/// Exact solution oracles used to measure equilibrium gaps.
pub trait GapOracle {
    /// A maximizer of `f(x, .)` over `{y in Y : g(x, y) >= 0}`.
    fn inner_best_response(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// `min_x max_{y : g(x, y) >= 0} f(x, y)`.
    fn min_max_value(&self) -> Result<f64>;
}

pub fn stackelberg_gap(
    game: &GameDefinition,
    profile: &StrategyProfile,
    oracle: &dyn GapOracle,
) -> Result<StackelbergGap> {
    let (x, y) = (&profile.x, &profile.y);
    let violations = game.violations(x, y)?;
    if !violations.is_empty() {
        return Err(Error::Infeasible { violations });
    }
    let best = oracle.inner_best_response(x)?;
    check_len("best response", game.inner_dim, best.len())?;
    let value_at_x = game.objective(x, &best);
    Ok(StackelbergGap {
        epsilon: (value_at_x - oracle.min_max_value()?).max(-FEASIBILITY_TOL),
        delta: (value_at_x - game.objective(x, y)).max(-FEASIBILITY_TOL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex11() -> CatalogGame {
        catalog_game("example-1-1").unwrap()
    }

    #[test]
    fn lagrangian_values() {
        let g = ex11().game;
        assert_eq!(g.eval_lagrangian(&[0.0], &[0.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(g.eval_lagrangian(&[0.5], &[0.5], &[1.0]).unwrap(), 1.75);
        assert_eq!(
            g.eval_lagrangian(&[0.3], &[-0.2], &[0.0]).unwrap(),
            g.objective(&[0.3], &[-0.2])
        );
    }

    #[test]
    fn lagrangian_gradient_values() {
        let g = ex11().game;
        let grads = g.lagrangian_gradients(&[0.0], &[0.0], &[0.0]).unwrap();
        assert_eq!((grads.x, grads.y, grads.lambda), (vec![0.0], vec![1.0], vec![1.0]));
        // lambda* = 1 removes every dependence on y
        for (x, y) in [(-1.0, 0.3), (0.25, -0.5), (0.9, 0.9)] {
            let grads = g.lagrangian_gradients(&[x], &[y], &[1.0]).unwrap();
            assert_eq!(grads.x, vec![2.0 * x - 1.0]);
            assert_eq!(grads.y, vec![0.0]);
        }
    }

    #[test]
    fn dimension_errors_name_the_field() {
        let g = ex11().game;
        let err = g.eval_lagrangian(&[0.0, 1.0], &[0.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { field: "x", .. }), "{err}");
        let err = g.lagrangian_gradients(&[0.0], &[0.0], &[]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { field: "lambda", .. }), "{err}");
        assert!(g.eval_lagrangian(&[0.0], &[0.0], &[-1.0]).is_err());
    }

    #[test]
    fn gap_at_equilibrium_and_off_equilibrium() {
        let c = ex11();
        let at_eq = stackelberg_gap(&c.game, &c.equilibrium, &c).unwrap();
        assert!(at_eq.epsilon.abs() < 1e-12 && at_eq.delta.abs() < 1e-12);
        let off = stackelberg_gap(&c.game, &StrategyProfile::new(vec![0.0], vec![1.0]), &c).unwrap();
        assert!((off.epsilon - 0.25).abs() < 1e-12, "{off:?}");
        assert!(off.delta.abs() < 1e-12);
    }

    #[test]
    fn gap_rejects_infeasible_profiles() {
        let c = ex11();
        let err = stackelberg_gap(&c.game, &StrategyProfile::new(vec![1.0], vec![1.0]), &c)
            .unwrap_err();
        match err {
            Error::Infeasible { violations } => {
                assert_eq!(violations.len(), 1);
                assert_eq!(violations[0].index, 0);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn affine_constraints_give_halfspace_slices() {
        let g = ex11().game;
        let slice = g.constraint_slice(&[0.5]).unwrap();
        assert!(slice.contains(&[0.5], 0.0));
        assert!(!slice.contains(&[0.6], 1e-12));
        assert!(!slice.contains(&[-1.1], 1e-12));
    }
}
