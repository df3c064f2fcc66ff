//! Closed-form example games with known equilibria.

use crate::error::{Error, Result};
use crate::projection::ProjectionSpec;

use super::{GameDefinition, GapOracle, StrategyProfile};

pub const CATALOG_IDS: [&str; 3] = ["example-1-1", "lgda-cycle", "degenerate"];

/// A catalog game tagged with its Stackelberg equilibrium and optimal multiplier.
#[derive(Debug, Clone)]
pub struct CatalogGame {
    pub id: &'static str,
    pub game: GameDefinition,
    /// Equilibrium `(x*, y*)` with `lambda*` attached.
    pub equilibrium: StrategyProfile,
    pub min_max_value: f64,
    best_response: fn(f64) -> f64,
}

impl CatalogGame {
    pub fn lambda_star(&self) -> &[f64] {
        self.equilibrium.lambda.as_deref().unwrap_or(&[])
    }
}

impl GapOracle for CatalogGame {
    fn inner_best_response(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![(self.best_response)(x[0])])
    }

    fn min_max_value(&self) -> Result<f64> {
        Ok(self.min_max_value)
    }
}

/// `min_{x in [-1,1]} max_{y in [-1,1] : 1 - (x + y) >= 0} objective(x, y)`
fn coupled_game(
    name: &str,
    value: fn(f64, f64) -> f64,
    grad: fn(f64, f64) -> (f64, f64),
) -> GameDefinition {
    GameDefinition::builder(name, 1, 1)
        .objective(
            move |x, y| value(x[0], y[0]),
            move |x, y| vec![grad(x[0], y[0]).0],
            move |x, y| vec![grad(x[0], y[0]).1],
        )
        .constraints(
            1,
            |x, y| vec![1.0 - (x[0] + y[0])],
            |_, _| vec![vec![-1.0]],
            |_, _| vec![vec![-1.0]],
        )
        .affine_in_y()
        .outer_set(ProjectionSpec::interval(-1.0, 1.0))
        .inner_set(ProjectionSpec::interval(-1.0, 1.0))
        .build()
        .expect("catalog games are well formed")
}

fn example_1_1(id: &'static str) -> CatalogGame {
    CatalogGame {
        id,
        game: coupled_game(id, |x, y| x * x + y + 1.0, |x, _| (2.0 * x, 1.0)),
        equilibrium: StrategyProfile::with_lambda(vec![0.5], vec![0.5], vec![1.0]),
        // V(x) = x^2 + (1 - x) + 1, minimized at x = 1/2
        min_max_value: 1.75,
        best_response: |x| (1.0 - x).min(1.0),
    }
}

fn lgda_cycle() -> CatalogGame {
    CatalogGame {
        id: "lgda-cycle",
        game: coupled_game(
            "lgda-cycle",
            |x, y| x * x - y * y + 1.0,
            |x, y| (2.0 * x, -2.0 * y),
        ),
        equilibrium: StrategyProfile::with_lambda(vec![0.0], vec![0.0], vec![0.0]),
        min_max_value: 1.0,
        // y = 0 is always feasible since x <= 1
        best_response: |x| 0.0_f64.min(1.0 - x),
    }
}

/// All catalog games in a fixed order.
pub fn builtin_games() -> Vec<CatalogGame> {
    vec![example_1_1("example-1-1"), lgda_cycle(), example_1_1("degenerate")]
}

pub fn catalog_game(id: &str) -> Result<CatalogGame> {
    builtin_games()
        .into_iter()
        .find(|g| g.id == id)
        .ok_or_else(|| Error::Unknown {
            kind: "game",
            name: id.to_string(),
        })
}
