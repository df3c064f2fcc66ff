//! Convergence-bound calculators and Lipschitz-constant estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::GameDefinition;
use crate::linalg::norm_sq;

/// A two-sided band `lower <= quantity <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Squared distances entering the averaged-iterate LGDA bound.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LgdaDistances {
    /// `|y0 - y*|^2`
    pub y0_to_y_star: f64,
    /// `|x0 - xbar_T|^2`
    pub x0_to_x_avg: f64,
    /// `|x0 - x*|^2`
    pub x0_to_x_star: f64,
    /// `|y0 - ybar_T|^2`
    pub y0_to_y_avg: f64,
}

/// Band on `f(xbar_T, ybar_T) - f(x*, y*)` for LGDA with `eta = 1/sqrt(T)` on
/// convex-strictly-concave games.
pub fn lgda_average_bound(d: &LgdaDistances, lipschitz_lagrangian: f64, horizon: usize) -> Band {
    let denom = 2.0 * (horizon as f64).sqrt();
    let ll = 2.0 * lipschitz_lagrangian * lipschitz_lagrangian;
    Band {
        lower: -(d.y0_to_y_star + d.x0_to_x_avg + ll) / denom,
        upper: (d.y0_to_y_avg + d.x0_to_x_star + ll) / denom,
    }
}

/// Band on `E[f(selected)] - f(x*, y*)` for GDALO with `eta = 1/sqrt(T)`.
pub fn gdalo_expected_bound(
    y0_to_y_star_sq: f64,
    x0_to_x_star_sq: f64,
    lipschitz_objective: f64,
    lipschitz_lagrangian: f64,
    horizon: usize,
) -> Band {
    let denom = 2.0 * (horizon as f64).sqrt();
    Band {
        lower: -(y0_to_y_star_sq + lipschitz_objective.powi(2)) / denom,
        upper: (x0_to_x_star_sq + lipschitz_lagrangian.powi(2)) / denom,
    }
}

/// Sampled estimates of the gradient-norm bounds over `X x Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// `max |grad f(x, y)|` over the samples.
    pub objective: f64,
    /// `max |grad L(x, y, lambda*)|` over the samples.
    pub lagrangian: f64,
}

/// Monte-Carlo lower estimate of the constants `L_f` and `L_L`.
///
/// The estimate is a running maximum over uniform samples from the bounding
/// boxes of `X` and `Y`, so it never exceeds the true supremum.
pub fn estimate_lipschitz(
    game: &GameDefinition,
    lambda_star: &[f64],
    num_samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    crate::error::check_len("lambda_star", game.num_constraints, lambda_star.len())?;
    let (xlo, xhi) = game
        .outer_set
        .bounding_box(game.outer_dim)
        .ok_or(Error::UnboundedSet)?;
    let (ylo, yhi) = game
        .inner_base_set
        .bounding_box(game.inner_dim)
        .ok_or(Error::UnboundedSet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: &[f64], hi: &[f64]| -> Vec<f64> {
        lo.iter()
            .zip(hi)
            .map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l })
            .collect()
    };
    let mut est = LipschitzEstimate {
        objective: 0.0,
        lagrangian: 0.0,
    };
    for _ in 0..num_samples {
        let x = draw(&xlo, &xhi);
        let y = draw(&ylo, &yhi);
        let f = norm_sq(&game.grad_x_objective(&x, &y)) + norm_sq(&game.grad_y_objective(&x, &y));
        let l = norm_sq(&game.lagrangian_grad_x(&x, &y, lambda_star))
            + norm_sq(&game.lagrangian_grad_y(&x, &y, lambda_star));
        est.objective = est.objective.max(f.sqrt());
        est.lagrangian = est.lagrangian.max(l.sqrt());
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::catalog_game;
    use crate::projection::ProjectionSpec;

    #[test]
    fn lgda_band_values() {
        let zero = lgda_average_bound(&LgdaDistances::default(), 0.0, 10);
        assert_eq!((zero.lower, zero.upper), (0.0, 0.0));
        let d = LgdaDistances {
            y0_to_y_star: 1.0,
            x0_to_x_avg: 1.0,
            ..Default::default()
        };
        assert_eq!(lgda_average_bound(&d, 1.0, 4).lower, -1.0);
        let d = LgdaDistances {
            y0_to_y_star: 0.3,
            x0_to_x_avg: 0.2,
            x0_to_x_star: 0.7,
            y0_to_y_avg: 0.1,
        };
        let ratio = lgda_average_bound(&d, 2.0, 200).half_width()
            / lgda_average_bound(&d, 2.0, 100).half_width();
        assert!((ratio - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gdalo_band_values() {
        let zero = gdalo_expected_bound(0.0, 0.0, 0.0, 0.0, 7);
        assert_eq!((zero.lower, zero.upper), (0.0, 0.0));
        assert_eq!(gdalo_expected_bound(0.0, 1.0, 0.0, 1.0, 1).upper, 0.5 * 2.0);
        let mut prev = f64::INFINITY;
        for t in [1, 10, 100, 1000, 10_000] {
            let w = gdalo_expected_bound(0.5, 0.5, 2.0, 3.0, t).half_width();
            assert!(w < prev);
            prev = w;
        }
    }

    #[test]
    fn lipschitz_of_example_1_1() {
        let g = catalog_game("example-1-1").unwrap().game;
        let est = estimate_lipschitz(&g, &[1.0], 1000, 1).unwrap();
        assert!(est.lagrangian > 2.5 && est.lagrangian <= 3.0, "{est:?}");
        assert!(est.objective <= 5f64.sqrt() + 1e-12);
    }

    #[test]
    fn lipschitz_running_max_is_monotone() {
        let g = catalog_game("lgda-cycle").unwrap().game;
        let mut prev = 0.0;
        for n in [1, 5, 20, 100, 500] {
            let est = estimate_lipschitz(&g, &[0.3], n, 4).unwrap();
            assert!(est.lagrangian >= prev);
            prev = est.lagrangian;
        }
    }

    #[test]
    fn constant_objective_only_sees_constraints() {
        let g = GameDefinition::builder("flat", 1, 1)
            .objective(|_, _| 2.0, |_, _| vec![0.0], |_, _| vec![0.0])
            .constraints(1, |x, y| vec![1.0 - x[0] - y[0]], |_, _| vec![vec![-1.0]], |_, _| vec![vec![-1.0]])
            .outer_set(ProjectionSpec::unit_box(1))
            .inner_set(ProjectionSpec::unit_box(1))
            .build()
            .unwrap();
        let est = estimate_lipschitz(&g, &[2.0], 10, 0).unwrap();
        assert_eq!(est.objective, 0.0);
        assert!((est.lagrangian - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unbounded_sets_cannot_be_sampled() {
        let g = GameDefinition::builder("open", 1, 1)
            .objective(|_, _| 0.0, |_, _| vec![0.0], |_, _| vec![0.0])
            .build()
            .unwrap();
        assert!(matches!(estimate_lipschitz(&g, &[], 10, 0), Err(Error::UnboundedSet)));
    }
}
