use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::projection::{project, ProjectionOptions, ProjectionSpec};

use super::GameDefinition;

/// Worst relative error of each gradient evaluator against central differences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GradientCheckReport {
    pub grad_x_objective: f64,
    pub grad_y_objective: f64,
    pub grad_x_constraints: f64,
    pub grad_y_constraints: f64,
    pub samples: usize,
}

impl GradientCheckReport {
    pub fn max_error(&self) -> f64 {
        self.grad_x_objective
            .max(self.grad_y_objective)
            .max(self.grad_x_constraints)
            .max(self.grad_y_constraints)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_error() <= tol
    }
}

/// Draws a point well inside `set`: the middle 80% of its bounding box when
/// bounded, otherwise `[0.5, 2]^dim` projected onto the set.
pub fn sample_interior<R: Rng>(set: &ProjectionSpec, dim: usize, rng: &mut R) -> Result<Vec<f64>> {
    if let Some((lo, hi)) = set.bounding_box(dim) {
        let p: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| {
                let w = h - l;
                if w > 0.0 {
                    rng.random_range(l + 0.1 * w..=h - 0.1 * w)
                } else {
                    *l
                }
            })
            .collect();
        return project(set, &p, &ProjectionOptions::default());
    }
    let p: Vec<f64> = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
    if set.violation(&p) > 0.0 {
        project(set, &p, &ProjectionOptions::default())
    } else {
        Ok(p)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn central_diff(point: &[f64], j: usize, step: f64, eval: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut plus = point.to_vec();
    let mut minus = point.to_vec();
    plus[j] += step;
    minus[j] -= step;
    eval(&plus)
        .iter()
        .zip(eval(&minus))
        .map(|(a, b)| (a - b) / (2.0 * step))
        .collect()
}

/// Compares all four gradient evaluators with central finite differences at
/// `num_samples` interior points.
pub fn check_gradients(
    game: &GameDefinition,
    num_samples: usize,
    step: f64,
    seed: u64,
) -> Result<GradientCheckReport> {
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradientCheckReport {
        samples: num_samples,
        ..Default::default()
    };
    for _ in 0..num_samples {
        let x = sample_interior(&game.outer_set, game.outer_dim, &mut rng)?;
        let y = sample_interior(&game.inner_base_set, game.inner_dim, &mut rng)?;

        let gx = game.grad_x_objective(&x, &y);
        let gy = game.grad_y_objective(&x, &y);
        let jx = game.grad_x_constraints(&x, &y);
        let jy = game.grad_y_constraints(&x, &y);

        for j in 0..game.outer_dim {
            let fd = central_diff(&x, j, step, |p| vec![game.objective(p, &y)]);
            report.grad_x_objective = report.grad_x_objective.max(rel_err(gx[j], fd[0]));
            let fd = central_diff(&x, j, step, |p| game.constraints(p, &y));
            for (k, d) in fd.iter().enumerate() {
                report.grad_x_constraints = report.grad_x_constraints.max(rel_err(jx[k][j], *d));
            }
        }
        for j in 0..game.inner_dim {
            let fd = central_diff(&y, j, step, |p| vec![game.objective(&x, p)]);
            report.grad_y_objective = report.grad_y_objective.max(rel_err(gy[j], fd[0]));
            let fd = central_diff(&y, j, step, |p| game.constraints(&x, p));
            for (k, d) in fd.iter().enumerate() {
                report.grad_y_constraints = report.grad_y_constraints.max(rel_err(jy[k][j], *d));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::catalog_game;

    #[test]
    fn polynomial_game_passes() {
        let g = catalog_game("example-1-1").unwrap().game;
        let r = check_gradients(&g, 50, 1e-5, 3).unwrap();
        assert!(r.max_error() < 1e-6, "{r:?}");
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let bad = GameDefinition::builder("bad", 1, 1)
            .objective(
                |x, y| x[0] * x[0] + y[0] + 1.0,
                |x, _| vec![2.0 * x[0] + 1.0],
                |_, _| vec![1.0],
            )
            .outer_set(ProjectionSpec::interval(-1.0, 1.0))
            .inner_set(ProjectionSpec::interval(-1.0, 1.0))
            .build()
            .unwrap();
        let r = check_gradients(&bad, 20, 1e-5, 0).unwrap();
        assert!(r.grad_x_objective > 0.1, "{r:?}");
        assert!(!r.passes(1e-5));
    }
}
