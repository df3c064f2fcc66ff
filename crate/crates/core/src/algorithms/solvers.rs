//! Simultaneous first-order solvers.
//!
//! All four methods read every gradient at the pre-update point, then
//! project. They differ in which function each block follows and which set
//! the inner block is projected onto:
//!
//! | method | outer step            | inner step               | inner set          |
//! |--------|-----------------------|--------------------------|--------------------|
//! | GDA    | descend `f`           | ascend `f`               | slice `g(x^t, .) >= 0` |
//! | G2DA   | descend `L` (and `lambda`) | ascend `L`          | `Y`                |
//! | LGDA   | descend `L(., ., lambda*)` | ascend `L(., ., lambda*)` | `Y`          |
//! | GDALO  | descend `L(., ., lambda*)` | ascend `f`          | slice `g(x^t, .) >= 0` |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Result};
use crate::game::{GameDefinition, StrategyProfile};
use crate::linalg::axpy;
use crate::projection::project;

use super::config::RunConfig;
use super::trajectory::{Recorder, Trajectory};

fn start(game: &GameDefinition, config: &RunConfig) -> Result<Recorder> {
    config.validate()?;
    config.initial.check_dims(game)?;
    let init = &config.initial;
    Ok(Recorder::new(
        init,
        game.objective(&init.x, &init.y),
        config.record_every,
        config.horizon,
    ))
}

fn check_lambda(game: &GameDefinition, lambda_star: &[f64]) -> Result<()> {
    check_len("lambda_star", game.num_constraints, lambda_star.len())?;
    if let Some(k) = lambda_star.iter().position(|l| !(*l >= 0.0)) {
        return Err(crate::Error::Domain(format!(
            "lambda_star[{k}] = {} must be nonnegative",
            lambda_star[k]
        )));
    }
    Ok(())
}

/// Outer iterate whose constraint slice bounds the inner step at step `t`.
fn slice_anchor<'a>(config: &RunConfig, current: &'a [f64], previous: &'a [f64]) -> &'a [f64] {
    if config.lagged_constraint {
        previous
    } else {
        current
    }
}

/// Simultaneous GDA on `f`, projecting the inner step onto the constraint
/// slice of the current outer iterate. Not convergent in general.
pub fn run_vanilla_gda(game: &GameDefinition, config: &RunConfig) -> Result<Trajectory> {
    let mut rec = start(game, config)?;
    let mut x = config.initial.x.clone();
    let mut y = config.initial.y.clone();
    let mut x_prev = x.clone();
    for t in 0..config.horizon {
        let gx = game.grad_x_objective(&x, &y);
        let gy = game.grad_y_objective(&x, &y);
        let slice = game.constraint_slice(slice_anchor(config, &x, &x_prev))?;
        let x_next = project(&game.outer_set, &axpy(&x, -config.eta_x.eta(t), &gx), &config.projection)?;
        let y_next = project(&slice, &axpy(&y, config.eta_y.eta(t), &gy), &config.projection)?;
        x_prev = std::mem::replace(&mut x, x_next);
        y = y_next;
        let profile = StrategyProfile::new(x.clone(), y.clone());
        rec.push(t + 1, &profile, || game.objective(&x, &y));
    }
    Ok(rec.finish())
}

/// Gradient descent descent ascent on the Lagrangian over `(lambda, x, y)`.
///
/// Uses `config.initial.lambda` (zeros when absent) as the starting multipliers.
pub fn run_g2da(game: &GameDefinition, config: &RunConfig) -> Result<Trajectory> {
    let mut rec = start(game, config)?;
    let mut x = config.initial.x.clone();
    let mut y = config.initial.y.clone();
    let mut lambda = config
        .initial
        .lambda
        .clone()
        .unwrap_or_else(|| vec![0.0; game.num_constraints]);
    check_lambda(game, &lambda)?;
    for t in 0..config.horizon {
        let g = game.constraints(&x, &y);
        let gx = game.lagrangian_grad_x(&x, &y, &lambda);
        let gy = game.lagrangian_grad_y(&x, &y, &lambda);
        let eta_l = config.eta_lambda.eta(t);
        lambda = lambda
            .iter()
            .zip(&g)
            .map(|(l, gk)| (l - eta_l * gk).max(0.0))
            .collect();
        x = project(&game.outer_set, &axpy(&x, -config.eta_x.eta(t), &gx), &config.projection)?;
        y = project(&game.inner_base_set, &axpy(&y, config.eta_y.eta(t), &gy), &config.projection)?;
        let profile = StrategyProfile::with_lambda(x.clone(), y.clone(), lambda.clone());
        rec.push(t + 1, &profile, || game.objective(&x, &y));
    }
    Ok(rec.finish())
}

/// GDA on the Lagrangian with the multipliers fixed at `lambda_star`.
pub fn run_lgda(game: &GameDefinition, lambda_star: &[f64], config: &RunConfig) -> Result<Trajectory> {
    check_lambda(game, lambda_star)?;
    let mut rec = start(game, config)?;
    let mut x = config.initial.x.clone();
    let mut y = config.initial.y.clone();
    for t in 0..config.horizon {
        let gx = game.lagrangian_grad_x(&x, &y, lambda_star);
        let gy = game.lagrangian_grad_y(&x, &y, lambda_star);
        x = project(&game.outer_set, &axpy(&x, -config.eta_x.eta(t), &gx), &config.projection)?;
        y = project(&game.inner_base_set, &axpy(&y, config.eta_y.eta(t), &gy), &config.projection)?;
        let profile = StrategyProfile::new(x.clone(), y.clone());
        rec.push(t + 1, &profile, || game.objective(&x, &y));
    }
    Ok(rec.finish())
}

/// Output of [`run_gdalo`]: the uniformly drawn iterate and the full run.
#[derive(Debug, Clone)]
pub struct GdaloOutput {
    pub selected: StrategyProfile,
    /// Iteration index of `selected`, in `1..=T`.
    pub selected_t: usize,
    pub trajectory: Trajectory,
}

/// GDA with a Lagrangian oracle: the outer player descends `L(., ., lambda*)`
/// while the inner player ascends `f` over the constraint slice of the
/// current outer iterate. Returns an iterate drawn uniformly from `1..=T`.
pub fn run_gdalo(game: &GameDefinition, lambda_star: &[f64], config: &RunConfig) -> Result<GdaloOutput> {
    check_lambda(game, lambda_star)?;
    let mut rec = start(game, config)?;
    let selected_t = ChaCha8Rng::seed_from_u64(config.seed).random_range(1..=config.horizon);
    let mut selected = None;
    let mut x = config.initial.x.clone();
    let mut y = config.initial.y.clone();
    let mut x_prev = x.clone();
    for t in 0..config.horizon {
        let gx = game.lagrangian_grad_x(&x, &y, lambda_star);
        let gy = game.grad_y_objective(&x, &y);
        let slice = game.constraint_slice(slice_anchor(config, &x, &x_prev))?;
        let x_next = project(&game.outer_set, &axpy(&x, -config.eta_x.eta(t), &gx), &config.projection)?;
        let y_next = project(&slice, &axpy(&y, config.eta_y.eta(t), &gy), &config.projection)?;
        x_prev = std::mem::replace(&mut x, x_next);
        y = y_next;
        let profile = StrategyProfile::new(x.clone(), y.clone());
        if t + 1 == selected_t {
            selected = Some(profile.clone());
        }
        rec.push(t + 1, &profile, || game.objective(&x, &y));
    }
    Ok(GdaloOutput {
        selected: selected.expect("selected index lies in 1..=T"),
        selected_t,
        trajectory: rec.finish(),
    })
}
