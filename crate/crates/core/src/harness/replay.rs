use std::fmt;

use serde::Serialize;

use crate::algorithms::{run_g2da, run_lgda, run_vanilla_gda, RunConfig, StepSchedule, Trajectory};
use crate::error::Result;
use crate::game::{catalog_game, StrategyProfile};

/// Tolerance for comparing replayed iterates with the listed ones.
pub const REPLAY_TOL: f64 = 1e-12;

/// First iterate at which a replay left its expected sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub t: usize,
    pub expected: Vec<f64>,
    pub actual: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayRow {
    pub name: &'static str,
    pub description: &'static str,
    pub divergence: Option<Divergence>,
}

impl ReplayRow {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayTable {
    pub rows: Vec<ReplayRow>,
}

impl ReplayTable {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(ReplayRow::passed)
    }
}

impl fmt::Display for ReplayTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:<6} detail", "replay", "result")?;
        for row in &self.rows {
            match &row.divergence {
                None => writeln!(f, "{:<12} {:<6} {}", row.name, "PASS", row.description)?,
                Some(d) => writeln!(
                    f,
                    "{:<12} {:<6} diverged at t={}: expected {:?}, got {:?}",
                    row.name, "FAIL", d.t, d.expected, d.actual
                )?,
            }
        }
        Ok(())
    }
}

/// Flattens `(lambda, x, y)` of a profile, omitting absent multipliers.
fn flat(p: &StrategyProfile) -> Vec<f64> {
    let mut v = p.lambda.clone().unwrap_or_default();
    v.extend(&p.x);
    v.extend(&p.y);
    v
}

fn compare(tr: &Trajectory, expected: impl Fn(usize) -> Option<Vec<f64>>) -> Option<Divergence> {
    for pt in &tr.points {
        let Some(want) = expected(pt.t) else { continue };
        let got = flat(&pt.profile);
        let close = want.len() == got.len() && want.iter().zip(&got).all(|(a, b)| (a - b).abs() <= REPLAY_TOL);
        if !close {
            return Some(Divergence {
                t: pt.t,
                expected: want,
                actual: got,
            });
        }
    }
    None
}

fn config(horizon: usize, eta: f64, initial: StrategyProfile) -> RunConfig {
    RunConfig::new(horizon, StepSchedule::Constant(eta), initial)
}

/// Replays the counterexample trajectories with every step size multiplied
/// by `step_scale`.
pub fn verify_examples_with(step_scale: f64) -> Result<ReplayTable> {
    let mut rows = Vec::new();

    let ex = catalog_game("example-1-1")?;
    let from_origin = run_vanilla_gda(&ex.game, &config(8, step_scale, StrategyProfile::new(vec![0.0], vec![0.0])))?;
    let from_eq = run_vanilla_gda(&ex.game, &config(8, step_scale, StrategyProfile::new(vec![0.5], vec![0.5])))?;
    let divergence = compare(&from_origin, |t| (t >= 1).then(|| vec![0.0, 1.0])).or_else(|| {
        compare(&from_eq, |t| match t {
            0 => Some(vec![0.5, 0.5]),
            t if t % 2 == 1 => Some(vec![-0.5, 0.5]),
            _ => Some(vec![0.5, 1.0]),
        })
    });
    rows.push(ReplayRow {
        name: "gda",
        description: "GDA from (0,0) sticks at (0,1); from (1/2,1/2) it cycles away",
        divergence,
    });

    let start = StrategyProfile::with_lambda(vec![0.0], vec![0.0], vec![0.0]);
    let g2da = run_g2da(&ex.game, &config(8, step_scale, start))?;
    rows.push(ReplayRow {
        name: "g2da",
        description: "G2DA from (0,0,0) sticks at (lambda,x,y) = (0,0,1)",
        divergence: compare(&g2da, |t| (t >= 1).then(|| vec![0.0, 0.0, 1.0])),
    });

    let cyc = catalog_game("lgda-cycle")?;
    let lgda = run_lgda(
        &cyc.game,
        cyc.lambda_star(),
        &config(100, step_scale, StrategyProfile::new(vec![1.0], vec![1.0])),
    )?;
    let mut divergence = compare(&lgda, |t| {
        let s = if t % 2 == 1 { -1.0 } else { 1.0 };
        Some(vec![s, s])
    });
    let last = lgda.last();
    if divergence.is_none() && (last.x_avg[0].abs() > REPLAY_TOL || last.y_avg[0].abs() > REPLAY_TOL) {
        divergence = Some(Divergence {
            t: last.t,
            expected: vec![0.0, 0.0],
            actual: vec![last.x_avg[0], last.y_avg[0]],
        });
    }
    rows.push(ReplayRow {
        name: "lgda-cycle",
        description: "LGDA from (1,1) alternates (-1,-1), (1,1); averages reach (0,0)",
        divergence,
    });

    let deg = catalog_game("degenerate")?;
    let run = run_lgda(
        &deg.game,
        deg.lambda_star(),
        &config(200, 0.25 * step_scale, StrategyProfile::new(vec![-0.8], vec![0.3])),
    )?;
    let mut divergence = run.points.iter().find(|pt| pt.profile.y != [0.3]).map(|pt| Divergence {
        t: pt.t,
        expected: vec![0.3],
        actual: pt.profile.y.clone(),
    });
    let x_last = run.last().profile.x[0];
    if divergence.is_none() && (x_last - 0.5).abs() > REPLAY_TOL {
        divergence = Some(Divergence {
            t: run.last().t,
            expected: vec![0.5],
            actual: vec![x_last],
        });
    }
    rows.push(ReplayRow {
        name: "degenerate",
        description: "LGDA with lambda* = 1 never moves y; x settles at 1/2",
        divergence,
    });

    Ok(ReplayTable { rows })
}

/// Replays every counterexample at the listed step sizes.
pub fn verify_examples() -> Result<ReplayTable> {
    verify_examples_with(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_replays_pass() {
        let table = verify_examples().unwrap();
        assert_eq!(table.rows.len(), 4);
        assert!(table.all_passed(), "{table}");
        assert!(table.to_string().contains("PASS"));
    }

    #[test]
    fn perturbed_step_breaks_example_1_1_at_first_iterate() {
        let table = verify_examples_with(1.0 + 1e-3).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.divergence.as_ref().map(|d| d.t), Some(1), "{table}");
        assert!(!table.all_passed());
    }
}
