//! Replays the small games on which plain GDA, G2DA and LGDA misbehave.
//!
//! ```text
//! cargo run --example counterexamples
//! ```

use stackgda::algorithms::{run_g2da, run_lgda, run_vanilla_gda, RunConfig, StepSchedule};
use stackgda::harness::verify_examples;
use stackgda::{catalog_game, StrategyProfile};

fn show(label: &str, points: impl Iterator<Item = String>) {
    println!("{label}:");
    for p in points.take(5) {
        println!("  {p}");
    }
}

fn main() -> stackgda::Result<()> {
    let ex = catalog_game("example-1-1")?;
    let cfg = |x: f64, y: f64| RunConfig::new(4, StepSchedule::Constant(1.0), StrategyProfile::new(vec![x], vec![y]));

    let gda = run_vanilla_gda(&ex.game, &cfg(0.5, 0.5))?;
    show(
        "GDA started at the equilibrium (1/2, 1/2)",
        gda.points.iter().map(|p| format!("t={} x={:+.2} y={:+.2}", p.t, p.profile.x[0], p.profile.y[0])),
    );

    let mut start = StrategyProfile::new(vec![0.0], vec![0.0]);
    start.lambda = Some(vec![0.0]);
    let g2da = run_g2da(&ex.game, &RunConfig::new(4, StepSchedule::Constant(1.0), start))?;
    show(
        "G2DA from (lambda, x, y) = (0, 0, 0)",
        g2da.points.iter().map(|p| {
            let l = p.profile.lambda.as_ref().map_or(0.0, |l| l[0]);
            format!("t={} lambda={l:.2} x={:.2} y={:.2}", p.t, p.profile.x[0], p.profile.y[0])
        }),
    );

    let cyc = catalog_game("lgda-cycle")?;
    let lgda = run_lgda(&cyc.game, cyc.lambda_star(), &cfg(1.0, 1.0))?;
    show(
        "LGDA on x^2 - y^2 from (1, 1)",
        lgda.points.iter().map(|p| {
            format!("t={} x={:+.0} y={:+.0} averages ({:+.2}, {:+.2})", p.t, p.profile.x[0], p.profile.y[0], p.x_avg[0], p.y_avg[0])
        }),
    );

    println!();
    print!("{}", verify_examples()?);
    Ok(())
}
