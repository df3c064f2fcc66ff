//! GDALO on the coupled quadratic game, against the expected-value band.
//!
//! ```text
//! cargo run --release --example gdalo -- 10000
//! ```

use stackgda::algorithms::{estimate_lipschitz, gdalo_expected_bound, run_gdalo, RunConfig, StepSchedule};
use stackgda::linalg::dist_sq;
use stackgda::{catalog_game, StrategyProfile};

fn main() -> stackgda::Result<()> {
    let horizon: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seeds = 50;
    let cat = catalog_game("example-1-1")?;
    let lambda = cat.lambda_star();
    let start = StrategyProfile::new(vec![0.0], vec![0.0]);

    let mut total = 0.0;
    for seed in 0..seeds {
        let cfg = RunConfig::new(horizon, StepSchedule::InverseSqrtHorizon(horizon), start.clone())
            .with_seed(seed)
            .with_record_every(horizon);
        let out = run_gdalo(&cat.game, lambda, &cfg)?;
        total += cat.game.objective(&out.selected.x, &out.selected.y) - cat.min_max_value;
    }
    let mean = total / seeds as f64;

    let lip = estimate_lipschitz(&cat.game, lambda, 5000, 1)?;
    let band = gdalo_expected_bound(
        dist_sq(&start.y, &cat.equilibrium.y),
        dist_sq(&start.x, &cat.equilibrium.x),
        lip.objective,
        lip.lagrangian,
        horizon,
    );
    println!("T = {horizon}, lambda* = {lambda:?}");
    println!("sampled L_f = {:.4}, L_L = {:.4}", lip.objective, lip.lagrangian);
    println!("mean f(selected) - f* over {seeds} seeds: {mean:+.3e}");
    println!("band: [{:+.3e}, {:+.3e}] -> {}", band.lower, band.upper, if band.contains(mean) { "inside" } else { "outside" });
    Ok(())
}
