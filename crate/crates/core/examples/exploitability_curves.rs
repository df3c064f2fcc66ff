//! Mean exploitability of the average prices over batches of random markets,
//! one curve per utility class.
//!
//! ```text
//! cargo run --release --example exploitability_curves -- out/default          # default step sizes
//! cargo run --release --example exploitability_curves -- out/stable 0.3 0.01   # eta_price, eta_alloc for every class
//! ```

use stackgda::fisher::UtilityClass;
use stackgda::harness::{run_experiment, write_report, ExperimentConfig};

fn main() -> stackgda::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = args.first().cloned().unwrap_or_else(|| "out/default".into());
    let mut config = ExperimentConfig::default();
    config.apply_env()?;
    if let [_, eta_price, eta_alloc] = &args[..] {
        for class in UtilityClass::ALL {
            let s = config.settings_mut(class);
            s.eta_price = eta_price.parse().expect("eta_price");
            s.eta_alloc = eta_alloc.parse().expect("eta_alloc");
        }
    }
    let report = run_experiment(&config)?;
    write_report(&report, &out)?;
    for c in &report.classes {
        println!(
            "{:<13} e(10) = {:.4e}  e({}) = {:.4e}  normalized = {:.4e}  ({} markets, {} excluded)",
            c.class.to_string(),
            c.mean_at(10),
            c.horizon,
            c.mean_at(c.horizon),
            c.final_normalized(),
            c.markets_used,
            c.markets_excluded
        );
    }
    println!("wrote {out}/series.csv and {out}/plot.svg");
    Ok(())
}
