//! Myopic best-response dynamics on one random market of each class.
//!
//! ```text
//! cargo run --release --example fisher_mbrd -- 0.01
//! ```
//!
//! The optional argument is the allocation step size.

use stackgda::fisher::{
    equilibrium_oracle, generate_market, run_mbrd, EquilibriumMethod, MarketSpec, MarketState, MbrdConfig,
    UtilityClass,
};

fn main() -> stackgda::Result<()> {
    let eta_alloc: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.01);
    let horizon = 1000;
    for class in UtilityClass::ALL {
        let market = generate_market(7, &MarketSpec::default(), class)?;
        let method = match class {
            UtilityClass::CobbDouglas => EquilibriumMethod::AnalyticCd,
            _ => EquilibriumMethod::ReferenceDescent,
        };
        let cert = equilibrium_oracle(&market, method, 1e-4)?;
        let mut cfg = MbrdConfig::new(horizon, 0.3, eta_alloc);
        if class != UtilityClass::CobbDouglas {
            cfg.delta = 1e-3;
        }
        let start = MarketState::equal_spending(&market, vec![10.0; market.m])?;
        let out = run_mbrd(&market, &start, &cfg)?;
        let expl = out.average_price_exploitability(&market, cert.f_star)?;
        println!(
            "{:<13} f* = {:>9.4} ({method}, gap {:.1e})  exploitability t=10: {:.3e}  t={horizon}: {:.3e}  |z(T)| = {:.2e}",
            class.to_string(),
            cert.f_star,
            cert.duality_gap,
            expl[10],
            expl[horizon],
            out.excess_demand_norm[horizon],
        );
    }
    Ok(())
}
