//! Fisher markets: utilities, demands, the market program, myopic
//! best-response dynamics, equilibrium oracles and exploitability.

mod market;
mod mbrd;
mod oracle;
mod program;
mod utility;

pub use market::{generate_market, FisherMarket, MarketSpec, MarketState};
pub use mbrd::{run_mbrd, MbrdConfig, MbrdOutput};
pub use oracle::{
    analytic_cobb_douglas, equilibrium_oracle, reference_descent, supply_feasible_value, EquilibriumCertificate,
    EquilibriumMethod, ReferenceDescentOptions,
};
pub use program::{
    eg_objective, exploitability, fisher_game, value_function, Exploitability, FisherKktForm, EXPLOITABILITY_TOL,
};
pub use utility::{Utility, UtilityClass, COBB_DOUGLAS_GRADIENT_FLOOR};
