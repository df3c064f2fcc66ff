//! Gradient descent ascent for min-max Stackelberg games with dependent
//! strategy sets.
//!
//! The crate is organized around a [`GameDefinition`], which bundles an
//! objective `f(x, y)`, coupling constraints `g(x, y) >= 0`, their gradients
//! and the players' base sets. On top of it sit:
//!
//! - [`projection`]: exact and Dykstra-based Euclidean projections;
//! - [`algorithms`]: simultaneous GDA, G2DA, LGDA and GDALO, plus the
//!   convergence-bound calculators;
//! - [`kkt`]: closed-form optimal KKT multipliers for log-separable games;
//! - [`fisher`]: Fisher markets, myopic best-response dynamics, equilibrium
//!   oracles and exploitability;
//! - [`harness`]: batch experiments, counterexample replays and plotting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod error;
pub mod fisher;
pub mod game;
pub mod harness;
pub mod kkt;
pub mod linalg;
pub mod projection;

pub use error::{Error, Result};
pub use game::{
    builtin_games, catalog_game, stackelberg_gap, CatalogGame, GameDefinition, GapOracle,
    StackelbergGap, StrategyProfile,
};
pub use projection::{project, ProjectionMode, ProjectionOptions, ProjectionSpec};
