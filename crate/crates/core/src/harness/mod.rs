mod experiment;
mod plot;
mod replay;

pub use experiment::*;
pub use plot::*;
pub use replay::*;
