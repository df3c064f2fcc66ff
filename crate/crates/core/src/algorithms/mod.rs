//! Iterative solvers, trajectories and convergence-bound calculators.

mod bounds;
mod config;
mod solvers;
mod trajectory;

pub use bounds::{
    estimate_lipschitz, gdalo_expected_bound, lgda_average_bound, Band, LgdaDistances,
    LipschitzEstimate,
};
pub use config::{RunConfig, StepSchedule};
pub use solvers::{run_g2da, run_gdalo, run_lgda, run_vanilla_gda, GdaloOutput};
pub use trajectory::{Trajectory, TrajectoryPoint};
pub(crate) use trajectory::Recorder;

/// Solver selector used by the CLI and the replay harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Gda,
    G2da,
    Lgda,
    Gdalo,
}

impl std::str::FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "gda" => Ok(Self::Gda),
            "g2da" => Ok(Self::G2da),
            "lgda" => Ok(Self::Lgda),
            "gdalo" => Ok(Self::Gdalo),
            other => Err(crate::Error::Unknown {
                kind: "algorithm",
                name: other.to_string(),
            }),
        }
    }
}
