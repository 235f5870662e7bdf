//! Secrecy capacity of the Gaussian MIMO wiretap channel under a sum power
//! constraint.
//!
//! Two independent solvers compute the capacity-achieving transmit
//! covariance and cross-check each other:
//!
//! * [`adca`]: an accelerated difference-of-convex method whose subproblems
//!   are solved by water-filling;
//! * [`pbra`]: a partial best-response iteration on the equivalent
//!   convex-concave minimax problem.
//!
//! [`channel`] draws Kronecker-correlated test channels, [`oracles`] holds
//! closed forms and brute-force references, and [`harness`] drives the
//! experiments exposed by the `wiretap` binary.

pub mod adca;
pub mod channel;
pub mod error;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod oracles;
pub mod pbra;
pub mod plot;
pub mod rates;

pub use error::{Error, Result};
pub use model::{
    ChannelPair, ConvergenceTrace, CouplingMatrix, PowerBudget, SolverConfig, SolverResult,
    TraceRecord, TransmitCovariance,
};

/// Which solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Adca,
    Pbra,
    /// Conventional DCA (accelerated method without extrapolation).
    Dca,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Adca => "adca",
            Algorithm::Pbra => "pbra",
            Algorithm::Dca => "dca",
        }
    }

    pub fn solve(self, ch: &ChannelPair, p0: PowerBudget, cfg: &SolverConfig) -> Result<SolverResult> {
        match self {
            Algorithm::Adca => adca::adca_solve(ch, p0, cfg),
            Algorithm::Pbra => pbra::pbra_solve(ch, p0, cfg),
            Algorithm::Dca => adca::dca_solve(ch, p0, cfg).map(|(r, _)| r),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adca" => Ok(Algorithm::Adca),
            "pbra" => Ok(Algorithm::Pbra),
            "dca" => Ok(Algorithm::Dca),
            other => Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}
