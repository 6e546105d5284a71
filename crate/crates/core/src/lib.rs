//! Exact runtime analysis of the (1+1) evolutionary algorithm on functions
//! of unitation.
//!
//! The crate builds fitness tables ([`fitness`]), reduces the EA to a Markov
//! chain over the number of ones and solves for expected hitting times
//! exactly ([`chain`]), searches for runtime-minimising mutation rates
//! ([`analysis`]) and cross-checks everything with a bit-level simulator
//! ([`montecarlo`]).

pub mod analysis;
pub mod chain;
pub mod cli;
pub mod error;
pub mod fitness;
pub mod montecarlo;
pub mod report;
pub mod scalar;

pub use chain::{AcceptanceMode, EaChain, MutationKernel, StartDistribution};
pub use error::{LabError, Result};
pub use fitness::{UnitationFitness, SteppingStoneProfile};
pub use scalar::{Backend, Rate, Scalar};
