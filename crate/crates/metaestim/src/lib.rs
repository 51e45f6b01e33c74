//! Derivative-free parameter estimation for simulation models.
//!
//! Five metaheuristics (particle swarm, simulated annealing, a continuous
//! ant colony, and two evolutionary strategies) search a box-bounded
//! parameter space against any cost function: built-in test functions, the
//! predator-prey oscillator, or an arbitrary external program wrapped as an
//! objective. Every evaluated point is recorded, so a finished run doubles
//! as a map of the solution landscape.

pub mod algo;
pub mod benchmarks;
mod candidate;
pub mod dynamics;
mod error;
mod estimates;
pub mod extmodel;
mod objective;
pub mod sampling;
mod space;

pub use algo::{extremize, AlgorithmOptions, Method};
pub use candidate::Candidate;
pub use error::{Error, Result};
pub use estimates::{Estimates, RunStats};
pub use objective::{EvalContext, EvalFailure, Evaluator, Objective, DEFAULT_TOLERANCE, PENALTY};
pub use space::{ParameterDef, ParameterSpace};
