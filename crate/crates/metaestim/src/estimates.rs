use crate::candidate::Candidate;
use serde::Serialize;

/// Run-level statistics reported next to the estimates.
#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub total_evals: u64,
    pub converged: bool,
    /// Best fitness actually reached.
    pub achieved_tolerance: f64,
    /// Wall-clock duration of the run in seconds.
    pub wall_time: f64,
}

/// The result of one optimization run.
#[derive(Debug, Clone)]
pub struct Estimates {
    /// Best candidate found over the whole run.
    pub best: Candidate,
    /// Best-so-far after each algorithm iteration (index 0 = initialization).
    pub iteration_bests: Vec<Candidate>,
    /// Every point evaluated, in evaluation order.
    pub visited_space: Vec<Candidate>,
    pub stats: RunStats,
}

impl Estimates {
    pub fn best(&self) -> &Candidate {
        &self.best
    }

    pub fn iteration_bests(&self) -> &[Candidate] {
        &self.iteration_bests
    }

    pub fn visited_space(&self) -> &[Candidate] {
        &self.visited_space
    }
}
