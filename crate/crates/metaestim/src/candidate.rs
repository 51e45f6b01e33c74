use serde::Serialize;

/// An evaluated point of the search space.
///
/// `pset` is the 1-based evaluation index (the order in which the point was
/// sent to the objective) and `iteration` the algorithm iteration that
/// produced it, with 0 reserved for initialization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub values: Vec<f64>,
    pub fitness: f64,
    pub pset: u64,
    pub iteration: u64,
}

impl Candidate {
    /// Strict-ordering comparison used wherever candidates are ranked:
    /// fitness first, evaluation order as the tie breaker so sorts are
    /// reproducible.
    pub fn cmp_fitness(&self, other: &Self) -> std::cmp::Ordering {
        self.fitness
            .total_cmp(&other.fitness)
            .then(self.pset.cmp(&other.pset))
    }
}
