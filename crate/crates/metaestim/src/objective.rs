use crate::candidate::Candidate;
use crate::error::{Error, Result};
use crate::space::ParameterSpace;

/// Fitness assigned to points whose evaluation failed (process error,
/// malformed output, non-finite cost, ...). The run continues; the point is
/// simply the worst possible. Mirrors the largest finite double so ordinary
/// arithmetic on fitness values stays finite.
pub const PENALTY: f64 = f64::MAX;

/// Default convergence tolerance: a run is converged once the best fitness
/// drops to this value or below.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

/// Context handed to evaluators alongside the parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    /// 1-based evaluation index of this point.
    pub pset: u64,
}

/// Anything that can score a parameter vector. Lower is better; the toolkit
/// only minimizes. Implementations must be deterministic for reproducible
/// runs and thread-safe so batches can be evaluated concurrently.
pub trait Evaluator: Send + Sync {
    fn eval(&self, values: &[f64], ctx: &EvalContext) -> std::result::Result<f64, String>;
}

impl<F> Evaluator for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, values: &[f64], _ctx: &EvalContext) -> std::result::Result<f64, String> {
        Ok(self(values))
    }
}

/// A note kept when an evaluation fails.
#[derive(Debug, Clone)]
pub struct EvalFailure {
    pub pset: u64,
    pub message: String,
}

/// The minimization problem: a parameter space, an evaluator, a convergence
/// tolerance, and the bookkeeping of every point visited.
pub struct Objective {
    space: ParameterSpace,
    evaluator: Box<dyn Evaluator>,
    tolerance: f64,
    visited: Vec<Candidate>,
    failures: Vec<EvalFailure>,
    eval_budget: Option<u64>,
    jobs: usize,
}

impl Objective {
    pub fn new(space: ParameterSpace, evaluator: Box<dyn Evaluator>) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::EmptySpace);
        }
        Ok(Objective {
            space,
            evaluator,
            tolerance: DEFAULT_TOLERANCE,
            visited: Vec::new(),
            failures: Vec::new(),
            eval_budget: None,
            jobs: 1,
        })
    }

    /// Convenience constructor from a plain function.
    pub fn from_fn<F>(space: ParameterSpace, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(space, Box::new(f))
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn set_tolerance(&mut self, tolerance: f64) {
        self.tolerance = tolerance;
    }

    /// Caps the total number of evaluations. Algorithms stop at the first
    /// batch boundary at or beyond the cap.
    pub fn set_eval_budget(&mut self, budget: Option<u64>) {
        self.eval_budget = budget;
    }

    /// Number of evaluations run concurrently within one batch. Results and
    /// evaluation indices are assigned in batch order regardless.
    pub fn set_jobs(&mut self, jobs: usize) {
        self.jobs = jobs.max(1);
    }

    pub fn total_evals(&self) -> u64 {
        self.visited.len() as u64
    }

    pub fn visited(&self) -> &[Candidate] {
        &self.visited
    }

    pub fn failures(&self) -> &[EvalFailure] {
        &self.failures
    }

    pub fn budget_exhausted(&self) -> bool {
        self.eval_budget
            .is_some_and(|b| self.total_evals() >= b)
    }

    /// Convergence check: best fitness at or below the tolerance.
    pub fn is_converged(&self, best_fitness: f64) -> bool {
        best_fitness <= self.tolerance
    }

    /// Evaluates a batch of parameter vectors, appending one `Candidate` per
    /// vector in batch order. Failures become `PENALTY` with a note attached.
    pub fn evaluate_batch(&mut self, batch: &[Vec<f64>], iteration: u64) -> Vec<Candidate> {
        debug_assert!(
            batch.iter().all(|v| self.space.contains(v)),
            "evaluation batch contains out-of-bounds vectors"
        );
        let base = self.visited.len() as u64;
        let results = self.run_batch(batch, base);
        let mut out = Vec::with_capacity(batch.len());
        for (i, (values, result)) in batch.iter().zip(results).enumerate() {
            let pset = base + i as u64 + 1;
            let fitness = match result {
                Ok(f) if f.is_finite() => f,
                Ok(f) => {
                    self.failures.push(EvalFailure {
                        pset,
                        message: format!("non-finite cost {f}"),
                    });
                    PENALTY
                }
                Err(message) => {
                    self.failures.push(EvalFailure { pset, message });
                    PENALTY
                }
            };
            let cand = Candidate {
                values: values.clone(),
                fitness,
                pset,
                iteration,
            };
            self.visited.push(cand.clone());
            out.push(cand);
        }
        out
    }

    fn run_batch(
        &self,
        batch: &[Vec<f64>],
        base: u64,
    ) -> Vec<std::result::Result<f64, String>> {
        let ctx_for = |i: usize| EvalContext {
            pset: base + i as u64 + 1,
        };
        if self.jobs <= 1 || batch.len() <= 1 {
            return batch
                .iter()
                .enumerate()
                .map(|(i, v)| self.evaluator.eval(v, &ctx_for(i)))
                .collect();
        }
        let mut results: Vec<std::result::Result<f64, String>> =
            vec![Err(String::from("not evaluated")); batch.len()];
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots = std::sync::Mutex::new(&mut results);
        std::thread::scope(|scope| {
            for _ in 0..self.jobs.min(batch.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= batch.len() {
                        break;
                    }
                    let r = self.evaluator.eval(&batch[i], &ctx_for(i));
                    slots.lock().unwrap()[i] = r;
                });
            }
        });
        results
    }
}
