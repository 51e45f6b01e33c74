pub mod acor;
pub mod ees1;
pub mod ees2;
pub mod pso;
pub mod saa;

use crate::candidate::Candidate;
use crate::error::{Error, Result};
use crate::estimates::{Estimates, RunStats};
use crate::objective::Objective;
use rand::Rng;
use std::time::Instant;

pub use acor::OptionsAcor;
pub use ees1::{OptionsEes1, RecombinationForm};
pub use ees2::OptionsEes2;
pub use pso::{Neighborhood, OptionsPso};
pub use saa::{OptionsSaa, SaaNeighborhood};

/// The available optimization methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pso,
    Saa,
    Acor,
    Ees1,
    Ees2,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Pso,
        Method::Saa,
        Method::Acor,
        Method::Ees1,
        Method::Ees2,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Method::Pso => "pso",
            Method::Saa => "saa",
            Method::Acor => "acor",
            Method::Ees1 => "ees1",
            Method::Ees2 => "ees2",
        }
    }

    pub fn parse(key: &str) -> Result<Method> {
        match key {
            "pso" => Ok(Method::Pso),
            "saa" => Ok(Method::Saa),
            "acor" => Ok(Method::Acor),
            "ees1" => Ok(Method::Ees1),
            "ees2" => Ok(Method::Ees2),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Method> {
        Method::parse(s)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// Method-specific options, carried as one value so callers can hold any of
/// them behind a single type. Serializes as `{"<method>": {fields}}`.
#[derive(Debug, Clone, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmOptions {
    Pso(OptionsPso),
    Saa(OptionsSaa),
    Acor(OptionsAcor),
    Ees1(OptionsEes1),
    Ees2(OptionsEes2),
}

impl AlgorithmOptions {
    pub fn method(&self) -> Method {
        match self {
            AlgorithmOptions::Pso(_) => Method::Pso,
            AlgorithmOptions::Saa(_) => Method::Saa,
            AlgorithmOptions::Acor(_) => Method::Acor,
            AlgorithmOptions::Ees1(_) => Method::Ees1,
            AlgorithmOptions::Ees2(_) => Method::Ees2,
        }
    }

    /// Default options for a method.
    pub fn defaults(method: Method) -> AlgorithmOptions {
        match method {
            Method::Pso => AlgorithmOptions::Pso(OptionsPso::default()),
            Method::Saa => AlgorithmOptions::Saa(OptionsSaa::default()),
            Method::Acor => AlgorithmOptions::Acor(OptionsAcor::default()),
            Method::Ees1 => AlgorithmOptions::Ees1(OptionsEes1::default()),
            Method::Ees2 => AlgorithmOptions::Ees2(OptionsEes2::default()),
        }
    }

    /// Applies a flat `key = value` override to whichever options these are.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        match self {
            AlgorithmOptions::Pso(o) => o.apply_override(key, value),
            AlgorithmOptions::Saa(o) => o.apply_override(key, value),
            AlgorithmOptions::Acor(o) => o.apply_override(key, value),
            AlgorithmOptions::Ees1(o) => o.apply_override(key, value),
            AlgorithmOptions::Ees2(o) => o.apply_override(key, value),
        }
    }
}

pub(crate) fn parse_override<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidInput(format!("invalid value '{value}' for option '{key}'")))
}

pub(crate) fn unknown_option(method: Method, key: &str) -> Error {
    Error::InvalidInput(format!("unknown option '{key}' for method '{method}'"))
}

/// Runs `method` on `obj` until convergence, budget exhaustion, or the
/// method's own iteration/schedule limit. All randomness is drawn from `rng`,
/// so a given seed reproduces the run exactly.
pub fn extremize<R: Rng>(
    method: Method,
    obj: &mut Objective,
    options: Option<AlgorithmOptions>,
    rng: &mut R,
) -> Result<Estimates> {
    if let Some(opts) = &options {
        if opts.method() != method {
            return Err(Error::OptionsMismatch {
                options_for: opts.method().key(),
                method: method.key(),
            });
        }
    }
    let options = options.unwrap_or_else(|| AlgorithmOptions::defaults(method));
    match options {
        AlgorithmOptions::Pso(o) => pso::pso(obj, &o, rng),
        AlgorithmOptions::Saa(o) => saa::saa(obj, &o, rng),
        AlgorithmOptions::Acor(o) => acor::acor(obj, &o, rng),
        AlgorithmOptions::Ees1(o) => ees1::ees1(obj, &o, rng),
        AlgorithmOptions::Ees2(o) => ees2::ees2(obj, &o, rng),
    }
}

/// Shared per-run bookkeeping: evaluates batches through the objective,
/// tracks the best-so-far and the best after each iteration, and owns the
/// stop conditions so every method checks them at the same points.
pub(crate) struct Run<'a> {
    obj: &'a mut Objective,
    start_idx: usize,
    started: Instant,
    best: Option<Candidate>,
    iteration_bests: Vec<Candidate>,
}

impl<'a> Run<'a> {
    pub fn new(obj: &'a mut Objective) -> Result<Self> {
        if obj.space().is_empty() {
            return Err(Error::EmptySpace);
        }
        let start_idx = obj.visited().len();
        Ok(Run {
            obj,
            start_idx,
            started: Instant::now(),
            best: None,
            iteration_bests: Vec::new(),
        })
    }

    pub fn obj(&self) -> &Objective {
        self.obj
    }

    pub fn evaluate(&mut self, batch: &[Vec<f64>], iteration: u64) -> Vec<Candidate> {
        let cands = self.obj.evaluate_batch(batch, iteration);
        for c in &cands {
            if self
                .best
                .as_ref()
                .map_or(true, |b| c.cmp_fitness(b) == std::cmp::Ordering::Less)
            {
                self.best = Some(c.clone());
            }
        }
        cands
    }

    /// Records the best-so-far as this iteration's best.
    pub fn end_iteration(&mut self) {
        if let Some(b) = &self.best {
            self.iteration_bests.push(b.clone());
        }
    }

    pub fn converged(&self) -> bool {
        self.best
            .as_ref()
            .is_some_and(|b| self.obj.is_converged(b.fitness))
    }

    /// True once the run should not evaluate any further batch.
    pub fn should_stop(&self) -> bool {
        self.converged() || self.obj.budget_exhausted()
    }

    pub fn finish(self) -> Estimates {
        let best = self
            .best
            .expect("finish called before any evaluation");
        let converged = self.obj.is_converged(best.fitness);
        let visited_space = self.obj.visited()[self.start_idx..].to_vec();
        let stats = RunStats {
            total_evals: visited_space.len() as u64,
            converged,
            achieved_tolerance: best.fitness,
            wall_time: self.started.elapsed().as_secs_f64(),
        };
        Estimates {
            best,
            iteration_bests: self.iteration_bests,
            visited_space,
            stats,
        }
    }
}
