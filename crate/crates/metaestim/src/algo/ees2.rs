use super::{parse_override, unknown_option, Method, Run};
use crate::candidate::Candidate;
use crate::error::{Error, Result};
use crate::estimates::Estimates;
use crate::objective::Objective;
use crate::sampling::lhs;
use crate::space::ParameterSpace;
use rand::Rng;
use serde::Serialize;

/// Evolutionary strategy that maps the solution landscape by repeatedly
/// shrinking the sampling box around the best rows and re-sampling it with a
/// fresh latin hypercube.
#[derive(Debug, Clone, Serialize)]
pub struct OptionsEes2 {
    pub n: usize,
    /// Fraction of the solution set whose best rows steer the next box.
    pub rho: f64,
    pub iterations: u64,
    /// Exponent of the per-dimension geometric midpoint (min·max)^r.
    pub r: f64,
}

impl Default for OptionsEes2 {
    fn default() -> Self {
        OptionsEes2 {
            n: 20,
            rho: 0.25,
            iterations: 30,
            r: 0.5,
        }
    }
}

impl OptionsEes2 {
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_override(key, value)?,
            "rho" => self.rho = parse_override(key, value)?,
            "iterations" => self.iterations = parse_override(key, value)?,
            "r" => self.r = parse_override(key, value)?,
            _ => return Err(unknown_option(Method::Ees2, key)),
        }
        Ok(())
    }

    /// Number of head rows used to derive the next sampling box.
    pub fn head(&self) -> usize {
        (self.n as f64 * self.rho).trunc() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        let k = self.head();
        if k < 1 || k > self.n {
            return Err(Error::InvalidInput(format!(
                "trunc(n*rho) = {k} must lie in 1..={}",
                self.n
            )));
        }
        if !(self.r > 0.0) {
            return Err(Error::InvalidInput("r must be positive".into()));
        }
        Ok(())
    }
}

/// Geometric midpoint m1 = (min·max)^r (sign preserved when both bounds are
/// negative, arithmetic midpoint when the product is negative) and the
/// half-magnitude m2 = |min+max|/2.
pub(crate) fn midpoints(mn: f64, mx: f64, r: f64) -> (f64, f64) {
    let m2 = 0.5 * (mn + mx).abs();
    let m1 = if mn >= 0.0 {
        (mn * mx).powf(r)
    } else if mx <= 0.0 {
        -(mn * mx).powf(r)
    } else {
        0.5 * (mn + mx)
    };
    (m1, m2)
}

/// Derives the next sampling box from the head rows: per dimension a range
/// around m1, widened additively (1 in 5 iterations) or by multiples of m2,
/// then intersected with the original bounds. The result can collapse to a
/// point but never inverts, because m1 always lies inside the original range.
pub(crate) fn shrink_space<R: Rng>(
    original: &ParameterSpace,
    head: &[Candidate],
    r: f64,
    rng: &mut R,
) -> ParameterSpace {
    let additive = rng.gen::<f64>() < 0.2;
    let mut next = ParameterSpace::new();
    for (j, def) in original.params().iter().enumerate() {
        let mn = head.iter().map(|c| c.values[j]).fold(f64::INFINITY, f64::min);
        let mx = head
            .iter()
            .map(|c| c.values[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let (m1, m2) = midpoints(mn, mx, r);
        let (lo, hi) = if additive {
            (m1 - m2 - rng.gen::<f64>(), m1 + m2 + rng.gen::<f64>())
        } else {
            (m1 - m2 * rng.gen_range(0.0..3.0), m1 + m2 * rng.gen_range(0.0..3.0))
        };
        next.push_unchecked(def.name.clone(), lo.max(def.min), hi.min(def.max));
    }
    next
}

pub fn ees2<R: Rng>(obj: &mut Objective, opts: &OptionsEes2, rng: &mut R) -> Result<Estimates> {
    opts.validate()?;
    let mut run = Run::new(obj)?;
    let space = run.obj().space().clone();
    let k = opts.head();

    let init = lhs(&space, opts.n, rng).into_rows();
    let mut solutions = run.evaluate(&init, 0);
    solutions.sort_by(|a, b| a.cmp_fitness(b));
    run.end_iteration();

    for iteration in 1..=opts.iterations {
        if run.should_stop() {
            break;
        }
        let next = shrink_space(&space, &solutions[..k], opts.r, rng);
        let batch = lhs(&next, opts.n, rng).into_rows();
        let cands = run.evaluate(&batch, iteration);
        solutions.extend(cands);
        solutions.sort_by(|a, b| a.cmp_fitness(b));
        run.end_iteration();
    }
    Ok(run.finish())
}
