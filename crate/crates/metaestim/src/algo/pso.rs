use super::{parse_override, unknown_option, Method, Run};
use crate::error::{Error, Result};
use crate::estimates::Estimates;
use crate::objective::Objective;
use crate::sampling::lhs;
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Swarm topology: which particles inform particle `i`. Indices are 1-based.
#[derive(Clone)]
pub enum Neighborhood {
    /// Ring: the two adjacent particles, with wraparound.
    K2,
    /// Von Neumann: four grid neighbours on a column-major square-ish grid,
    /// toroidal, with unfilled cells skipped by walking onward.
    K4,
    /// Fully informed: every particle sees every other.
    Kn,
    /// User-supplied topology `(i, n) -> neighbour indices`.
    Custom(Arc<dyn Fn(usize, usize) -> Vec<usize> + Send + Sync>),
}

impl Neighborhood {
    pub fn key(&self) -> &'static str {
        match self {
            Neighborhood::K2 => "k2",
            Neighborhood::K4 => "k4",
            Neighborhood::Kn => "kn",
            Neighborhood::Custom(_) => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "k2" => Ok(Neighborhood::K2),
            "k4" => Ok(Neighborhood::K4),
            "kn" => Ok(Neighborhood::Kn),
            other => Err(Error::InvalidInput(format!(
                "unknown neighborhood '{other}' (expected k2, k4 or kn)"
            ))),
        }
    }

    /// Neighbour indices of particle `i` in a swarm of `n`, both 1-based.
    pub fn neighbors(&self, i: usize, n: usize) -> Result<Vec<usize>> {
        if i < 1 || i > n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let out = match self {
            Neighborhood::K2 => neighborhood_k2(i, n),
            Neighborhood::K4 => neighborhood_k4(i, n),
            Neighborhood::Kn => (1..=n).collect(),
            Neighborhood::Custom(f) => {
                let out = f(i, n);
                if let Some(&bad) = out.iter().find(|&&j| j < 1 || j > n) {
                    return Err(Error::IndexOutOfRange { index: bad, n });
                }
                out
            }
        };
        Ok(out)
    }
}

impl std::fmt::Debug for Neighborhood {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

impl Serialize for Neighborhood {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

fn neighborhood_k2(i: usize, n: usize) -> Vec<usize> {
    let prev = if i == 1 { n } else { i - 1 };
    let next = if i == n { 1 } else { i + 1 };
    let mut out = vec![prev];
    if next != prev {
        out.push(next);
    }
    out
}

/// Particles are laid out column-major on a grid with ceil(sqrt(n)) rows.
/// Neighbours are up/down/left/right with wraparound; a step landing on an
/// unfilled cell keeps walking in the same direction.
fn neighborhood_k4(i: usize, n: usize) -> Vec<usize> {
    let nrows = (n as f64).sqrt().ceil() as usize;
    let ncols = n.div_ceil(nrows);
    let idx = |r: usize, c: usize| c * nrows + r + 1; // 1-based, column-major
    let r0 = (i - 1) % nrows;
    let c0 = (i - 1) / nrows;
    let up = |r: usize| if r == 0 { nrows - 1 } else { r - 1 };
    let down = |r: usize| if r == nrows - 1 { 0 } else { r + 1 };
    let left = |c: usize| if c == 0 { ncols - 1 } else { c - 1 };
    let right = |c: usize| if c == ncols - 1 { 0 } else { c + 1 };

    let mut out = Vec::with_capacity(4);
    let mut push = |j: usize| {
        if !out.contains(&j) {
            out.push(j);
        }
    };
    let mut r = up(r0);
    while idx(r, c0) > n {
        r = up(r);
    }
    push(idx(r, c0));
    r = down(r0);
    while idx(r, c0) > n {
        r = down(r);
    }
    push(idx(r, c0));
    let mut c = left(c0);
    while idx(r0, c) > n {
        c = left(c);
    }
    push(idx(r0, c));
    c = right(c0);
    while idx(r0, c) > n {
        c = right(c);
    }
    push(idx(r0, c));
    out
}

/// Constriction-form particle swarm options.
#[derive(Debug, Clone, Serialize)]
pub struct OptionsPso {
    pub iterations: u64,
    pub swarm: usize,
    pub phi1: f64,
    pub phi2: f64,
    pub chi: f64,
    pub neighborhood: Neighborhood,
}

impl Default for OptionsPso {
    fn default() -> Self {
        OptionsPso {
            iterations: 1000,
            swarm: 16,
            phi1: 2.05,
            phi2: 2.05,
            chi: 0.72984,
            neighborhood: Neighborhood::Kn,
        }
    }
}

impl OptionsPso {
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "iterations" => self.iterations = parse_override(key, value)?,
            "swarm" => self.swarm = parse_override(key, value)?,
            "phi1" => self.phi1 = parse_override(key, value)?,
            "phi2" => self.phi2 = parse_override(key, value)?,
            "chi" => self.chi = parse_override(key, value)?,
            "neighborhood" => self.neighborhood = Neighborhood::parse(value)?,
            _ => return Err(unknown_option(Method::Pso, key)),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.swarm < 1 {
            return Err(Error::InvalidInput("swarm must be at least 1".into()));
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(Error::InvalidInput("chi must be positive".into()));
        }
        if !(self.phi1 >= 0.0 && self.phi2 >= 0.0) {
            return Err(Error::InvalidInput("phi1/phi2 must be nonnegative".into()));
        }
        Ok(())
    }
}

pub fn pso<R: Rng>(obj: &mut Objective, opts: &OptionsPso, rng: &mut R) -> Result<Estimates> {
    opts.validate()?;
    let mut run = Run::new(obj)?;
    let space = run.obj().space().clone();
    let d = space.dimension();
    let n = opts.swarm;

    let mut positions = lhs(&space, n, rng).into_rows();
    let mut velocities = vec![vec![0.0; d]; n];
    let mut pbest = run.evaluate(&positions, 0);
    run.end_iteration();

    for iteration in 1..=opts.iterations {
        if run.should_stop() {
            break;
        }
        // neighbourhood bests from the previous iteration's personal bests
        let mut nbest: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 1..=n {
            let neigh = opts.neighborhood.neighbors(i, n)?;
            let best = neigh
                .iter()
                .map(|&j| &pbest[j - 1])
                .min_by(|a, b| a.cmp_fitness(b))
                .unwrap_or(&pbest[i - 1]);
            nbest.push(best.values.clone());
        }
        for i in 0..n {
            for j in 0..d {
                let u1: f64 = rng.gen();
                let u2: f64 = rng.gen();
                velocities[i][j] = opts.chi
                    * (velocities[i][j]
                        + opts.phi1 * u1 * (pbest[i].values[j] - positions[i][j])
                        + opts.phi2 * u2 * (nbest[i][j] - positions[i][j]));
                positions[i][j] += velocities[i][j];
            }
            positions[i] = space.clamp(&positions[i])?;
        }
        let cands = run.evaluate(&positions, iteration);
        for (pb, c) in pbest.iter_mut().zip(cands) {
            if c.fitness < pb.fitness {
                *pb = c;
            }
        }
        run.end_iteration();
    }
    Ok(run.finish())
}
