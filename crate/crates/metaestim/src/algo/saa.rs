use super::{parse_override, unknown_option, Method, Run};
use crate::error::{Error, Result};
use crate::estimates::Estimates;
use crate::objective::Objective;
use crate::sampling::uniform_sample;
use crate::space::ParameterDef;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// How many dimensions one proposal perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaaNeighborhood {
    /// One randomly chosen dimension.
    Perturb1,
    /// Half the dimensions (at least one).
    PerturbHalf,
    /// Every dimension.
    PerturbAll,
}

impl SaaNeighborhood {
    pub fn key(&self) -> &'static str {
        match self {
            SaaNeighborhood::Perturb1 => "perturb-1",
            SaaNeighborhood::PerturbHalf => "perturb-half",
            SaaNeighborhood::PerturbAll => "perturb-all",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "perturb-1" | "1" => Ok(SaaNeighborhood::Perturb1),
            "perturb-half" | "half" => Ok(SaaNeighborhood::PerturbHalf),
            "perturb-all" | "all" => Ok(SaaNeighborhood::PerturbAll),
            other => Err(Error::InvalidInput(format!(
                "unknown neighborhood '{other}' (expected perturb-1, perturb-half or perturb-all)"
            ))),
        }
    }

    /// Number of dimensions perturbed in a `d`-dimensional space.
    pub fn size(&self, d: usize) -> usize {
        match self {
            SaaNeighborhood::Perturb1 => 1.min(d.max(1)),
            SaaNeighborhood::PerturbHalf => (d / 2).max(1),
            SaaNeighborhood::PerturbAll => d,
        }
    }
}

/// Simulated annealing options. Cooling is geometric (`T <- alpha * T`) from
/// `t0` down to `t_min`, with `temperature_length` proposals per temperature.
#[derive(Debug, Clone, Serialize)]
pub struct OptionsSaa {
    pub t0: f64,
    pub t_min: f64,
    pub alpha: f64,
    pub temperature_length: u64,
    /// Scale of the fresh-draw proposal path, as a fraction of each
    /// parameter's range.
    pub distance: f64,
    pub neighborhood: SaaNeighborhood,
}

impl Default for OptionsSaa {
    fn default() -> Self {
        OptionsSaa {
            t0: 1.0,
            t_min: 1e-4,
            alpha: 0.9,
            temperature_length: 10,
            distance: 0.5,
            neighborhood: SaaNeighborhood::Perturb1,
        }
    }
}

impl OptionsSaa {
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "t0" => self.t0 = parse_override(key, value)?,
            "t_min" => self.t_min = parse_override(key, value)?,
            "alpha" => self.alpha = parse_override(key, value)?,
            "temperature_length" => self.temperature_length = parse_override(key, value)?,
            "distance" => self.distance = parse_override(key, value)?,
            "neighborhood" => self.neighborhood = SaaNeighborhood::parse(value)?,
            _ => return Err(unknown_option(Method::Saa, key)),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t_min > 0.0 && self.t_min <= self.t0) {
            return Err(Error::InvalidInput(
                "temperatures must satisfy 0 < t_min <= t0".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput("alpha must lie in (0, 1)".into()));
        }
        if self.temperature_length < 1 {
            return Err(Error::InvalidInput(
                "temperature_length must be at least 1".into(),
            ));
        }
        if !(self.distance > 0.0) {
            return Err(Error::InvalidInput("distance must be positive".into()));
        }
        Ok(())
    }
}

/// Probability of accepting a move that changes the cost by `delta` at
/// temperature `t`. Improvements (delta <= 0) are always accepted.
pub fn acceptance_probability(delta: f64, t: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else {
        (-delta / t).exp()
    }
}

/// One Metropolis acceptance decision.
pub fn accept<R: Rng>(delta: f64, t: f64, rng: &mut R) -> bool {
    delta <= 0.0 || rng.gen::<f64>() < acceptance_probability(delta, t)
}

/// A single-component move, chosen per perturbed dimension:
/// with probability 0.2 a fresh draw around the range midpoint, otherwise a
/// multiplicative step around the current value.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Move {
    /// `value = scale * z + midpoint` with `z` standard normal.
    FreshDraw { z: f64 },
    /// `value = s + s * u` with `u` uniform on (-1, 1).
    Relative { u: f64 },
}

pub(crate) fn perturb_component(s: f64, def: &ParameterDef, distance: f64, mv: Move) -> f64 {
    let next = match mv {
        Move::FreshDraw { z } => distance * def.range() * z + def.midpoint(),
        Move::Relative { u } => s + s * u,
    };
    next.clamp(def.min, def.max)
}

fn propose<R: Rng>(
    current: &[f64],
    space: &[ParameterDef],
    opts: &OptionsSaa,
    rng: &mut R,
) -> Vec<f64> {
    let d = space.len();
    let k = opts.neighborhood.size(d);
    let chosen = rand::seq::index::sample(rng, d, k);
    let mut next = current.to_vec();
    for j in chosen {
        let mv = if rng.gen::<f64>() < 0.2 {
            Move::FreshDraw {
                z: rng.sample(StandardNormal),
            }
        } else {
            Move::Relative {
                u: rng.gen_range(-1.0..1.0),
            }
        };
        next[j] = perturb_component(current[j], &space[j], opts.distance, mv);
    }
    next
}

pub fn saa<R: Rng>(obj: &mut Objective, opts: &OptionsSaa, rng: &mut R) -> Result<Estimates> {
    opts.validate()?;
    let mut run = Run::new(obj)?;
    let space = run.obj().space().clone();

    let start = uniform_sample(&space, 1, rng).into_rows().pop().unwrap();
    let mut current = run.evaluate(&[start], 0).pop().unwrap();
    run.end_iteration();

    let mut t = opts.t0;
    let mut iteration = 1;
    'cooling: while t > opts.t_min && !run.should_stop() {
        for _ in 0..opts.temperature_length {
            let proposal = propose(&current.values, space.params(), opts, rng);
            let cand = run.evaluate(&[proposal], iteration).pop().unwrap();
            if accept(cand.fitness - current.fitness, t, rng) {
                current = cand;
            }
            if run.should_stop() {
                run.end_iteration();
                break 'cooling;
            }
        }
        run.end_iteration();
        t *= opts.alpha;
        iteration += 1;
    }
    Ok(run.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::ParameterSpace;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn neighborhood_sizes() {
        assert_eq!(SaaNeighborhood::Perturb1.size(4), 1);
        assert_eq!(SaaNeighborhood::PerturbHalf.size(5), 2);
        assert_eq!(SaaNeighborhood::PerturbHalf.size(1), 1);
        assert_eq!(SaaNeighborhood::PerturbAll.size(3), 3);
    }

    #[test]
    fn fresh_draw_centers_on_midpoint() {
        let def = ParameterDef::new("x", 0.0, 10.0).unwrap();
        let v = perturb_component(2.0, &def, 0.5, Move::FreshDraw { z: 0.0 });
        assert_eq!(v, 5.0);
        // one standard deviation is distance * range = 5
        let v = perturb_component(2.0, &def, 0.5, Move::FreshDraw { z: 1.0 });
        assert_eq!(v, 10.0);
    }

    #[test]
    fn relative_step_scales_with_current_value() {
        let def = ParameterDef::new("x", -10.0, 10.0).unwrap();
        assert_eq!(perturb_component(0.0, &def, 0.5, Move::Relative { u: 0.9 }), 0.0);
        assert_eq!(perturb_component(4.0, &def, 0.5, Move::Relative { u: 0.5 }), 6.0);
        assert_eq!(perturb_component(4.0, &def, 0.5, Move::Relative { u: -0.5 }), 2.0);
    }

    #[test]
    fn proposals_are_clamped() {
        let def = ParameterDef::new("x", 0.0, 1.0).unwrap();
        let v = perturb_component(0.5, &def, 0.5, Move::FreshDraw { z: 100.0 });
        assert_eq!(v, 1.0);
    }

    #[test]
    fn equal_cost_moves_are_always_accepted() {
        assert_eq!(acceptance_probability(0.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(-3.0, 0.1), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(accept(0.0, 1e-9, &mut rng));
    }

    #[test]
    fn uphill_acceptance_follows_the_boltzmann_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let trials = 40_000;
        let accepted = (0..trials).filter(|_| accept(0.5, 1.0, &mut rng)).count();
        let freq = accepted as f64 / trials as f64;
        assert!((freq - (-0.5f64).exp()).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn cooling_is_geometric() {
        let opts = OptionsSaa::default();
        let mut t: f64 = 100.0;
        t *= opts.alpha;
        assert!((t - 90.0).abs() < 1e-12);
    }

    #[test]
    fn converges_on_a_simple_bowl() {
        let space =
            ParameterSpace::from_bounds(&[("a", -50.0, 50.0), ("b", -50.0, 50.0)]).unwrap();
        let mut obj =
            Objective::from_fn(space, |v: &[f64]| v.iter().map(|x| x * x).sum()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = saa(&mut obj, &OptionsSaa::default(), &mut rng).unwrap();
        assert!(est.stats.converged, "best {}", est.best.fitness);
        assert!(est.stats.total_evals <= 881);
    }
}
