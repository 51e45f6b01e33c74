use super::{parse_override, unknown_option, Method, Run};
use crate::candidate::Candidate;
use crate::error::{Error, Result};
use crate::estimates::Estimates;
use crate::objective::Objective;
use crate::sampling::lhs;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

/// Ant colony optimization for continuous domains: a ranked archive of the
/// `archive` best solutions seeds Gaussian kernels from which each iteration
/// samples `ants` new candidates.
#[derive(Debug, Clone, Serialize)]
pub struct OptionsAcor {
    pub archive: usize,
    pub ants: usize,
    /// Locality of the rank weighting: small q concentrates sampling on the
    /// best-ranked rows.
    pub q: f64,
    /// Width multiplier of the per-dimension kernel deviation.
    pub xi: f64,
    pub iterations: u64,
}

impl Default for OptionsAcor {
    fn default() -> Self {
        OptionsAcor {
            archive: 64,
            ants: 64,
            q: 0.2,
            xi: 0.85,
            iterations: 500,
        }
    }
}

impl OptionsAcor {
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "archive" => self.archive = parse_override(key, value)?,
            "ants" => self.ants = parse_override(key, value)?,
            "q" => self.q = parse_override(key, value)?,
            "xi" => self.xi = parse_override(key, value)?,
            "iterations" => self.iterations = parse_override(key, value)?,
            _ => return Err(unknown_option(Method::Acor, key)),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.archive < 1 || self.ants < 1 {
            return Err(Error::InvalidInput(
                "archive and ants must be at least 1".into(),
            ));
        }
        if !(self.q > 0.0 && self.xi > 0.0) {
            return Err(Error::InvalidInput("q and xi must be positive".into()));
        }
        Ok(())
    }
}

/// Rank weights of the archive rows: a Gaussian of the rank centred on rank 1,
/// so the best row is sampled most often.
pub fn rank_weights(k: usize, q: f64) -> Vec<f64> {
    let kf = k as f64;
    (1..=k)
        .map(|l| {
            let rank = (l - 1) as f64;
            (-(rank * rank) / (2.0 * q * q * kf * kf)).exp()
                / (q * kf * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect()
}

/// Kernel deviation for dimension `j` around archive row `guide`: the mean
/// absolute spread of the archive in that dimension, scaled by `xi`.
pub(crate) fn kernel_sd(archive: &[Candidate], guide: usize, j: usize, xi: f64) -> f64 {
    let k = archive.len();
    if k <= 1 {
        return 0.0;
    }
    let center = archive[guide].values[j];
    let spread: f64 = archive.iter().map(|c| (c.values[j] - center).abs()).sum();
    xi * spread / (k - 1) as f64
}

fn pick_guide<R: Rng>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

pub fn acor<R: Rng>(obj: &mut Objective, opts: &OptionsAcor, rng: &mut R) -> Result<Estimates> {
    opts.validate()?;
    let mut run = Run::new(obj)?;
    let space = run.obj().space().clone();
    let d = space.dimension();

    let init = lhs(&space, opts.archive, rng).into_rows();
    let mut archive = run.evaluate(&init, 0);
    archive.sort_by(|a, b| a.cmp_fitness(b));
    run.end_iteration();

    let weights = rank_weights(opts.archive, opts.q);
    let total_weight: f64 = weights.iter().sum();

    for iteration in 1..=opts.iterations {
        if run.should_stop() {
            break;
        }
        let mut proposals = Vec::with_capacity(opts.ants);
        for _ in 0..opts.ants {
            let guide = pick_guide(&weights, total_weight, rng);
            let mut v = Vec::with_capacity(d);
            for j in 0..d {
                let sd = kernel_sd(&archive, guide, j, opts.xi);
                let x = if sd > 0.0 {
                    Normal::new(archive[guide].values[j], sd)
                        .expect("kernel sd is finite")
                        .sample(rng)
                } else {
                    archive[guide].values[j]
                };
                v.push(x);
            }
            proposals.push(space.clamp(&v)?);
        }
        let cands = run.evaluate(&proposals, iteration);
        archive.extend(cands);
        archive.sort_by(|a, b| a.cmp_fitness(b));
        archive.truncate(opts.archive);
        run.end_iteration();
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
    fn first_rank_weight_matches_the_closed_form() {
        let w = rank_weights(64, 0.2);
        let expect = 1.0 / (0.2 * 64.0 * (2.0 * std::f64::consts::PI).sqrt());
        assert!((w[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn rank_weights_decay_with_rank() {
        let w = rank_weights(8, 0.2);
        for pair in w.windows(2) {
            assert!(pair[0] > pair[1]);
        }
        // ratio between consecutive ranks for k=2, q=0.2: exp(1/(2 q^2 k^2))
        let w2 = rank_weights(2, 0.2);
        let expect = (1.0f64 / (2.0 * 0.04 * 4.0)).exp();
        assert!((w2[0] / w2[1] - expect).abs() < 1e-9);
    }

    fn cand(values: Vec<f64>, fitness: f64, pset: u64) -> Candidate {
        Candidate {
            values,
            fitness,
            pset,
            iteration: 0,
        }
    }

    #[test]
    fn kernel_collapses_when_the_archive_agrees() {
        let archive = vec![cand(vec![2.0], 1.0, 1), cand(vec![2.0], 2.0, 2)];
        assert_eq!(kernel_sd(&archive, 0, 0, 0.85), 0.0);
        let single = vec![cand(vec![3.0], 1.0, 1)];
        assert_eq!(kernel_sd(&single, 0, 0, 0.85), 0.0);
    }

    #[test]
    fn kernel_sd_is_the_scaled_mean_spread() {
        let archive = vec![cand(vec![0.0], 1.0, 1), cand(vec![2.0], 2.0, 2)];
        // spread around row 0: |2-0| / (k-1) = 2, scaled by xi
        assert!((kernel_sd(&archive, 0, 0, 0.85) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn archive_stays_sorted_and_bounded() {
        let space = ParameterSpace::from_bounds(&[("x", -5.0, 5.0), ("y", -5.0, 5.0)]).unwrap();
        let mut obj =
            Objective::from_fn(space, |v: &[f64]| v.iter().map(|x| x * x).sum()).unwrap();
        obj.set_tolerance(1e-9);
        let opts = OptionsAcor {
            archive: 8,
            ants: 4,
            iterations: 20,
            ..OptionsAcor::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est = acor(&mut obj, &opts, &mut rng).unwrap();
        // every iteration evaluates exactly `ants` candidates until the stop
        assert!(est.stats.total_evals >= 8);
        assert_eq!((est.stats.total_evals - 8) % 4, 0);
    }

    #[test]
    fn converges_on_a_bowl() {
        let space =
            ParameterSpace::from_bounds(&[("a", -100.0, 100.0), ("b", -100.0, 100.0)]).unwrap();
        let mut obj =
            Objective::from_fn(space, |v: &[f64]| v.iter().map(|x| x * x).sum()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let est = acor(&mut obj, &OptionsAcor::default(), &mut rng).unwrap();
        assert!(est.stats.converged);
    }
}
