use super::{parse_override, unknown_option, Method, Run};
use crate::candidate::Candidate;
use crate::error::{Error, Result};
use crate::estimates::Estimates;
use crate::objective::Objective;
use crate::sampling::lhs;
use rand::Rng;
use serde::Serialize;

/// Which recombination rule mixes a parent with the mating centroid G.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecombinationForm {
    /// x' = (x + (x + G)·w) / 2
    WeightedAverage,
    /// x' = x + G·w/2
    CentroidOffset,
}

impl RecombinationForm {
    pub fn key(&self) -> &'static str {
        match self {
            RecombinationForm::WeightedAverage => "weighted-average",
            RecombinationForm::CentroidOffset => "centroid-offset",
        }
    }

    pub fn parse(key: &str) -> Result<Self> {
        match key {
            "weighted-average" => Ok(RecombinationForm::WeightedAverage),
            "centroid-offset" => Ok(RecombinationForm::CentroidOffset),
            _ => Err(Error::InvalidInput(format!(
                "unknown recombination form `{key}` (expected weighted-average or centroid-offset)"
            ))),
        }
    }
}

/// Evolutionary strategy with rank-gated mating, a geometric-centroid
/// recombination step, and probabilistic elitist replacement.
#[derive(Debug, Clone, Serialize)]
pub struct OptionsEes1 {
    pub n: usize,
    /// Mating gate strength: row of rank k mates with probability mu^k.
    pub mu: f64,
    /// Per-component mutation probability.
    pub rho: f64,
    /// Selective pressure: a worse candidate still replaces its slot with
    /// probability 1 - kappa (the best slot only ever improves).
    pub kappa: f64,
    pub iterations: u64,
    pub recombination: RecombinationForm,
}

impl Default for OptionsEes1 {
    fn default() -> Self {
        OptionsEes1 {
            n: 20,
            mu: 0.3,
            rho: 0.01,
            kappa: 0.2,
            iterations: 50,
            recombination: RecombinationForm::WeightedAverage,
        }
    }
}

impl OptionsEes1 {
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_override(key, value)?,
            "mu" => self.mu = parse_override(key, value)?,
            "rho" => self.rho = parse_override(key, value)?,
            "kappa" => self.kappa = parse_override(key, value)?,
            "iterations" => self.iterations = parse_override(key, value)?,
            "recombination" => self.recombination = RecombinationForm::parse(value)?,
            _ => return Err(unknown_option(Method::Ees1, key)),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidInput("mu must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidInput("rho must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::InvalidInput("kappa must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Probability that the row of the given 1-based rank is picked as a mate.
pub fn selection_weight(mu: f64, rank: u32) -> f64 {
    mu.powi(rank as i32)
}

/// Picks a distinct subset of `want` mates from the sorted population. Each
/// pass walks the not-yet-chosen rows best-first, taking the i-th of them
/// with probability mu^i, and passes repeat until the quota is filled; gating
/// by position within the pass keeps the wait bounded even for tiny mu.
fn select_mates<'a, R: Rng>(
    sorted: &'a [Candidate],
    mu: f64,
    want: usize,
    rng: &mut R,
) -> Vec<&'a Candidate> {
    let want = want.min(sorted.len());
    let mut chosen = vec![false; sorted.len()];
    let mut picked = 0;
    while picked < want {
        let mut rank = 0;
        for flag in chosen.iter_mut() {
            if picked == want {
                break;
            }
            if *flag {
                continue;
            }
            rank += 1;
            if rng.gen::<f64>() < selection_weight(mu, rank) {
                *flag = true;
                picked += 1;
            }
        }
    }
    sorted
        .iter()
        .zip(&chosen)
        .filter_map(|(c, &keep)| keep.then_some(c))
        .collect()
}

/// Component-wise geometric mean of the mates. When a dimension mixes signs
/// the geometric mean is undefined, so that dimension falls back to the
/// arithmetic mean; an all-negative dimension keeps its sign.
pub(crate) fn geometric_centroid(mates: &[&Candidate], d: usize) -> Vec<f64> {
    let n = mates.len() as f64;
    (0..d)
        .map(|j| {
            let column = mates.iter().map(|c| c.values[j]);
            if mates.iter().all(|c| c.values[j] >= 0.0) {
                (column.map(f64::ln).sum::<f64>() / n).exp()
            } else if mates.iter().all(|c| c.values[j] <= 0.0) {
                -(column.map(|v| v.abs().ln()).sum::<f64>() / n).exp()
            } else {
                column.sum::<f64>() / n
            }
        })
        .collect()
}

/// Fitness-proportional recombination weights; degenerate totals (zero or
/// non-finite, e.g. when penalty values are present) flatten to 1/N.
pub(crate) fn fitness_weights(sorted: &[Candidate]) -> Vec<f64> {
    let total: f64 = sorted.iter().map(|c| c.fitness).sum();
    if !total.is_finite() || total == 0.0 {
        return vec![1.0 / sorted.len() as f64; sorted.len()];
    }
    sorted.iter().map(|c| c.fitness / total).collect()
}

pub(crate) fn recombine(x: f64, g: f64, w: f64, weighted: bool, form: RecombinationForm) -> f64 {
    if weighted {
        match form {
            RecombinationForm::WeightedAverage => (x + (x + g) * w) / 2.0,
            RecombinationForm::CentroidOffset => x + g * w / 2.0,
        }
    } else {
        (x + g) / 2.0
    }
}

pub fn ees1<R: Rng>(obj: &mut Objective, opts: &OptionsEes1, rng: &mut R) -> Result<Estimates> {
    opts.validate()?;
    let mut run = Run::new(obj)?;
    let space = run.obj().space().clone();
    let d = space.dimension();
    let want = (opts.n / 2).max(1);

    let init = lhs(&space, opts.n, rng).into_rows();
    let mut pop = run.evaluate(&init, 0);
    pop.sort_by(|a, b| a.cmp_fitness(b));
    run.end_iteration();

    for iteration in 1..=opts.iterations {
        if run.should_stop() {
            break;
        }
        let g = {
            let mates = select_mates(&pop, opts.mu, want, rng);
            geometric_centroid(&mates, d)
        };
        let weights = fitness_weights(&pop);

        let mut proposals = Vec::with_capacity(opts.n);
        for (k, parent) in pop.iter().enumerate() {
            let weighted = rng.gen::<f64>() < 0.2;
            let mut v: Vec<f64> = (0..d)
                .map(|j| recombine(parent.values[j], g[j], weights[k], weighted, opts.recombination))
                .collect();
            for (j, def) in space.params().iter().enumerate() {
                if rng.gen::<f64>() < opts.rho {
                    let scale = 0.1 * def.range();
                    v[j] += rng.gen_range(-scale..scale);
                }
            }
            proposals.push(space.clamp(&v)?);
        }

        let offspring = run.evaluate(&proposals, iteration);
        for (i, child) in offspring.into_iter().enumerate() {
            let improves = child.fitness < pop[i].fitness;
            if improves || (i > 0 && rng.gen::<f64>() < 1.0 - opts.kappa) {
                pop[i] = child;
            }
        }
        pop.sort_by(|a, b| a.cmp_fitness(b));
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
    fn selection_weight_is_mu_to_the_rank() {
        assert!((selection_weight(0.3, 1) - 0.3).abs() < 1e-15);
        assert!((selection_weight(0.3, 3) - 0.027).abs() < 1e-15);
        assert_eq!(selection_weight(1.0, 42), 1.0);
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
    fn centroid_is_the_geometric_mean_for_positive_mates() {
        let a = cand(vec![1.0], 0.0, 1);
        let b = cand(vec![4.0], 0.0, 2);
        let g = geometric_centroid(&[&a, &b], 1);
        assert!((g[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_keeps_the_sign_of_all_negative_mates() {
        let a = cand(vec![-1.0], 0.0, 1);
        let b = cand(vec![-4.0], 0.0, 2);
        let g = geometric_centroid(&[&a, &b], 1);
        assert!((g[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_falls_back_to_arithmetic_mean_on_mixed_signs() {
        let a = cand(vec![-1.0], 0.0, 1);
        let b = cand(vec![3.0], 0.0, 2);
        let g = geometric_centroid(&[&a, &b], 1);
        assert!((g[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_with_a_zero_mate_is_zero() {
        let a = cand(vec![0.0], 0.0, 1);
        let b = cand(vec![4.0], 0.0, 2);
        let g = geometric_centroid(&[&a, &b], 1);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn mate_scan_with_mu_one_takes_the_head_of_the_ranking() {
        let pop: Vec<Candidate> = (0..6).map(|i| cand(vec![i as f64], i as f64, i + 1)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mates = select_mates(&pop, 1.0, 3, &mut rng);
        let picked: Vec<f64> = mates.iter().map(|c| c.values[0]).collect();
        assert_eq!(picked, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn mate_scan_rescans_until_filled_with_distinct_rows() {
        let pop: Vec<Candidate> = (0..4).map(|i| cand(vec![i as f64], i as f64, i + 1)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // mu small enough that one pass almost never fills the quota
        let mates = select_mates(&pop, 0.05, 2, &mut rng);
        assert_eq!(mates.len(), 2);
        assert_ne!(mates[0].pset, mates[1].pset);
    }

    #[test]
    fn mate_scan_never_asks_for_more_rows_than_exist() {
        let pop = vec![cand(vec![1.0], 1.0, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mates = select_mates(&pop, 0.3, 5, &mut rng);
        assert_eq!(mates.len(), 1);
    }

    #[test]
    fn weights_flatten_when_the_total_is_degenerate() {
        let pop = vec![
            cand(vec![0.0], f64::MAX, 1),
            cand(vec![0.0], f64::MAX, 2),
            cand(vec![0.0], f64::MAX, 3),
            cand(vec![0.0], f64::MAX, 4),
        ];
        assert_eq!(fitness_weights(&pop), vec![0.25; 4]);
        let zeros = vec![cand(vec![0.0], 0.0, 1), cand(vec![0.0], 0.0, 2)];
        assert_eq!(fitness_weights(&zeros), vec![0.5; 2]);
    }

    #[test]
    fn weights_are_fitness_proportional_otherwise() {
        let pop = vec![cand(vec![0.0], 1.0, 1), cand(vec![0.0], 3.0, 2)];
        assert_eq!(fitness_weights(&pop), vec![0.25, 0.75]);
    }

    #[test]
    fn plain_recombination_is_the_midpoint() {
        let x = recombine(2.0, 4.0, 0.9, false, RecombinationForm::WeightedAverage);
        assert_eq!(x, 3.0);
    }

    #[test]
    fn weighted_recombination_forms() {
        let avg = recombine(2.0, 4.0, 0.5, true, RecombinationForm::WeightedAverage);
        assert!((avg - 2.5).abs() < 1e-15); // (2 + 6*0.5)/2
        let off = recombine(2.0, 4.0, 0.5, true, RecombinationForm::CentroidOffset);
        assert!((off - 3.0).abs() < 1e-15); // 2 + 4*0.25
    }

    #[test]
    fn recombination_form_keys_round_trip() {
        for form in [
            RecombinationForm::WeightedAverage,
            RecombinationForm::CentroidOffset,
        ] {
            assert_eq!(RecombinationForm::parse(form.key()).unwrap(), form);
        }
        assert!(RecombinationForm::parse("midpoint").is_err());
    }

    #[test]
    fn rejects_bad_options() {
        let mut bad = OptionsEes1 {
            mu: 0.0,
            ..OptionsEes1::default()
        };
        let space = ParameterSpace::from_bounds(&[("x", -1.0, 1.0)]).unwrap();
        let mut obj = Objective::from_fn(space, |v: &[f64]| v[0] * v[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ees1(&mut obj, &bad, &mut rng).is_err());
        bad.mu = 0.3;
        bad.kappa = 1.5;
        assert!(ees1(&mut obj, &bad, &mut rng).is_err());
    }

    #[test]
    fn converges_on_a_bowl() {
        let space =
            ParameterSpace::from_bounds(&[("a", -100.0, 100.0), ("b", -100.0, 100.0)]).unwrap();
        let mut obj =
            Objective::from_fn(space, |v: &[f64]| v.iter().map(|x| x * x).sum()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = ees1(&mut obj, &OptionsEes1::default(), &mut rng).unwrap();
        assert!(est.stats.converged);
        assert!(est.stats.total_evals <= 1020);
    }
}
