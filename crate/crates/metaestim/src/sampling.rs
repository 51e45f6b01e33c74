use crate::space::ParameterSpace;
use rand::seq::SliceRandom;
use rand::Rng;

/// A batch of sampled points; every entry lies inside the bounds of the
/// space it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: Vec<Vec<f64>>,
}

impl SampleMatrix {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Latin hypercube sample of `n` points: each dimension is cut into `n`
/// equal-width strata, a random permutation assigns one stratum per point,
/// and the position inside the stratum is uniform. The n-point marginal of
/// every dimension therefore covers each stratum exactly once.
pub fn lhs<R: Rng>(space: &ParameterSpace, n: usize, rng: &mut R) -> SampleMatrix {
    let d = space.dimension();
    let mut rows = vec![vec![0.0; d]; n];
    for (j, p) in space.params().iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (i, row) in rows.iter_mut().enumerate() {
            let u: f64 = rng.gen();
            row[j] = p.min + (strata[i] as f64 + u) / n as f64 * p.range();
        }
    }
    SampleMatrix { rows }
}

/// Plain independent uniform sample of `n` points over the box.
pub fn uniform_sample<R: Rng>(space: &ParameterSpace, n: usize, rng: &mut R) -> SampleMatrix {
    let rows = (0..n)
        .map(|_| {
            space
                .params()
                .iter()
                .map(|p| rng.gen_range(p.min..p.max))
                .collect()
        })
        .collect();
    SampleMatrix { rows }
}
