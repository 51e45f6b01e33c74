use crate::algo::{extremize, Method};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::space::ParameterSpace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// The standard test functions. All have known minimum 0, at the origin
/// except Rosenbrock (all ones).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkFn {
    Rosenbrock,
    Cigar,
    Schaffer,
    Griewank,
    Bohachevsky,
}

impl BenchmarkFn {
    pub const ALL: [BenchmarkFn; 5] = [
        BenchmarkFn::Rosenbrock,
        BenchmarkFn::Cigar,
        BenchmarkFn::Schaffer,
        BenchmarkFn::Griewank,
        BenchmarkFn::Bohachevsky,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            BenchmarkFn::Rosenbrock => "rosenbrock",
            BenchmarkFn::Cigar => "cigar",
            BenchmarkFn::Schaffer => "schaffer",
            BenchmarkFn::Griewank => "griewank",
            BenchmarkFn::Bohachevsky => "bohachevsky",
        }
    }

    pub fn parse(key: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.key() == key)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown benchmark function `{key}` (expected one of rosenbrock, cigar, schaffer, griewank, bohachevsky)"
                ))
            })
    }

    /// Smallest dimension for which the definition is non-degenerate.
    fn min_dimension(&self) -> usize {
        match self {
            BenchmarkFn::Rosenbrock | BenchmarkFn::Schaffer | BenchmarkFn::Bohachevsky => 2,
            BenchmarkFn::Cigar | BenchmarkFn::Griewank => 1,
        }
    }
}

impl std::fmt::Display for BenchmarkFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// A test function pinned to a dimension, searched over [-100, 100]^d.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Benchmark {
    pub function: BenchmarkFn,
    pub dimension: usize,
}

pub const BENCHMARK_BOUND: f64 = 100.0;

impl Benchmark {
    pub fn new(function: BenchmarkFn, dimension: usize) -> Result<Self> {
        if dimension < function.min_dimension() {
            return Err(Error::InvalidInput(format!(
                "{} needs at least {} dimensions",
                function.key(),
                function.min_dimension()
            )));
        }
        Ok(Benchmark {
            function,
            dimension,
        })
    }

    pub fn known_optimum(&self) -> f64 {
        0.0
    }

    pub fn optimum_location(&self) -> Vec<f64> {
        let at = match self.function {
            BenchmarkFn::Rosenbrock => 1.0,
            _ => 0.0,
        };
        vec![at; self.dimension]
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(self.value(x))
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.function {
            BenchmarkFn::Rosenbrock => rosenbrock(x),
            BenchmarkFn::Cigar => cigar(x),
            BenchmarkFn::Schaffer => schaffer(x),
            BenchmarkFn::Griewank => griewank(x),
            BenchmarkFn::Bohachevsky => bohachevsky(x),
        }
    }

    /// Search space of the comparison protocol: x1..xd over [-100, 100].
    pub fn space(&self) -> ParameterSpace {
        let mut space = ParameterSpace::new();
        for i in 1..=self.dimension {
            space.push_unchecked(format!("x{i}"), -BENCHMARK_BOUND, BENCHMARK_BOUND);
        }
        space
    }

    pub fn objective(&self) -> Result<Objective> {
        let this = *self;
        Objective::from_fn(self.space(), move |v: &[f64]| this.value(v))
    }
}

impl std::fmt::Display for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}d", self.function, self.dimension)
    }
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    let mut total = 0.0;
    for w in x.windows(2) {
        let d1 = 1.0 - w[0];
        let d2 = w[1] - w[0] * w[0];
        total += d1 * d1 + 100.0 * (d2 * d2);
    }
    total
}

pub fn cigar(x: &[f64]) -> f64 {
    x[0] * x[0] + 1e6 * x[1..].iter().map(|v| v * v).sum::<f64>()
}

pub fn schaffer(x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for w in x.windows(2) {
        let s = (w[0] * w[0] + w[1] * w[1]).sqrt();
        let root = s.sqrt();
        let sine = (50.0 * s.powf(0.2)).sin();
        acc += root + root * sine * sine;
    }
    let mean = acc / (x.len() - 1) as f64;
    mean * mean
}

pub fn griewank(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v / 4000.0).sum();
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    1.0 + sum - prod
}

pub fn bohachevsky(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    x.windows(2)
        .map(|w| {
            w[0] * w[0] + 2.0 * w[1] * w[1] - 0.3 * (3.0 * PI * w[0]).cos()
                - 0.4 * (4.0 * PI * w[1]).cos()
                + 0.7
        })
        .sum()
}

/// One cell of the comparison grid, averaged over the replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub function: String,
    pub algorithm: Method,
    pub mean_evals: f64,
    /// Fraction of replicates whose best fitness reached the tolerance.
    pub convergence: f64,
    /// Mean best fitness over all replicates, converged or not.
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub replicates: u32,
    pub tolerance: f64,
    pub seeds: Vec<u64>,
}

impl ComparisonReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("function,algorithm,mean_evals,convergence,mean_fitness\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.function, row.algorithm, row.mean_evals, row.convergence, row.mean_fitness
            ));
        }
        out
    }

    pub fn row(&self, function: BenchmarkFn, method: Method) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.function == function.key() && r.algorithm == method)
    }
}

/// The four functions of the benchmark protocol, in four dimensions.
pub fn comparison_grid() -> Vec<Benchmark> {
    [
        BenchmarkFn::Cigar,
        BenchmarkFn::Schaffer,
        BenchmarkFn::Griewank,
        BenchmarkFn::Bohachevsky,
    ]
    .into_iter()
    .map(|f| Benchmark::new(f, 4).expect("4-D is valid for every function"))
    .collect()
}

/// Runs every (function, method) cell `replicates` times with default
/// options, seeding replicate r with seed_base + r, and averages the
/// evaluation counts and final fitness values.
pub fn compare_algorithms(
    functions: &[Benchmark],
    methods: &[Method],
    replicates: u32,
    tolerance: f64,
    seed_base: u64,
) -> Result<ComparisonReport> {
    if replicates < 1 {
        return Err(Error::InvalidInput("replicates must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..replicates).map(|r| seed_base + r as u64).collect();
    let mut rows = Vec::with_capacity(functions.len() * methods.len());
    for bench in functions {
        for &method in methods {
            let mut evals = 0.0;
            let mut fitness = 0.0;
            let mut converged = 0u32;
            for &seed in &seeds {
                let mut obj = bench.objective()?;
                obj.set_tolerance(tolerance);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let est = extremize(method, &mut obj, None, &mut rng)?;
                evals += est.stats.total_evals as f64;
                fitness += est.best.fitness;
                if est.stats.converged {
                    converged += 1;
                }
            }
            rows.push(ComparisonRow {
                function: bench.function.key().to_string(),
                algorithm: method,
                mean_evals: evals / replicates as f64,
                convergence: converged as f64 / replicates as f64,
                mean_fitness: fitness / replicates as f64,
            });
        }
    }
    Ok(ComparisonReport {
        rows,
        replicates,
        tolerance,
        seeds,
    })
}
