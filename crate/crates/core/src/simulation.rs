//! Ground-truth oracle for estimator bias and MSE: SRSWOR draws, exhaustive
//! enumeration of the sampling distribution, and seeded Monte Carlo.
//!
//! Monte Carlo work is cut into [`SHARDS`] fixed shards. Shard `k` draws from
//! ChaCha8 seeded with the run seed on stream `k`, and shard results are merged
//! in shard order, so the output depends only on `(seed, reps)` and never on
//! how many worker threads ran the shards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combin::{binomial, Combinations};
use crate::error::{Error, Result};
use crate::estimators::{evaluate_with_means, validate_spec, EstimatorSpec, Family};
use crate::moments::{Means, Population, DEFAULT_BUDGET};

pub const SHARDS: u64 = 64;
pub const RNG_ALGORITHM: &str = "chacha8/stream-per-shard/64";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McOptions {
    pub reps: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            reps: 100_000,
            seed: 1,
            workers: None,
        }
    }
}

/// Streaming mean/variance (Welford) with deterministic pairwise merge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

pub(crate) fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Runs `body(rng, reps_in_shard)` for each shard and returns results in shard
/// order.
pub(crate) fn run_shards<A, F>(reps: u64, seed: u64, workers: Option<usize>, body: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> A + Sync,
{
    let per = reps / SHARDS;
    let extra = reps % SHARDS;
    let work = |k: u64| {
        let mut rng = shard_rng(seed, k);
        body(&mut rng, per + u64::from(k < extra))
    };
    match workers {
        Some(1) => (0..SHARDS).map(work).collect(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| (0..SHARDS).into_par_iter().map(work).collect()),
            Err(_) => (0..SHARDS).map(work).collect(),
        },
        None => (0..SHARDS).into_par_iter().map(work).collect(),
    }
}

/// A uniformly random `n`-subset of `0..N` (partial Fisher-Yates), sorted.
pub fn srswor_sample<R: Rng + ?Sized>(
    rng: &mut R,
    population: usize,
    n: usize,
) -> Result<Vec<usize>> {
    if n == 0 || n > population {
        return Err(Error::InvalidSampleSize { n, population });
    }
    let mut idx: Vec<usize> = (0..population).collect();
    for i in 0..n {
        let j = rng.random_range(i..population);
        idx.swap(i, j);
    }
    idx.truncate(n);
    idx.sort_unstable();
    Ok(idx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMethod {
    Enumeration,
    MonteCarlo,
}

impl std::fmt::Display for SimMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimMethod::Enumeration => "enumerated",
            SimMethod::MonteCarlo => "monte-carlo",
        })
    }
}

/// Exact or simulated sampling behaviour of one estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub family: Family,
    pub n: usize,
    pub method: SimMethod,
    /// Subsets visited (enumeration) or replications requested (Monte Carlo).
    pub samples: u64,
    pub bias: f64,
    pub mse: f64,
    pub bias_se: Option<f64>,
    pub mse_se: Option<f64>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    /// Monte Carlo draws on which the estimator could not be evaluated.
    pub failures: u64,
}

fn subset_means(pop: &Population, subset: &[usize]) -> Means {
    let n = subset.len() as f64;
    let avg = |col: &[f64]| subset.iter().map(|&i| col[i]).sum::<f64>() / n;
    Means {
        y: avg(pop.y()),
        x: avg(pop.x()),
        z: avg(pop.z()),
    }
}

fn check_inputs(pop: &Population, spec: &EstimatorSpec, n: usize) -> Result<Means> {
    let violations = validate_spec(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    if n == 0 || n > pop.len() {
        return Err(Error::InvalidSampleSize {
            n,
            population: pop.len(),
        });
    }
    Ok(pop.means())
}

/// Bias and MSE over every one of the `C(N, n)` equally likely samples.
pub fn enumerate_exact(
    pop: &Population,
    spec: &EstimatorSpec,
    n: usize,
    budget: u128,
) -> Result<SimResult> {
    let means = check_inputs(pop, spec, n)?;
    let subsets = binomial(pop.len(), n);
    if subsets > budget {
        return Err(Error::BudgetExceeded { subsets, budget });
    }
    let mut sum_d = 0.0;
    let mut sum_d2 = 0.0;
    let mut it = Combinations::new(pop.len(), n);
    while let Some(s) = it.next_subset() {
        let t = evaluate_with_means(spec, &subset_means(pop, s), &means).map_err(|e| {
            Error::EvaluationFailed {
                subset: s.to_vec(),
                reason: e.to_string(),
            }
        })?;
        let d = t - means.y;
        sum_d += d;
        sum_d2 += d * d;
    }
    let count = subsets as f64;
    Ok(SimResult {
        family: spec.family(),
        n,
        method: SimMethod::Enumeration,
        samples: subsets as u64,
        bias: sum_d / count,
        mse: sum_d2 / count,
        bias_se: None,
        mse_se: None,
        seed: None,
        rng: None,
        failures: 0,
    })
}

/// Empirical bias and MSE over `opts.reps` independent SRSWOR draws.
pub fn monte_carlo(
    pop: &Population,
    spec: &EstimatorSpec,
    n: usize,
    opts: &McOptions,
) -> Result<SimResult> {
    if opts.reps == 0 {
        return Err(Error::ZeroReplications);
    }
    let means = check_inputs(pop, spec, n)?;
    let shards = run_shards(opts.reps, opts.seed, opts.workers, |rng, reps| {
        let mut d_stats = RunningStats::default();
        let mut sq_stats = RunningStats::default();
        let mut failures = 0u64;
        for _ in 0..reps {
            let s = srswor_sample(rng, pop.len(), n).expect("validated sample size");
            match evaluate_with_means(spec, &subset_means(pop, &s), &means) {
                Ok(t) => {
                    let d = t - means.y;
                    d_stats.push(d);
                    sq_stats.push(d * d);
                }
                Err(_) => failures += 1,
            }
        }
        (d_stats, sq_stats, failures)
    });
    let mut d_all = RunningStats::default();
    let mut sq_all = RunningStats::default();
    let mut failures = 0;
    for (d, sq, f) in &shards {
        d_all.merge(d);
        sq_all.merge(sq);
        failures += f;
    }
    if d_all.count() == 0 {
        return Err(Error::EvaluationFailed {
            subset: Vec::new(),
            reason: format!("all {} Monte Carlo draws failed", opts.reps),
        });
    }
    Ok(SimResult {
        family: spec.family(),
        n,
        method: SimMethod::MonteCarlo,
        samples: opts.reps,
        bias: d_all.mean(),
        mse: sq_all.mean(),
        bias_se: Some(d_all.std_error()),
        mse_se: Some(sq_all.std_error()),
        seed: Some(opts.seed),
        rng: Some(RNG_ALGORITHM),
        failures,
    })
}

/// Enumeration when it fits `budget`, Monte Carlo otherwise.
pub fn simulate(
    pop: &Population,
    spec: &EstimatorSpec,
    n: usize,
    budget: Option<u128>,
    opts: &McOptions,
) -> Result<SimResult> {
    let budget = budget.unwrap_or(DEFAULT_BUDGET);
    if binomial(pop.len(), n) <= budget {
        enumerate_exact(pop, spec, n, budget)
    } else {
        monte_carlo(pop, spec, n, opts)
    }
}
