#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratiolab::{Means, Population, Powers, Provenance, VTable};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive, positively correlated `(y, x, z)` with moderate spread.
pub fn random_population<R: Rng>(rng: &mut R, units: usize) -> Population {
    let mut y = Vec::with_capacity(units);
    let mut x = Vec::with_capacity(units);
    let mut z = Vec::with_capacity(units);
    for _ in 0..units {
        let size: f64 = rng.random_range(8.0..14.0);
        x.push(size + rng.random_range(-1.0..1.0));
        z.push(0.6 * size + rng.random_range(-1.0..1.0));
        y.push(1.2 * size + rng.random_range(-1.5..1.5));
    }
    Population::new(y, x, z).unwrap()
}

/// Second-order block drawn from a random positive-definite covariance.
pub fn random_pd_table<R: Rng>(rng: &mut R) -> VTable {
    let a: [[f64; 3]; 3] =
        std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
    let cov = |i: usize, j: usize| -> f64 {
        (0..3).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.05 } else { 0.0 }
    };
    let scale = rng.random_range(1e-4..1e-2);
    let means = Means {
        y: rng.random_range(1.0..200.0),
        x: rng.random_range(1.0..200.0),
        z: rng.random_range(1.0..200.0),
    };
    let mut v = VTable::new(means, None, None);
    for (p, (i, j)) in [
        (Powers::new(2, 0, 0), (0, 0)),
        (Powers::new(0, 2, 0), (1, 1)),
        (Powers::new(0, 0, 2), (2, 2)),
        (Powers::new(1, 1, 0), (0, 1)),
        (Powers::new(1, 0, 1), (0, 2)),
        (Powers::new(0, 1, 1), (1, 2)),
    ] {
        v.set(p, scale * cov(i, j), Provenance::LiteralFixture);
    }
    v
}

/// `|a - b| <= rel * max(|a|, |b|, floor)`.
pub fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(floor)
}
