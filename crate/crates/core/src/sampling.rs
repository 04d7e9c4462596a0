//! Deterministic sample points inside a domain box: a Halton prefix followed
//! by seeded uniform points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// `count` points in `domain`: the first `⌈count/2⌉` from the Halton
/// sequence, the rest uniform from a ChaCha8 stream seeded with `seed`.
pub fn sample_box(domain: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(domain.len() <= PRIMES.len(), "sampling supports up to 12 dimensions");
    let grid = count.div_ceil(2);
    let mut out = Vec::with_capacity(count);
    for k in 0..grid {
        out.push(
            domain
                .iter()
                .zip(PRIMES)
                .map(|(&(lo, hi), p)| lo + (hi - lo) * radical_inverse(k as u64 + 1, p))
                .collect(),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in grid..count {
        out.push(
            domain
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..=hi) } else { lo })
                .collect(),
        );
    }
    out
}

/// Tensor grid over per-axis value lists.
pub fn grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}
