//! Seeded probe points for pointwise checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::Chart;
use crate::error::Result;
use crate::expr::Expr;

/// Default seed for every seeded routine in the crate.
pub const SEED: u64 = 0x5EED;

/// `count` uniform points in [lo, hi]^dim.
pub fn uniform(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.gen_range(lo..hi)).collect())
        .collect()
}

/// The standard grid: 20 seeded points in [-2, 2]^dim.
pub fn grid(dim: usize) -> Vec<Vec<f64>> {
    uniform(dim, 20, -2.0, 2.0, SEED)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in [lo, hi]^dim, skipping the origin-mapped index 0.
pub fn halton(dim: usize, count: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "halton: at most {} dimensions", PRIMES.len());
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|k| lo + (hi - lo) * radical_inverse(i, PRIMES[k] as u64))
                .collect()
        })
        .collect()
}

/// `count` seeded quadratic polynomials in the chart coordinates, with
/// coefficients uniform in [-1, 1].
pub fn quadratics(chart: &Chart, count: usize, seed: u64) -> Result<Vec<Expr>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = &chart.names;
    (0..count)
        .map(|_| {
            let mut s = String::from("0");
            for (i, a) in names.iter().enumerate() {
                s.push_str(&format!("{:+.6}*{a}", rng.gen_range(-1.0..1.0)));
                for b in &names[i..] {
                    s.push_str(&format!("{:+.6}*{a}*{b}", rng.gen_range(-1.0..1.0)));
                }
            }
            chart.parse(&s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_reproducible_and_bounded() {
        let a = grid(3);
        assert_eq!(a, grid(3));
        assert_eq!(a.len(), 20);
        assert!(a.iter().flatten().all(|v| (-2.0..2.0).contains(v)));
    }

    #[test]
    fn halton_base_two() {
        let h = halton(1, 4, 0.0, 1.0);
        assert_eq!(h, vec![vec![0.5], vec![0.25], vec![0.75], vec![0.125]]);
    }
}
