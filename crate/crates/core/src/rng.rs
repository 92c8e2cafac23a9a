//! Counter-based random draws.
//!
//! Every draw is addressed by `(seed, stream, index)`: a ChaCha8 keystream is
//! seeded with `seed`, switched to `stream` and positioned at word `2·index`.
//! The same address always yields the same number regardless of how many other
//! draws were made before or on which thread.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::babyfock::{Label, SignFunction};
use crate::Result;

/// Stream reserved for site sign functions.
pub const STREAM_SIGNS: u64 = 0;
/// Stream used by Monte-Carlo sampling.
pub const STREAM_SAMPLING: u64 = 1;

/// A uniform draw in `[0, 1)` with 53 random bits.
pub fn uniform(seed: u64, stream: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential reader over one stream, starting at `index`.
pub struct CounterRng {
    rng: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng.set_word_pos(u128::from(index) * 2);
        CounterRng { rng }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Index of the unordered pair `{i, j}` with `i > j ≥ 0`.
pub fn pair_index(i: u64, j: u64) -> u64 {
    debug_assert!(i > j);
    i * (i - 1) / 2 + j
}

/// `+1` with probability `(1 + q)/2`, else `-1`, for the pair `i > j`.
pub fn pair_sign(seed: u64, i: u64, j: u64, q: f64) -> i8 {
    if uniform(seed, STREAM_SIGNS, pair_index(i, j)) < (1.0 + q) / 2.0 {
        1
    } else {
        -1
    }
}

/// Random sign function on sites `1..=n` with independent off-diagonal entries
/// of mean `q`.
pub fn site_signs(n: usize, q: f64, seed: u64) -> Result<SignFunction> {
    let labels: Vec<Label> = (1..=n as u32).map(Label::plain).collect();
    SignFunction::from_fn(labels, |a, b| {
        let (hi, lo) = if a.site > b.site { (a, b) } else { (b, a) };
        pair_sign(seed, u64::from(hi.site - 1), u64::from(lo.site - 1), q)
    })
}

/// Random sign function on `(site, ±j)` labels, `site in 1..=n_sites`,
/// `j in 1..=k`, satisfying `ε(a, b) = ε(|a|, |b|)`.
///
/// Each class `(site, |j|)` gets an independent sign against every other
/// class; the two members of a class anticommute. Labels are site-major with
/// `-k..-1, 1..k` inside a site.
pub fn mirror_signs(n_sites: usize, k: usize, q: f64, seed: u64) -> Result<SignFunction> {
    let mut labels = Vec::with_capacity(2 * n_sites * k);
    for s in 1..=n_sites as u32 {
        for j in (1..=k as i32).rev() {
            labels.push(Label::new(s, -j));
        }
        for j in 1..=k as i32 {
            labels.push(Label::new(s, j));
        }
    }
    let class = |l: Label| u64::from(l.site - 1) * k as u64 + u64::from(l.j.unsigned_abs() - 1);
    SignFunction::from_fn(labels, |a, b| {
        let (ca, cb) = (class(a), class(b));
        match ca.cmp(&cb) {
            std::cmp::Ordering::Equal => -1,
            std::cmp::Ordering::Greater => pair_sign(seed, ca, cb, q),
            std::cmp::Ordering::Less => pair_sign(seed, cb, ca, q),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_addressable() {
        let a: Vec<f64> = (0..16).map(|i| uniform(9, 0, i)).collect();
        let b: Vec<f64> = (0..16).rev().map(|i| uniform(9, 0, i)).collect();
        let mut b = b;
        b.reverse();
        assert_eq!(a, b);
        let mut seq = CounterRng::new(9, 0, 0);
        let c: Vec<f64> = (0..16).map(|_| seq.uniform()).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn pair_index_is_a_bijection() {
        let mut seen = std::collections::HashSet::new();
        for i in 1..50u64 {
            for j in 0..i {
                assert!(seen.insert(pair_index(i, j)));
            }
        }
        assert_eq!(seen.len(), 49 * 50 / 2);
        assert!(seen.iter().all(|&p| p < 49 * 50 / 2));
    }

    #[test]
    fn degenerate_probabilities() {
        let plus = site_signs(12, 1.0, 3).unwrap();
        let minus = site_signs(12, -1.0, 3).unwrap();
        assert_eq!(plus.off_diagonal_mean(), 1.0);
        assert_eq!(minus.off_diagonal_mean(), -1.0);
    }

    #[test]
    fn mean_concentrates_at_q_zero() {
        let n = 60usize;
        let eps = site_signs(n, 0.0, 11).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        assert!(eps.off_diagonal_mean().abs() <= 3.0 / pairs.sqrt());
    }

    #[test]
    fn mirror_table_has_the_mirror_property() {
        for seed in 0..5 {
            let e = mirror_signs(2, 2, 0.0, seed).unwrap();
            assert!(e.is_mirror());
        }
    }
}
