//! Pair partitions of `{1..2r}`, their crossings, and the finite-N crossing
//! statistic `t_N(V)`.

use serde::{Deserialize, Serialize};

use crate::babyfock::SignFunction;
use crate::rng::{CounterRng, STREAM_SAMPLING};
use crate::{Error, Result};

/// Largest `r` accepted by [`enumerate_pair_partitions`].
pub const PARTITION_CAP: usize = 8;

/// Above this many index tuples `t_statistic` switches to sampling.
pub const EXACT_TERM_CAP: f64 = 1e8;

/// A perfect matching of `{1..2r}`, stored as blocks `(s, t)` with `s < t`
/// sorted by `s`. Serializes as `[[s, t], ...]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct PairPartition {
    blocks: Vec<(usize, usize)>,
}

impl PairPartition {
    /// Validates and canonicalizes a block list.
    pub fn new(blocks: Vec<(usize, usize)>) -> Result<Self> {
        let n = 2 * blocks.len();
        let mut seen = vec![false; n + 1];
        let mut out = Vec::with_capacity(blocks.len());
        for (a, b) in blocks {
            let (s, t) = (a.min(b), a.max(b));
            if s == t || s == 0 || t > n {
                return Err(Error::domain(format!(
                    "block ({a}, {b}) is not a pair inside 1..={n}"
                )));
            }
            for x in [s, t] {
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::domain(format!("point {x} appears twice")));
                }
            }
            out.push((s, t));
        }
        out.sort_unstable();
        Ok(PairPartition { blocks: out })
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    /// Partner of each point, 0-based: `partner[x - 1] = y - 1`.
    pub fn partners(&self) -> Vec<usize> {
        let mut p = vec![0; 2 * self.r()];
        for &(s, t) in &self.blocks {
            p[s - 1] = t - 1;
            p[t - 1] = s - 1;
        }
        p
    }
}

impl TryFrom<Vec<(usize, usize)>> for PairPartition {
    type Error = Error;

    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PairPartition> for Vec<(usize, usize)> {
    fn from(p: PairPartition) -> Self {
        p.blocks
    }
}

/// Crossing pairs `(l, m)` of block indices (0-based, in canonical block
/// order) with `s_l < s_m < t_l < t_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingSet {
    pub pairs: Vec<(usize, usize)>,
    pub count: usize,
}

pub fn double_factorial_odd(r: usize) -> u64 {
    (1..=r as u64).map(|i| 2 * i - 1).product()
}

/// All `(2r-1)!!` pair partitions of `{1..2r}` in lexicographic order of
/// their block lists.
pub fn enumerate_pair_partitions(r: usize) -> Result<Vec<PairPartition>> {
    if r == 0 {
        return Err(Error::domain("r must be at least 1"));
    }
    if r > PARTITION_CAP {
        return Err(Error::SizeLimit {
            what: "pair partition size r",
            got: r,
            cap: PARTITION_CAP,
        });
    }
    let mut out = Vec::with_capacity(double_factorial_odd(r) as usize);
    let mut used = vec![false; 2 * r + 1];
    let mut blocks = Vec::with_capacity(r);
    extend(2 * r, &mut used, &mut blocks, &mut out);
    Ok(out)
}

fn extend(
    n: usize,
    used: &mut [bool],
    blocks: &mut Vec<(usize, usize)>,
    out: &mut Vec<PairPartition>,
) {
    let Some(s) = (1..=n).find(|&x| !used[x]) else {
        out.push(PairPartition {
            blocks: blocks.clone(),
        });
        return;
    };
    used[s] = true;
    for t in s + 1..=n {
        if used[t] {
            continue;
        }
        used[t] = true;
        blocks.push((s, t));
        extend(n, used, blocks, out);
        blocks.pop();
        used[t] = false;
    }
    used[s] = false;
}

pub fn crossings(v: &PairPartition) -> CrossingSet {
    let b = v.blocks();
    let mut pairs = Vec::new();
    for l in 0..b.len() {
        for m in 0..b.len() {
            let (sl, tl) = b[l];
            let (sm, tm) = b[m];
            if sl < sm && sm < tl && tl < tm {
                pairs.push((l, m));
            }
        }
    }
    let count = pairs.len();
    CrossingSet { pairs, count }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TMethod {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TStatistic {
    pub value: f64,
    /// Zero for exact evaluation.
    pub std_error: f64,
    pub method: TMethod,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TOptions {
    pub exact_cap: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for TOptions {
    fn default() -> Self {
        TOptions {
            exact_cap: EXACT_TERM_CAP,
            samples: 1 << 20,
            seed: 0,
        }
    }
}

/// `(1/N^r) Σ Π_{(l,m) ∈ I(V)} ε(i_l, i_m)` over injective `i: blocks -> {1..N}`.
///
/// `eps` is read at positions `0..n`.
pub fn t_statistic(v: &PairPartition, eps: &SignFunction, n: usize) -> Result<TStatistic> {
    t_statistic_with(v, eps, n, TOptions::default())
}

pub fn t_statistic_with(
    v: &PairPartition,
    eps: &SignFunction,
    n: usize,
    opts: TOptions,
) -> Result<TStatistic> {
    let r = v.r();
    if n < r {
        return Err(Error::domain(format!("N = {n} is smaller than r = {r}")));
    }
    if eps.len() < n {
        return Err(Error::domain(format!(
            "sign function has {} indices, N = {n}",
            eps.len()
        )));
    }
    // earlier[m]: blocks l < m crossing block m
    let cs = crossings(v);
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); r];
    for &(l, m) in &cs.pairs {
        earlier[l.max(m)].push(l.min(m));
    }
    let nr = (n as f64).powi(r as i32);
    if nr <= opts.exact_cap {
        let mut idx = vec![0usize; r];
        let mut used = vec![false; n];
        let sum = exact_sum(0, &earlier, eps, &mut idx, &mut used);
        return Ok(TStatistic {
            value: sum as f64 / nr,
            std_error: 0.0,
            method: TMethod::Exact,
        });
    }
    let falling: f64 = (0..r).map(|i| (n - i) as f64 / n as f64).product();
    let mut rng = CounterRng::new(opts.seed, STREAM_SAMPLING, 0);
    let mut pool: Vec<usize> = (0..n).collect();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let m = opts.samples.max(2);
    for _ in 0..m {
        for l in 0..r {
            let k = l + rng.below(n - l);
            pool.swap(l, k);
        }
        let mut prod = 1i8;
        for (mm, ls) in earlier.iter().enumerate() {
            for &l in ls {
                prod *= eps.value_at(pool[l], pool[mm]);
            }
        }
        let x = f64::from(prod);
        s1 += x;
        s2 += x * x;
    }
    let mean = s1 / m as f64;
    let var = ((s2 / m as f64 - mean * mean) * m as f64 / (m - 1) as f64).max(0.0);
    Ok(TStatistic {
        value: falling * mean,
        std_error: falling * (var / m as f64).sqrt(),
        method: TMethod::MonteCarlo,
    })
}

fn exact_sum(
    m: usize,
    earlier: &[Vec<usize>],
    eps: &SignFunction,
    idx: &mut [usize],
    used: &mut [bool],
) -> i64 {
    if m == idx.len() {
        return 1;
    }
    let mut total = 0i64;
    for i in 0..used.len() {
        if used[i] {
            continue;
        }
        let mut sign = 1i64;
        for &l in &earlier[m] {
            sign *= i64::from(eps.value_at(idx[l], i));
        }
        used[i] = true;
        idx[m] = i;
        total += sign * exact_sum(m + 1, earlier, eps, idx, used);
        used[i] = false;
    }
    total
}

/// `N!/((N-r)! N^r)`, the value of `t_N(V)` when `ε ≡ +1`.
pub fn injective_fraction(n: usize, r: usize) -> f64 {
    (0..r).map(|i| (n as f64 - i as f64) / n as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_enumerations() {
        let p1 = enumerate_pair_partitions(1).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0].blocks(), &[(1, 2)]);
        let p2 = enumerate_pair_partitions(2).unwrap();
        let blocks: Vec<_> = p2.iter().map(|p| p.blocks().to_vec()).collect();
        assert_eq!(
            blocks,
            vec![
                vec![(1, 2), (3, 4)],
                vec![(1, 3), (2, 4)],
                vec![(1, 4), (2, 3)]
            ]
        );
        assert_eq!(enumerate_pair_partitions(3).unwrap().len(), 15);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            enumerate_pair_partitions(9),
            Err(Error::SizeLimit { cap: 8, .. })
        ));
        assert!(enumerate_pair_partitions(0).is_err());
    }

    #[test]
    fn crossing_examples() {
        let c = |b: Vec<(usize, usize)>| crossings(&PairPartition::new(b).unwrap()).count;
        assert_eq!(c(vec![(1, 2), (3, 4)]), 0);
        assert_eq!(c(vec![(1, 3), (2, 4)]), 1);
        assert_eq!(c(vec![(1, 4), (2, 5), (3, 6)]), 3);
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        assert!(PairPartition::new(vec![(1, 2), (2, 3)]).is_err());
        assert!(PairPartition::new(vec![(1, 5), (2, 3)]).is_err());
        assert!(PairPartition::new(vec![(1, 1), (2, 3)]).is_err());
    }

    #[test]
    fn json_form_is_pairs() {
        let p = PairPartition::new(vec![(2, 4), (1, 3)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[[1,3],[2,4]]");
        let back: PairPartition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<PairPartition>("[[1,2],[1,3]]").is_err());
    }
}
