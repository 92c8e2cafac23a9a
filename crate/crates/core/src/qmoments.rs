//! Pairing-sum moments of q-Gaussian and q-circular families, and a truncated
//! q-Fock space used as an independent check.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::partitions::PARTITION_CAP;
use crate::{Error, Result};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `Σ_V q^{i(V)} Π_{(s,t) ∈ V} cov(s, t)` over pair partitions of the
/// positions `0..p`; `cov` is called with `s < t`. Odd `p` gives 0.
pub fn pairing_moment<F>(p: usize, cov: F, q: f64) -> Result<Complex64>
where
    F: Fn(usize, usize) -> Complex64,
{
    if p == 0 {
        return Err(Error::domain("word length must be at least 1"));
    }
    if p > 2 * PARTITION_CAP {
        return Err(Error::SizeLimit {
            what: "word length",
            got: p,
            cap: 2 * PARTITION_CAP,
        });
    }
    if p % 2 == 1 {
        return Ok(c(0.0));
    }
    let mut table = vec![c(0.0); p * p];
    for s in 0..p {
        for t in s + 1..p {
            table[s * p + t] = cov(s, t);
        }
    }
    let mut qpow = vec![1.0; p * p / 4 + 1];
    for i in 1..qpow.len() {
        qpow[i] = qpow[i - 1] * q;
    }
    let mut st = PairingState {
        p,
        table: &table,
        qpow: &qpow,
        used: vec![false; p],
        closers: Vec::with_capacity(p / 2),
    };
    Ok(st.sum(0, c(1.0)))
}

struct PairingState<'a> {
    p: usize,
    table: &'a [Complex64],
    qpow: &'a [f64],
    used: Vec<bool>,
    closers: Vec<usize>,
}

impl PairingState<'_> {
    /// Blocks are opened at the smallest free point; a new block `(s, t)`
    /// crosses every earlier block whose right end lies in `(s, t)`.
    fn sum(&mut self, crossings: usize, weight: Complex64) -> Complex64 {
        let Some(s) = (0..self.p).find(|&x| !self.used[x]) else {
            return weight * self.qpow[crossings];
        };
        self.used[s] = true;
        let mut total = c(0.0);
        for t in s + 1..self.p {
            if self.used[t] {
                continue;
            }
            let w = self.table[s * self.p + t];
            if w == c(0.0) {
                continue;
            }
            let extra = self.closers.iter().filter(|&&x| s < x && x < t).count();
            self.used[t] = true;
            self.closers.push(t);
            total += self.sum(crossings + extra, weight * w);
            self.closers.pop();
            self.used[t] = false;
        }
        self.used[s] = false;
        total
    }
}

/// Deformation parameter and weights `μ_j = λ_j^{1/4}` of a q-circular family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircularParams {
    pub q: f64,
    pub mu: Vec<f64>,
}

impl CircularParams {
    pub fn new(q: f64, mu: Vec<f64>) -> Result<Self> {
        check_q(q)?;
        for &m in &mu {
            if !(m.is_finite() && m >= 1.0) {
                return Err(Error::domain(format!("μ = {m} must be finite and ≥ 1")));
            }
        }
        Ok(CircularParams { q, mu })
    }

    pub fn from_lambda(q: f64, lambda: &[f64]) -> Result<Self> {
        for &l in lambda {
            if !(l.is_finite() && l >= 1.0) {
                return Err(Error::domain(format!("λ = {l} must be finite and ≥ 1")));
            }
        }
        Self::new(q, lambda.iter().map(|l| l.powf(0.25)).collect())
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m.powi(4)).collect()
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > -1.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q = {q} must lie in (-1, 1)")))
    }
}

/// A word in `c_j` (`k = +1`) and `c_j*` (`k = -1`), `j` 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarWord {
    pub letters: Vec<(usize, i8)>,
}

impl StarWord {
    pub fn new(letters: Vec<(usize, i8)>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::domain("star word must not be empty"));
        }
        for &(j, k) in &letters {
            if j == 0 || (k != 1 && k != -1) {
                return Err(Error::domain(format!("invalid letter ({j}, {k})")));
            }
        }
        Ok(StarWord { letters })
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

impl std::fmt::Display for StarWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, &(j, k)) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "c{j}{}", if k == -1 { "*" } else { "" })?;
        }
        Ok(())
    }
}

/// `φ(c_{j1}^{k1} c_{j2}^{k2}) = μ_{j1}^{2 k1} δ_{k1,-k2} δ_{j1,j2}`.
pub fn circular_covariance(j1: usize, k1: i8, j2: usize, k2: i8, params: &CircularParams) -> Complex64 {
    if j1 != j2 || k1 != -k2 || j1 == 0 || j1 > params.k() {
        return c(0.0);
    }
    c(params.mu[j1 - 1].powi(2 * i32::from(k1)))
}

pub fn circular_star_moment(w: &StarWord, params: &CircularParams) -> Result<Complex64> {
    for &(j, _) in &w.letters {
        if j > params.k() {
            return Err(Error::domain(format!("index {j} exceeds k = {}", params.k())));
        }
    }
    pairing_moment(
        w.len(),
        |s, t| {
            let (j1, k1) = w.letters[s];
            let (j2, k2) = w.letters[t];
            circular_covariance(j1, k1, j2, k2, params)
        },
        params.q,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuQBounds {
    pub lower: f64,
    pub upper: f64,
    /// `‖G(f)‖ / ‖f‖ = 2/√(1-q)`.
    pub norm_factor: f64,
}

pub fn nu_q_bounds(q: f64) -> Result<NuQBounds> {
    check_q(q)?;
    let f = 2.0 / (1.0 - q).sqrt();
    Ok(NuQBounds {
        lower: -f,
        upper: f,
        norm_factor: f,
    })
}

/// `⟨e_{u_1}⊗…⊗e_{u_n}, e_{v_1}⊗…⊗e_{v_n}⟩_q` for orthonormal basis vectors.
pub fn qfock_inner(u: &[usize], v: &[usize], q: f64) -> Result<Complex64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "tensor levels differ: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    Ok(c(word_inner(u, v, q)))
}

fn word_inner(u: &[usize], v: &[usize], q: f64) -> f64 {
    let Some((&h, rest)) = u.split_first() else {
        return 1.0;
    };
    let mut total = 0.0;
    let mut ql = 1.0;
    let mut removed = Vec::with_capacity(v.len().saturating_sub(1));
    for l in 0..v.len() {
        if v[l] == h {
            removed.clear();
            removed.extend_from_slice(&v[..l]);
            removed.extend_from_slice(&v[l + 1..]);
            total += ql * word_inner(rest, &removed, q);
        }
        ql *= q;
    }
    total
}

/// Finite linear combination of elementary tensors over `C^d`.
/// The empty word is the vacuum `Ω`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockVector {
    pub terms: BTreeMap<Vec<usize>, Complex64>,
}

impl FockVector {
    pub fn vacuum() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), c(1.0));
        FockVector { terms }
    }

    pub fn word(w: Vec<usize>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(w, c(1.0));
        FockVector { terms }
    }

    pub fn max_level(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn level(&self, n: usize) -> FockVector {
        FockVector {
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.len() == n)
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    /// Coefficient of `Ω`.
    pub fn vacuum_component(&self) -> Complex64 {
        self.terms.get(&Vec::new()).copied().unwrap_or_default()
    }

    /// q-inner product, antilinear in `self`.
    pub fn inner(&self, other: &FockVector, q: f64) -> Complex64 {
        let mut total = c(0.0);
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                if u.len() == v.len() {
                    total += a.conj() * b * word_inner(u, v, q);
                }
            }
        }
        total
    }

    fn add(&mut self, w: Vec<usize>, x: Complex64) {
        *self.terms.entry(w).or_default() += x;
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, v| *v != c(0.0));
        self
    }
}

/// Creation `a*(h)` or annihilation `a(h)` for `h ∈ C^d` in the canonical basis.
#[derive(Clone, Debug, PartialEq)]
pub enum FockLetter {
    Create(Vec<Complex64>),
    Annihilate(Vec<Complex64>),
}

impl FockLetter {
    /// The letter for the `i`-th basis vector.
    pub fn basis(create: bool, i: usize, d: usize) -> Self {
        let mut h = vec![c(0.0); d];
        h[i] = c(1.0);
        if create {
            FockLetter::Create(h)
        } else {
            FockLetter::Annihilate(h)
        }
    }
}

/// Applies `word` (rightmost letter first) to `v`. Creation prepends `h`;
/// annihilation is `a(h)(g_1⊗…⊗g_n) = Σ_l q^{l-1} ⟨h, g_l⟩ g_1⊗…ĝ_l…⊗g_n`,
/// the adjoint of creation for the recursive q-inner product.
pub fn qfock_apply(word: &[FockLetter], v: &FockVector, q: f64, cutoff: usize) -> Result<FockVector> {
    let mut cur = v.clone();
    if cur.max_level() > cutoff {
        return Err(Error::SizeLimit {
            what: "Fock level",
            got: cur.max_level(),
            cap: cutoff,
        });
    }
    for letter in word.iter().rev() {
        let mut next = FockVector::default();
        match letter {
            FockLetter::Create(h) => {
                for (w, &x) in &cur.terms {
                    if w.len() + 1 > cutoff {
                        return Err(Error::SizeLimit {
                            what: "Fock level",
                            got: w.len() + 1,
                            cap: cutoff,
                        });
                    }
                    for (i, &hi) in h.iter().enumerate() {
                        if hi == c(0.0) {
                            continue;
                        }
                        let mut nw = Vec::with_capacity(w.len() + 1);
                        nw.push(i);
                        nw.extend_from_slice(w);
                        next.add(nw, hi * x);
                    }
                }
            }
            FockLetter::Annihilate(h) => {
                for (w, &x) in &cur.terms {
                    let mut ql = 1.0;
                    for l in 0..w.len() {
                        let hl = h.get(w[l]).copied().unwrap_or_default().conj();
                        if hl != c(0.0) {
                            let mut nw = w.clone();
                            nw.remove(l);
                            next.add(nw, hl * x * ql);
                        }
                        ql *= q;
                    }
                }
            }
        }
        cur = next.pruned();
    }
    Ok(cur)
}

/// Ornstein-Uhlenbeck action: level `n` is multiplied by `e^{-tn}`.
pub fn ou_apply(t: f64, v: &FockVector) -> Result<FockVector> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t = {t} must be non-negative")));
    }
    Ok(FockVector {
        terms: v
            .terms
            .iter()
            .map(|(w, &x)| (w.clone(), x * (-t * w.len() as f64).exp()))
            .collect(),
    })
}

/// Gram matrix of the level-`n` words over `C^d`, ordered lexicographically.
pub fn level_gram(d: usize, n: usize, q: f64) -> nalgebra::DMatrix<f64> {
    let words = all_words(d, n);
    nalgebra::DMatrix::from_fn(words.len(), words.len(), |a, b| {
        word_inner(&words[a], &words[b], q)
    })
}

pub fn all_words(d: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..d).map(move |i| {
                    let mut x = w.clone();
                    x.push(i);
                    x
                })
            })
            .collect();
    }
    out
}

/// One row of a moment table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub word: String,
    pub q: f64,
    pub mu: Vec<f64>,
    pub value_re: f64,
    pub value_im: f64,
}

pub fn moment_row(w: &StarWord, params: &CircularParams) -> Result<MomentRow> {
    let v = circular_star_moment(w, params)?;
    Ok(MomentRow {
        word: w.to_string(),
        q: params.q,
        mu: params.mu.clone(),
        value_re: v.re,
        value_im: v.im,
    })
}
