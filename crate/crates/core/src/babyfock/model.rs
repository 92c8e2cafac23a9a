use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sign::{Label, SignFunction};
use crate::{Error, Result};

/// Default cap on the vector dimension `2^|I|`.
pub const DEFAULT_MAX_DIM: usize = 1 << 24;

/// Cap on the dimension for full-basis relation and modular verification.
pub const VERIFY_MAX_DIM: usize = 1 << 14;

const PAR_CHUNK: usize = 1 << 12;

/// Dimension cap for dense vectors; `QGAUSS_MAX_DIM` overrides the default.
pub fn max_dim() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("QGAUSS_MAX_DIM")
            .ok()
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_DIM)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Untwisted,
    Twisted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A single left/right creation or annihilation operator on one bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prim {
    pub bit: u8,
    pub create: bool,
    pub side: Side,
}

/// A linear combination of [`Prim`]s, optionally plus a multiple of the identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearOp {
    pub identity: Complex64,
    pub terms: Vec<(Complex64, Prim)>,
}

impl LinearOp {
    pub fn prim(p: Prim) -> Self {
        LinearOp {
            identity: Complex64::new(0.0, 0.0),
            terms: vec![(Complex64::new(1.0, 0.0), p)],
        }
    }

    pub fn scaled(mut self, c: Complex64) -> Self {
        self.identity *= c;
        for t in &mut self.terms {
            t.0 *= c;
        }
        self
    }

    pub fn plus(mut self, other: LinearOp) -> Self {
        self.identity += other.identity;
        self.terms.extend(other.terms);
        self
    }

    /// The Hilbert-space adjoint.
    pub fn adjoint(&self) -> Self {
        LinearOp {
            identity: self.identity.conj(),
            terms: self
                .terms
                .iter()
                .map(|&(c, p)| {
                    (
                        c.conj(),
                        Prim {
                            create: !p.create,
                            ..p
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Dense amplitude vector indexed by subset bitmasks.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinVector {
    pub amps: Vec<Complex64>,
}

impl SpinVector {
    pub fn zeros(dim: usize) -> Self {
        SpinVector {
            amps: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    pub fn basis(dim: usize, b: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[b] = Complex64::new(1.0, 0.0);
        v
    }

    /// The cyclic vector `1 = x_∅`.
    pub fn vacuum(dim: usize) -> Self {
        Self::basis(dim, 0)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &SpinVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SpinVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Sparse vector used for basis-by-basis verification.
pub type SparseVec = BTreeMap<u64, Complex64>;

/// The spin algebra `A(I, ε)` acting on its L² space.
///
/// Bit `p` of a basis index corresponds to `order()[p]`, so the basis vector
/// with index `b` is `x_A` with the elements of `A` multiplied in model order.
#[derive(Clone, Debug)]
pub struct SpinModel {
    mode: Mode,
    order: Vec<Label>,
    bit_of: HashMap<Label, u8>,
    eps: SignFunction,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    neg_rows: Vec<u64>,
    site_signs: Option<SignFunction>,
}

impl SpinModel {
    /// Untwisted model; the basis order follows the label order of `eps`.
    pub fn untwisted(eps: SignFunction) -> Result<Self> {
        let order = eps.labels().to_vec();
        Self::build(Mode::Untwisted, eps, order, Vec::new())
    }

    /// Twisted model with weights `λ_j ≥ 1` for `j = 1..=lambda.len()`.
    ///
    /// `eps` must be defined on a signed index set closed under `j -> -j` and
    /// satisfy `ε(a, b) = ε(|a|, |b|)`.
    pub fn twisted(eps: SignFunction, lambda: &[f64]) -> Result<Self> {
        if !eps.is_mirror() {
            return Err(Error::domain(
                "twisted model needs a sign function with ε(a,b) = ε(|a|,|b|)",
            ));
        }
        for l in eps.labels() {
            if l.j.unsigned_abs() as usize > lambda.len() {
                return Err(Error::domain(format!(
                    "label {l} has |j| > k = {}",
                    lambda.len()
                )));
            }
        }
        let order = eps.labels().to_vec();
        Self::build(Mode::Twisted, eps, order, lambda.to_vec())
    }

    fn build(mode: Mode, eps: SignFunction, order: Vec<Label>, lambda: Vec<f64>) -> Result<Self> {
        let nbits = order.len();
        if nbits > 63 || (1usize << nbits) > max_dim() {
            return Err(Error::SizeLimit {
                what: "vector dimension",
                got: if nbits > 63 { usize::MAX } else { 1 << nbits },
                cap: max_dim(),
            });
        }
        let mut mu = Vec::with_capacity(lambda.len());
        for &l in &lambda {
            if !(l.is_finite() && l >= 1.0) {
                return Err(Error::domain(format!("λ = {l} must be finite and ≥ 1")));
            }
            let m = l.powf(0.25);
            debug_assert!((m.powi(4) - l).abs() <= 1e-12 * l);
            mu.push(m);
        }
        let bit_of: HashMap<Label, u8> = order
            .iter()
            .enumerate()
            .map(|(p, &l)| (l, p as u8))
            .collect();
        let mut neg_rows = vec![0u64; nbits];
        for (p, &a) in order.iter().enumerate() {
            for (r, &b) in order.iter().enumerate() {
                if p != r && eps.value(a, b) == -1 {
                    neg_rows[p] |= 1 << r;
                }
            }
        }
        Ok(SpinModel {
            mode,
            order,
            bit_of,
            eps,
            lambda,
            mu,
            neg_rows,
            site_signs: None,
        })
    }

    /// Same algebra, different total order on the index set.
    pub fn with_order(&self, order: Vec<Label>) -> Result<Self> {
        let mut sorted = order.clone();
        sorted.sort();
        let mut mine = self.order.clone();
        mine.sort();
        if sorted != mine {
            return Err(Error::domain("order must be a permutation of the index set"));
        }
        let mut m = Self::build(self.mode, self.eps.clone(), order, self.lambda.clone())?;
        m.site_signs = self.site_signs.clone();
        Ok(m)
    }

    pub(crate) fn set_site_signs(&mut self, s: SignFunction) {
        self.site_signs = Some(s);
    }

    /// The site-level sign function the model was lifted from, if any.
    pub fn site_signs(&self) -> Option<&SignFunction> {
        self.site_signs.as_ref()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn order(&self) -> &[Label] {
        &self.order
    }

    pub fn eps(&self) -> &SignFunction {
        &self.eps
    }

    pub fn n_indices(&self) -> usize {
        self.order.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.order.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `λ_{|j|}`, or 1 for untwisted labels.
    pub fn lambda_of(&self, label: Label) -> f64 {
        if label.j == 0 || self.lambda.is_empty() {
            1.0
        } else {
            self.lambda[label.j.unsigned_abs() as usize - 1]
        }
    }

    /// `μ_{|j|} = λ_{|j|}^{1/4}`, or 1 for untwisted labels.
    pub fn mu_of(&self, label: Label) -> f64 {
        if label.j == 0 || self.mu.is_empty() {
            1.0
        } else {
            self.mu[label.j.unsigned_abs() as usize - 1]
        }
    }

    pub fn bit(&self, label: Label) -> Result<u8> {
        self.bit_of
            .get(&label)
            .copied()
            .ok_or_else(|| Error::domain(format!("label {label} is not in the model")))
    }

    pub fn contains(&self, label: Label) -> bool {
        self.bit_of.contains_key(&label)
    }

    /// Labels with `j > 0`: the generators `γ_a`, `δ_a` of a twisted model.
    pub fn positive_labels(&self) -> Vec<Label> {
        let mut v: Vec<Label> = self.order.iter().copied().filter(|l| l.j > 0).collect();
        v.sort();
        v
    }

    /// Sign of moving `x_p` into `x_set` (with `p ∉ set`): left insertion
    /// crosses the members below `p`, right insertion those above.
    #[inline]
    pub fn prim_sign(&self, p: u8, set: u64, side: Side) -> f64 {
        let below = (1u64 << p) - 1;
        let mask = match side {
            Side::Left => below,
            Side::Right => !below & !(1u64 << p),
        };
        if (self.neg_rows[p as usize] & set & mask).count_ones() & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Reference implementation of [`prim_sign`](Self::prim_sign) by an
    /// explicit product over the set members.
    pub fn prim_sign_naive(&self, p: u8, set: u64, side: Side) -> f64 {
        let a = self.order[p as usize];
        let mut s = 1.0;
        for q in 0..self.order.len() {
            if set >> q & 1 == 0 || q == p as usize {
                continue;
            }
            let crossed = match side {
                Side::Left => q < p as usize,
                Side::Right => q > p as usize,
            };
            if crossed {
                s *= f64::from(self.eps.value(a, self.order[q]));
            }
        }
        s
    }

    /// Applies `op` to a single basis vector, pushing `(index, coefficient)`
    /// pairs into `out`.
    pub fn apply_to_basis(&self, op: &LinearOp, b: u64, coeff: Complex64, out: &mut SparseVec) {
        if op.identity != Complex64::new(0.0, 0.0) {
            *out.entry(b).or_default() += op.identity * coeff;
        }
        for &(c, p) in &op.terms {
            let bit = 1u64 << p.bit;
            let present = b & bit != 0;
            if present == p.create {
                continue;
            }
            let set = b & !bit;
            let s = self.prim_sign(p.bit, set, p.side);
            *out.entry(b ^ bit).or_default() += c * coeff * s;
        }
    }

    pub fn apply_sparse(&self, op: &LinearOp, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&b, &c) in v {
            self.apply_to_basis(op, b, c, &mut out);
        }
        out.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out
    }

    /// Applies a product `ops[0] ops[1] ... ops[last]` (rightmost first).
    pub fn apply_product_sparse(&self, ops: &[LinearOp], v: &SparseVec) -> SparseVec {
        let mut cur = v.clone();
        for op in ops.iter().rev() {
            cur = self.apply_sparse(op, &cur);
        }
        cur
    }

    /// Dense application. Each output amplitude is gathered independently, so
    /// the result does not depend on how the work is split across threads.
    pub fn apply_dense(&self, op: &LinearOp, v: &SpinVector) -> SpinVector {
        let dim = self.dim();
        assert_eq!(v.dim(), dim, "vector dimension does not match the model");
        let mut out = SpinVector::zeros(dim);
        let src = &v.amps;
        let fill = |start: usize, chunk: &mut [Complex64]| {
            for (off, slot) in chunk.iter_mut().enumerate() {
                let b = (start + off) as u64;
                let mut acc = op.identity * src[b as usize];
                for &(c, p) in &op.terms {
                    let bit = 1u64 << p.bit;
                    // output contains the bit iff the primitive creates it
                    if (b & bit != 0) != p.create {
                        continue;
                    }
                    let s = self.prim_sign(p.bit, b & !bit, p.side);
                    acc += c * s * src[(b ^ bit) as usize];
                }
                *slot = acc;
            }
        };
        if dim >= 2 * PAR_CHUNK {
            out.amps
                .par_chunks_mut(PAR_CHUNK)
                .enumerate()
                .for_each(|(i, chunk)| fill(i * PAR_CHUNK, chunk));
        } else {
            fill(0, &mut out.amps);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model3(e12: i8, e13: i8, e23: i8) -> SpinModel {
        let labels: Vec<Label> = (1..=3).map(Label::plain).collect();
        let eps = SignFunction::from_fn(labels, |a, b| match (a.site.min(b.site), a.site.max(b.site)) {
            (1, 2) => e12,
            (1, 3) => e13,
            _ => e23,
        })
        .unwrap();
        SpinModel::untwisted(eps).unwrap()
    }

    #[test]
    fn insertion_into_empty_set_is_positive() {
        let m = model3(-1, -1, -1);
        for p in 0..3 {
            assert_eq!(m.prim_sign(p, 0, Side::Left), 1.0);
            assert_eq!(m.prim_sign(p, 0, Side::Right), 1.0);
        }
    }

    #[test]
    fn single_swap_sign() {
        // A = {1}, i = 2, ε(1,2) = -1: x_2 x_1 = -x_1 x_2
        let m = model3(-1, 1, 1);
        assert_eq!(m.prim_sign(1, 0b001, Side::Left), -1.0);
    }

    #[test]
    fn left_and_right_signs_split_at_the_index() {
        // A = {1,3}, i = 2, ε(2,1) = -1, ε(2,3) = +1
        let m = model3(-1, 1, 1);
        assert_eq!(m.prim_sign(1, 0b101, Side::Left), -1.0);
        assert_eq!(m.prim_sign(1, 0b101, Side::Right), 1.0);
    }

    #[test]
    fn oversized_model_is_rejected() {
        let labels: Vec<Label> = (1..=30).map(Label::plain).collect();
        let eps = SignFunction::constant(labels, 1).unwrap();
        assert!(matches!(SpinModel::untwisted(eps), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn twisted_requires_mirror_signs() {
        let labels: Vec<Label> = (1..=2).map(Label::plain).collect();
        let eps = SignFunction::constant(labels, 1).unwrap();
        assert!(SpinModel::twisted(eps, &[4.0]).is_err());
    }

    #[test]
    fn order_must_be_a_permutation() {
        let m = model3(1, 1, 1);
        assert!(m.with_order(vec![Label::plain(1), Label::plain(2)]).is_err());
        let r = m
            .with_order(vec![Label::plain(3), Label::plain(1), Label::plain(2)])
            .unwrap();
        assert_eq!(r.bit(Label::plain(3)).unwrap(), 0);
    }
}
