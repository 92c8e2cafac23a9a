use nalgebra::{DMatrix, DMatrixView};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{LinearOp, Mode, Side, SparseVec, SpinModel, SpinVector, VERIFY_MAX_DIM};
use super::ops::{Letter, LetterKind, OperatorWord};
use super::sign::Label;
use crate::{Error, Result, IDENTITY_TOL};

/// One verified identity: the largest entry of `(lhs - rhs) e_b` over all
/// basis vectors `e_b` and all index choices.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResidualRow {
    pub identity: String,
    pub max_residual: f64,
    pub dim: usize,
    pub params: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.max_residual).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.max_residual <= IDENTITY_TOL)
    }

    pub fn row(&self, identity: &str) -> Option<&ResidualRow> {
        self.rows.iter().find(|r| r.identity == identity)
    }
}

/// Linear combination of operator products.
type Expr = Vec<(Complex64, Vec<LinearOp>)>;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `a - c·b` for two products.
fn commutator_like(a: Vec<LinearOp>, c: f64, b: Vec<LinearOp>) -> Expr {
    vec![(one(), a), (Complex64::new(-c, 0.0), b)]
}

fn identity_op(scale: f64) -> LinearOp {
    LinearOp {
        identity: Complex64::new(scale, 0.0),
        terms: Vec::new(),
    }
}

pub(crate) fn check_dim(model: &SpinModel) -> Result<()> {
    if model.dim() > VERIFY_MAX_DIM {
        return Err(Error::SizeLimit {
            what: "verification dimension",
            got: model.dim(),
            cap: VERIFY_MAX_DIM,
        });
    }
    Ok(())
}

/// Largest entry of `expr·e_b` over every basis vector.
fn expr_residual(model: &SpinModel, expr: &Expr) -> f64 {
    let mut worst = 0.0f64;
    for b in 0..model.dim() as u64 {
        let mut e = SparseVec::new();
        e.insert(b, one());
        let mut acc = SparseVec::new();
        for (c, prod) in expr {
            for (k, v) in model.apply_product_sparse(prod, &e) {
                *acc.entry(k).or_default() += c * v;
            }
        }
        for v in acc.values() {
            worst = worst.max(v.norm());
        }
    }
    worst
}

impl SpinModel {
    pub fn describe(&self) -> String {
        let sites: std::collections::BTreeSet<u32> = self.order().iter().map(|l| l.site).collect();
        match self.mode() {
            Mode::Untwisted => format!("untwisted |I|={} sites={}", self.n_indices(), sites.len()),
            Mode::Twisted => format!(
                "twisted k={} sites={} lambda={:?}",
                self.lambda().len(),
                sites.len(),
                self.lambda()
            ),
        }
    }

    fn op(&self, kind: LetterKind, label: Label) -> LinearOp {
        self.compile(&Letter::new(kind, label))
            .expect("label taken from the model")
    }

    /// Sign of rewriting `x_i x_A` (left) or `x_A x_i` (right) in the ordered basis.
    pub fn insertion_sign(&self, i: Label, set: &[Label], side: Side) -> Result<i8> {
        let p = self.bit(i)?;
        let mut mask = 0u64;
        for &a in set {
            mask |= 1 << self.bit(a)?;
        }
        if mask >> p & 1 == 1 {
            return Err(Error::contract(format!("index {i} already belongs to the set")));
        }
        Ok(self.prim_sign(p, mask, side) as i8)
    }

    /// Evaluates every creation/annihilation relation on every basis vector.
    ///
    /// Rows cover: the left and right canonical relations, left/right
    /// commutation, the untwisted generator relation
    /// `γ_i γ_j - ε(i,j) γ_j γ_i = 2 δ_ij`, adjointness, and in twisted mode the
    /// exchange identity for `α_i β*_i`, the twisted generator relations and the
    /// commutation of the left and right generators.
    pub fn verify_relations(&self) -> Result<ResidualReport> {
        use LetterKind::*;
        check_dim(self)?;
        let labels = self.order().to_vec();
        let eps = |a: Label, b: Label| f64::from(self.eps().value(a, b));
        let mut rows: Vec<(String, f64)> = Vec::new();
        let mut record = |name: &str, r: f64| {
            if let Some(row) = rows.iter_mut().find(|(n, _)| n == name) {
                row.1 = row.1.max(r);
            } else {
                rows.push((name.to_string(), r));
            }
        };

        for (create, annihilate, tag) in [(BetaStar, Beta, "beta"), (AlphaStar, Alpha, "alpha")] {
            for &i in &labels {
                let c = self.op(create, i);
                let a = self.op(annihilate, i);
                record(&format!("{tag}*^2 = 0"), expr_residual(self, &vec![(one(), vec![c.clone(), c.clone()])]));
                record(&format!("{tag}^2 = 0"), expr_residual(self, &vec![(one(), vec![a.clone(), a.clone()])]));
                let e: Expr = vec![
                    (one(), vec![a.clone(), c.clone()]),
                    (one(), vec![c.clone(), a.clone()]),
                    (one(), vec![identity_op(-1.0)]),
                ];
                record(&format!("{tag} {tag}* + {tag}* {tag} = Id"), expr_residual(self, &e));
                for &j in &labels {
                    if i == j {
                        continue;
                    }
                    let aj = self.op(annihilate, j);
                    let cj = self.op(create, j);
                    record(
                        &format!("{tag}_i {tag}_j - eps {tag}_j {tag}_i = 0"),
                        expr_residual(self, &commutator_like(vec![a.clone(), aj.clone()], eps(i, j), vec![aj.clone(), a.clone()])),
                    );
                    record(
                        &format!("{tag}_i {tag}*_j - eps {tag}*_j {tag}_i = 0"),
                        expr_residual(self, &commutator_like(vec![a.clone(), cj.clone()], eps(i, j), vec![cj, a.clone()])),
                    );
                }
            }
        }

        for &i in &labels {
            let bs = self.op(BetaStar, i);
            let as_ = self.op(AlphaStar, i);
            record("beta*_i alpha*_i = 0", expr_residual(self, &vec![(one(), vec![bs.clone(), as_.clone()])]));
            record("alpha*_i beta*_i = 0", expr_residual(self, &vec![(one(), vec![as_.clone(), bs.clone()])]));
            for &j in &labels {
                let asj = self.op(AlphaStar, j);
                let aj = self.op(Alpha, j);
                if i != j {
                    record(
                        "beta*_i alpha*_j = alpha*_j beta*_i",
                        expr_residual(self, &commutator_like(vec![bs.clone(), asj.clone()], 1.0, vec![asj, bs.clone()])),
                    );
                }
                if i != j {
                    record(
                        "beta*_i alpha_j = alpha_j beta*_i",
                        expr_residual(self, &commutator_like(vec![bs.clone(), aj.clone()], 1.0, vec![aj, bs.clone()])),
                    );
                }
            }
        }

        for &i in &labels {
            let gi = self.op(GammaUntwisted, i);
            for &j in &labels {
                let dj = self.op(DeltaUntwisted, j);
                record(
                    "[beta*_i + beta_i, alpha*_j + alpha_j] = 0",
                    expr_residual(self, &commutator_like(vec![gi.clone(), dj.clone()], 1.0, vec![dj, gi.clone()])),
                );
            }
        }

        for &i in &labels {
            let gi = self.op(GammaUntwisted, i);
            for &j in &labels {
                let gj = self.op(GammaUntwisted, j);
                let mut e = commutator_like(vec![gi.clone(), gj.clone()], eps(i, j), vec![gj, gi.clone()]);
                if i == j {
                    e.push((one(), vec![identity_op(-2.0)]));
                }
                record("gamma_i gamma_j - eps gamma_j gamma_i = 2 delta_ij Id", expr_residual(self, &e));
            }
        }

        for &i in &labels {
            for (c, a, tag) in [(BetaStar, Beta, "beta"), (AlphaStar, Alpha, "alpha")] {
                record(&format!("<{tag} u, v> = <u, {tag}* v>"), self.adjoint_residual(&self.op(a, i), &self.op(c, i)));
            }
        }

        if self.mode() == Mode::Twisted {
            for &i in &labels {
                let m = i.mirror();
                let e: Expr = vec![
                    (one(), vec![self.op(Alpha, i), self.op(BetaStar, i)]),
                    (one(), vec![self.op(AlphaStar, m), self.op(Beta, m)]),
                    (-one(), vec![self.op(BetaStar, i), self.op(Alpha, i)]),
                    (-one(), vec![self.op(Beta, m), self.op(AlphaStar, m)]),
                ];
                record("alpha_i beta*_i + alpha*_-i beta_-i = beta*_i alpha_i + beta_-i alpha*_-i", expr_residual(self, &e));
            }
            let gens = self.positive_labels();
            for (x, tag) in [(Gamma, "gamma"), (Delta, "delta")] {
                let xs = x.adjoint();
                for &a in &gens {
                    let ga = self.op(x, a);
                    let gsa = self.op(xs, a);
                    record(&format!("{tag}_a^2 = 0"), expr_residual(self, &vec![(one(), vec![ga.clone(), ga.clone()])]));
                    record(&format!("({tag}*_a)^2 = 0"), expr_residual(self, &vec![(one(), vec![gsa.clone(), gsa.clone()])]));
                    let mu = self.mu_of(a);
                    let e: Expr = vec![
                        (one(), vec![gsa.clone(), ga.clone()]),
                        (one(), vec![ga.clone(), gsa.clone()]),
                        (one(), vec![identity_op(-(mu * mu + 1.0 / (mu * mu)))]),
                    ];
                    record(&format!("{tag}*_a {tag}_a + {tag}_a {tag}*_a = (mu^2 + mu^-2) Id"), expr_residual(self, &e));
                    record(&format!("<{tag} u, v> = <u, {tag}* v>"), self.adjoint_residual(&ga, &gsa));
                    for &b in &gens {
                        if a == b {
                            continue;
                        }
                        let gb = self.op(x, b);
                        record(
                            &format!("{tag}_a {tag}_b - eps {tag}_b {tag}_a = 0"),
                            expr_residual(self, &commutator_like(vec![ga.clone(), gb.clone()], eps(a, b), vec![gb.clone(), ga.clone()])),
                        );
                        record(
                            &format!("{tag}*_a {tag}_b - eps {tag}_b {tag}*_a = 0"),
                            expr_residual(self, &commutator_like(vec![gsa.clone(), gb.clone()], eps(a, b), vec![gb, gsa.clone()])),
                        );
                    }
                }
            }
            for &a in &gens {
                let ga = self.op(Gamma, a);
                for &b in &gens {
                    for (kind, name) in [(Delta, "[gamma_a, delta_b] = 0"), (DeltaStar, "[gamma_a, delta*_b] = 0")] {
                        let d = self.op(kind, b);
                        record(name, expr_residual(self, &commutator_like(vec![ga.clone(), d.clone()], 1.0, vec![d, ga.clone()])));
                    }
                }
            }
        }

        let params = self.describe();
        Ok(ResidualReport {
            rows: rows
                .into_iter()
                .map(|(identity, max_residual)| ResidualRow {
                    identity,
                    max_residual,
                    dim: self.dim(),
                    params: params.clone(),
                })
                .collect(),
        })
    }

    /// `max |⟨e_u, x e_v⟩ - conj⟨e_v, y e_u⟩|`, zero iff `y = x*`.
    fn adjoint_residual(&self, x: &LinearOp, y: &LinearOp) -> f64 {
        let dim = self.dim();
        let columns = |op: &LinearOp| -> Vec<SparseVec> {
            (0..dim as u64)
                .map(|b| {
                    let mut e = SparseVec::new();
                    e.insert(b, one());
                    self.apply_sparse(op, &e)
                })
                .collect()
        };
        let cx = columns(x);
        let cy = columns(y);
        let mut worst = 0.0f64;
        for (v, col) in cx.iter().enumerate() {
            for (&u, &xuv) in col {
                let yvu = cy[u as usize].get(&(v as u64)).copied().unwrap_or_default();
                worst = worst.max((xuv - yvu.conj()).norm());
            }
        }
        for (u, col) in cy.iter().enumerate() {
            for (&v, &yvu) in col {
                let xuv = cx[v as usize].get(&(u as u64)).copied().unwrap_or_default();
                worst = worst.max((xuv - yvu.conj()).norm());
            }
        }
        worst
    }

    /// Letters generating the left (`Gamma`) or right (`Delta`) algebra,
    /// adjoints included.
    pub fn generator_letters(&self, family: Family) -> Vec<Letter> {
        use LetterKind::*;
        let mut out = Vec::new();
        match (self.mode(), family) {
            (Mode::Twisted, fam) => {
                let (x, xs) = match fam {
                    Family::Left => (Gamma, GammaStar),
                    Family::Right => (Delta, DeltaStar),
                };
                for a in self.positive_labels() {
                    out.push(Letter::new(x, a));
                    out.push(Letter::new(xs, a));
                }
            }
            (Mode::Untwisted, fam) => {
                let x = match fam {
                    Family::Left => GammaUntwisted,
                    Family::Right => DeltaUntwisted,
                };
                for &a in self.order() {
                    out.push(Letter::new(x, a));
                }
            }
        }
        out
    }

    /// Numerical rank of `span{w·1 : w a word of length ≤ max_len}` in the
    /// generators of `family`.
    ///
    /// The span is grown one word length at a time, applying every letter to
    /// the vectors added in the previous round. A candidate is kept when its
    /// Gram-Schmidt residual (after two orthogonalization passes on the
    /// normalized vector) exceeds `1e-9`.
    pub fn cyclic_rank(&self, max_len: usize, family: Family) -> Result<usize> {
        check_dim(self)?;
        let letters = self.generator_letters(family);
        let ops: Vec<LinearOp> = letters.iter().map(|l| self.compile(l)).collect::<Result<_>>()?;
        let real = ops
            .iter()
            .all(|op| op.identity.im == 0.0 && op.terms.iter().all(|t| t.0.im == 0.0));
        let dim = self.dim();
        let mut span = RealSpan::new(if real { dim } else { 2 * dim });
        let mut frontier = vec![SpinVector::vacuum(dim)];
        span.extend(&realify(&frontier, real), 2);
        for _ in 0..max_len {
            if span.rank() == span.width {
                break;
            }
            let candidates: Vec<SpinVector> = frontier
                .iter()
                .flat_map(|v| ops.iter().map(move |op| self.apply_dense(op, v)))
                .collect();
            let hint = if real { 2 * frontier.len() + 8 } else { 4 * frontier.len() + 16 };
            let added = span.extend(&realify(&candidates, real), hint);
            if added.is_empty() {
                break;
            }
            frontier = added
                .into_iter()
                .map(|x| SpinVector {
                    amps: (0..dim)
                        .map(|r| Complex64::new(x[r], if real { 0.0 } else { x[dim + r] }))
                        .collect(),
                })
                .collect();
        }
        Ok(if real { span.rank() } else { span.rank() / 2 })
    }
}

/// Real columns for complex vectors: `x` itself when real, otherwise
/// `[Re x; Im x]` and `[-Im x; Re x]`, whose real span is the realified
/// complex span.
fn realify(vs: &[SpinVector], real: bool) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(if real { vs.len() } else { 2 * vs.len() });
    for v in vs {
        if real {
            out.push(v.amps.iter().map(|z| z.re).collect());
        } else {
            let mut a: Vec<f64> = v.amps.iter().map(|z| z.re).collect();
            a.extend(v.amps.iter().map(|z| z.im));
            let mut b: Vec<f64> = v.amps.iter().map(|z| -z.im).collect();
            b.extend(v.amps.iter().map(|z| z.re));
            out.push(a);
            out.push(b);
        }
    }
    out
}

/// Orthonormal basis grown by two-pass Gram-Schmidt. A candidate is kept when
/// its normalized residual exceeds `RANK_TOL`.
struct RealSpan {
    width: usize,
    /// Column-major `width × rank`.
    basis: Vec<f64>,
}

const RANK_TOL: f64 = 1e-9;

impl RealSpan {
    fn new(width: usize) -> Self {
        RealSpan {
            width,
            basis: Vec::new(),
        }
    }

    fn rank(&self) -> usize {
        self.basis.len() / self.width
    }

    /// Adds the new directions among `cands` and returns them. At most `hint`
    /// mixed columns are tried first; the width doubles while every tried
    /// column turns out to be new.
    fn extend(&mut self, cands: &[Vec<f64>], hint: usize) -> Vec<Vec<f64>> {
        let w = self.width;
        let mut cols: Vec<f64> = Vec::with_capacity(cands.len() * w);
        for c in cands {
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                cols.extend(c.iter().map(|x| x / n));
            }
        }
        let m = cols.len() / w;
        if m == 0 {
            return Vec::new();
        }
        let all = DMatrix::from_vec(w, m, cols);
        let full = m.min(w - self.rank());
        let mut p = hint.clamp(1, full.max(1));
        loop {
            let start = self.basis.len();
            let added = self.extend_mixed(&all, p, full);
            if added.len() < p || p >= full {
                return added;
            }
            self.basis.truncate(start);
            p = (2 * p).min(full);
        }
    }

    fn extend_mixed(&mut self, all: &DMatrix<f64>, p: usize, full: usize) -> Vec<Vec<f64>> {
        let w = self.width;
        let m = all.ncols();
        let mut c = if p < m || full < m {
            let mut c = all * sketch(m, p);
            for mut col in c.column_iter_mut() {
                let n = col.norm();
                if n > 0.0 {
                    col /= n;
                }
            }
            c
        } else {
            all.clone()
        };
        if self.rank() > 0 {
            let q = DMatrixView::from_slice(&self.basis, w, self.rank());
            let qt = q.transpose();
            for _ in 0..2 {
                let coef = &qt * &c;
                c.gemm(-1.0, &q, &coef, 1.0);
            }
        }
        let start = self.basis.len();
        let mut added = Vec::new();
        for j in 0..c.ncols() {
            if self.rank() == w {
                break;
            }
            let mut x: Vec<f64> = c.column(j).iter().copied().collect();
            if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= RANK_TOL {
                continue;
            }
            for _ in 0..2 {
                for b in self.basis[start..].chunks_exact(w) {
                    let d: f64 = b.iter().zip(&x).map(|(p, q)| p * q).sum();
                    x.iter_mut().zip(b).for_each(|(v, p)| *v -= d * p);
                }
            }
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > RANK_TOL {
                x.iter_mut().for_each(|v| *v /= r);
                self.basis.extend_from_slice(&x);
                added.push(x);
            }
        }
        added
    }
}

/// Fixed-seed uniform mixing matrix `m × p`. Generic combinations of the
/// candidates span the same space whenever at most `p` new directions exist.
fn sketch(m: usize, p: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(((m as u64) << 32) | p as u64);
    DMatrix::from_fn(m, p, |_, _| rng.random_range(-1.0..1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `γ` letters (left algebra).
    Left,
    /// `δ` letters (right algebra).
    Right,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EnlargementReport {
    /// Largest `|φ_small(w) - φ_large(w)|` over the words.
    pub max_discrepancy: f64,
    /// Largest entry of `T(x_A x_B) - (T̃ x_A) x_B` over basis vectors and
    /// words; present when the large model lists the small index set first,
    /// in the same order.
    pub block_residual: Option<f64>,
    pub words: usize,
}

/// Checks that an enlargement `I ⊂ J` of the index set leaves vacuum moments
/// of words in `I`-letters unchanged.
pub fn enlargement_consistency(
    small: &SpinModel,
    large: &SpinModel,
    words: &[OperatorWord],
) -> Result<EnlargementReport> {
    if !large.eps().extends(small.eps()) {
        return Err(Error::domain(
            "the large sign function does not restrict to the small one",
        ));
    }
    for w in words {
        for l in &w.letters {
            let twisted = matches!(
                l.kind,
                LetterKind::Gamma | LetterKind::GammaStar | LetterKind::Delta | LetterKind::DeltaStar
            );
            if !small.contains(l.label) || (twisted && !small.contains(l.label.mirror())) {
                return Err(Error::domain(format!(
                    "letter on {} is outside the small index set",
                    l.label
                )));
            }
        }
    }
    let mut max_discrepancy = 0.0f64;
    for w in words {
        let a = small.vacuum_state(w)?;
        let b = large.vacuum_state(w)?;
        max_discrepancy = max_discrepancy.max((a - b).norm());
    }
    let m = small.n_indices();
    let prefix_ok = large.order().len() >= m && large.order()[..m] == *small.order();
    let block_residual = if prefix_ok && large.dim() <= VERIFY_MAX_DIM {
        let mut worst = 0.0f64;
        let high = large.n_indices() - m;
        for w in words {
            let small_ops = small.compile_word(w)?;
            let large_ops = large.compile_word(w)?;
            for a in 0..small.dim() as u64 {
                let mut ea = SparseVec::new();
                ea.insert(a, one());
                let reduced = small.apply_product_sparse(&small_ops, &ea);
                for bk in 0..(1u64 << high) {
                    let idx = a | (bk << m);
                    let mut e = SparseVec::new();
                    e.insert(idx, one());
                    let mut diff = large.apply_product_sparse(&large_ops, &e);
                    for (&k, &v) in &reduced {
                        *diff.entry(k | (bk << m)).or_default() -= v;
                    }
                    for v in diff.values() {
                        worst = worst.max(v.norm());
                    }
                }
            }
        }
        Some(worst)
    } else {
        None
    };
    Ok(EnlargementReport {
        max_discrepancy,
        block_residual,
        words: words.len(),
    })
}
