//! Modular data `(S, J, Δ)` of the vacuum state on the twisted spin algebra.
//!
//! `Δ` is diagonal in the subset basis with weight `Π_j λ_j^{χ_j - χ_{-j}}`
//! (summed over sites). `J` mirrors every index, `x_A -> x_{-A}`, conjugates
//! the amplitude, and carries the sign of reordering the reversed mirrored
//! word into the model order. `S = J Δ^{1/2}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::babyfock::{
    check_dim, Label, Letter, LetterKind, Mode, OperatorWord, ResidualReport, ResidualRow,
    SparseVec, SpinModel, SpinVector,
};
use crate::{Error, Result};

/// Largest dimension at which dense matrices are built for cross-checks.
pub const DENSE_CHECK_MAX_DIM: usize = 1 << 10;

const PAR_MIN_DIM: usize = 1 << 14;

#[derive(Clone, Debug)]
pub struct ModularData {
    /// `±ln λ_{|j|}` for each bit.
    log_weight: Vec<f64>,
    /// Bit of the mirrored label.
    mirror_bit: Vec<u8>,
    /// Bit `r` of `j_mask[p]` is set when `p < r`, the mirrors appear in the
    /// opposite order, and `ε(p, r) = -1`.
    j_mask: Vec<u64>,
    k: usize,
    abs_j: Vec<usize>,
    sign_j: Vec<i32>,
}

impl ModularData {
    pub fn new(model: &SpinModel) -> Result<Self> {
        if model.mode() != Mode::Twisted {
            return Err(Error::Mode("modular data needs a twisted model".into()));
        }
        let order = model.order();
        let n = order.len();
        let mut log_weight = Vec::with_capacity(n);
        let mut mirror_bit = Vec::with_capacity(n);
        let mut abs_j = Vec::with_capacity(n);
        let mut sign_j = Vec::with_capacity(n);
        for &l in order {
            let lw = model.lambda_of(l).ln();
            log_weight.push(if l.j > 0 { lw } else { -lw });
            mirror_bit.push(model.bit(l.mirror())?);
            abs_j.push(l.j.unsigned_abs() as usize);
            sign_j.push(l.j.signum());
        }
        let mut j_mask = vec![0u64; n];
        for p in 0..n {
            for r in p + 1..n {
                if mirror_bit[r] < mirror_bit[p]
                    || model.eps().value(order[p], order[r]) == 1
                {
                    continue;
                }
                j_mask[p] |= 1 << r;
            }
        }
        Ok(ModularData {
            log_weight,
            mirror_bit,
            j_mask,
            k: model.lambda().len(),
            abs_j,
            sign_j,
        })
    }

    /// `(χ_j - χ_{-j})` summed over sites, for `j = 1..=k`.
    pub fn delta_exponents(&self, b: u64) -> Vec<i32> {
        let mut e = vec![0; self.k];
        for p in bits(b) {
            e[self.abs_j[p] - 1] += self.sign_j[p];
        }
        e
    }

    pub fn log_weight(&self, b: u64) -> f64 {
        bits(b).map(|p| self.log_weight[p]).sum()
    }

    pub fn weight(&self, b: u64) -> f64 {
        self.log_weight(b).exp()
    }

    /// Basis index of the mirrored subset.
    pub fn mirror(&self, b: u64) -> u64 {
        bits(b).fold(0, |acc, p| acc | 1 << self.mirror_bit[p])
    }

    /// Sign picked up by `J` on the basis vector `b`.
    pub fn j_sign(&self, b: u64) -> f64 {
        let parity: u32 = bits(b).map(|p| (self.j_mask[p] & b).count_ones()).sum();
        if parity & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

fn bits(b: u64) -> impl Iterator<Item = usize> {
    let mut x = b;
    std::iter::from_fn(move || {
        if x == 0 {
            None
        } else {
            let p = x.trailing_zeros() as usize;
            x &= x - 1;
            Some(p)
        }
    })
}

fn check_len(model: &SpinModel, v: &SpinVector) -> Result<()> {
    if v.dim() != model.dim() {
        return Err(Error::domain(format!(
            "vector has dimension {}, model has {}",
            v.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// `Δ^{power} v`, with `λ^{power} = exp(power · ln λ)`.
pub fn delta_apply(v: &SpinVector, model: &SpinModel, power: Complex64) -> Result<SpinVector> {
    let md = ModularData::new(model)?;
    check_len(model, v)?;
    Ok(delta_with(&md, v, power))
}

fn delta_with(md: &ModularData, v: &SpinVector, power: Complex64) -> SpinVector {
    let f = |(b, &a): (usize, &Complex64)| a * (power * md.log_weight(b as u64)).exp();
    let amps = if v.dim() < PAR_MIN_DIM {
        v.amps.iter().enumerate().map(f).collect()
    } else {
        v.amps.par_iter().enumerate().map(f).collect()
    };
    SpinVector { amps }
}

/// Antilinear `J`.
pub fn j_apply(v: &SpinVector, model: &SpinModel) -> Result<SpinVector> {
    let md = ModularData::new(model)?;
    check_len(model, v)?;
    Ok(j_with(&md, v))
}

fn j_with(md: &ModularData, v: &SpinVector) -> SpinVector {
    let mut out = SpinVector::zeros(v.dim());
    for (b, a) in v.amps.iter().enumerate() {
        let b = b as u64;
        out.amps[md.mirror(b) as usize] = a.conj() * md.j_sign(b);
    }
    out
}

/// `S = J Δ^{1/2}`.
pub fn s_apply(v: &SpinVector, model: &SpinModel) -> Result<SpinVector> {
    let md = ModularData::new(model)?;
    check_len(model, v)?;
    Ok(j_with(&md, &delta_with(&md, v, Complex64::new(0.5, 0.0))))
}

/// `λ_j^{iz}` for the generator `γ_j`.
pub fn sigma_generator(z: Complex64, label: Label, model: &SpinModel) -> Result<Complex64> {
    if model.mode() != Mode::Twisted {
        return Err(Error::Mode("modular group needs a twisted model".into()));
    }
    if !model.contains(label) || label.j <= 0 {
        return Err(Error::domain(format!("{label} is not a generator label")));
    }
    Ok(lambda_power(model.lambda_of(label), Complex64::i() * z))
}

fn lambda_power(lambda: f64, w: Complex64) -> Complex64 {
    (w * lambda.ln()).exp()
}

/// Coefficients `(a, b)` with `σ_z(g_j) = a g_j + b g_{-j}` for `j > 0`, and
/// `σ_z(g_j) = a g_j + b g_{|j|}` for `j < 0`.
pub fn sigma_gaussian_rotation(z: Complex64, j: i32, lambda: f64) -> Result<(Complex64, Complex64)> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(Error::domain(format!("λ = {lambda} must be finite and ≥ 1")));
    }
    if j == 0 {
        return Err(Error::domain("j must be nonzero"));
    }
    let theta = z * lambda.ln();
    let (c, s) = (theta.cos(), theta.sin());
    Ok(if j > 0 { (c, -s) } else { (c, s) })
}

/// Phase of `σ_z` on a word of `γ`/`γ*`/`δ`/`δ*` letters: `γ` picks up
/// `λ^{iz}`, `γ*` picks up `λ^{-iz}`; right letters are fixed.
pub fn sigma_word_phase(z: Complex64, word: &OperatorWord, model: &SpinModel) -> Result<Complex64> {
    let mut ph = Complex64::new(1.0, 0.0);
    for l in &word.letters {
        match l.kind {
            LetterKind::Gamma => ph *= sigma_generator(z, l.label, model)?,
            LetterKind::GammaStar => ph /= sigma_generator(z, l.label, model)?,
            LetterKind::Delta | LetterKind::DeltaStar => {}
            other => {
                return Err(Error::domain(format!(
                    "{other:?} is not a twisted generator letter"
                )))
            }
        }
    }
    Ok(ph)
}

/// All words of length `1..=max_len` in `letters`.
pub fn words_up_to(letters: &[Letter], max_len: usize) -> Vec<OperatorWord> {
    let mut out = Vec::new();
    let mut layer = vec![OperatorWord::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for &l in letters {
                let mut x = w.clone();
                x.letters.push(l);
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn delta_sparse(md: &ModularData, v: &SparseVec, power: Complex64) -> SparseVec {
    v.iter()
        .map(|(&b, &a)| (b, a * (power * md.log_weight(b)).exp()))
        .collect()
}

fn j_sparse(md: &ModularData, v: &SparseVec) -> SparseVec {
    v.iter()
        .map(|(&b, &a)| (md.mirror(b), a.conj() * md.j_sign(b)))
        .collect()
}

fn unit(b: usize) -> SparseVec {
    SparseVec::from([(b as u64, Complex64::new(1.0, 0.0))])
}

fn scale(mut v: SparseVec, c: Complex64) -> SparseVec {
    v.values_mut().for_each(|x| *x *= c);
    v
}

fn sparse_diff(x: &SparseVec, y: &SparseVec) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let a = x
        .iter()
        .map(|(b, &v)| (v - y.get(b).copied().unwrap_or(zero)).norm());
    let b = y
        .iter()
        .filter(|(b, _)| !x.contains_key(b))
        .map(|(_, v)| v.norm());
    a.chain(b).fold(0.0, f64::max)
}

/// Matrices `W` with columns `w_A 1` and `W'` with columns `w_A* 1`, one
/// `γ`-word `w_A` per subset `A`.
///
/// `W` is checked to be triangular for subset inclusion with a non-zero
/// diagonal, so it is invertible and `S W = W'` determines `S`. Returns `None`
/// above the dense cap.
pub fn subset_word_basis(model: &SpinModel) -> Result<Option<(DMatrix<Complex64>, DMatrix<Complex64>)>> {
    let dim = model.dim();
    if dim > DENSE_CHECK_MAX_DIM {
        return Ok(None);
    }
    let mut w = DMatrix::<Complex64>::zeros(dim, dim);
    let mut ws = DMatrix::<Complex64>::zeros(dim, dim);
    for b in 0..dim as u64 {
        let word: OperatorWord = bits(b)
            .map(|p| {
                let l = model.order()[p];
                if l.j > 0 {
                    Letter::new(LetterKind::Gamma, l)
                } else {
                    Letter::new(LetterKind::GammaStar, l.mirror())
                }
            })
            .collect();
        for (r, a) in model.word_on_vacuum(&word)? {
            if r & !b != 0 && a.norm() > 0.0 {
                return Err(Error::contract("γ-word basis matrix is not triangular"));
            }
            w[(r as usize, b as usize)] = a;
        }
        if w[(b as usize, b as usize)].norm() == 0.0 {
            return Err(Error::contract("γ-word basis matrix is singular"));
        }
        for (r, a) in model.word_on_vacuum(&word.adjoint())? {
            ws[(r as usize, b as usize)] = a;
        }
    }
    Ok(Some((w, ws)))
}

#[derive(Clone, Debug)]
pub struct ModularOptions {
    pub max_word_len: usize,
    pub times: Vec<f64>,
}

impl Default for ModularOptions {
    fn default() -> Self {
        ModularOptions {
            max_word_len: 4,
            times: vec![0.3, 1.7],
        }
    }
}

pub fn verify_modular(model: &SpinModel) -> Result<ResidualReport> {
    verify_modular_with(model, &ModularOptions::default())
}

/// Checks the modular identities on every basis vector.
pub fn verify_modular_with(model: &SpinModel, opts: &ModularOptions) -> Result<ResidualReport> {
    use LetterKind::*;
    let md = ModularData::new(model)?;
    check_dim(model)?;
    let dim = model.dim();
    let half = Complex64::new(0.5, 0.0);
    let mut rows: Vec<(String, f64)> = Vec::new();
    let mut record = |name: &str, r: f64| {
        if let Some(row) = rows.iter_mut().find(|(n, _)| n == name) {
            row.1 = row.1.max(r);
        } else {
            rows.push((name.to_string(), r));
        }
    };

    // J and Δ on the basis
    let mut j_sq = 0.0f64;
    let mut jdj = 0.0f64;
    let one = Complex64::new(1.0, 0.0);
    for b in 0..dim {
        let e = unit(b);
        let je = j_sparse(&md, &e);
        j_sq = j_sq.max(sparse_diff(&j_sparse(&md, &je), &e));
        let de = delta_sparse(&md, &e, one);
        let lhs = j_sparse(&md, &delta_sparse(&md, &j_sparse(&md, &de), one));
        jdj = jdj.max(sparse_diff(&lhs, &e));
    }
    record("J^2 = Id", j_sq);
    record("J Delta J Delta = Id", jdj);
    record("Delta 1 = 1", (md.weight(0) - 1.0).abs());

    if let Some((w, ws)) = subset_word_basis(model)? {
        let mut worst = 0.0f64;
        for b in 0..dim {
            for phase in [Complex64::new(1.0, 0.0), Complex64::i()] {
                let v = SpinVector {
                    amps: w.column(b).iter().map(|z| z * phase).collect(),
                };
                let s = j_with(&md, &delta_with(&md, &v, half));
                for (x, y) in s.amps.iter().zip(ws.column(b).iter()) {
                    worst = worst.max((x - y * phase.conj()).norm());
                }
            }
        }
        record("S = J Delta^{1/2}", worst);
    }

    let gens = model.positive_labels();
    let mut gamma_letters = Vec::new();
    for &a in &gens {
        gamma_letters.push(Letter::new(Gamma, a));
        gamma_letters.push(Letter::new(GammaStar, a));
    }
    let words = words_up_to(&gamma_letters, opts.max_word_len);
    let s_rows: Vec<(f64, f64)> = words
        .par_iter()
        .map(|w| -> Result<(f64, f64)> {
            let v = model.word_on_vacuum(w)?;
            let target = model.word_on_vacuum(&w.adjoint())?;
            let s = j_sparse(&md, &delta_sparse(&md, &v, half));
            let mut inv = 0.0f64;
            let phi = model.vacuum_state(w)?;
            for &t in &opts.times {
                let ph = sigma_word_phase(Complex64::new(t, 0.0), w, model)?;
                inv = inv.max((ph * phi - phi).norm());
            }
            Ok((sparse_diff(&s, &target), inv))
        })
        .collect::<Result<_>>()?;
    record(
        "S(w 1) = w* 1",
        s_rows.iter().map(|r| r.0).fold(0.0, f64::max),
    );
    record(
        "phi(sigma_t(w)) = phi(w)",
        s_rows.iter().map(|r| r.1).fold(0.0, f64::max),
    );

    let compile = |kind: LetterKind, l: Label| model.compile(&Letter::new(kind, l));
    for &a in &gens {
        let g = compile(Gamma, a)?;
        let gs = compile(GammaStar, a)?;
        let ds = compile(DeltaStar, a)?;
        let mut sig = 0.0f64;
        let mut jgj = 0.0f64;
        for b in 0..dim {
            let e = unit(b);
            for &t in &opts.times {
                let it = Complex64::new(0.0, t);
                for (op, sgn) in [(&g, 1.0), (&gs, -1.0)] {
                    let lhs = delta_sparse(
                        &md,
                        &model.apply_sparse(op, &delta_sparse(&md, &e, -it)),
                        it,
                    );
                    let ph = lambda_power(model.lambda_of(a), it * sgn);
                    let rhs = scale(model.apply_sparse(op, &e), ph);
                    sig = sig.max(sparse_diff(&lhs, &rhs));
                }
            }
            let lhs = j_sparse(&md, &model.apply_sparse(&g, &j_sparse(&md, &e)));
            jgj = jgj.max(sparse_diff(&lhs, &model.apply_sparse(&ds, &e)));
        }
        record("Delta^{it} gamma_j Delta^{-it} = lambda_j^{it} gamma_j", sig);
        record("J gamma_j J = delta*_j", jgj);

        let z = Complex64::new(0.0, -1.0);
        let vac = SpinVector::vacuum(dim);
        let conj = delta_with(
            &md,
            &model.apply_dense(&g, &delta_with(&md, &vac, -Complex64::i() * z)),
            Complex64::i() * z,
        );
        let mut pred = model.apply_dense(&g, &vac);
        let f = sigma_generator(z, a, model)?;
        pred.amps.iter_mut().for_each(|x| *x *= f);
        record("sigma_{-i}(gamma_j) 1 = Delta gamma_j Delta^-1 1", conj.max_abs_diff(&pred));
    }

    for &l in model.order() {
        let b = compile(Beta, l)?;
        let bs = compile(BetaStar, l)?;
        let a = compile(Alpha, l.mirror())?;
        let as_ = compile(AlphaStar, l.mirror())?;
        let mut worst = 0.0f64;
        for x in 0..dim {
            let e = unit(x);
            let je = j_sparse(&md, &e);
            for (op, target) in [(&b, &a), (&bs, &as_)] {
                let lhs = j_sparse(&md, &model.apply_sparse(op, &je));
                worst = worst.max(sparse_diff(&lhs, &model.apply_sparse(target, &e)));
            }
        }
        record("J beta_j J = alpha_-j", worst);
    }

    // KMS condition at the generator level
    let ys = words_up_to(&gamma_letters, opts.max_word_len.saturating_sub(1).min(3));
    let mut kms = 0.0f64;
    for &a in &gens {
        let lam = model.lambda_of(a);
        for y in std::iter::once(OperatorWord::empty()).chain(ys.iter().cloned()) {
            let mut left = vec![Letter::new(Gamma, a)];
            left.extend(y.letters.iter().copied());
            let mut right = y.letters.clone();
            right.push(Letter::new(Gamma, a));
            let l = model.vacuum_state(&OperatorWord::new(left))?;
            let r = model.vacuum_state(&OperatorWord::new(right))?;
            kms = kms.max((l - r * lam).norm());
        }
    }
    record("phi(gamma_j y) = lambda_j phi(y gamma_j)", kms);

    if dim <= DENSE_CHECK_MAX_DIM {
        let z = Complex64::new(0.3, -0.4);
        let mut worst = 0.0f64;
        for &a in &gens {
            let g = model.product_matrix(&[compile(Gamma, a)?]);
            let f = sigma_generator(z, a, model)?;
            let iz = Complex64::i() * z;
            let d = |p: Complex64| -> Vec<Complex64> {
                (0..dim as u64).map(|b| (p * md.log_weight(b)).exp()).collect()
            };
            let (l, r) = (d(iz), d(-iz));
            let conj = DMatrix::from_fn(dim, dim, |i, j| l[i] * g[(i, j)] * r[j]);
            worst = worst.max((conj - g * f).camax());
        }
        record("Delta^{iz} gamma_j Delta^{-iz} = lambda_j^{iz} gamma_j (matrix)", worst);
    }

    let params = model.describe();
    Ok(ResidualReport {
        rows: rows
            .into_iter()
            .map(|(identity, max_residual)| ResidualRow {
                identity,
                max_residual,
                dim,
                params: params.clone(),
            })
            .collect(),
    })
}
