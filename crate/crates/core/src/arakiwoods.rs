//! Finite spectral data for the generator `A` of `U_t = A^{it}`, the deformed
//! inner product `⟨ξ, η⟩_U = ⟨2A(1+A)⁻¹ξ, η⟩`, the `f̂` basis, and the dyadic
//! discretization `f_n` of the generator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// Eigenvalues `λ_i > 0` with orthonormal eigenvectors in `C^d`.
///
/// `pairing[i]`, when present, is the index of the eigenvector `𝒥 v_i`
/// (complex conjugate) whose eigenvalue is `1/λ_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Vec<usize>>,
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

impl SpectralData {
    pub fn new(eigenvalues: Vec<f64>, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        if eigenvalues.len() != vectors.len() {
            return Err(Error::domain("one eigenvector per eigenvalue is required"));
        }
        let d = vectors.first().map_or(0, Vec::len);
        if eigenvalues.len() != d {
            return Err(Error::domain(format!(
                "expected {d} eigenpairs for a {d}-dimensional space, got {}",
                eigenvalues.len()
            )));
        }
        for &l in &eigenvalues {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::domain(format!("eigenvalue {l} must be positive")));
            }
        }
        for (i, u) in vectors.iter().enumerate() {
            if u.len() != d {
                return Err(Error::domain("eigenvectors have different lengths"));
            }
            for (j, v) in vectors.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot(u, v) - expect).norm() > ORTHO_TOL {
                    return Err(Error::domain("eigenvectors are not orthonormal"));
                }
            }
        }
        Ok(SpectralData {
            eigenvalues,
            vectors,
            pairing: None,
        })
    }

    /// `A = diag(λ)` in the canonical basis.
    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        let vectors = (0..d)
            .map(|i| {
                (0..d)
                    .map(|r| Complex64::new(if r == i { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        Self::new(eigenvalues, vectors)
    }

    /// `A` on `R^{2k} ⊗ C` with `U_t` rotating the plane `(e_{2j}, e_{2j+1})`
    /// by the angle `t ln λ_j`: `A = λ_j` on `(e_{2j} - i e_{2j+1})/√2` and
    /// `1/λ_j` on its conjugate.
    pub fn rotation_planes(lambda: &[f64]) -> Result<Self> {
        let d = 2 * lambda.len();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut eigenvalues = Vec::with_capacity(d);
        let mut vectors = Vec::with_capacity(d);
        let mut pairing = Vec::with_capacity(d);
        for (j, &l) in lambda.iter().enumerate() {
            if !(l.is_finite() && l >= 1.0) {
                return Err(Error::domain(format!("λ = {l} must be finite and ≥ 1")));
            }
            for sign in [-1.0, 1.0] {
                let mut v = vec![Complex64::new(0.0, 0.0); d];
                v[2 * j] = Complex64::new(s, 0.0);
                v[2 * j + 1] = Complex64::new(0.0, sign * s);
                vectors.push(v);
                eigenvalues.push(if sign < 0.0 { l } else { 1.0 / l });
            }
            pairing.push(2 * j + 1);
            pairing.push(2 * j);
        }
        let mut sd = Self::new(eigenvalues, vectors)?;
        sd.pairing = Some(pairing);
        sd.check_pairing()?;
        Ok(sd)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Verifies `λ_{p(i)} = 1/λ_i` and `v_{p(i)} = conj(v_i)` up to a phase.
    pub fn check_pairing(&self) -> Result<()> {
        let Some(p) = &self.pairing else {
            return Ok(());
        };
        if p.len() != self.dim() {
            return Err(Error::domain("pairing has the wrong length"));
        }
        for (i, &j) in p.iter().enumerate() {
            if j >= self.dim() || p[j] != i {
                return Err(Error::domain("pairing is not an involution"));
            }
            if (self.eigenvalues[j] * self.eigenvalues[i] - 1.0).abs() > 1e-12 {
                return Err(Error::domain("paired eigenvalues are not reciprocal"));
            }
            let conj: Vec<Complex64> = self.vectors[i].iter().map(|z| z.conj()).collect();
            if (dot(&self.vectors[j], &conj).norm() - 1.0).abs() > ORTHO_TOL {
                return Err(Error::domain("paired eigenvectors are not conjugate"));
            }
        }
        Ok(())
    }

    /// Same eigenvectors, eigenvalues mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpectralData {
        SpectralData {
            eigenvalues: self.eigenvalues.iter().map(|&l| f(l)).collect(),
            vectors: self.vectors.clone(),
            pairing: self.pairing.clone(),
        }
    }

    /// `|⟨v_i, e⟩|²` for every eigenvector.
    pub fn spectral_weights(&self, e: &[Complex64]) -> Result<Vec<f64>> {
        self.check_vector(e)?;
        Ok(self.vectors.iter().map(|v| dot(v, e).norm_sqr()).collect())
    }

    fn check_vector(&self, x: &[Complex64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::domain(format!(
                "vector has length {}, space has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// `2λ/(1+λ)`.
pub fn deformation(l: f64) -> f64 {
    2.0 * l / (1.0 + l)
}

/// `⟨ξ, η⟩_U = Σ_i 2λ_i/(1+λ_i) conj⟨v_i, ξ⟩ ⟨v_i, η⟩`, antilinear in `ξ`.
pub fn deformed_inner(xi: &[Complex64], eta: &[Complex64], spec: &SpectralData) -> Result<Complex64> {
    spec.check_vector(xi)?;
    spec.check_vector(eta)?;
    Ok(spec
        .eigenvalues
        .iter()
        .zip(&spec.vectors)
        .map(|(&l, v)| dot(v, xi).conj() * dot(v, eta) * deformation(l))
        .sum())
}

/// `f̂_{±j}` in `C^{2k}`, indexed as `e_{-k}, …, e_{-1}, e_1, …, e_k`.
/// Returns `(j, vector)` for `j = -k..-1, 1..k`.
pub fn fhat_basis(lambda: &[f64]) -> Result<Vec<(i32, Vec<Complex64>)>> {
    let k = lambda.len();
    let pos = |j: i32| -> usize {
        if j < 0 {
            (j + k as i32) as usize
        } else {
            (j + k as i32 - 1) as usize
        }
    };
    let mut out = Vec::with_capacity(2 * k);
    for &l in lambda {
        if !(l.is_finite() && l >= 1.0) {
            return Err(Error::domain(format!("λ = {l} must be finite and ≥ 1")));
        }
    }
    for j in (-(k as i32)..=-1).chain(1..=k as i32) {
        let a = j.unsigned_abs() as usize;
        let mu = lambda[a - 1].powf(0.25);
        let norm = 1.0 / (mu * mu + 1.0 / (mu * mu)).sqrt();
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * k];
        let (neg, plus) = (pos(-(a as i32)), pos(a as i32));
        if j > 0 {
            v[neg] = Complex64::new(norm * mu, 0.0);
            v[plus] = Complex64::new(norm / mu, 0.0);
        } else {
            v[neg] = Complex64::new(0.0, norm * mu);
            v[plus] = Complex64::new(0.0, -norm / mu);
        }
        out.push((j, v));
    }
    Ok(out)
}

/// A value of `f_n` as the exact fraction `num/den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dyadic {
    pub num: u64,
    pub den: u64,
}

impl Dyadic {
    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn recip(self) -> Self {
        Dyadic {
            num: self.den,
            den: self.num,
        }
    }

    pub fn is_inverse_of(self, other: Dyadic) -> bool {
        u128::from(self.num) * u128::from(other.num) == u128::from(self.den) * u128::from(other.den)
    }
}

/// `g_n(t)` for `t > 1`: 1 on `(1, 1 + 2^{-n})`, `k/2^n` on `[k/2^n, (k+1)/2^n)`
/// for `2^n < k < n 2^n`, and `n` on `[n, ∞)`. Overlapping pieces resolve to
/// the first one listed.
fn g_exact(t: f64, n: u32) -> Dyadic {
    let scale = 1u64 << n;
    let step = 1.0 / scale as f64;
    if t < 1.0 + step {
        return Dyadic { num: 1, den: 1 };
    }
    if t >= f64::from(n) {
        return Dyadic {
            num: u64::from(n),
            den: 1,
        };
    }
    let k = (t * scale as f64).floor() as u64;
    let (mut num, mut den) = (k, scale);
    while num % 2 == 0 && den > 1 {
        num /= 2;
        den /= 2;
    }
    Dyadic { num, den }
}

/// `f_n(t) = g_n(t)` for `t > 1`, `1/g_n(1/t)` for `t < 1`, `f_n(1) = 1`.
pub fn discretize_exact(t: f64, n: u32) -> Result<Dyadic> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t = {t} must be positive")));
    }
    if n == 0 || n > 40 {
        return Err(Error::domain(format!("level n = {n} must lie in 1..=40")));
    }
    Ok(match t.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Greater) => g_exact(t, n),
        Some(std::cmp::Ordering::Less) => g_exact(1.0 / t, n).recip(),
        _ => Dyadic { num: 1, den: 1 },
    })
}

pub fn discretize_value(t: f64, n: u32) -> Result<f64> {
    Ok(discretize_exact(t, n)?.value())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerRow {
    pub n: u32,
    pub value_re: f64,
    pub value_im: f64,
    pub limit_re: f64,
    pub limit_im: f64,
    pub error: f64,
}

/// `⟨ξ, η⟩_{H_n}` with `A_n = f_n(A)` against `⟨ξ, η⟩_U`.
pub fn inner_convergence(
    xi: &[Complex64],
    eta: &[Complex64],
    spec: &SpectralData,
    ns: &[u32],
) -> Result<Vec<InnerRow>> {
    let limit = deformed_inner(xi, eta, spec)?;
    ns.iter()
        .map(|&n| {
            let mut an = spec.clone();
            for l in &mut an.eigenvalues {
                *l = discretize_value(*l, n)?;
            }
            let v = deformed_inner(xi, eta, &an)?;
            Ok(InnerRow {
                n,
                value_re: v.re,
                value_im: v.im,
                limit_re: limit.re,
                limit_im: limit.im,
                error: (v - limit).norm(),
            })
        })
        .collect()
}

/// `g_r(λ) = 2λ^{2r+1}/(1+λ)`.
pub fn g_r(l: f64, r: f64) -> f64 {
    2.0 * ((2.0 * r + 1.0) * l.ln()).exp() / (1.0 + l)
}

/// `‖A_n^r e‖²_{H_n} = Σ_i g_r(f_n(λ_i)) |⟨v_i, e⟩|²`.
///
/// Every eigenvalue carrying weight must lie in `[1/K, K]`.
pub fn sigma_bound_norm(spec: &SpectralData, e: &[Complex64], r: f64, n: u32, k_bound: f64) -> Result<f64> {
    let w = spectral_weights_in(spec, e, k_bound)?;
    let mut total = 0.0;
    for (&l, &wi) in spec.eigenvalues.iter().zip(&w) {
        total += g_r(discretize_value(l, n)?, r) * wi;
    }
    Ok(total)
}

/// `‖A^r e‖²_U`, the limit of [`sigma_bound_norm`].
pub fn sigma_bound_limit(spec: &SpectralData, e: &[Complex64], r: f64, k_bound: f64) -> Result<f64> {
    let w = spectral_weights_in(spec, e, k_bound)?;
    Ok(spec
        .eigenvalues
        .iter()
        .zip(&w)
        .map(|(&l, &wi)| g_r(l, r) * wi)
        .sum())
}

fn spectral_weights_in(spec: &SpectralData, e: &[Complex64], k_bound: f64) -> Result<Vec<f64>> {
    if !(k_bound >= 1.0) {
        return Err(Error::domain(format!("K = {k_bound} must be at least 1")));
    }
    let w = spec.spectral_weights(e)?;
    for (&l, &wi) in spec.eigenvalues.iter().zip(&w) {
        if wi > 1e-300 && (l < 1.0 / k_bound || l > k_bound) {
            return Err(Error::domain(format!(
                "eigenvalue {l} carries weight outside [1/K, K] with K = {k_bound}"
            )));
        }
    }
    Ok(w)
}
