//! Central-limit matrix model: `n` copies of the spin generators coupled by a
//! random site sign function, normalized sums, their vacuum moments, and
//! spectral truncation.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::babyfock::{
    max_dim, Label, Letter, LetterKind, LinearOp, Mode, SignFunction, SpinModel, SpinVector,
};
use crate::linalg::{hermitian_eigen, HermitianEigen};
use crate::qmoments::{circular_star_moment, pairing_moment, CircularParams, StarWord};
use crate::{modular, rng, Error, Result};

/// Longest word accepted by [`moment`].
pub const MAX_MOMENT_WORD: usize = 8;

/// Cap on the dimension for dense eigendecompositions.
pub const DENSE_EIGEN_MAX_DIM: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CltMode {
    Tracial,
    Twisted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub mode: CltMode,
    pub k: usize,
    /// `λ_1..λ_k`, twisted mode only.
    #[serde(default)]
    pub lambda: Vec<f64>,
    pub q: f64,
    pub n: usize,
    pub seed: u64,
}

impl CltConfig {
    pub fn tracial(k: usize, q: f64, n: usize, seed: u64) -> Self {
        CltConfig {
            mode: CltMode::Tracial,
            k,
            lambda: Vec::new(),
            q,
            n,
            seed,
        }
    }

    pub fn twisted(lambda: Vec<f64>, q: f64, n: usize, seed: u64) -> Self {
        CltConfig {
            mode: CltMode::Twisted,
            k: lambda.len(),
            lambda,
            q,
            n,
            seed,
        }
    }

    pub fn n_indices(&self) -> usize {
        match self.mode {
            CltMode::Tracial => self.k * self.n,
            CltMode::Twisted => 2 * self.k * self.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= -1.0 && self.q <= 1.0) {
            return Err(Error::domain(format!("q = {} must lie in [-1, 1]", self.q)));
        }
        if self.k == 0 || self.n == 0 {
            return Err(Error::domain("k and n must be positive"));
        }
        if self.mode == CltMode::Twisted {
            if self.lambda.len() != self.k {
                return Err(Error::domain(format!(
                    "expected {} λ values, got {}",
                    self.k,
                    self.lambda.len()
                )));
            }
            for &l in &self.lambda {
                if !(l.is_finite() && l >= 1.0) {
                    return Err(Error::domain(format!("λ = {l} must be finite and ≥ 1")));
                }
            }
        }
        let bits = self.n_indices();
        if bits > 63 || (1usize << bits) > max_dim() {
            return Err(Error::SizeLimit {
                what: "vector dimension",
                got: if bits > 63 { usize::MAX } else { 1 << bits },
                cap: max_dim(),
            });
        }
        Ok(())
    }
}

/// Site sign function with `P(ε(i,j) = 1) = (1+q)/2` for `i > j`.
pub fn sample_signs(n: usize, q: f64, seed: u64) -> Result<SignFunction> {
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    rng::site_signs(n, q, seed)
}

/// The spin model on `I_n` in site-major order, `ε_n((i,j),(i',j')) = ε(i,i')`.
///
/// Twisted sites carry `j = -k..-1, 1..k`; tracial sites carry `j = 1..k` and
/// use the self-adjoint generators `β* + β`.
pub fn build_model(cfg: &CltConfig) -> Result<SpinModel> {
    cfg.validate()?;
    let sites = sample_signs(cfg.n, cfg.q, cfg.seed)?;
    let k = cfg.k as i32;
    let mut model = match cfg.mode {
        CltMode::Twisted => {
            let js: Vec<i32> = (-k..=-1).chain(1..=k).collect();
            SpinModel::twisted(sites.lift_sites(&js)?, &cfg.lambda)?
        }
        CltMode::Tracial => {
            let js: Vec<i32> = (1..=k).collect();
            SpinModel::untwisted(sites.lift_sites(&js)?)?
        }
    };
    model.set_site_signs(sites);
    Ok(model)
}

/// A normalized sum: `s_j`, `s_j*`, or `g_{±j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SumSymbol {
    S(usize),
    SStar(usize),
    /// `g_j = Re s_j` for `j > 0`, `g_{-j} = Im s_j` for `j < 0`.
    G(i32),
}

impl SumSymbol {
    pub fn index(self) -> usize {
        match self {
            SumSymbol::S(j) | SumSymbol::SStar(j) => j,
            SumSymbol::G(j) => j.unsigned_abs() as usize,
        }
    }

    pub fn adjoint(self) -> Self {
        match self {
            SumSymbol::S(j) => SumSymbol::SStar(j),
            SumSymbol::SStar(j) => SumSymbol::S(j),
            g => g,
        }
    }
}

impl fmt::Display for SumSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SumSymbol::S(j) => write!(f, "s{j}"),
            SumSymbol::SStar(j) => write!(f, "s{j}*"),
            SumSymbol::G(j) => write!(f, "g{j}"),
        }
    }
}

pub fn format_word(w: &[SumSymbol]) -> String {
    w.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

/// A normalized sum expanded into primitive operators.
#[derive(Clone, Debug)]
pub struct SumVariable {
    pub symbol: SumSymbol,
    pub op: LinearOp,
}

fn sites_of(model: &SpinModel) -> Vec<u32> {
    let mut s: Vec<u32> = model.order().iter().map(|l| l.site).collect();
    s.dedup();
    s
}

/// `s_{n,j} = n^{-1/2} Σ_i γ_{i,j}`, or `n^{-1/2} Σ_i (β*_{i,j} + β_{i,j})` in
/// tracial mode.
fn s_sum(model: &SpinModel, j: usize, star: bool) -> Result<LinearOp> {
    let sites = sites_of(model);
    let scale = Complex64::new(1.0 / (sites.len() as f64).sqrt(), 0.0);
    let kind = match (model.mode(), star) {
        (Mode::Twisted, false) => LetterKind::Gamma,
        (Mode::Twisted, true) => LetterKind::GammaStar,
        (Mode::Untwisted, _) => LetterKind::GammaUntwisted,
    };
    let mut op = LinearOp::default();
    for s in sites {
        let l = Label::new(s, j as i32);
        if !model.contains(l) {
            return Err(Error::domain(format!("generator index {j} is not in the model")));
        }
        op = op.plus(model.compile(&Letter::new(kind, l))?);
    }
    Ok(op.scaled(scale))
}

pub fn sum_variable(model: &SpinModel, symbol: SumSymbol) -> Result<SumVariable> {
    if symbol.index() == 0 {
        return Err(Error::domain("generator index must be at least 1"));
    }
    let op = match symbol {
        SumSymbol::S(j) => s_sum(model, j, false)?,
        SumSymbol::SStar(j) => s_sum(model, j, true)?,
        SumSymbol::G(j) if j > 0 => {
            let h = Complex64::new(0.5, 0.0);
            s_sum(model, j as usize, false)?
                .scaled(h)
                .plus(s_sum(model, j as usize, true)?.scaled(h))
        }
        SumSymbol::G(j) => {
            if model.mode() == Mode::Untwisted {
                return Err(Error::Mode(format!(
                    "g{j} needs a twisted model (tracial sums are self-adjoint)"
                )));
            }
            let h = Complex64::new(0.0, -0.5);
            let a = j.unsigned_abs() as usize;
            s_sum(model, a, false)?
                .scaled(h)
                .plus(s_sum(model, a, true)?.scaled(-h))
        }
    };
    Ok(SumVariable { symbol, op })
}

/// `φ(x_1 ⋯ x_p)` at finite `n`, applying the sums to the vacuum one at a time.
pub fn moment(model: &SpinModel, word: &[SumSymbol]) -> Result<Complex64> {
    if word.len() > MAX_MOMENT_WORD {
        return Err(Error::SizeLimit {
            what: "moment word length",
            got: word.len(),
            cap: MAX_MOMENT_WORD,
        });
    }
    let vars: Vec<SumVariable> = word
        .iter()
        .map(|&s| sum_variable(model, s))
        .collect::<Result<_>>()?;
    let mut v = SpinVector::vacuum(model.dim());
    for var in vars.iter().rev() {
        v = model.apply_dense(&var.op, &v);
    }
    Ok(v.amps[0])
}

/// `(n-1)(2+ε̄)/n + 1/n`, the exact value of `φ(g⁴)` for a tracial model with
/// `k = 1`.
pub fn tracial_fourth_moment_oracle(model: &SpinModel) -> Result<f64> {
    if model.mode() != Mode::Untwisted {
        return Err(Error::Mode("the fourth-moment oracle needs a tracial model".into()));
    }
    let sites = model
        .site_signs()
        .ok_or_else(|| Error::Mode("model was not built by the central-limit harness".into()))?;
    if model.n_indices() != sites.len() {
        return Err(Error::Mode("the fourth-moment oracle needs k = 1".into()));
    }
    let n = sites.len() as f64;
    if sites.len() == 1 {
        return Ok(1.0);
    }
    Ok((n - 1.0) * (2.0 + sites.off_diagonal_mean()) / n + 1.0 / n)
}

/// Limit of `φ(x_1 ⋯ x_p)` as `n → ∞`.
///
/// Twisted: `s_j -> c_j`, and `g_{±j}` are expanded into `c_j`, `c_j*`.
/// Tracial: pairing sum with unit covariance between equal indices.
pub fn limit_moment(cfg: &CltConfig, word: &[SumSymbol]) -> Result<Complex64> {
    match cfg.mode {
        CltMode::Tracial => {
            if let Some(bad) = word.iter().find(|s| matches!(s, SumSymbol::G(j) if *j < 0)) {
                return Err(Error::Mode(format!("{bad} needs a twisted model")));
            }
            pairing_moment(
                word.len(),
                |s, t| {
                    if word[s].index() == word[t].index() {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                },
                cfg.q,
            )
        }
        CltMode::Twisted => {
            let params = CircularParams {
                q: cfg.q,
                mu: cfg.lambda.iter().map(|l| l.powf(0.25)).collect(),
            };
            // each letter is a combination of c_j (k = +1) and c_j* (k = -1)
            let expansions: Vec<Vec<(Complex64, (usize, i8))>> = word
                .iter()
                .map(|&s| match s {
                    SumSymbol::S(j) => vec![(Complex64::new(1.0, 0.0), (j, 1))],
                    SumSymbol::SStar(j) => vec![(Complex64::new(1.0, 0.0), (j, -1))],
                    SumSymbol::G(j) if j > 0 => vec![
                        (Complex64::new(0.5, 0.0), (j as usize, 1)),
                        (Complex64::new(0.5, 0.0), (j as usize, -1)),
                    ],
                    SumSymbol::G(j) => vec![
                        (Complex64::new(0.0, -0.5), (j.unsigned_abs() as usize, 1)),
                        (Complex64::new(0.0, 0.5), (j.unsigned_abs() as usize, -1)),
                    ],
                })
                .collect();
            let mut total = Complex64::new(0.0, 0.0);
            let mut choice = vec![0usize; word.len()];
            loop {
                let mut coeff = Complex64::new(1.0, 0.0);
                let mut letters = Vec::with_capacity(word.len());
                for (e, &c) in expansions.iter().zip(&choice) {
                    coeff *= e[c].0;
                    letters.push(e[c].1);
                }
                total += coeff * circular_star_moment(&StarWord::new(letters)?, &params)?;
                let mut pos = 0;
                loop {
                    if pos == choice.len() {
                        return Ok(total);
                    }
                    choice[pos] += 1;
                    if choice[pos] < expansions[pos].len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub word: String,
    /// Seed average of the finite-n moment.
    pub value_re: f64,
    pub value_im: f64,
    pub limit_re: f64,
    pub limit_im: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub seeds: Vec<u64>,
    pub slack: f64,
    /// Words whose error grew by more than `slack` between consecutive `n`.
    pub violations: Vec<String>,
}

/// Finite-n moments averaged over `seeds` against their limits.
pub fn convergence_report(
    base: &CltConfig,
    ns: &[usize],
    words: &[Vec<SumSymbol>],
    seeds: &[u64],
    slack: f64,
) -> Result<ConvergenceReport> {
    if seeds.is_empty() {
        return Err(Error::domain("at least one seed is required"));
    }
    let mut rows = Vec::new();
    let limits: Vec<Complex64> = words
        .iter()
        .map(|w| limit_moment(base, w))
        .collect::<Result<_>>()?;
    for &n in ns {
        let mut sums = vec![Complex64::new(0.0, 0.0); words.len()];
        for &seed in seeds {
            let cfg = CltConfig {
                n,
                seed,
                ..base.clone()
            };
            let model = build_model(&cfg)?;
            for (s, w) in sums.iter_mut().zip(words) {
                *s += moment(&model, w)?;
            }
        }
        for ((w, s), lim) in words.iter().zip(sums).zip(&limits) {
            let v = s / seeds.len() as f64;
            rows.push(ConvergenceRow {
                n,
                word: format_word(w),
                value_re: v.re,
                value_im: v.im,
                limit_re: lim.re,
                limit_im: lim.im,
                error: (v - lim).norm(),
            });
        }
    }
    let mut violations = Vec::new();
    for w in words {
        let name = format_word(w);
        let errs: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.word == name)
            .map(|r| (r.n, r.error))
            .collect();
        for pair in errs.windows(2) {
            if pair[1].1 > pair[0].1 + slack {
                violations.push(format!(
                    "{name}: error {:.3e} at n={} exceeds {:.3e} at n={}",
                    pair[1].1, pair[1].0, pair[0].1, pair[0].0
                ));
            }
        }
    }
    Ok(ConvergenceReport {
        rows,
        seeds: seeds.to_vec(),
        slack,
        violations,
    })
}

/// Atoms `(λ_i, |⟨v_i, 1⟩|²)` of the distribution of a self-adjoint operator
/// in the vacuum state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSpectralMeasure {
    pub atoms: Vec<(f64, f64)>,
}

impl EmpiricalSpectralMeasure {
    pub fn from_eigen(e: &HermitianEigen) -> Self {
        let atoms = e
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, e.vectors[(0, i)].norm_sqr()))
            .collect();
        EmpiricalSpectralMeasure { atoms }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(x, w)| f(x) * w).sum()
    }

    pub fn moment(&self, p: i32) -> f64 {
        self.integrate(|x| x.powi(p))
    }
}

/// `χ_{(-C,C)}(λ)·λ`.
pub fn clip(c: f64) -> impl Fn(f64) -> f64 {
    move |x| if x.abs() < c { x } else { 0.0 }
}

/// Dense self-adjoint sum variable with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpectralVariable {
    pub symbol: SumSymbol,
    pub matrix: DMatrix<Complex64>,
    pub eigen: HermitianEigen,
    pub measure: EmpiricalSpectralMeasure,
}

fn check_dense(model: &SpinModel) -> Result<()> {
    if model.dim() > DENSE_EIGEN_MAX_DIM {
        return Err(Error::SizeLimit {
            what: "dense eigendecomposition dimension",
            got: model.dim(),
            cap: DENSE_EIGEN_MAX_DIM,
        });
    }
    Ok(())
}

pub fn spectral_variable(model: &SpinModel, symbol: SumSymbol) -> Result<SpectralVariable> {
    check_dense(model)?;
    let var = sum_variable(model, symbol)?;
    let matrix = model.product_matrix(&[var.op]);
    let eigen = hermitian_eigen(&matrix)?;
    let measure = EmpiricalSpectralMeasure::from_eigen(&eigen);
    Ok(SpectralVariable {
        symbol,
        matrix,
        eigen,
        measure,
    })
}

impl SpectralVariable {
    pub fn spectral_radius(&self) -> f64 {
        self.eigen.spectral_radius()
    }
}

#[derive(Clone, Debug)]
pub struct Truncation {
    pub c: f64,
    /// `χ_{(-C,C)}(g) g`.
    pub matrix: DMatrix<Complex64>,
    pub original: SpectralVariable,
}

impl Truncation {
    pub fn norm(&self) -> f64 {
        let c = self.c;
        self.original
            .eigen
            .values
            .iter()
            .map(|&x| clip(c)(x).abs())
            .fold(0.0, f64::max)
    }

    /// `φ(g̃^p)`.
    pub fn moment(&self, p: i32) -> f64 {
        let h = clip(self.c);
        self.original.measure.integrate(|x| h(x).powi(p))
    }

    pub fn measure(&self) -> &EmpiricalSpectralMeasure {
        &self.original.measure
    }
}

pub fn truncate_variable(model: &SpinModel, symbol: SumSymbol, c: f64) -> Result<Truncation> {
    if !(c > 0.0) {
        return Err(Error::domain(format!("C = {c} must be positive")));
    }
    let original = spectral_variable(model, symbol)?;
    let matrix = original.eigen.apply_fn(clip(c));
    Ok(Truncation {
        c,
        matrix,
        original,
    })
}

/// `μ(|t| ≥ C)`.
pub fn tail_mass(measure: &EmpiricalSpectralMeasure, c: f64) -> f64 {
    measure
        .atoms
        .iter()
        .filter(|a| a.0.abs() >= c)
        .fold(0.0, |acc, a| acc + a.1)
}

/// `max |Δ^{it} g̃ Δ^{-it} - h(Δ^{it} g Δ^{-it})|` with `h = χ_{(-C,C)}·id`.
pub fn truncation_modular_covariance(model: &SpinModel, j: i32, t: f64, c: f64) -> Result<f64> {
    let tr = truncate_variable(model, SumSymbol::G(j), c)?;
    let md = modular::ModularData::new(model)?;
    let dim = model.dim();
    let phase = |s: f64| -> Vec<Complex64> {
        (0..dim as u64)
            .map(|b| (Complex64::new(0.0, s) * md.log_weight(b)).exp())
            .collect()
    };
    let (u, ui) = (phase(t), phase(-t));
    let conj = |m: &DMatrix<Complex64>| DMatrix::from_fn(dim, dim, |r, k| u[r] * m[(r, k)] * ui[k]);
    let lhs = conj(&tr.matrix);
    let rotated = conj(&tr.original.matrix);
    let rhs = hermitian_eigen(&rotated)?.apply_fn(clip(c));
    Ok((lhs - rhs).camax())
}

/// Default truncation level `2/√(1-q) · max_j ‖f_j‖ + 0.5`, where
/// `‖f_j‖² = φ(g_j²)` in the limit.
pub fn default_truncation(cfg: &CltConfig) -> Result<f64> {
    let factor = crate::qmoments::nu_q_bounds(cfg.q)?.norm_factor;
    let norm = match cfg.mode {
        CltMode::Tracial => 1.0,
        CltMode::Twisted => cfg
            .lambda
            .iter()
            .map(|&l| ((l.sqrt() + 1.0 / l.sqrt()) / 4.0).sqrt())
            .fold(0.0, f64::max),
    };
    Ok(factor * norm + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_sizes() {
        let m = build_model(&CltConfig::twisted(vec![4.0], 0.5, 1, 0)).unwrap();
        assert_eq!((m.n_indices(), m.dim()), (2, 4));
        let m = build_model(&CltConfig::twisted(vec![4.0], 0.5, 10, 0)).unwrap();
        assert_eq!(m.dim(), 1 << 20);
        assert!(m.eps().is_mirror());
        let t = build_model(&CltConfig::tracial(1, 0.5, 3, 0)).unwrap();
        assert_eq!(t.dim(), 8);
    }

    #[test]
    fn config_validation() {
        assert!(CltConfig::tracial(1, 2.0, 3, 0).validate().is_err());
        assert!(CltConfig::twisted(vec![0.5], 0.0, 3, 0).validate().is_err());
        assert!(matches!(
            CltConfig::twisted(vec![4.0], 0.0, 40, 0).validate(),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn small_oracle_cases() {
        let m = build_model(&CltConfig::tracial(1, 0.5, 1, 0)).unwrap();
        assert_eq!(tracial_fourth_moment_oracle(&m).unwrap(), 1.0);
        let m = build_model(&CltConfig::tracial(1, 1.0, 2, 0)).unwrap();
        assert!((tracial_fourth_moment_oracle(&m).unwrap() - 2.0).abs() < 1e-15);
        let tw = build_model(&CltConfig::twisted(vec![4.0], 0.5, 2, 0)).unwrap();
        assert!(matches!(tracial_fourth_moment_oracle(&tw), Err(Error::Mode(_))));
    }

    #[test]
    fn tracial_limit_is_the_gaussian_moment() {
        let cfg = CltConfig::tracial(1, 0.5, 4, 0);
        let g4 = limit_moment(&cfg, &[SumSymbol::G(1); 4]).unwrap();
        assert!((g4.re - 2.5).abs() < 1e-14);
    }

    #[test]
    fn twisted_limit_of_s_word() {
        let cfg = CltConfig::twisted(vec![4.0], 0.3, 4, 0);
        let w = [SumSymbol::S(1), SumSymbol::SStar(1), SumSymbol::S(1), SumSymbol::SStar(1)];
        let v = limit_moment(&cfg, &w).unwrap();
        // μ⁴ = λ, pairings (12)(34) and (14)(23): μ^4 + 1 with μ² per s s* pair
        let mu2 = 2.0;
        assert!((v.re - (mu2 * mu2 + 1.0)).abs() < 1e-13, "{v}");
    }

    #[test]
    fn clip_and_tail() {
        let m = EmpiricalSpectralMeasure {
            atoms: vec![(-3.0, 0.25), (0.5, 0.5), (2.0, 0.25)],
        };
        assert_eq!(tail_mass(&m, 0.0), 1.0);
        assert_eq!(tail_mass(&m, 2.0), 0.5);
        assert_eq!(tail_mass(&m, 3.5), 0.0);
        assert_eq!(clip(1.0)(0.5), 0.5);
        assert_eq!(clip(1.0)(-1.0), 0.0);
    }
}
