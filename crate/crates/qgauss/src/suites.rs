//! Dispatch from a validated config to the experiment suites.

use std::time::SystemTime;

use num_complex::Complex64;
use qgauss_core::arakiwoods::{inner_convergence, sigma_bound_limit, sigma_bound_norm, SpectralData};
use qgauss_core::babyfock::{Family, ResidualReport, SpinModel};
use qgauss_core::clt::{
    build_model, convergence_report, default_truncation, tail_mass, truncate_variable,
    truncation_modular_covariance, CltConfig, SumSymbol,
};
use qgauss_core::modular::verify_modular;
use qgauss_core::qmoments::{moment_row, CircularParams};
use qgauss_core::rng::{mirror_signs, site_signs, CounterRng, STREAM_SAMPLING};
use qgauss_core::IDENTITY_TOL;

use crate::config::{Command, ExperimentConfig};
use crate::error::{config, Result};
use crate::report::{Check, Header, Report, Summary, Table, SEED_DERIVATION};

/// Tolerance for the truncation covariance residual.
pub const COVARIANCE_TOL: f64 = 1e-10;

/// Runs the suite named by `cfg` and assembles its report.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let cfg = cfg.clone().validate()?;
    let (rows, checks) = match cfg.command() {
        Command::Relations => relations(&cfg)?,
        Command::Modular => modular(&cfg)?,
        Command::Moments => moments(&cfg)?,
        Command::Clt => clt(&cfg)?,
        Command::Truncate => truncate(&cfg)?,
        Command::Discretize => discretize(&cfg)?,
    };
    Ok(Report {
        header: Header {
            config: cfg,
            version: crate::report::VERSION,
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            seed_derivation: SEED_DERIVATION,
        },
        rows,
        summary: Summary::new(checks),
    })
}

type Suite = (Table, Vec<Check>);

/// Spin model on `n` sites: twisted with mirror-closed signs when `lambda`
/// is set, otherwise untwisted over `n·k` indices.
pub fn spin_model(cfg: &ExperimentConfig) -> Result<SpinModel> {
    let n = cfg.n.unwrap_or(1);
    Ok(match &cfg.lambda {
        Some(l) => SpinModel::twisted(mirror_signs(n, cfg.k, cfg.q, cfg.seed)?, l)?,
        None => SpinModel::untwisted(site_signs(n * cfg.k, cfg.q, cfg.seed)?)?,
    })
}

fn residual_table(reports: &[ResidualReport]) -> Table {
    let mut t = Table::new(&["identity", "max_residual", "dim", "params"]);
    for r in reports.iter().flat_map(|r| &r.rows) {
        t.push(vec![
            r.identity.as_str().into(),
            r.max_residual.into(),
            r.dim.into(),
            r.params.as_str().into(),
        ]);
    }
    t
}

fn relations(cfg: &ExperimentConfig) -> Result<Suite> {
    let model = spin_model(cfg)?;
    let report = model.verify_relations()?;
    let mut checks = vec![Check::at_most("max residual", report.max_residual(), IDENTITY_TOL)];
    let mut rows = residual_table(std::slice::from_ref(&report));
    let len = model.n_indices();
    for (family, name) in [(Family::Left, "left"), (Family::Right, "right")] {
        let rank = model.cyclic_rank(len, family)?;
        let missing = (model.dim() - rank) as f64;
        rows.push(vec![
            format!("dim - cyclic rank ({name} generators)").into(),
            missing.into(),
            model.dim().into(),
            model.describe().into(),
        ]);
        checks.push(Check::at_most(format!("vacuum is cyclic for the {name} generators"), missing, 0.0));
    }
    Ok((rows, checks))
}

fn modular(cfg: &ExperimentConfig) -> Result<Suite> {
    let report = verify_modular(&spin_model(cfg)?)?;
    let checks = vec![Check::at_most("max residual", report.max_residual(), IDENTITY_TOL)];
    Ok((residual_table(&[report]), checks))
}

fn moments(cfg: &ExperimentConfig) -> Result<Suite> {
    let params = CircularParams::new(cfg.q, cfg.mu.clone().expect("filled by validate"))?;
    let mut t = Table::new(&["word", "q", "mu", "value_re", "value_im"]);
    for w in cfg.parsed_words()? {
        let row = moment_row(&w.star_word()?, &params)?;
        let mu: Vec<String> = row.mu.iter().map(|m| crate::report::fmt17(*m)).collect();
        t.push(vec![
            row.word.into(),
            row.q.into(),
            mu.join(" ").into(),
            row.value_re.into(),
            row.value_im.into(),
        ]);
    }
    Ok((t, Vec::new()))
}

fn clt_base(cfg: &ExperimentConfig, n: usize) -> CltConfig {
    match &cfg.lambda {
        Some(l) => CltConfig::twisted(l.clone(), cfg.q, n, cfg.seed),
        None => CltConfig::tracial(cfg.k, cfg.q, n, cfg.seed),
    }
}

fn clt(cfg: &ExperimentConfig) -> Result<Suite> {
    let ns = cfg.n_range.clone().expect("filled by validate");
    let words: Vec<Vec<SumSymbol>> = cfg
        .parsed_words()?
        .iter()
        .map(|w| w.sum_symbols())
        .collect::<Result<_>>()?;
    let slack = cfg.slack.expect("filled by validate");
    let seeds = cfg.seeds.clone().expect("filled by validate");
    let rep = convergence_report(&clt_base(cfg, ns[0]), &ns, &words, &seeds, slack)?;
    let mut t = Table::new(&["n", "word", "value_re", "value_im", "limit_re", "limit_im", "error"]);
    for r in &rep.rows {
        t.push(vec![
            r.n.into(),
            r.word.as_str().into(),
            r.value_re.into(),
            r.value_im.into(),
            r.limit_re.into(),
            r.limit_im.into(),
            r.error.into(),
        ]);
    }
    let checks = words
        .iter()
        .map(|w| {
            let name = qgauss_core::clt::format_word(w);
            let errs: Vec<f64> = rep.rows.iter().filter(|r| r.word == name).map(|r| r.error).collect();
            let growth = errs.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
            Check::at_most(format!("error growth over n for {name}"), growth, slack)
        })
        .collect();
    Ok((t, checks))
}

fn truncate(cfg: &ExperimentConfig) -> Result<Suite> {
    let ns = cfg.n_range.clone().expect("filled by validate");
    let t_mod = cfg.t.expect("filled by validate");
    let c = match cfg.c {
        Some(c) => c,
        None => default_truncation(&clt_base(cfg, ns[0]))?,
    };
    let symbols: Vec<SumSymbol> = cfg
        .parsed_words()?
        .iter()
        .map(|w| w.sum_symbols().map(|s| s[0]))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "n",
        "variable",
        "c",
        "norm",
        "spectral_radius",
        "tail_mass",
        "moment4",
        "truncated_moment4",
        "modular_residual",
    ]);
    let mut checks = Vec::new();
    let mut max_norm: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    for &sym in &symbols {
        let SumSymbol::G(j) = sym else {
            return Err(config(format!("truncate needs g letters, got {sym}")));
        };
        let mut tails = Vec::new();
        for &n in &ns {
            let model = build_model(&clt_base(cfg, n))?;
            let tr = truncate_variable(&model, sym, c)?;
            let tail = tail_mass(tr.measure(), c);
            tails.push(tail);
            max_norm = max_norm.max(tr.norm());
            let residual = if cfg.twisted() {
                let r = truncation_modular_covariance(&model, j, t_mod, c)?;
                max_residual = max_residual.max(r);
                r.into()
            } else {
                crate::report::Cell::Empty
            };
            table.push(vec![
                n.into(),
                sym.to_string().into(),
                c.into(),
                tr.norm().into(),
                tr.original.spectral_radius().into(),
                tail.into(),
                tr.original.measure.moment(4).into(),
                tr.moment(4).into(),
                residual,
            ]);
        }
        let growth = tails.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("tail mass non-increasing in n for {sym}"), growth, 0.0));
    }
    checks.insert(0, Check::at_most("truncated norm at most C", max_norm, c));
    if cfg.twisted() {
        checks.push(Check::at_most("truncation commutes with the modular group", max_residual, COVARIANCE_TOL));
    }
    Ok((table, checks))
}

/// Two unit vectors in `C^d` with uniform coordinates before normalization.
pub fn random_pair(d: usize, seed: u64) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut rng = CounterRng::new(seed, STREAM_SAMPLING, 0);
    let mut draw = || {
        let v: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / norm).collect::<Vec<_>>()
    };
    let xi = draw();
    (xi, draw())
}

fn discretize(cfg: &ExperimentConfig) -> Result<Suite> {
    let spectrum = cfg.spectrum.clone().expect("filled by validate");
    let r = cfg.r.expect("filled by validate");
    let ns: Vec<u32> = cfg
        .n_range
        .as_ref()
        .expect("filled by validate")
        .iter()
        .map(|&n| u32::try_from(n).map_err(|_| config(format!("level {n} is too large"))))
        .collect::<Result<_>>()?;
    let k_bound = spectrum.iter().map(|&l| l.max(1.0 / l)).fold(1.0, f64::max);
    let spec = SpectralData::diagonal(spectrum)?;
    let (xi, eta) = random_pair(spec.dim(), cfg.seed);
    let rows = inner_convergence(&xi, &eta, &spec, &ns)?;
    let limit = sigma_bound_limit(&spec, &xi, r, k_bound)?;
    let mut t = Table::new(&[
        "n",
        "inner_re",
        "inner_im",
        "limit_re",
        "limit_im",
        "error",
        "bound",
        "sigma_norm",
        "sigma_limit",
    ]);
    let mut checks = Vec::new();
    let mut last_sigma = None;
    for row in rows {
        let bound = 3.0 * 0.5f64.powi(row.n as i32);
        let sigma = sigma_bound_norm(&spec, &xi, r, row.n, k_bound)?;
        last_sigma = Some((row.n, sigma));
        if f64::from(row.n) >= k_bound.floor() {
            checks.push(Check::at_most(format!("inner product error at n={}", row.n), row.error, bound));
        }
        t.push(vec![
            (row.n as usize).into(),
            row.value_re.into(),
            row.value_im.into(),
            row.limit_re.into(),
            row.limit_im.into(),
            row.error.into(),
            bound.into(),
            sigma.into(),
            limit.into(),
        ]);
    }
    if let Some((n, sigma)) = last_sigma {
        let rel = (sigma - limit).abs() / limit;
        checks.push(Check::at_most(format!("sigma bound relative error at n={n}"), rel, 0.02));
    }
    Ok((t, checks))
}
