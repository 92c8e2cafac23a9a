//! Experiment configuration: a JSON document, optionally completed by flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};
use crate::word::{parse_word, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Relations,
    Modular,
    Moments,
    Clt,
    Truncate,
    Discretize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Relations => "relations",
            Command::Modular => "modular",
            Command::Moments => "moments",
            Command::Clt => "clt",
            Command::Truncate => "truncate",
            Command::Discretize => "discretize",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

/// Parameters of one experiment. After [`parse_config`] every field the
/// command uses is filled in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "one")]
    pub k: usize,
    /// `λ_1..λ_k`; its presence selects the twisted model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// `μ_1..μ_k` for `moments`; derived from `lambda` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    /// Site count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Site counts (`clt`, `truncate`) or discretization levels (`discretize`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<Vec<usize>>,
    #[serde(default = "half")]
    pub q: f64,
    #[serde(default)]
    pub seed: u64,
    /// Sign-function seeds averaged by `clt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub words: Vec<String>,
    /// Truncation level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Modular time for the truncation covariance check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Eigenvalues of the generator `A` for `discretize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    /// Power `r` in `‖A_n^r e‖²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Allowed growth of the seed-averaged error between consecutive `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command: Some(command),
            k: 1,
            lambda: None,
            mu: None,
            n: None,
            n_range: None,
            q: 0.5,
            seed: 0,
            seeds: None,
            words: Vec::new(),
            c: None,
            t: None,
            spectrum: None,
            r: None,
            slack: None,
            out: None,
            format: None,
        }
    }

    pub fn command(&self) -> Command {
        self.command.expect("validated configs carry a command")
    }

    pub fn twisted(&self) -> bool {
        self.lambda.is_some()
    }

    /// Parsed `words`, in order.
    pub fn parsed_words(&self) -> Result<Vec<Word>> {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                parse_word(w).map_err(|e| match e {
                    CliError::Parse { pos, msg } => CliError::Parse {
                        pos: format!("words[{i}], {pos}"),
                        msg,
                    },
                    other => other,
                })
            })
            .collect()
    }

    /// Fills command defaults and checks parameter ranges.
    pub fn validate(mut self) -> Result<Self> {
        let command = self.command.ok_or_else(|| config("no command given"))?;
        if !(self.q > -1.0 && self.q < 1.0) {
            return Err(config(format!("q = {} must lie in (-1, 1)", self.q)));
        }
        if self.k == 0 {
            return Err(config("k must be at least 1"));
        }
        if let Some(l) = &self.lambda {
            if l.len() != self.k {
                return Err(config(format!("expected {} lambda values, got {}", self.k, l.len())));
            }
            if let Some(bad) = l.iter().find(|x| !(x.is_finite() && **x >= 1.0)) {
                return Err(config(format!("lambda = {bad} must be finite and at least 1")));
            }
        }
        if let Some(mu) = &self.mu {
            if mu.len() != self.k {
                return Err(config(format!("expected {} mu values, got {}", self.k, mu.len())));
            }
        }
        match command {
            Command::Relations => {
                self.n.get_or_insert(1);
            }
            Command::Modular => {
                self.n.get_or_insert(1);
                if self.lambda.is_none() {
                    return Err(config("modular needs lambda (a twisted model)"));
                }
            }
            Command::Moments => {
                if self.words.is_empty() {
                    return Err(config("moments needs at least one word"));
                }
                if self.mu.is_none() {
                    let mu = match &self.lambda {
                        Some(l) => l.iter().map(|x| x.powf(0.25)).collect(),
                        None => vec![1.0; self.k],
                    };
                    self.mu = Some(mu);
                }
            }
            Command::Clt => {
                self.n_range.get_or_insert_with(|| vec![4, 7, 10]);
                self.seeds.get_or_insert_with(|| vec![self.seed]);
                self.slack.get_or_insert(0.05);
                if self.words.is_empty() {
                    self.words = if self.twisted() {
                        vec!["s1 s1*".into(), "s1 s1* s1 s1*".into()]
                    } else {
                        vec!["g1 g1 g1 g1".into()]
                    };
                }
            }
            Command::Truncate => {
                let n = *self.n.get_or_insert(5);
                self.n_range.get_or_insert_with(|| vec![n]);
                self.t.get_or_insert(0.7);
                if self.words.is_empty() {
                    self.words = vec!["g1".into()];
                }
            }
            Command::Discretize => {
                self.spectrum.get_or_insert_with(|| vec![0.3, 1.0, 2.5]);
                self.n_range.get_or_insert_with(|| (1..=6).collect());
                self.r.get_or_insert(0.5);
            }
        }
        if self.n == Some(0) || self.n_range.iter().flatten().any(|&n| n == 0) {
            return Err(config("site counts and levels must be at least 1"));
        }
        if matches!(self.seeds.as_deref(), Some([])) {
            return Err(config("seeds must not be empty"));
        }
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return Err(config(format!("C = {c} must be positive")));
            }
        }
        if let Some(s) = &self.spectrum {
            if s.is_empty() || s.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(config("spectrum must be a non-empty list of positive numbers"));
            }
        }
        let words = self.parsed_words()?;
        if command == Command::Truncate {
            for (i, w) in words.iter().enumerate() {
                if w.letters.len() != 1 {
                    return Err(config(format!("words[{i}] must be a single g letter")));
                }
            }
        }
        Ok(self)
    }
}

/// Parses a JSON config without filling defaults. `command` fills a missing
/// `"command"` field and must agree with a present one.
pub fn parse_config_unvalidated(text: &str, command: Option<Command>) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        pos: format!("line {}, column {}", e.line(), e.column()),
        msg: e.to_string(),
    })?;
    match (cfg.command, command) {
        (None, c) => cfg.command = c,
        (Some(a), Some(b)) if a != b => {
            return Err(config(format!(
                "config is for '{}' but '{}' was requested",
                a.name(),
                b.name()
            )))
        }
        _ => {}
    }
    Ok(cfg)
}

/// [`parse_config_unvalidated`] followed by [`ExperimentConfig::validate`].
pub fn parse_config_as(text: &str, command: Option<Command>) -> Result<ExperimentConfig> {
    parse_config_unvalidated(text, command)?.validate()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_as(text, None)
}
