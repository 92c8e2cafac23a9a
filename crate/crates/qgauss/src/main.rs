use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qgauss::{parse_config_unvalidated, run, Command, ExperimentConfig, Format};

/// Runs one experiment suite and writes its report.
///
/// Exit status: 0 when every check passes, 2 when a check fails, 1 on usage,
/// config or model errors.
#[derive(Parser, Debug)]
#[command(name = "qgauss", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; rayon's default when absent.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated `λ_1,...,λ_k`.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Comma-separated site counts or levels.
    #[arg(long, value_delimiter = ',')]
    n_range: Option<Vec<usize>>,
    /// A word in the letter grammar; repeatable.
    #[arg(long = "word")]
    words: Vec<String>,
    /// Truncation level.
    #[arg(long)]
    c: Option<f64>,
}

impl Cli {
    fn config(&self) -> Result<ExperimentConfig, String> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?,
            None => "{}".to_string(),
        };
        let mut cfg = parse_config_unvalidated(&text, Some(self.command)).map_err(|e| e.to_string())?;
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(n) = self.n {
            cfg.n = Some(n);
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(l) = &self.lambda {
            cfg.lambda = Some(l.clone());
        }
        if let Some(r) = &self.n_range {
            cfg.n_range = Some(r.clone());
        }
        if !self.words.is_empty() {
            cfg.words = self.words.clone();
        }
        if let Some(c) = self.c {
            cfg.c = Some(c);
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(f) = self.format {
            cfg.format = Some(f);
        }
        cfg.validate().map_err(|e| e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qgauss: {e}");
            return ExitCode::from(1);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("qgauss: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    let report = match pool.install(|| run(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("qgauss: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match cfg.format.unwrap_or_default() {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    let written = match &cfg.out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("qgauss: {e}");
        return ExitCode::from(1);
    }
    for c in report.summary.checks.iter().filter(|c| !c.passed) {
        eprintln!("qgauss: check failed: {} ({:e} > {:e})", c.name, c.value, c.tolerance);
    }
    if report.summary.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
