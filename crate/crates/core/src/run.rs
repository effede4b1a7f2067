//! Command-line experiments. Every run writes `<command>.csv` and
//! `<command>.manifest.json` into the output directory; the manifest holds
//! the full effective config, so passing it back as the config file
//! reproduces the CSV byte for byte.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{dm_tilde, AnalyticParams, AnalyticResult, AreaSource};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::optimizer::{maximize_analytic, maximize_mc, search_cell_options, sweep, SweepAxis};
use crate::protocol::{contention_statistics, estimate_many, CombiningMode, PrdEstimate, Simulator};

pub const CSV_HEADER: &str = "experiment,mode,M,lambda,p,alpha,R,d_prev,d_cur,prd,prd_stderr,trials,seed";

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "COOP_RELAY_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Monte Carlo PRD at the configured point.
    Sim,
    /// Analytic progress recursion and surrogate PRD.
    Analytic,
    /// Analytic and Monte Carlo maximization over `(R, p)`.
    Optimize,
    /// Sweep over `p`, `alpha` or `M`.
    Sweep,
    /// First-hop bit-contention statistics.
    Contention,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Sim => "sim",
            Command::Analytic => "analytic",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
            Command::Contention => "contention",
        })
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub mode: Option<String>,
    pub diversity: Option<usize>,
}

/// Reads `path` (or starts from the defaults), applies `overrides` and
/// validates the result.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<SimConfig> {
    let mut cfg = match path {
        Some(p) => SimConfig::from_path(p)?,
        None => SimConfig::default(),
    };
    let mut pairs = BTreeMap::new();
    if let Some(s) = overrides.seed {
        pairs.insert("seed".to_string(), s.to_string());
    }
    if let Some(t) = overrides.trials {
        pairs.insert("trials".to_string(), t.to_string());
    }
    if let Some(m) = &overrides.mode {
        pairs.insert("mode".to_string(), m.clone());
    }
    if let Some(m) = overrides.diversity {
        pairs.insert("M".to_string(), m.to_string());
    }
    cfg.apply(&pairs)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Exit status for an error: 2 for configuration problems, 3 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Key { .. } | Error::Configuration(_) => 2,
        _ => 3,
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub mode: CombiningMode,
    pub m: usize,
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub rate: f64,
    pub d_prev: f64,
    pub d_cur: f64,
    pub prd: f64,
    pub prd_stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl CsvRow {
    fn base(experiment: impl Into<String>, cfg: &SimConfig) -> Self {
        CsvRow {
            experiment: experiment.into(),
            mode: cfg.mode,
            m: cfg.diversity,
            lambda: cfg.lambda,
            p: cfg.p,
            alpha: cfg.alpha,
            rate: cfg.rate,
            d_prev: 0.0,
            d_cur: 0.0,
            prd: 0.0,
            prd_stderr: 0.0,
            trials: 0,
            seed: cfg.seed,
        }
    }

    fn mc(experiment: impl Into<String>, cfg: &SimConfig, e: &PrdEstimate) -> Self {
        CsvRow {
            d_prev: e.d_prev(),
            d_cur: e.d_cur(),
            prd: e.prd,
            prd_stderr: e.prd_stderr,
            trials: e.trials,
            ..CsvRow::base(experiment, cfg)
        }
    }

    fn analytic(experiment: impl Into<String>, cfg: &SimConfig, a: &AnalyticResult) -> Self {
        CsvRow {
            d_prev: a.d_prev(),
            d_cur: a.d_cur(),
            prd: a.prd,
            ..CsvRow::base(experiment, cfg)
        }
    }

    pub fn to_line(&self) -> String {
        let n = |v: f64| format!("{v:.8e}");
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.mode,
            self.m,
            n(self.lambda),
            n(self.p),
            n(self.alpha),
            n(self.rate),
            n(self.d_prev),
            n(self.d_cur),
            n(self.prd),
            n(self.prd_stderr),
            self.trials,
            self.seed
        )
    }
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    let _ = writeln!(s, "{CSV_HEADER}");
    for r in rows {
        let _ = writeln!(s, "{}", r.to_line());
    }
    s
}

/// Hex SHA-256 of `blob <len>\0<bytes>`, the git object id of `bytes` in a
/// SHA-256 repository.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Result of one experiment before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: Command,
    pub config: SimConfig,
    pub axis: Option<SweepAxis>,
    pub rows: Vec<CsvRow>,
    /// Command-specific results kept in the manifest.
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub axis: Option<SweepAxis>,
    pub seed: u64,
    pub config: SimConfig,
    pub csv_file: String,
    pub csv_hash: String,
    pub version: String,
    pub details: serde_json::Value,
}

fn area_source(cfg: &SimConfig) -> AreaSource {
    cfg.area_source.unwrap_or(AreaSource::default_for(cfg.diversity))
}

fn analytic_at(cfg: &SimConfig, rate: f64, p: f64) -> Result<AnalyticResult> {
    let params = AnalyticParams::new(cfg.lambda, p, cfg.alpha, rate)?;
    let source = area_source(cfg);
    dm_tilde(&params, cfg.diversity, cfg.mode, source, &search_cell_options(cfg.diversity, source))
}

/// Runs `command` on a validated config. `axis` selects the sweep axis and
/// defaults to `p`.
pub fn execute(command: Command, cfg: &SimConfig, axis: Option<SweepAxis>) -> Result<Report> {
    cfg.validate()?;
    let (rows, details, axis) = match command {
        Command::Sim => {
            let e = estimate_many(&[Simulator::new(cfg)?], cfg.trials)?.remove(0);
            (vec![CsvRow::mc("sim", cfg, &e)], serde_json::to_value(&e)?, None)
        }
        Command::Analytic => {
            let a = analytic_at(cfg, cfg.rate, cfg.p)?;
            (vec![CsvRow::analytic("analytic", cfg, &a)], serde_json::to_value(&a)?, None)
        }
        Command::Optimize => {
            let a = maximize_analytic(
                cfg.lambda,
                cfg.alpha,
                cfg.diversity,
                cfg.mode,
                area_source(cfg),
                &cfg.search,
                &search_cell_options(cfg.diversity, area_source(cfg)),
            )?;
            let mc = maximize_mc(cfg, Some((a.rate, a.p)))?;
            let at_a = cfg.with_point(a.rate, a.p);
            let at_mc = cfg.with_point(mc.rate, mc.p);
            let check = estimate_many(&[Simulator::new(&at_a)?, Simulator::new(&at_mc)?], cfg.trials)?;
            let rows = vec![
                CsvRow::analytic("optimize_analytic", &at_a, &analytic_at(cfg, a.rate, a.p)?),
                CsvRow {
                    prd: mc.value,
                    prd_stderr: mc.stderr,
                    trials: mc.trials,
                    ..CsvRow::base("optimize_mc", &at_mc)
                },
                CsvRow::mc("mc_at_analytic_optimum", &at_a, &check[0]),
                CsvRow::mc("mc_at_mc_optimum", &at_mc, &check[1]),
            ];
            let details = serde_json::json!({ "analytic": a, "mc": mc });
            (rows, details, None)
        }
        Command::Sweep => {
            let axis = axis.unwrap_or(SweepAxis::P);
            let values = cfg.values.clone().unwrap_or_else(|| axis.default_values());
            let table = sweep(axis, &values, cfg)?;
            let mut rows = Vec::with_capacity(2 * table.len());
            for r in &table {
                let c = SimConfig {
                    mode: r.mode,
                    diversity: r.m,
                    alpha: r.alpha,
                    ..cfg.with_point(r.rate, r.p)
                };
                rows.push(CsvRow::mc(format!("sweep_{axis}_mc"), &c, &r.mc));
                rows.push(CsvRow::analytic(format!("sweep_{axis}_analytic"), &c, &r.analytic));
            }
            (rows, serde_json::to_value(&table)?, Some(axis))
        }
        Command::Contention => {
            let s = contention_statistics(cfg)?;
            let row = CsvRow {
                d_prev: s.mean_best_progress,
                d_cur: s.mean_winner_progress,
                prd: cfg.rate * cfg.lambda * cfg.p * s.mean_winner_progress,
                prd_stderr: f64::NAN,
                trials: s.trials,
                ..CsvRow::base("contention", cfg)
            };
            (vec![row], serde_json::to_value(&s)?, None)
        }
    };
    Ok(Report {
        command,
        config: cfg.clone(),
        axis,
        rows,
        details,
    })
}

/// Writes the CSV and the manifest; returns their paths.
pub fn write_report(report: &Report, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir)?;
    let csv = render_csv(&report.rows);
    let csv_file = format!("{}.csv", report.command);
    let manifest = Manifest {
        command: report.command,
        axis: report.axis,
        seed: report.config.seed,
        config: report.config.clone(),
        csv_file: csv_file.clone(),
        csv_hash: content_hash(csv.as_bytes()),
        version: env!("CARGO_PKG_VERSION").to_string(),
        details: report.details.clone(),
    };
    let csv_path = out_dir.join(csv_file);
    let manifest_path = out_dir.join(format!("{}.manifest.json", report.command));
    std::fs::write(&csv_path, csv)?;
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok((csv_path, manifest_path))
}

/// Caps the global worker pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::Key {
        key: THREADS_ENV.into(),
        message: format!("expected a positive integer (got `{value}`)"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Configuration(format!("cannot size the thread pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_have_the_header_columns() {
        let cfg = SimConfig::default();
        let row = CsvRow::base("sim", &cfg);
        let line = row.to_line();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.starts_with("sim,NC,1,1.00000000e0,4.00000000e-2,"));
    }

    #[test]
    fn content_hash_matches_git_object_id() {
        // `git hash-object --object-format=sha256` of an empty file
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides {
            seed: Some(9),
            trials: Some(5),
            mode: Some("RC".into()),
            diversity: None,
        };
        let cfg = load_config(None, &o).unwrap();
        assert_eq!((cfg.seed, cfg.trials, cfg.mode, cfg.diversity), (9, 5, CombiningMode::Rc, 2));
        let bad = Overrides {
            mode: Some("IRC".into()),
            diversity: Some(1),
            ..Overrides::default()
        };
        let err = load_config(None, &bad).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(err.to_string().contains('M'));
    }

    #[test]
    fn manifest_reproduces_the_config() {
        let cfg = SimConfig {
            trials: 20,
            seed: 77,
            ..SimConfig::default()
        };
        let report = execute(Command::Sim, &cfg, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (_, manifest) = write_report(&report, dir.path()).unwrap();
        assert_eq!(SimConfig::from_path(&manifest).unwrap(), cfg);
    }
}
