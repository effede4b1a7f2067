//! Maximization of the PRD over the code rate `R` and the MAP `p`, for both
//! the Monte Carlo estimate and the analytic surrogate, and parameter
//! sweeps built on them.

mod nelder_mead;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{dm_tilde, AnalyticParams, AnalyticResult, AreaSource, CellOptions};
use crate::config::{SearchBox, SimConfig};
use crate::error::{Error, Result};
use crate::protocol::{estimate_many, CombiningMode, PrdEstimate, Simulator};

pub use nelder_mead::{maximize as nelder_mead, Simplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveKind {
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "ANALYTIC")]
    Analytic,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Mc => "MC",
            ObjectiveKind::Analytic => "ANALYTIC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub rate: f64,
    pub p: f64,
    pub value: f64,
    /// Standard error of `value`; zero for the analytic objective.
    pub stderr: f64,
    /// Trials behind `value`; zero for the analytic objective.
    pub trials: u64,
    pub kind: ObjectiveKind,
    /// Objective evaluations (analytic) or trial evaluations (MC).
    pub evaluations: u64,
    pub converged: bool,
    /// Best coarse-grid point `(R, p, value)`.
    pub grid_best: (f64, f64, f64),
    pub diagnostics: Vec<String>,
}

/// Integration settings used by searches: [`CellOptions::coarse`] when the
/// recursion needs numeric areas, the defaults otherwise.
pub fn search_cell_options(m: usize, source: AreaSource) -> CellOptions {
    if m >= 3 || (m == 2 && source == AreaSource::Numeric) {
        CellOptions::coarse()
    } else {
        CellOptions::default()
    }
}

/// Analytic surrogate at `(R, p)`.
pub fn analytic_objective(
    lambda: f64,
    alpha: f64,
    m: usize,
    mode: CombiningMode,
    source: AreaSource,
    rate: f64,
    p: f64,
    cell: &CellOptions,
) -> Result<AnalyticResult> {
    let params = AnalyticParams::new(lambda, p, alpha, rate)?;
    dm_tilde(&params, m, mode, source, cell)
}

/// Grid search over `search` followed by a Nelder–Mead refinement in
/// `(R, ln p)` from the best grid point, to `1e-6` relative on the
/// objective. Areas that need numeric integration use `CellOptions::coarse`
/// on the grid and `cell` in the refinement; every evaluation reuses the
/// same integration samples, so the objective is deterministic.
#[allow(clippy::too_many_arguments)]
pub fn maximize_analytic(
    lambda: f64,
    alpha: f64,
    m: usize,
    mode: CombiningMode,
    source: AreaSource,
    search: &SearchBox,
    cell: &CellOptions,
) -> Result<OptimizationResult> {
    mode.check_diversity(m)?;
    AnalyticParams::new(lambda, 0.5, alpha, 1.0)?;
    let numeric = m >= 3 || (m == 2 && source == AreaSource::Numeric);
    let grid_cell = if numeric { CellOptions::coarse() } else { *cell };
    // numeric areas cost up to seconds per point, so their grid is thinned
    let (r_stride, p_stride) = if numeric { (2, 4) } else { (1, 1) };
    let maps: Vec<f64> = search.maps().into_iter().step_by(p_stride).collect();
    let rates: Vec<f64> = search.rates().into_iter().step_by(r_stride).collect();
    let points: Vec<(f64, f64)> = rates
        .iter()
        .flat_map(|&r| maps.iter().map(move |&p| (r, p)))
        .collect();
    let values: Vec<f64> = points
        .par_iter()
        .map(|&(r, p)| analytic_objective(lambda, alpha, m, mode, source, r, p, &grid_cell).map(|a| a.prd))
        .collect::<Result<_>>()?;
    let (best_idx, &best) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::FlatObjective)?;
    if !(best > 0.0) {
        return Err(Error::FlatObjective);
    }
    let (r0, p0) = points[best_idx];
    let ln_step = p_stride as f64
        * if search.p_points > 1 {
            (search.p_max / search.p_min).ln() / (search.p_points - 1) as f64
        } else {
            0.5
        };
    let objective = |x: &[f64]| -> f64 {
        let (r, p) = (x[0], x[1].exp());
        if !(r > 0.0 && p > 0.0 && p < 1.0) {
            return f64::NEG_INFINITY;
        }
        analytic_objective(lambda, alpha, m, mode, source, r, p, cell)
            .map(|a| a.prd)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let simplex = nelder_mead(objective, &[r0, p0.ln()], &[0.5 * r_stride as f64 * search.r_step, 0.5 * ln_step], 1e-6, 1e-5, 2000);
    let mut diagnostics = vec![format!(
        "grid {}x{}, best ({r0:.4}, {p0:.5}) = {best:.6e}; simplex {} iterations",
        rates.len(),
        maps.len(),
        simplex.iterations
    )];
    let (mut rate, mut p, mut value) = (simplex.x[0], simplex.x[1].exp(), simplex.value);
    if !(value >= best) {
        // only possible when the grid used coarser integration settings
        let v0 = objective(&[r0, p0.ln()]);
        diagnostics.push(format!("refinement fell below the grid incumbent; keeping ({r0}, {p0})"));
        (rate, p, value) = (r0, p0, v0);
    }
    if !simplex.converged {
        diagnostics.push("simplex did not meet the tolerance".into());
    }
    Ok(OptimizationResult {
        rate,
        p,
        value,
        stderr: 0.0,
        trials: 0,
        kind: ObjectiveKind::Analytic,
        evaluations: (points.len() + simplex.evaluations) as u64,
        converged: simplex.converged,
        grid_best: (r0, p0, best),
        diagnostics,
    })
}

fn key(r: f64, p: f64) -> (u64, u64) {
    (r.to_bits(), p.to_bits())
}

/// Monte Carlo maximization of the PRD of `cfg`'s mode and diversity.
///
/// Half of `cfg.budget` (counted in trial evaluations) goes to the
/// `cfg.mc_search` grid, evaluated with common random numbers. The rest
/// drives a compass search around the incumbent with twice the grid trials
/// per point, again with common random numbers; `seed_point` is compared at
/// that trial count in the first round. The reported optimum is the best of
/// all refinement evaluations, so it is never worse than `seed_point` on the
/// same trials.
pub fn maximize_mc(cfg: &SimConfig, seed_point: Option<(f64, f64)>) -> Result<OptimizationResult> {
    cfg.validate()?;
    let search = &cfg.mc_search;
    let points: Vec<(f64, f64)> = search
        .rates()
        .into_iter()
        .flat_map(|r| search.maps().into_iter().map(move |p| (r, p)))
        .collect();
    let g = points.len() as u64;
    let n_grid = cfg.budget / (2 * g);
    if n_grid == 0 {
        return Err(Error::Budget {
            budget: cfg.budget,
            minimum: 2 * g,
        });
    }
    let sims = points
        .iter()
        .map(|&(r, p)| Simulator::new(&cfg.with_point(r, p)))
        .collect::<Result<Vec<_>>>()?;
    let grid = estimate_many(&sims, n_grid)?;
    let mut used = n_grid * g;
    let (best_idx, best) = grid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.prd.total_cmp(&b.1.prd))
        .ok_or(Error::FlatObjective)?;
    let grid_best = (points[best_idx].0, points[best_idx].1, best.prd);

    let n_ref = 2 * n_grid;
    let mut cache: HashMap<(u64, u64), ((f64, f64), PrdEstimate)> = HashMap::new();
    let mut incumbent = points[best_idx];
    let mut dr = search.r_step;
    let mut dlp = if search.p_points > 1 {
        (search.p_max / search.p_min).ln() / (search.p_points - 1) as f64
    } else {
        0.5
    };
    let min_dr = search.r_step / 8.0;
    let mut diagnostics = vec![format!(
        "grid {}x{} at {n_grid} trials, best ({:.4}, {:.5}) = {:.6e}",
        search.rates().len(),
        search.p_points,
        grid_best.0,
        grid_best.1,
        grid_best.2
    )];
    let mut pending: Vec<(f64, f64)> = vec![incumbent];
    if let Some(s) = seed_point {
        pending.push(s);
    }
    let mut converged = false;
    loop {
        let (r, p) = incumbent;
        for cand in [
            (r + dr, p),
            (r - dr, p),
            (r, p * dlp.exp()),
            (r, p * (-dlp).exp()),
        ] {
            if cand.0 > 0.0 && cand.1 > 0.0 && cand.1 < 1.0 {
                pending.push(cand);
            }
        }
        pending.retain(|c| !cache.contains_key(&key(c.0, c.1)));
        pending.dedup_by(|a, b| key(a.0, a.1) == key(b.0, b.1));
        let cost = n_ref * pending.len() as u64;
        if used + cost > cfg.budget && !cache.is_empty() {
            diagnostics.push(format!("budget exhausted after {used} trial evaluations"));
            break;
        }
        if !pending.is_empty() {
            let sims = pending
                .iter()
                .map(|&(r, p)| Simulator::new(&cfg.with_point(r, p)))
                .collect::<Result<Vec<_>>>()?;
            let est = estimate_many(&sims, n_ref)?;
            used += cost;
            for (c, e) in pending.drain(..).zip(est) {
                cache.insert(key(c.0, c.1), (c, e));
            }
        }
        let (best_point, _) = cache
            .values()
            .max_by(|a, b| a.1.prd.total_cmp(&b.1.prd).then(b.0 .0.total_cmp(&a.0 .0)).then(b.0 .1.total_cmp(&a.0 .1)))
            .map(|(c, e)| (*c, e.prd))
            .unwrap_or((incumbent, f64::NEG_INFINITY));
        if key(best_point.0, best_point.1) != key(incumbent.0, incumbent.1) {
            incumbent = best_point;
            continue;
        }
        dr *= 0.5;
        dlp *= 0.5;
        if dr < min_dr {
            converged = true;
            break;
        }
    }
    let (point, est) = cache
        .values()
        .max_by(|a, b| a.1.prd.total_cmp(&b.1.prd).then(b.0 .0.total_cmp(&a.0 .0)).then(b.0 .1.total_cmp(&a.0 .1)))
        .cloned()
        .ok_or(Error::FlatObjective)?;
    if !(est.prd > 0.0) {
        return Err(Error::FlatObjective);
    }
    diagnostics.push(format!(
        "refined at {n_ref} trials per point over {} points",
        cache.len()
    ));
    Ok(OptimizationResult {
        rate: point.0,
        p: point.1,
        value: est.prd,
        stderr: est.prd_stderr,
        trials: est.trials,
        kind: ObjectiveKind::Mc,
        evaluations: used,
        converged,
        grid_best,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "p")]
    P,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "M")]
    M,
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::P => vec![0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2],
            SweepAxis::Alpha => vec![2.5, 3.0, 3.5, 4.0],
            SweepAxis::M => vec![1.0, 2.0, 3.0],
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::P => "p",
            SweepAxis::Alpha => "alpha",
            SweepAxis::M => "M",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "p" | "P" => Ok(SweepAxis::P),
            "alpha" | "ALPHA" => Ok(SweepAxis::Alpha),
            "M" | "m" => Ok(SweepAxis::M),
            other => Err(Error::Key {
                key: "axis".into(),
                message: format!("expected p, alpha or M (got `{other}`)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub mode: CombiningMode,
    pub m: usize,
    pub alpha: f64,
    pub rate: f64,
    pub p: f64,
    /// Whether `(rate, p)` was optimized rather than fixed.
    pub optimized: bool,
    pub mc: PrdEstimate,
    pub analytic: AnalyticResult,
}

/// One row per `(value, mode)`, values outermost.
///
/// The `p` axis evaluates every mode at `(cfg.rate, p)`; all points share
/// common random numbers. The `alpha` and `M` axes optimize `(R, p)` per
/// point: analytically, then by Monte Carlo seeded with the analytic
/// optimum when `cfg.mc_optimize` is set. The reported Monte Carlo
/// estimate uses `cfg.trials` trials at the final point.
pub fn sweep(axis: SweepAxis, values: &[f64], cfg: &SimConfig) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Key {
            key: "values".into(),
            message: "a sweep needs at least one value".into(),
        });
    }
    let coop_m = cfg.diversity.max(2);
    let mut jobs: Vec<(f64, SimConfig)> = Vec::new();
    for &v in values {
        for &mode in &cfg.modes {
            let mut c = cfg.clone();
            match axis {
                SweepAxis::P => c.p = v,
                SweepAxis::Alpha => c.alpha = v,
                SweepAxis::M => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::Key {
                            key: "values".into(),
                            message: format!("diversity orders must be positive integers (got {v})"),
                        });
                    }
                    let m = v as usize;
                    if (m == 1) != (mode == CombiningMode::Nc) {
                        continue;
                    }
                    c.diversity = m;
                }
            }
            c.mode = mode;
            if axis != SweepAxis::M {
                c.diversity = if mode == CombiningMode::Nc { 1 } else { coop_m };
            }
            c.validate()?;
            jobs.push((v, c));
        }
    }
    let mut rows = Vec::with_capacity(jobs.len());
    let mut finals = Vec::with_capacity(jobs.len());
    for (v, c) in &jobs {
        let source = c.area_source.unwrap_or(AreaSource::default_for(c.diversity));
        let cell = search_cell_options(c.diversity, source);
        let (rate, p, optimized) = if axis == SweepAxis::P {
            (c.rate, c.p, false)
        } else {
            let a = maximize_analytic(c.lambda, c.alpha, c.diversity, c.mode, source, &c.search, &cell)?;
            if c.mc_optimize {
                let mc = maximize_mc(c, Some((a.rate, a.p)))?;
                (mc.rate, mc.p, true)
            } else {
                (a.rate, a.p, true)
            }
        };
        let analytic = analytic_objective(c.lambda, c.alpha, c.diversity, c.mode, source, rate, p, &cell)?;
        finals.push(c.with_point(rate, p));
        rows.push((*v, c.mode, c.diversity, c.alpha, rate, p, optimized, analytic));
    }
    let sims = finals.iter().map(Simulator::new).collect::<Result<Vec<_>>>()?;
    let estimates = estimate_many(&sims, cfg.trials)?;
    Ok(rows
        .into_iter()
        .zip(estimates)
        .map(|((value, mode, m, alpha, rate, p, optimized, analytic), mc)| SweepRow {
            axis,
            value,
            mode,
            m,
            alpha,
            rate,
            p,
            optimized,
            mc,
            analytic,
        })
        .collect())
}
