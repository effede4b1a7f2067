//! Decoding-cell approximation of the expected progress.
//!
//! The random SIR field seen from a transmitter at `eta` is replaced by
//! `S |v - eta|^-alpha` with `P(S >= s) = exp(-A s^delta)`. A node at `v`
//! decodes when the combined terms from the transmitters `eta_0 .. eta_{M-1}`
//! reach the mode's threshold; the expected area of that region, `|W_M|`,
//! feeds the progress recursion
//!
//! ```text
//! c_k = lambda (1 - p) / 2 * (|W_k| + d_{k-1} sqrt|W_k|)
//! d_k = (sqrt|W_k| + d_{k-1}) / 2 * (1 - (1 - exp(-c_k)) / c_k)
//! ```
//!
//! with `d_0 = 0`, and the surrogate `PRD = R lambda p (d_M - d_{M-1})`.
//! `|W_1|` is exact, `|W_2|` has closed-form lower bounds and every area can
//! be evaluated numerically by [`cell_area_numeric`].

mod cell;
mod params;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::CombiningMode;

pub use cell::{cell_area_numeric, AreaEstimate, CellOptions};
pub use params::{ccdf_s, spatial_factor, AnalyticParams};
pub(crate) use params::s_from_uniform;

/// Where `|W_k|` comes from in the progress recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AreaSource {
    /// Closed-form lower bound for `k <= 2`, numeric beyond.
    #[serde(rename = "BOUND")]
    Bound,
    /// Numeric area for every `k >= 2`.
    #[serde(rename = "NUMERIC")]
    Numeric,
}

impl AreaSource {
    /// BOUND up to two blocks, NUMERIC above.
    pub fn default_for(m: usize) -> Self {
        if m <= 2 {
            AreaSource::Bound
        } else {
            AreaSource::Numeric
        }
    }
}

impl fmt::Display for AreaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaSource::Bound => "BOUND",
            AreaSource::Numeric => "NUMERIC",
        })
    }
}

impl FromStr for AreaSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BOUND" => Ok(AreaSource::Bound),
            "NUMERIC" => Ok(AreaSource::Numeric),
            other => Err(Error::Key {
                key: "area_source".into(),
                message: format!("expected BOUND, NUMERIC or auto (got `{other}`)"),
            }),
        }
    }
}

/// `(1 - e^-c) / c`, continuous at 0.
fn shrink(c: f64) -> f64 {
    if c < 1e-8 {
        1.0 - 0.5 * c
    } else {
        -(-c).exp_m1() / c
    }
}

/// One step of the progress recursion: `d_k` from `|W_k|` and `d_{k-1}`.
pub fn progress_step(params: &AnalyticParams, area: f64, d_prev: f64) -> f64 {
    let root = area.sqrt();
    let c = 0.5 * params.lambda * (1.0 - params.p) * (area + d_prev * root);
    0.5 * (root + d_prev) * (1.0 - shrink(c))
}

/// `|W_1| = pi / (A T)`.
pub fn w1_area(params: &AnalyticParams) -> f64 {
    PI / (params.a * params.t)
}

pub fn d1_tilde(params: &AnalyticParams) -> f64 {
    progress_step(params, w1_area(params), 0.0)
}

/// `integral over R^2 of exp(-A (c1 |v|^2 + c2 |v - (d, 0)|^2)) dv`
/// `= pi / (A (c1 + c2)) * exp(-A d^2 c1 c2 / (c1 + c2))`.
pub fn gaussian_pair_integral(c1: f64, c2: f64, d: f64, a: f64) -> Result<f64> {
    let s = c1 + c2;
    if !(s > 0.0) {
        return Err(Error::param("c1 + c2", "must be positive", s));
    }
    if !(a > 0.0) {
        return Err(Error::param("A", "must be positive", a));
    }
    Ok((-a * d * d * c1 * c2 / s).exp() * PI / (a * s))
}

/// Closed-form lower bound on `|W_2|` with the first-hop relay at
/// `(d1_tilde, 0)`. IRC uses `T_bar`, RC uses `T_tilde`.
pub fn w2_lower_bound(params: &AnalyticParams, mode: CombiningMode) -> Result<f64> {
    let d = d1_tilde(params);
    w2_lower_bound_at(params, mode, d)
}

/// [`w2_lower_bound`] for an arbitrary center separation `d`.
pub fn w2_lower_bound_at(params: &AnalyticParams, mode: CombiningMode, d: f64) -> Result<f64> {
    let u = match mode {
        CombiningMode::Irc => params.t_bar,
        CombiningMode::Rc => params.t_tilde,
        CombiningMode::Nc => {
            return Err(Error::Contract("the two-block cell needs a combining mode".into()))
        }
    };
    let (a, t) = (params.a, params.t);
    let h = |c1: f64, c2: f64| gaussian_pair_integral(c1, c2, d, a);
    let bracket = 2.0 * PI / (a * t) - h(1.0, t)? + h(1.0, u)? - h(t, u)?;
    Ok(bracket.max(0.0))
}

/// Progress approximations and the surrogate PRD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticResult {
    /// `d_1 .. d_M`.
    pub progress: Vec<f64>,
    /// `|W_1| .. |W_M|`.
    pub areas: Vec<f64>,
    /// Standard error of each area; zero for closed forms.
    pub area_stderr: Vec<f64>,
    pub prd: f64,
}

impl AnalyticResult {
    pub fn d_prev(&self) -> f64 {
        let m = self.progress.len();
        if m < 2 {
            0.0
        } else {
            self.progress[m - 2]
        }
    }

    pub fn d_cur(&self) -> f64 {
        *self.progress.last().unwrap_or(&0.0)
    }
}

/// Runs the progress recursion up to `m` blocks.
pub fn dm_tilde(
    params: &AnalyticParams,
    m: usize,
    mode: CombiningMode,
    source: AreaSource,
    options: &CellOptions,
) -> Result<AnalyticResult> {
    if m == 0 {
        return Err(Error::param("M", "must be at least 1", 0.0));
    }
    mode.check_diversity(m)?;
    let mut progress = Vec::with_capacity(m);
    let mut areas = Vec::with_capacity(m);
    let mut area_stderr = Vec::with_capacity(m);
    let mut d_prev = 0.0;
    for k in 1..=m {
        let (area, err) = match (k, source) {
            (1, _) => (w1_area(params), 0.0),
            (2, AreaSource::Bound) => (w2_lower_bound_at(params, mode, d_prev)?, 0.0),
            _ => {
                let mut centers = vec![0.0];
                centers.extend_from_slice(&progress);
                let est = cell_area_numeric(params, mode, &centers, options)?;
                (est.value, est.stderr)
            }
        };
        let d = progress_step(params, area, d_prev);
        areas.push(area);
        area_stderr.push(err);
        progress.push(d);
        d_prev = d;
    }
    let prd = params.rate * params.lambda * params.p * (progress[m - 1] - if m > 1 { progress[m - 2] } else { 0.0 });
    Ok(AnalyticResult {
        progress,
        areas,
        area_stderr,
        prd,
    })
}

/// `R lambda p (d_M - d_{M-1})`.
pub fn prd_tilde(
    params: &AnalyticParams,
    m: usize,
    mode: CombiningMode,
    source: AreaSource,
    options: &CellOptions,
) -> Result<f64> {
    Ok(dm_tilde(params, m, mode, source, options)?.prd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> AnalyticParams {
        AnalyticParams::new(1.0, 0.05, 4.0, 3.0).unwrap()
    }

    #[test]
    fn first_cell_worked_example() {
        let p = params();
        // A = 0.05 pi / 2, T = 7^(1/2)
        let w1 = PI / (0.05 * PI / 2.0 * 7f64.sqrt());
        assert!((w1_area(&p) - w1).abs() < 1e-12);
        assert!((w1_area(&p) - 15.12).abs() < 0.005);
        let c1 = 0.95 * w1 / 2.0;
        let d1 = w1.sqrt() / 2.0 * (1.0 - (1.0 - (-c1).exp()) / c1);
        assert!((d1_tilde(&p) - d1).abs() < 1e-12);
        assert!((d1_tilde(&p) - 1.674).abs() < 0.0005, "{}", d1_tilde(&p));
    }

    #[test]
    fn progress_step_limits() {
        let p = params();
        // no receivers: c -> 0, progress -> 0
        let tiny = AnalyticParams::new(1e-12, 0.05, 4.0, 3.0).unwrap();
        assert!(progress_step(&tiny, 1.0, 0.0) < 1e-12);
        // huge c: factor -> 1
        let d = progress_step(&p, 1e6, 0.0);
        assert!((d - 500.0).abs() < 1e-2);
        assert_eq!(shrink(0.0), 1.0);
        assert!((shrink(1e-9) - (1.0 - 5e-10)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_pair_special_cases() {
        let a = 0.3;
        assert!((gaussian_pair_integral(2.0, 0.0, 5.0, a).unwrap() - PI / (a * 2.0)).abs() < 1e-15);
        let x = gaussian_pair_integral(1.3, 0.4, 2.2, a).unwrap();
        let y = gaussian_pair_integral(0.4, 1.3, 2.2, a).unwrap();
        assert_eq!(x, y);
        assert!(gaussian_pair_integral(0.0, 0.0, 1.0, a).is_err());
        assert!(gaussian_pair_integral(-1.0, 0.5, 1.0, a).is_err());
    }

    #[test]
    fn w2_bound_at_zero_offset() {
        let p = params();
        let (a, t, u) = (p.a, p.t, p.t_bar);
        let expected = PI / a * (2.0 / t - 1.0 / (1.0 + t) + 1.0 / (1.0 + u) - 1.0 / (t + u));
        let got = w2_lower_bound_at(&p, CombiningMode::Irc, 0.0).unwrap();
        assert!((got - expected).abs() < 1e-12 * expected);
        assert!(w2_lower_bound(&p, CombiningMode::Nc).is_err());
    }

    #[test]
    fn irc_bound_exceeds_rc_bound_above_one_bit() {
        for rate in [1.25, 2.0, 3.0, 4.5, 6.0] {
            for map in [0.01, 0.05, 0.2] {
                for alpha in [2.5, 3.0, 4.0] {
                    let p = AnalyticParams::new(1.0, map, alpha, rate).unwrap();
                    let i = w2_lower_bound(&p, CombiningMode::Irc).unwrap();
                    let r = w2_lower_bound(&p, CombiningMode::Rc).unwrap();
                    assert!(i >= r, "R={rate} p={map} a={alpha}: {i} < {r}");
                }
            }
        }
    }

    #[test]
    fn m1_recursion_is_first_cell() {
        let p = params();
        let r = dm_tilde(&p, 1, CombiningMode::Nc, AreaSource::Bound, &CellOptions::default()).unwrap();
        assert_eq!(r.progress, vec![d1_tilde(&p)]);
        assert_eq!(r.prd, 3.0 * 0.05 * d1_tilde(&p));
        assert!(dm_tilde(&p, 1, CombiningMode::Irc, AreaSource::Bound, &CellOptions::default()).is_err());
    }

    #[test]
    fn closed_form_branch_scales_with_lambda() {
        for mode in [CombiningMode::Irc, CombiningMode::Rc] {
            let p = AnalyticParams::new(1.0, 0.04, 3.0, 3.0).unwrap();
            let q = p.with_lambda(4.0).unwrap();
            let o = CellOptions::default();
            let a = dm_tilde(&p, 2, mode, AreaSource::Bound, &o).unwrap();
            let b = dm_tilde(&q, 2, mode, AreaSource::Bound, &o).unwrap();
            for k in 0..2 {
                assert!((b.progress[k] * 2.0 - a.progress[k]).abs() < 1e-12 * a.progress[k]);
            }
            assert!((b.prd / a.prd - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_hop_progress_exceeds_first() {
        for rate in [1.0, 2.0, 3.0, 5.0] {
            for map in [0.01, 0.04, 0.1, 0.3] {
                for alpha in [2.5, 3.0, 4.0] {
                    let p = AnalyticParams::new(1.0, map, alpha, rate).unwrap();
                    for mode in [CombiningMode::Irc, CombiningMode::Rc] {
                        let r = dm_tilde(&p, 2, mode, AreaSource::Bound, &CellOptions::default()).unwrap();
                        assert!(r.progress[1] >= r.progress[0], "R={rate} p={map} a={alpha} {mode}");
                    }
                }
            }
        }
    }

    #[test]
    fn area_source_parsing() {
        assert_eq!("bound".parse::<AreaSource>().unwrap(), AreaSource::Bound);
        assert_eq!(AreaSource::default_for(3), AreaSource::Numeric);
        assert!("exact".parse::<AreaSource>().is_err());
    }
}
