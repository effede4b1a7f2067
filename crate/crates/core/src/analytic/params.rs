use std::f64::consts::PI;

use crate::channel::check_alpha;
use crate::error::{Error, Result};
use crate::geometry::check_map;

/// `G(alpha) = pi delta / sin(pi delta)` with `delta = 2 / alpha`.
pub fn spatial_factor(alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "G(alpha) diverges for alpha <= 2", alpha));
    }
    let x = PI * 2.0 / alpha;
    let s = x.sin();
    if !(s > 0.0) {
        return Err(Error::param("alpha", "G(alpha) diverges for alpha <= 2", alpha));
    }
    Ok(x / s)
}

/// Network and link parameters with the derived constants of the
/// decoding-cell approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub rate: f64,
    /// `2 / alpha`
    pub delta: f64,
    pub g: f64,
    /// `lambda p G(alpha)`
    pub a: f64,
    /// `(2^R - 1)^delta`
    pub t: f64,
    /// `max(2^(R-1) - 1, 0)^delta`
    pub t_bar: f64,
    /// `max(2^R - 2, 0)^delta`
    pub t_tilde: f64,
}

impl AnalyticParams {
    pub fn new(lambda: f64, p: f64, alpha: f64, rate: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::param("lambda", "must be positive", lambda));
        }
        check_map(p)?;
        check_alpha(alpha)?;
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::param("R", "must be positive", rate));
        }
        let delta = 2.0 / alpha;
        let g = spatial_factor(alpha)?;
        let two_r = rate.exp2();
        Ok(AnalyticParams {
            lambda,
            p,
            alpha,
            rate,
            delta,
            g,
            a: lambda * p * g,
            t: (two_r - 1.0).powf(delta),
            t_bar: (0.5 * two_r - 1.0).max(0.0).powf(delta),
            t_tilde: (two_r - 2.0).max(0.0).powf(delta),
        })
    }

    pub fn with_rate_and_map(&self, rate: f64, p: f64) -> Result<Self> {
        AnalyticParams::new(self.lambda, p, self.alpha, rate)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        AnalyticParams::new(lambda, self.p, self.alpha, self.rate)
    }
}

/// `P(S >= s) = exp(-A s^delta)` for `s >= 0`, and 1 below zero.
pub fn ccdf_s(s: f64, params: &AnalyticParams) -> f64 {
    if s < 0.0 {
        1.0
    } else {
        (-params.a * s.powf(params.delta)).exp()
    }
}

/// Inverse of [`ccdf_s`]: the `s` with `P(S >= s) = u`.
pub(crate) fn s_from_uniform(u: f64, params: &AnalyticParams) -> f64 {
    (-u.ln() / params.a).powf(1.0 / params.delta)
}
