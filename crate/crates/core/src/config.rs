//! Experiment configuration.
//!
//! Configs are plain `key = value` text (one pair per line, `#` starts a
//! comment, string values may be quoted). A JSON run manifest written by a
//! previous run is also accepted wherever a config file is, so a run can be
//! replayed from its manifest.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `lambda` | 1 | node intensity, m^-2 |
//! | `p` | 0.04 | medium access probability, in (0, 1) |
//! | `alpha` | 3 | path loss exponent, > 2 |
//! | `R` | 3 | code rate, bits/symbol |
//! | `mode` | NC | NC, IRC or RC |
//! | `M` | 1 for NC, 2 otherwise | diversity order |
//! | `window` | auto | `auto` or `x_min,x_max,y_min,y_max` |
//! | `near_field_radius` | auto (30/sqrt(lambda)) | radius of exactly summed interference |
//! | `far_field` | true | add mean interference from beyond the near field |
//! | `trials` | 10000 | Monte Carlo trials per point |
//! | `seed` | 1 | master seed |
//! | `max_attempts` | 64 | transmissions allowed per setup hop |
//! | `candidate_tail` | 1e-6 | expected missed decoders outside the candidate disc |
//! | `contention_bits` | 8 | contention code length P |
//! | `contention_d_max` | auto | contention quantizer range, m |
//! | `budget` | 200000 | total trials for the Monte Carlo optimizer |
//! | `mc_optimize` | true | optimize `(R, p)` by Monte Carlo in alpha and M sweeps |
//! | `area_source` | auto | BOUND, NUMERIC or auto (BOUND for M <= 2) |
//! | `r_min`, `r_max`, `r_step` | 0.25, 8, 0.25 | analytic rate grid |
//! | `p_min`, `p_max`, `p_points` | 0.005, 0.5, 40 | analytic MAP grid (log spaced) |
//! | `mc_r_min`, `mc_r_max`, `mc_r_step` | 1, 5, 0.5 | Monte Carlo rate grid |
//! | `mc_p_min`, `mc_p_max`, `mc_p_points` | 0.01, 0.25, 8 | Monte Carlo MAP grid |
//! | `values` | per axis | sweep values, comma separated |
//! | `modes` | NC,IRC,RC | modes included in sweeps |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::AreaSource;
use crate::error::{Error, Result};
use crate::geometry::Window;
use crate::protocol::CombiningMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSpec {
    Auto,
    Explicit(Window),
}

/// Rectangular `(R, p)` search grid: `R` on an arithmetic grid, `p` on a
/// geometric grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub r_min: f64,
    pub r_max: f64,
    pub r_step: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub p_points: usize,
}

impl SearchBox {
    pub const ANALYTIC: SearchBox = SearchBox {
        r_min: 0.25,
        r_max: 8.0,
        r_step: 0.25,
        p_min: 0.005,
        p_max: 0.5,
        p_points: 40,
    };

    pub const MONTE_CARLO: SearchBox = SearchBox {
        r_min: 1.0,
        r_max: 5.0,
        r_step: 0.5,
        p_min: 0.01,
        p_max: 0.25,
        p_points: 8,
    };

    pub fn rates(&self) -> Vec<f64> {
        let n = ((self.r_max - self.r_min) / self.r_step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.r_min + i as f64 * self.r_step).collect()
    }

    pub fn maps(&self) -> Vec<f64> {
        if self.p_points == 1 {
            return vec![self.p_min];
        }
        let (a, b) = (self.p_min.ln(), self.p_max.ln());
        (0..self.p_points)
            .map(|i| (a + (b - a) * i as f64 / (self.p_points - 1) as f64).exp())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rates().len() * self.p_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        let key = |k: &str| format!("{prefix}{k}");
        if !(self.r_min > 0.0 && self.r_max >= self.r_min) {
            return Err(Error::Key {
                key: key("r_min"),
                message: "need 0 < r_min <= r_max".into(),
            });
        }
        if !(self.r_step > 0.0) {
            return Err(Error::Key {
                key: key("r_step"),
                message: "must be positive".into(),
            });
        }
        if !(self.p_min > 0.0 && self.p_max < 1.0 && self.p_min <= self.p_max) {
            return Err(Error::Key {
                key: key("p_min"),
                message: "need 0 < p_min <= p_max < 1".into(),
            });
        }
        if self.p_points == 0 {
            return Err(Error::Key {
                key: key("p_points"),
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    #[serde(rename = "R")]
    pub rate: f64,
    #[serde(rename = "M")]
    pub diversity: usize,
    pub mode: CombiningMode,
    pub window: WindowSpec,
    pub near_field_radius: Option<f64>,
    pub far_field: bool,
    pub trials: u64,
    pub seed: u64,
    pub max_attempts: u32,
    pub candidate_tail: f64,
    pub contention_bits: u32,
    pub contention_d_max: Option<f64>,
    pub budget: u64,
    pub mc_optimize: bool,
    pub area_source: Option<AreaSource>,
    pub search: SearchBox,
    pub mc_search: SearchBox,
    pub values: Option<Vec<f64>>,
    pub modes: Vec<CombiningMode>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            lambda: 1.0,
            p: 0.04,
            alpha: 3.0,
            rate: 3.0,
            diversity: 1,
            mode: CombiningMode::Nc,
            window: WindowSpec::Auto,
            near_field_radius: None,
            far_field: true,
            trials: 10_000,
            seed: 1,
            max_attempts: 64,
            candidate_tail: 1e-6,
            contention_bits: 8,
            contention_d_max: None,
            budget: 200_000,
            mc_optimize: true,
            area_source: None,
            search: SearchBox::ANALYTIC,
            mc_search: SearchBox::MONTE_CARLO,
            values: None,
            modes: CombiningMode::ALL.to_vec(),
        }
    }
}

fn key_err(key: &str, message: impl Into<String>) -> Error {
    Error::Key {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| key_err(key, format!("cannot parse `{value}` as a number")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_num::<f64>(key, v.trim()))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(key_err(key, format!("expected true or false (got `{value}`)"))),
    }
}

fn is_auto(value: &str) -> bool {
    value.eq_ignore_ascii_case("auto")
}

impl SimConfig {
    /// Parses `key = value` text on top of the defaults. An explicit `M`
    /// wins; otherwise the mode's default diversity is used.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| key_err(line, format!("line {} is not `key = value`", lineno + 1)))?;
            let v = v.trim().trim_matches('"').trim_matches('\'').to_string();
            pairs.insert(k.trim().to_string(), v);
        }
        let mut cfg = SimConfig::default();
        cfg.apply(&pairs)?;
        Ok(cfg)
    }

    /// Applies overrides. Keys are those of the file format.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        let mut explicit_m = false;
        for (k, v) in pairs {
            let v = v.as_str();
            match k.as_str() {
                "lambda" => self.lambda = parse_num(k, v)?,
                "p" => self.p = parse_num(k, v)?,
                "alpha" => self.alpha = parse_num(k, v)?,
                "R" => self.rate = parse_num(k, v)?,
                "M" => {
                    self.diversity = parse_num(k, v)?;
                    explicit_m = true;
                }
                "mode" => self.mode = v.parse()?,
                "window" => {
                    self.window = if is_auto(v) {
                        WindowSpec::Auto
                    } else {
                        let xs = parse_list(k, v)?;
                        if xs.len() != 4 {
                            return Err(key_err(k, "expected auto or x_min,x_max,y_min,y_max"));
                        }
                        let w = Window::new(xs[0], xs[1], xs[2], xs[3]).map_err(|e| key_err(k, e.to_string()))?;
                        WindowSpec::Explicit(w)
                    }
                }
                "near_field_radius" => {
                    self.near_field_radius = if is_auto(v) { None } else { Some(parse_num(k, v)?) }
                }
                "far_field" => self.far_field = parse_bool(k, v)?,
                "trials" => self.trials = parse_num(k, v)?,
                "seed" => self.seed = parse_num(k, v)?,
                "max_attempts" => self.max_attempts = parse_num(k, v)?,
                "candidate_tail" => self.candidate_tail = parse_num(k, v)?,
                "contention_bits" | "P" => self.contention_bits = parse_num(k, v)?,
                "contention_d_max" | "d_max" => {
                    self.contention_d_max = if is_auto(v) { None } else { Some(parse_num(k, v)?) }
                }
                "budget" => self.budget = parse_num(k, v)?,
                "mc_optimize" => self.mc_optimize = parse_bool(k, v)?,
                "area_source" => {
                    self.area_source = if is_auto(v) { None } else { Some(v.parse()?) }
                }
                "r_min" => self.search.r_min = parse_num(k, v)?,
                "r_max" => self.search.r_max = parse_num(k, v)?,
                "r_step" => self.search.r_step = parse_num(k, v)?,
                "p_min" => self.search.p_min = parse_num(k, v)?,
                "p_max" => self.search.p_max = parse_num(k, v)?,
                "p_points" => self.search.p_points = parse_num(k, v)?,
                "mc_r_min" => self.mc_search.r_min = parse_num(k, v)?,
                "mc_r_max" => self.mc_search.r_max = parse_num(k, v)?,
                "mc_r_step" => self.mc_search.r_step = parse_num(k, v)?,
                "mc_p_min" => self.mc_search.p_min = parse_num(k, v)?,
                "mc_p_max" => self.mc_search.p_max = parse_num(k, v)?,
                "mc_p_points" => self.mc_search.p_points = parse_num(k, v)?,
                "values" => self.values = Some(parse_list(k, v)?),
                "modes" => {
                    self.modes = v
                        .split(',')
                        .map(|m| m.parse::<CombiningMode>())
                        .collect::<Result<Vec<_>>>()?
                }
                other => return Err(key_err(other, "unknown key")),
            }
        }
        if pairs.contains_key("mode") && !explicit_m {
            self.diversity = self.default_diversity();
        }
        Ok(())
    }

    fn default_diversity(&self) -> usize {
        match self.mode {
            CombiningMode::Nc => 1,
            _ if self.diversity >= 2 => self.diversity,
            _ => 2,
        }
    }

    /// Reads a config file: JSON (a manifest or a bare config) when the
    /// first non-blank character is `{`, `key = value` text otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        SimConfig::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(text)?;
            let body = value.get("config").cloned().unwrap_or(value);
            let cfg: SimConfig = serde_json::from_value(body)?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            let cfg = SimConfig::from_kv(text)?;
            cfg.validate()?;
            Ok(cfg)
        }
    }

    /// Emits `key = value` text that [`from_kv`](Self::from_kv) parses back
    /// to an identical config.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "R = {}", self.rate);
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "M = {}", self.diversity);
        match self.window {
            WindowSpec::Auto => {
                let _ = writeln!(s, "window = auto");
            }
            WindowSpec::Explicit(w) => {
                let _ = writeln!(s, "window = {},{},{},{}", w.x_min, w.x_max, w.y_min, w.y_max);
            }
        }
        let _ = writeln!(s, "near_field_radius = {}", opt(self.near_field_radius));
        let _ = writeln!(s, "far_field = {}", self.far_field);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "max_attempts = {}", self.max_attempts);
        let _ = writeln!(s, "candidate_tail = {}", self.candidate_tail);
        let _ = writeln!(s, "contention_bits = {}", self.contention_bits);
        let _ = writeln!(s, "contention_d_max = {}", opt(self.contention_d_max));
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "mc_optimize = {}", self.mc_optimize);
        let _ = writeln!(
            s,
            "area_source = {}",
            self.area_source.map_or("auto".to_string(), |a| a.to_string())
        );
        for (prefix, b) in [("", &self.search), ("mc_", &self.mc_search)] {
            let _ = writeln!(s, "{prefix}r_min = {}", b.r_min);
            let _ = writeln!(s, "{prefix}r_max = {}", b.r_max);
            let _ = writeln!(s, "{prefix}r_step = {}", b.r_step);
            let _ = writeln!(s, "{prefix}p_min = {}", b.p_min);
            let _ = writeln!(s, "{prefix}p_max = {}", b.p_max);
            let _ = writeln!(s, "{prefix}p_points = {}", b.p_points);
        }
        if let Some(values) = &self.values {
            let v: Vec<String> = values.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "values = {}", v.join(","));
        }
        let m: Vec<&str> = self.modes.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(s, "modes = {}", m.join(","));
        s
    }

    /// Enforces every domain constraint; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(key_err(key, format!("must be positive and finite (got {v})")))
            }
        };
        positive("lambda", self.lambda)?;
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(key_err("p", format!("must lie in (0, 1) (got {})", self.p)));
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(key_err(
                "alpha",
                format!("must exceed 2, delta = 2/alpha must stay below 1 (got {})", self.alpha),
            ));
        }
        positive("R", self.rate)?;
        if self.diversity == 0 {
            return Err(key_err("M", "must be at least 1"));
        }
        self.mode
            .check_diversity(self.diversity)
            .map_err(|e| key_err("M", e.to_string()))?;
        if let Some(r) = self.near_field_radius {
            positive("near_field_radius", r)?;
        }
        if self.trials == 0 {
            return Err(key_err("trials", "must be at least 1"));
        }
        if self.max_attempts == 0 {
            return Err(key_err("max_attempts", "must be at least 1"));
        }
        if !(self.candidate_tail > 0.0 && self.candidate_tail < 1.0) {
            return Err(key_err("candidate_tail", "must lie in (0, 1)"));
        }
        if !(1..=62).contains(&self.contention_bits) {
            return Err(key_err("contention_bits", "must lie in 1..=62"));
        }
        if let Some(d) = self.contention_d_max {
            positive("contention_d_max", d)?;
        }
        self.search.validate("")?;
        self.mc_search.validate("mc_")?;
        if let Some(values) = &self.values {
            if values.is_empty() {
                return Err(key_err("values", "must not be empty"));
            }
        }
        if self.modes.is_empty() {
            return Err(key_err("modes", "must not be empty"));
        }
        Ok(())
    }

    pub fn with_point(&self, rate: f64, p: f64) -> SimConfig {
        SimConfig {
            rate,
            p,
            ..self.clone()
        }
    }

    pub fn with_mode(&self, mode: CombiningMode, diversity: usize) -> SimConfig {
        SimConfig {
            mode,
            diversity,
            ..self.clone()
        }
    }
}
