use std::f64::consts::{LN_2, PI};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{s_from_uniform, w1_area, AnalyticParams};
use crate::error::{Error, Result};
use crate::protocol::CombiningMode;
use crate::quad::composite;
use crate::rng::{substream, Purpose};

/// Accuracy controls of [`cell_area_numeric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellOptions {
    /// Independent sample batches; the reported error is their spread.
    pub batches: usize,
    pub samples_per_batch: usize,
    /// Stop when successive grid refinements differ by less than this,
    /// relatively.
    pub tolerance: f64,
    pub max_levels: u32,
    pub seed: u64,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions {
            batches: 8,
            samples_per_batch: 128,
            tolerance: 1e-4,
            max_levels: 6,
            seed: 0x5EED,
        }
    }
}

impl CellOptions {
    /// Cheap settings for coarse searches.
    pub fn coarse() -> Self {
        CellOptions {
            batches: 4,
            samples_per_batch: 64,
            tolerance: 1e-3,
            ..CellOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub value: f64,
    /// Standard error over sample batches.
    pub stderr: f64,
    /// Relative change at the last grid refinement.
    pub relative_change: f64,
    pub levels: u32,
}

const ORDER: usize = 8;
const PANELS: usize = 4;
const ANGLES: usize = 8;

/// Expected area of the region decoding from blocks sent at
/// `(centers[k], 0)`, `k = 0 .. M - 1`.
///
/// Terms from all but the last center are sampled by inverse transform
/// (Latin hypercube within each batch); the last term's conditional decoding
/// probability is exact. The plane is integrated on a polar grid around the
/// midpoint of the centers, out to `10 sqrt(|W_1| M)` beyond the half-span,
/// with Gauss–Legendre panels in radius and the midpoint rule in angle,
/// doubled in both until the relative change drops below the tolerance.
/// All grid levels reuse the same samples.
pub fn cell_area_numeric(
    params: &AnalyticParams,
    mode: CombiningMode,
    centers: &[f64],
    options: &CellOptions,
) -> Result<AreaEstimate> {
    let m = centers.len();
    if m == 0 {
        return Err(Error::param("M", "must be at least 1", 0.0));
    }
    if m > 1 && mode == CombiningMode::Nc {
        return Err(Error::Contract("multi-block cells need a combining mode".into()));
    }
    if options.batches == 0 || options.samples_per_batch == 0 {
        return Err(Error::Configuration("cell sampling needs at least one batch and one sample".into()));
    }
    let dims = m - 1;
    let (batches, per) = if dims == 0 {
        (1, 1)
    } else {
        (options.batches, options.samples_per_batch)
    };
    let mut rng = substream(options.seed, Purpose::Quadrature, &[m as u64]);
    let mut samples = vec![0.0; batches * per * dims];
    let mut strata: Vec<usize> = (0..per).collect();
    for b in 0..batches {
        for d in 0..dims {
            strata.shuffle(&mut rng);
            for (j, &s) in strata.iter().enumerate() {
                let u = (s as f64 + rng.random::<f64>()) / per as f64;
                samples[((b * per) + j) * dims + d] = s_from_uniform(u.clamp(f64::MIN_POSITIVE, 1.0), params);
            }
        }
    }

    let lo = centers.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = centers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    let extent = 10.0 * (w1_area(params) * m as f64).sqrt() + 0.5 * (hi - lo);
    let ctx = Integrand {
        params,
        mode,
        centers,
        samples: &samples,
        dims,
        per,
        batches,
    };

    let mut previous: Option<f64> = None;
    let mut change = f64::INFINITY;
    for level in 0..options.max_levels {
        let scale = 1usize << level;
        let per_batch = ctx.integrate(mid, extent, PANELS * scale, ANGLES * scale);
        let k = per_batch.len() as f64;
        let value = per_batch.iter().sum::<f64>() / k;
        let stderr = if per_batch.len() > 1 {
            let var = per_batch.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            0.0
        };
        if let Some(prev) = previous {
            change = ((value - prev) / value).abs();
            if change < options.tolerance {
                return Ok(AreaEstimate {
                    value,
                    stderr,
                    relative_change: change,
                    levels: level + 1,
                });
            }
        }
        previous = Some(value);
    }
    Err(Error::Accuracy {
        message: format!("cell area did not converge in {} grid levels", options.max_levels),
        estimate: previous.unwrap_or(f64::NAN),
        relative_change: change,
    })
}

struct Integrand<'a> {
    params: &'a AnalyticParams,
    mode: CombiningMode,
    centers: &'a [f64],
    samples: &'a [f64],
    dims: usize,
    per: usize,
    batches: usize,
}

impl Integrand<'_> {
    /// Per-batch integrals over the disc of radius `extent` around
    /// `(mid, 0)`, using the symmetry about the x-axis.
    fn integrate(&self, mid: f64, extent: f64, panels: usize, angles: usize) -> Vec<f64> {
        let (radii, rw) = composite(0.0, extent, panels, ORDER);
        let dtheta = PI / angles as f64;
        let rows: Vec<Vec<f64>> = radii
            .par_iter()
            .zip(rw.par_iter())
            .map(|(&r, &w)| {
                let mut acc = vec![0.0; self.batches];
                let mut g = vec![0.0; self.dims];
                for j in 0..angles {
                    let theta = (j as f64 + 0.5) * dtheta;
                    let (vx, vy) = (mid + r * theta.cos(), r * theta.sin());
                    let weight = 2.0 * w * r * dtheta;
                    self.point(vx, vy, weight, &mut g, &mut acc);
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; self.batches];
        for row in &rows {
            for (t, v) in total.iter_mut().zip(row) {
                *t += v;
            }
        }
        total
    }

    fn point(&self, vx: f64, vy: f64, weight: f64, g: &mut [f64], acc: &mut [f64]) {
        let p = self.params;
        let half_alpha = 0.5 * p.alpha;
        let vy2 = vy * vy;
        for (k, gk) in g.iter_mut().enumerate() {
            let dx = vx - self.centers[k];
            *gk = (dx * dx + vy2).powf(-half_alpha);
        }
        let dx = vx - self.centers[self.dims];
        let last = dx * dx + vy2;
        let rate = p.rate;
        let rc_threshold = rate.exp2() - 1.0;
        for (b, slot) in acc.iter_mut().enumerate() {
            let mut sum = 0.0;
            for j in 0..self.per {
                let s = &self.samples[(b * self.per + j) * self.dims..][..self.dims];
                let remaining = match self.mode {
                    CombiningMode::Irc => {
                        let mi: f64 = s.iter().zip(g.iter()).map(|(s, g)| (s * g).ln_1p()).sum::<f64>() / LN_2;
                        if mi >= rate {
                            0.0
                        } else {
                            (rate - mi).exp2() - 1.0
                        }
                    }
                    CombiningMode::Rc => rc_threshold - s.iter().zip(g.iter()).map(|(s, g)| s * g).sum::<f64>(),
                    CombiningMode::Nc => rc_threshold,
                };
                sum += if remaining <= 0.0 {
                    1.0
                } else {
                    (-p.a * remaining.powf(p.delta) * last).exp()
                };
            }
            *slot += weight * sum / self.per as f64;
        }
    }
}
