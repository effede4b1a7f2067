//! Power-law path loss, Rayleigh block fading and interference-limited SIR.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::Stream;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 2.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::param("alpha", "path loss exponent must exceed 2", alpha))
    }
}

/// `distance^-alpha`.
pub fn path_gain(distance: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if distance == 0.0 {
        return Err(Error::Singularity);
    }
    if !(distance > 0.0) {
        return Err(Error::param("distance", "must be positive", distance));
    }
    Ok(distance.powf(-alpha))
}

/// Signal-to-interference ratio. `Sir::INFINITE` stands for an empty
/// interferer set and decodes at every finite rate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Sir(f64);

impl Sir {
    pub const INFINITE: Sir = Sir(f64::INFINITY);
    pub const ZERO: Sir = Sir(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(Sir(value))
        } else {
            Err(Error::param("sir", "must be non-negative", value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// `log2(1 + sir)` bits per symbol; infinite SIR maps to infinite MI.
pub fn mutual_info(sir: Sir) -> f64 {
    sir.0.ln_1p() / std::f64::consts::LN_2
}

/// A transmitting node: identity (for fading lookup) and position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub id: usize,
    pub pos: Point,
}

/// Source of `|h|^2` draws for the links into one evaluation point.
pub trait FadingSource {
    fn gain(&mut self, tx: usize) -> f64;
}

/// Fresh Exp(1) draws from a sequential generator.
pub struct RngFading<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> FadingSource for RngFading<'_, R> {
    fn gain(&mut self, _tx: usize) -> f64 {
        Exp1.sample(self.0)
    }
}

/// Fading keyed by `(slot, tx, rx)`: the same link in the same slot always
/// sees the same gain, whatever order links are evaluated in.
#[derive(Debug, Clone, Copy)]
pub struct KeyedFading {
    pub slot: Stream,
    pub rx: usize,
}

impl FadingSource for KeyedFading {
    #[inline]
    fn gain(&mut self, tx: usize) -> f64 {
        self.slot.exp1(&[tx as u64, self.rx as u64])
    }
}

/// Mean interference at any point from a homogeneous field of transmitters of
/// intensity `tx_intensity` lying farther than `radius`, with unit-mean
/// fading.
pub fn far_field_mean(tx_intensity: f64, radius: f64, alpha: f64) -> f64 {
    tx_intensity * 2.0 * PI * radius.powf(2.0 - alpha) / (alpha - 2.0)
}

/// How interference at an evaluation point is accumulated.
///
/// Transmitters within `near_radius` contribute exactly (with their own
/// fading); everything beyond is represented by the deterministic
/// `far_mean`. With `near_radius = inf` and `far_mean = 0` this is the plain
/// sum over the supplied interferers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceModel {
    pub alpha: f64,
    pub near_radius: f64,
    pub far_mean: f64,
}

impl InterferenceModel {
    pub fn exact(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(InterferenceModel {
            alpha,
            near_radius: f64::INFINITY,
            far_mean: 0.0,
        })
    }

    pub fn with_far_field(alpha: f64, tx_intensity: f64, near_radius: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(near_radius > 0.0) {
            return Err(Error::param("near_radius", "must be positive", near_radius));
        }
        Ok(InterferenceModel {
            alpha,
            near_radius,
            far_mean: far_field_mean(tx_intensity, near_radius, alpha),
        })
    }

    /// Received power `g * d^-alpha`, with the `d^-alpha` term computed from
    /// the squared distance.
    #[inline]
    pub(crate) fn power(&self, gain: f64, dist2: f64) -> f64 {
        gain * dist2.powf(-0.5 * self.alpha)
    }

    #[inline]
    fn interference_term(
        &self,
        eval: Point,
        desired: Emitter,
        e: &Emitter,
        fading: &mut impl FadingSource,
    ) -> Result<f64> {
        if e.id == desired.id {
            return Err(Error::Contract(format!(
                "desired transmitter {} appears among the interferers",
                desired.id
            )));
        }
        let d2 = eval.dist2(e.pos);
        if d2 > self.near_radius * self.near_radius {
            return Ok(0.0);
        }
        if d2 == 0.0 {
            return Err(Error::Singularity);
        }
        Ok(self.power(fading.gain(e.id), d2))
    }

    fn finish(&self, eval: Point, desired: Emitter, interference: f64, fading: &mut impl FadingSource) -> Result<Sir> {
        let d2 = eval.dist2(desired.pos);
        if d2 == 0.0 {
            return Err(Error::Singularity);
        }
        let signal = self.power(fading.gain(desired.id), d2);
        let total = interference + self.far_mean;
        if total == 0.0 {
            Ok(Sir::INFINITE)
        } else {
            Ok(Sir(signal / total))
        }
    }

    /// SIR at `eval` from `desired`, interfered by `interferers` (any order).
    pub fn sir(
        &self,
        eval: Point,
        desired: Emitter,
        interferers: &[Emitter],
        fading: &mut impl FadingSource,
    ) -> Result<Sir> {
        let mut interference = 0.0;
        for e in interferers {
            interference += self.interference_term(eval, desired, e, fading)?;
        }
        self.finish(eval, desired, interference, fading)
    }

    /// Same as [`sir`](Self::sir) for interferers sorted by `x`; only those
    /// within `near_radius` in `x` are visited.
    pub fn sir_sorted(
        &self,
        eval: Point,
        desired: Emitter,
        interferers: &[Emitter],
        fading: &mut impl FadingSource,
    ) -> Result<Sir> {
        debug_assert!(interferers.windows(2).all(|w| w[0].pos.x <= w[1].pos.x));
        let (lo, hi) = if self.near_radius.is_finite() {
            (
                interferers.partition_point(|e| e.pos.x < eval.x - self.near_radius),
                interferers.partition_point(|e| e.pos.x <= eval.x + self.near_radius),
            )
        } else {
            (0, interferers.len())
        };
        let mut interference = 0.0;
        for e in &interferers[lo..hi] {
            interference += self.interference_term(eval, desired, e, fading)?;
        }
        self.finish(eval, desired, interference, fading)
    }

    /// Largest SIR the link could have given desired gain `gain`: the
    /// far-field floor is the only interference counted.
    #[inline]
    pub(crate) fn sir_ceiling(&self, gain: f64, dist2: f64) -> f64 {
        self.power(gain, dist2) / self.far_mean
    }
}

/// SIR at `eval` from `desired` with every listed interferer counted
/// (no far-field term). An empty interferer list gives `Sir::INFINITE`.
pub fn sir_at(
    eval: Point,
    desired: Emitter,
    interferers: &[Emitter],
    alpha: f64,
    fading: &mut impl FadingSource,
) -> Result<Sir> {
    InterferenceModel::exact(alpha)?.sir(eval, desired, interferers, fading)
}
