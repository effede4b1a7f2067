use rand::Rng;

use crate::error::{Error, Result};

/// `floor(progress / d_max * (2^bits - 1))`.
pub fn quantize_progress(progress: f64, bits: u32, d_max: f64) -> Result<u64> {
    if bits == 0 || bits > 62 {
        return Err(Error::param("bits", "contention code length must be in 1..=62", bits as f64));
    }
    if !(d_max > 0.0) {
        return Err(Error::param("d_max", "must be positive", d_max));
    }
    if !(0.0..=d_max).contains(&progress) {
        return Err(Error::param("progress", "must lie in [0, d_max]", progress));
    }
    let levels = ((1u64 << bits) - 1) as f64;
    Ok(((progress / d_max) * levels).floor() as u64)
}

/// Runs the listen/pulse contention rounds and returns the surviving relay.
///
/// Each relay encodes its quantized progress on `bits` bits and plays them
/// most significant first: a 1 sends a pulse, a 0 listens, and a listener
/// that hears a pulse withdraws. After the last round the survivors all hold
/// the maximal code; one of them is picked uniformly with `rng`.
pub fn contention_winner<R: Rng + ?Sized>(
    entries: &[(usize, f64)],
    bits: u32,
    d_max: f64,
    rng: &mut R,
) -> Result<Option<usize>> {
    let codes = entries
        .iter()
        .map(|&(id, progress)| quantize_progress(progress, bits, d_max).map(|q| (id, q)))
        .collect::<Result<Vec<_>>>()?;
    let mut alive: Vec<(usize, u64)> = codes;
    for round in (0..bits).rev() {
        let pulse = alive.iter().any(|&(_, q)| (q >> round) & 1 == 1);
        if pulse {
            alive.retain(|&(_, q)| (q >> round) & 1 == 1);
        }
    }
    Ok(match alive.len() {
        0 => None,
        1 => Some(alive[0].0),
        n => Some(alive[rng.random_range(0..n)].0),
    })
}
