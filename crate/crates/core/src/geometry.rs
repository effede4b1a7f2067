//! Poisson point processes on a finite rectangular window and per-slot
//! ALOHA role assignment.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn scaled(self, factor: f64) -> Point {
        Point::new(self.x * factor, self.y * factor)
    }
}

/// Axis-aligned observation window in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(Error::Configuration(format!(
                "degenerate window [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Window {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// Rectangle of the given width and half-height, elongated along +x,
    /// with the origin a quarter of the width from the left edge.
    pub fn elongated(width: f64, half_height: f64) -> Result<Self> {
        Window::new(-0.25 * width, 0.75 * width, -half_height, half_height)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn scaled(&self, factor: f64) -> Window {
        Window {
            x_min: self.x_min * factor,
            x_max: self.x_max * factor,
            y_min: self.y_min * factor,
            y_max: self.y_max * factor,
        }
    }
}

/// A realized point process inside `window`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    positions: Vec<Point>,
    intensity: f64,
    window: Window,
}

impl NodeSet {
    pub fn empty(intensity: f64, window: Window) -> Self {
        NodeSet {
            positions: Vec::new(),
            intensity,
            window,
        }
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, id: usize) -> Point {
        self.positions[id]
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn window(&self) -> &Window {
        &self.window
    }
}

/// Homogeneous PPP of `intensity` nodes per m² in `window`.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, window: &Window, rng: &mut R) -> Result<NodeSet> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::param("intensity", "must be positive and finite", intensity));
    }
    let window = Window::new(window.x_min, window.x_max, window.y_min, window.y_max)?;
    let mean = intensity * window.area();
    let count = Poisson::new(mean)
        .map_err(|_| Error::param("intensity", "Poisson mean out of range", mean))?
        .sample(rng) as usize;
    let (w, h) = (window.width(), window.height());
    let positions = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            Point::new(window.x_min + u * w, window.y_min + v * h)
        })
        .collect();
    Ok(NodeSet {
        positions,
        intensity,
        window,
    })
}

/// Appends a deterministic node (the source, by Slivnyak's theorem) and
/// returns the enlarged set. The new node's id is `len() - 1`.
pub fn add_conditioned_node(nodes: &NodeSet, position: Point) -> Result<NodeSet> {
    if !nodes.window.contains(position) {
        return Err(Error::Configuration(format!(
            "conditioned node ({}, {}) lies outside the window",
            position.x, position.y
        )));
    }
    let mut out = nodes.clone();
    out.positions.push(position);
    Ok(out)
}

/// PPP sampled cell by cell on a fixed square lattice of side `cell`.
///
/// Each lattice cell draws its own points from `stream.fork([ix, iy])`, so the
/// realization on any window is the restriction of one plane-wide process:
/// two windows share every point in their intersection. Each node also gets
/// a 64-bit tag that is stable across windows, for keying per-node draws.
pub fn sample_ppp_tiled(
    intensity: f64,
    window: &Window,
    cell: f64,
    stream: Stream,
) -> Result<(NodeSet, Vec<u64>)> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::param("intensity", "must be positive and finite", intensity));
    }
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(Error::param("cell", "must be positive and finite", cell));
    }
    let window = Window::new(window.x_min, window.x_max, window.y_min, window.y_max)?;
    let poisson = Poisson::new(intensity * cell * cell)
        .map_err(|_| Error::param("intensity", "Poisson mean out of range", intensity))?;
    let (ix0, ix1) = ((window.x_min / cell).floor() as i64, (window.x_max / cell).ceil() as i64);
    let (iy0, iy1) = ((window.y_min / cell).floor() as i64, (window.y_max / cell).ceil() as i64);
    let mut positions = Vec::new();
    let mut tags = Vec::new();
    for ix in ix0..ix1 {
        for iy in iy0..iy1 {
            let cs = stream.fork(&[ix as u64, iy as u64]);
            let mut rng = cs.small_rng();
            let n = poisson.sample(&mut rng) as u64;
            for j in 0..n {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let p = Point::new((ix as f64 + u) * cell, (iy as f64 + v) * cell);
                if window.contains(p) {
                    positions.push(p);
                    tags.push(cs.bits(&[j]));
                }
            }
        }
    }
    Ok((
        NodeSet {
            positions,
            intensity,
            window,
        },
        tags,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Tx,
    Rx,
}

/// Per-slot partition of a node set into transmitters and receivers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleAssignment {
    tx: Vec<bool>,
}

impl RoleAssignment {
    pub fn role(&self, id: usize) -> Role {
        if self.tx[id] {
            Role::Tx
        } else {
            Role::Rx
        }
    }

    pub fn is_tx(&self, id: usize) -> bool {
        self.tx[id]
    }

    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }

    pub fn transmitters(&self) -> impl Iterator<Item = usize> + '_ {
        self.tx.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i)
    }

    pub fn receivers(&self) -> impl Iterator<Item = usize> + '_ {
        self.tx.iter().enumerate().filter(|(_, &t)| !t).map(|(i, _)| i)
    }

    pub fn force_tx(&mut self, id: usize) {
        self.tx[id] = true;
    }
}

pub(crate) fn check_map(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::param("p", "medium access probability must lie in (0, 1)", p))
    }
}

/// Node `i` transmits iff `U(i) < p`, where `U(i)` is the uniform keyed by
/// `i` on the slot's stream. Using one uniform per node couples slots across
/// different `p` monotonically.
#[inline]
pub(crate) fn is_tx_draw(slot: Stream, id: usize, p: f64) -> bool {
    slot.uniform(&[id as u64]) < p
}

/// Independent Bernoulli(`p`) transmit decisions, one per node, drawn from
/// the slot's stream. Callers pass a distinct stream per slot.
pub fn assign_roles(nodes: &NodeSet, p: f64, slot: Stream) -> Result<RoleAssignment> {
    check_map(p)?;
    let tx = (0..nodes.len()).map(|i| is_tx_draw(slot, i, p)).collect();
    Ok(RoleAssignment { tx })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    fn square(side: f64) -> Window {
        Window::new(0.0, side, 0.0, side).unwrap()
    }

    #[test]
    fn mean_count_matches_intensity_times_area() {
        let w = Window::elongated(60.0, 15.0).unwrap();
        let draws = 400u64;
        let total: usize = (0..draws)
            .map(|k| sample_ppp(1.0, &w, &mut substream(3, Purpose::Nodes, &[k])).unwrap().len())
            .sum();
        let mean = total as f64 / draws as f64;
        // sd of the mean is sqrt(1800 / 400) ~ 2.1
        assert!((mean - 1800.0).abs() < 10.0, "mean {mean}");
    }

    #[test]
    fn zero_area_window_is_rejected() {
        assert!(Window::new(0.0, 0.0, 0.0, 10.0).is_err());
        let bad = Window {
            x_min: 1.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        };
        assert!(sample_ppp(1.0, &bad, &mut substream(0, Purpose::Nodes, &[])).is_err());
    }

    #[test]
    fn non_positive_intensity_is_rejected() {
        let mut rng = substream(0, Purpose::Nodes, &[]);
        assert!(sample_ppp(0.0, &square(10.0), &mut rng).is_err());
        assert!(sample_ppp(-1.0, &square(10.0), &mut rng).is_err());
    }

    #[test]
    fn index_of_dispersion_is_one() {
        let w = square(10.0);
        let counts: Vec<f64> = (0..10_000u64)
            .map(|k| sample_ppp(1.0, &w, &mut substream(17, Purpose::Nodes, &[k])).unwrap().len() as f64)
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let ratio = var / mean;
        assert!((0.95..=1.05).contains(&ratio), "dispersion {ratio}");
    }

    #[test]
    fn disjoint_halves_have_uncorrelated_counts() {
        let w = square(10.0);
        let pairs: Vec<(f64, f64)> = (0..5000u64)
            .map(|k| {
                let s = sample_ppp(1.0, &w, &mut substream(23, Purpose::Nodes, &[k])).unwrap();
                let left = s.positions().iter().filter(|p| p.x < 5.0).count() as f64;
                (left, s.len() as f64 - left)
            })
            .collect();
        let n = pairs.len() as f64;
        let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / (n - 1.0);
        let corr = cov / (ma * mb).sqrt();
        assert!(corr.abs() < 3.0 / n.sqrt(), "corr {corr}");
    }

    fn ks_uniform(mut xs: Vec<f64>) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn coordinates_pass_ks_uniformity() {
        let w = Window::new(-5.0, 15.0, -2.0, 3.0).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut k = 0u64;
        while xs.len() < 100_000 {
            let s = sample_ppp(1.0, &w, &mut substream(31, Purpose::Nodes, &[k])).unwrap();
            for p in s.positions() {
                xs.push((p.x - w.x_min) / w.width());
                ys.push((p.y - w.y_min) / w.height());
            }
            k += 1;
        }
        // 1% critical value of the one-sample KS statistic
        let crit = 1.628 / (xs.len() as f64).sqrt();
        assert!(ks_uniform(xs) < crit);
        assert!(ks_uniform(ys) < crit);
    }

    #[test]
    fn same_seed_same_nodes_and_roles() {
        let w = square(20.0);
        let a = sample_ppp(1.0, &w, &mut substream(99, Purpose::Nodes, &[4])).unwrap();
        let b = sample_ppp(1.0, &w, &mut substream(99, Purpose::Nodes, &[4])).unwrap();
        assert_eq!(a, b);
        let slot = Stream::new(99, Purpose::Roles).fork(&[4, 0]);
        assert_eq!(assign_roles(&a, 0.3, slot).unwrap(), assign_roles(&b, 0.3, slot).unwrap());
    }

    #[test]
    fn tx_fraction_matches_map() {
        let w = square(100.0);
        let nodes = sample_ppp(1.0, &w, &mut substream(1, Purpose::Nodes, &[])).unwrap();
        let mut tx = 0usize;
        let mut total = 0usize;
        let base = Stream::new(1, Purpose::Roles);
        let mut slot = 0u64;
        while total < 1_000_000 {
            let roles = assign_roles(&nodes, 0.05, base.fork(&[slot])).unwrap();
            tx += roles.transmitters().count();
            total += roles.len();
            slot += 1;
        }
        let frac = tx as f64 / total as f64;
        assert!((frac - 0.05).abs() < 0.001, "fraction {frac}");
    }

    #[test]
    fn boundary_map_is_rejected() {
        let nodes = NodeSet::empty(1.0, square(1.0));
        let s = Stream::new(0, Purpose::Roles);
        assert!(assign_roles(&nodes, 0.0, s).is_err());
        assert!(assign_roles(&nodes, 1.0, s).is_err());
        assert!(assign_roles(&nodes, -0.1, s).is_err());
    }

    #[test]
    fn successive_slots_are_uncorrelated() {
        let nodes = sample_ppp(1.0, &square(100.0), &mut substream(2, Purpose::Nodes, &[])).unwrap();
        let base = Stream::new(2, Purpose::Roles);
        let a = assign_roles(&nodes, 0.3, base.fork(&[0])).unwrap();
        let b = assign_roles(&nodes, 0.3, base.fork(&[1])).unwrap();
        let n = nodes.len() as f64;
        let xa: Vec<f64> = (0..nodes.len()).map(|i| a.is_tx(i) as u8 as f64).collect();
        let xb: Vec<f64> = (0..nodes.len()).map(|i| b.is_tx(i) as u8 as f64).collect();
        let ma = xa.iter().sum::<f64>() / n;
        let mb = xb.iter().sum::<f64>() / n;
        let cov = xa.iter().zip(&xb).map(|(u, v)| (u - ma) * (v - mb)).sum::<f64>() / n;
        let sa = (xa.iter().map(|u| (u - ma).powi(2)).sum::<f64>() / n).sqrt();
        let sb = (xb.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / n).sqrt();
        let corr = cov / (sa * sb);
        assert!(corr.abs() < 3.0 / n.sqrt(), "corr {corr}");
    }

    #[test]
    fn conditioned_node_is_appended() {
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let empty = NodeSet::empty(1.0, w);
        let one = add_conditioned_node(&empty, Point::ORIGIN).unwrap();
        assert_eq!(one.positions(), &[Point::ORIGIN]);

        let big = Window::new(-10.0, 10.0, -10.0, 10.0).unwrap();
        let mut rng = substream(8, Purpose::Nodes, &[]);
        let mut base = sample_ppp(1.0, &big, &mut rng).unwrap();
        base.positions.truncate(100);
        let plus = add_conditioned_node(&base, Point::ORIGIN).unwrap();
        assert_eq!(plus.len(), 101);
        assert_eq!(&plus.positions()[..100], base.positions());
        assert_eq!(plus.position(100), Point::ORIGIN);
    }

    #[test]
    fn conditioned_node_outside_window_is_rejected() {
        let w = Window::new(1.0, 2.0, 1.0, 2.0).unwrap();
        assert!(add_conditioned_node(&NodeSet::empty(1.0, w), Point::ORIGIN).is_err());
    }

    #[test]
    fn nearest_neighbour_law_unchanged_by_conditioning() {
        // Nearest-neighbour distance from the added origin node versus the
        // distance from the origin to a fresh PPP: both ~ Rayleigh with
        // P(D > r) = exp(-lambda pi r^2). Compare the two empirical CDFs.
        let w = Window::new(-8.0, 8.0, -8.0, 8.0).unwrap();
        let n = 4000u64;
        let mut conditioned = Vec::new();
        let mut fresh = Vec::new();
        for k in 0..n {
            let s = sample_ppp(1.0, &w, &mut substream(41, Purpose::Nodes, &[k])).unwrap();
            let s = add_conditioned_node(&s, Point::ORIGIN).unwrap();
            let src = s.len() - 1;
            let d = (0..src)
                .map(|i| s.position(i).dist(Point::ORIGIN))
                .fold(f64::INFINITY, f64::min);
            conditioned.push(d);
            let t = sample_ppp(1.0, &w, &mut substream(43, Purpose::Nodes, &[k])).unwrap();
            fresh.push(
                t.positions()
                    .iter()
                    .map(|p| p.dist(Point::ORIGIN))
                    .fold(f64::INFINITY, f64::min),
            );
        }
        conditioned.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fresh.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // two-sample KS at the 1% level
        let mut d: f64 = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < conditioned.len() && j < fresh.len() {
            if conditioned[i] <= fresh[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
        }
        let crit = 1.628 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "KS {d} vs {crit}");
    }

    #[test]
    fn tiled_sampler_mean_count() {
        let w = Window::new(-13.0, 47.0, -11.5, 18.5).unwrap();
        let trials = 400u64;
        let total: usize = (0..trials)
            .map(|t| {
                let s = Stream::new(5, Purpose::Nodes).fork(&[t]);
                sample_ppp_tiled(1.0, &w, 4.0, s).unwrap().0.len()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        // sd of the mean is sqrt(1800 / 400) = 2.1
        assert!((mean - 1800.0).abs() < 9.0, "mean {mean}");
    }

    #[test]
    fn tiled_sampler_windows_agree_on_overlap() {
        let s = Stream::new(6, Purpose::Nodes).fork(&[0]);
        let big = Window::new(-30.0, 60.0, -20.0, 20.0).unwrap();
        let small = Window::new(-3.3, 17.1, -6.2, 9.9).unwrap();
        let (a, ta) = sample_ppp_tiled(1.0, &big, 4.0, s).unwrap();
        let (b, tb) = sample_ppp_tiled(1.0, &small, 4.0, s).unwrap();
        let mut inside: Vec<(u64, Point)> = ta
            .iter()
            .zip(a.positions())
            .filter(|(_, &p)| small.contains(p))
            .map(|(&t, &p)| (t, p))
            .collect();
        let mut direct: Vec<(u64, Point)> = tb.iter().copied().zip(b.positions().iter().copied()).collect();
        inside.sort_by_key(|e| e.0);
        direct.sort_by_key(|e| e.0);
        assert!(!direct.is_empty());
        assert_eq!(inside, direct);
    }

    #[test]
    fn tiled_sampler_scales_with_intensity() {
        let s = Stream::new(7, Purpose::Nodes).fork(&[3]);
        let w = Window::new(-20.0, 40.0, -15.0, 15.0).unwrap();
        let (a, _) = sample_ppp_tiled(1.0, &w, 4.0, s).unwrap();
        let (b, _) = sample_ppp_tiled(4.0, &w.scaled(0.5), 2.0, s).unwrap();
        assert_eq!(a.len(), b.len());
        for (p, q) in a.positions().iter().zip(b.positions()) {
            assert!((p.x * 0.5 - q.x).abs() < 1e-12 && (p.y * 0.5 - q.y).abs() < 1e-12);
        }
    }
}
