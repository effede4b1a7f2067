//! Monte Carlo simulation of the multihop relaying chain.
//!
//! A trial places a source at the origin on top of a PPP and runs `M` hops
//! toward a destination far away on the +x axis. Hop `k` is transmitted by
//! the relay selected at hop `k - 1` (the source for `k = 1`). Every other
//! node draws a fresh ALOHA role in each slot; receivers decode by combining
//! the current slot with the blocks they received in the previous `M - 1`
//! successful slots. The forwarding relay is the decoder farthest along +x,
//! and the recorded cumulative progress `D_k` is its x-coordinate.
//!
//! Setup hops (`k < M`) are retransmitted, with fresh roles and fading,
//! until some node beyond `D_{k-1}` decodes or `max_attempts` slots have
//! been used; failed slots leave no blocks behind. The final hop has a
//! single attempt and records `D_M = D_{M-1}` when nobody beyond decodes.
//! If a setup hop exhausts its attempts the chain stalls and `D_j = D_{k-1}`
//! for every `j >= k`. With `max_attempts = 1` every hop has one attempt.
//!
//! Interference at a receiver is summed exactly over transmitters within the
//! near-field radius and, when the far field is enabled, the mean
//! contribution of the homogeneous transmitter field beyond it is added as a
//! constant. Receivers farther than the candidate radius from every
//! transmitter they could combine are never examined; the radius is chosen
//! so the expected number of decoders missed this way is `candidate_tail`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{contention_winner, quantize_progress, term_of, threshold, CombiningMode};
use crate::analytic::spatial_factor;
use crate::channel::{Emitter, FadingSource, InterferenceModel};
use crate::config::{SimConfig, WindowSpec};
use crate::error::{Error, Result};
use crate::geometry::{sample_ppp_tiled, NodeSet, Point, Window};
use crate::rng::{mix64, substream, Purpose, Stream};

/// Lattice cell side of the node sampler, in units of `1/sqrt(lambda)`.
const CELL: f64 = 4.0;
/// Default near-field radius, in units of `1/sqrt(lambda)`.
pub const NEAR_FIELD: f64 = 30.0;
const SLOT_BITS: u32 = 20;
const SOURCE_TAG: u64 = 0;
const CHUNK: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopOutcome {
    pub hop: usize,
    /// Forwarding relay chosen at this hop; `None` when the hop failed.
    pub relay: Option<Point>,
    /// Cumulative progress `D_k` in meters.
    pub progress: f64,
    /// Slots used by this hop; 0 for hops after a stall.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub hops: Vec<HopOutcome>,
}

impl TrialOutcome {
    /// `D_k` for `k` in `0..=M`, with `D_0 = 0`.
    pub fn progress(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.hops[k - 1].progress
        }
    }

    pub fn diversity(&self) -> usize {
        self.hops.len()
    }

    /// Whether some setup hop gave up.
    pub fn stalled(&self) -> bool {
        let m = self.hops.len();
        self.hops[..m.saturating_sub(1)].iter().any(|h| h.relay.is_none())
    }
}

/// Monte Carlo PRD estimate with standard errors of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrdEstimate {
    pub prd: f64,
    pub prd_stderr: f64,
    pub trials: u64,
    /// `d_1 .. d_M`.
    pub progress: Vec<f64>,
    pub progress_stderr: Vec<f64>,
    /// Trials in which a setup hop exhausted its attempts.
    pub stalls: u64,
}

impl PrdEstimate {
    /// `d_{M-1}`, zero for `M = 1`.
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

/// Node realization of one trial, sorted by x, with the source included.
#[derive(Debug, Clone)]
pub struct Network {
    pos: Vec<Point>,
    tags: Vec<u64>,
    source: usize,
}

impl Network {
    /// Samples the trial's PPP on `window` and adds the source at the origin.
    /// Realizations for one `(seed, trial)` on different windows agree on
    /// the overlap.
    pub fn sample(lambda: f64, window: &Window, seed: u64, trial: u64) -> Result<Self> {
        let stream = Stream::new(seed, Purpose::Nodes).fork(&[trial]);
        let (nodes, tags) = sample_ppp_tiled(lambda, window, CELL / lambda.sqrt(), stream)?;
        Network::build(nodes.positions().to_vec(), tags, window)
    }

    /// Wraps an explicit node set; the source at the origin is added.
    pub fn from_nodes(nodes: &NodeSet) -> Result<Self> {
        let tags = (0..nodes.len() as u64).map(|i| mix64(i + 1)).collect();
        Network::build(nodes.positions().to_vec(), tags, nodes.window())
    }

    fn build(pos: Vec<Point>, tags: Vec<u64>, window: &Window) -> Result<Self> {
        if !window.contains(Point::ORIGIN) {
            return Err(Error::Configuration("the window must contain the source at the origin".into()));
        }
        let mut nodes: Vec<(Point, u64)> = pos.into_iter().zip(tags).collect();
        nodes.push((Point::ORIGIN, SOURCE_TAG));
        nodes.sort_unstable_by(|a, b| a.0.x.total_cmp(&b.0.x).then(a.1.cmp(&b.1)));
        let source = nodes
            .iter()
            .position(|&(q, t)| t == SOURCE_TAG && q == Point::ORIGIN)
            .unwrap_or(0);
        let (pos, tags) = nodes.into_iter().unzip();
        Ok(Network { pos, tags, source })
    }

    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    pub fn position(&self, i: usize) -> Point {
        self.pos[i]
    }

    pub fn source(&self) -> usize {
        self.source
    }
}

/// Radius beyond which a receiver decodes from any of `m` transmitters only
/// with total expected count `tail`, under the full-plane Rayleigh success
/// law `P(SIR >= t at r) = exp(-pi lambda p G t^delta r^2)`.
pub fn candidate_radius(
    lambda: f64,
    p: f64,
    alpha: f64,
    rate: f64,
    mode: CombiningMode,
    m: usize,
    tail: f64,
) -> Result<f64> {
    let delta = 2.0 / alpha;
    let kappa = PI * lambda * p * spatial_factor(alpha)?;
    // IRC needs one block with MI >= R / M; RC needs one SIR >= (2^R - 1) / M,
    // which is the stricter of the two. Both modes share the IRC radius.
    let per_block = match mode {
        CombiningMode::Nc => rate.exp2() - 1.0,
        CombiningMode::Irc | CombiningMode::Rc => (rate / m as f64).exp2() - 1.0,
    };
    let k = kappa * per_block.powf(delta);
    let log = (lambda * m as f64 * PI / (k * tail)).ln().max(0.0);
    Ok((log / k).sqrt())
}

struct KeyedByTag<'a> {
    slot: Stream,
    rx: u64,
    tags: &'a [u64],
}

impl FadingSource for KeyedByTag<'_> {
    #[inline]
    fn gain(&mut self, tx: usize) -> f64 {
        self.slot.exp1(&[self.tags[tx], self.rx])
    }
}

/// One transmission slot: who transmits, and lazily evaluated SIRs from the
/// slot's designated transmitter.
struct Slot {
    fading: Stream,
    tx: usize,
    is_tx: Vec<bool>,
    emitters: Vec<Emitter>,
    sir: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    window: Window,
    /// Only nodes in this x-range and below this |y| can matter.
    x_range: (f64, f64),
    y_max: f64,
    interference: InterferenceModel,
    candidate_radius: f64,
    threshold: f64,
}

impl Simulator {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let scale = 1.0 / cfg.lambda.sqrt();
        let near = cfg.near_field_radius.unwrap_or(NEAR_FIELD * scale);
        let rc = candidate_radius(
            cfg.lambda,
            cfg.p,
            cfg.alpha,
            cfg.rate,
            cfg.mode,
            cfg.diversity,
            cfg.candidate_tail,
        )?;
        let m = cfg.diversity as f64;
        let reach = m * rc + near;
        let auto = Window::new(-(near + rc), reach, -reach, reach)?;
        let window = match cfg.window {
            WindowSpec::Auto => auto,
            WindowSpec::Explicit(w) => {
                let fits = w.x_min <= -rc && w.x_max >= rc && w.y_min <= -rc && w.y_max >= rc;
                if !fits {
                    return Err(Error::Configuration(format!(
                        "window must contain the candidate disc of radius {rc:.3} m around the source"
                    )));
                }
                w
            }
        };
        let interference = if cfg.far_field {
            InterferenceModel::with_far_field(cfg.alpha, cfg.lambda * cfg.p, near)?
        } else {
            InterferenceModel::exact(cfg.alpha)?
        };
        let (x_range, y_max) = if cfg.far_field {
            ((auto.x_min, auto.x_max), reach)
        } else {
            ((f64::NEG_INFINITY, f64::INFINITY), f64::INFINITY)
        };
        Ok(Simulator {
            cfg: cfg.clone(),
            window,
            x_range,
            y_max,
            interference,
            candidate_radius: rc,
            threshold: threshold(cfg.mode, cfg.rate),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Window the simulator samples nodes on.
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn candidate_radius(&self) -> f64 {
        self.candidate_radius
    }

    pub fn interference(&self) -> &InterferenceModel {
        &self.interference
    }

    /// Whether outcomes depend only on nodes inside [`window`](Self::window)
    /// even when sampled on a larger one.
    fn window_free(&self) -> bool {
        self.cfg.far_field
    }

    pub fn trial(&self, trial: u64) -> Result<TrialOutcome> {
        let net = Network::sample(self.cfg.lambda, &self.window, self.cfg.seed, trial)?;
        self.run(&net, trial)
    }

    fn open_slot(&self, net: &Network, trial: u64, slot_id: u64, tx: usize) -> Slot {
        let roles = Stream::new(self.cfg.seed, Purpose::Roles).fork(&[trial, slot_id]);
        let fading = Stream::new(self.cfg.seed, Purpose::Fading).fork(&[trial, slot_id]);
        let n = net.len();
        let lo = net.pos.partition_point(|q| q.x < self.x_range.0);
        let hi = net.pos.partition_point(|q| q.x <= self.x_range.1);
        let mut is_tx = vec![false; n];
        let mut emitters = Vec::new();
        for i in lo..hi {
            let q = net.pos[i];
            if q.y.abs() > self.y_max {
                continue;
            }
            if i == tx {
                is_tx[i] = true;
            } else if roles.uniform(&[net.tags[i]]) < self.cfg.p {
                is_tx[i] = true;
                emitters.push(Emitter { id: i, pos: q });
            }
        }
        Slot {
            fading,
            tx,
            is_tx,
            emitters,
            sir: vec![f64::NAN; n],
        }
    }

    fn desired_gain(&self, net: &Network, slot: &Slot, v: usize) -> f64 {
        slot.fading.exp1(&[net.tags[slot.tx], net.tags[v]])
    }

    fn sir(&self, net: &Network, slot: &mut Slot, v: usize) -> Result<f64> {
        let cached = slot.sir[v];
        if !cached.is_nan() {
            return Ok(cached);
        }
        let mut fading = KeyedByTag {
            slot: slot.fading,
            rx: net.tags[v],
            tags: &net.tags,
        };
        let desired = Emitter {
            id: slot.tx,
            pos: net.pos[slot.tx],
        };
        let s = self
            .interference
            .sir_sorted(net.pos[v], desired, &slot.emitters, &mut fading)?
            .value();
        slot.sir[v] = s;
        Ok(s)
    }

    fn ceiling_term(&self, net: &Network, slot: &Slot, v: usize) -> f64 {
        if slot.is_tx[v] {
            return 0.0;
        }
        let g = self.desired_gain(net, slot, v);
        let d2 = net.pos[v].dist2(net.pos[slot.tx]);
        term_of(self.cfg.mode, self.interference.sir_ceiling(g, d2))
    }

    /// Farthest decoder with `x > floor`, scanning candidates by decreasing x.
    fn scan(&self, net: &Network, context: &mut VecDeque<Slot>, current: &mut Slot, floor: f64) -> Result<Option<usize>> {
        let combine = self.cfg.mode != CombiningMode::Nc;
        let mut anchors = vec![net.pos[current.tx]];
        if combine {
            anchors.extend(context.iter().map(|s| net.pos[s.tx]));
        }
        let rc = self.candidate_radius;
        let rc2 = rc * rc;
        let x_hi = anchors.iter().map(|a| a.x).fold(f64::NEG_INFINITY, f64::max) + rc;
        let start = net.pos.partition_point(|q| q.x <= x_hi);
        for v in (0..start).rev() {
            let q = net.pos[v];
            if q.x <= floor {
                break;
            }
            if current.is_tx[v] || !anchors.iter().any(|a| a.dist2(q) <= rc2) {
                continue;
            }
            let mut bound = self.ceiling_term(net, current, v);
            if combine {
                bound += context.iter().map(|s| self.ceiling_term(net, s, v)).sum::<f64>();
            }
            if bound < self.threshold {
                continue;
            }
            let mut total = term_of(self.cfg.mode, self.sir(net, current, v)?);
            if combine {
                for s in context.iter_mut() {
                    if total >= self.threshold {
                        break;
                    }
                    if !s.is_tx[v] {
                        total += term_of(self.cfg.mode, self.sir(net, s, v)?);
                    }
                }
            }
            if total >= self.threshold {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    /// Runs one trial on a given realization. `trial` keys the roles and
    /// fading.
    pub fn run(&self, net: &Network, trial: u64) -> Result<TrialOutcome> {
        let m = self.cfg.diversity;
        let mut context: VecDeque<Slot> = VecDeque::with_capacity(m);
        let mut hops = Vec::with_capacity(m);
        let mut transmitter = net.source;
        let mut floor = 0.0;
        for k in 1..=m {
            let allowed = if k < m { self.cfg.max_attempts } else { 1 };
            let mut found = None;
            let mut used = 0;
            for attempt in 0..allowed {
                used = attempt + 1;
                let slot_id = ((k as u64) << SLOT_BITS) | attempt as u64;
                let mut slot = self.open_slot(net, trial, slot_id, transmitter);
                if let Some(v) = self.scan(net, &mut context, &mut slot, floor)? {
                    found = Some((v, slot));
                    break;
                }
            }
            match found {
                Some((v, slot)) => {
                    floor = net.pos[v].x;
                    hops.push(HopOutcome {
                        hop: k,
                        relay: Some(net.pos[v]),
                        progress: floor,
                        attempts: used,
                    });
                    if m > 1 {
                        if context.len() == m - 1 {
                            context.pop_front();
                        }
                        context.push_back(slot);
                    }
                    transmitter = v;
                }
                None => {
                    hops.push(HopOutcome {
                        hop: k,
                        relay: None,
                        progress: floor,
                        attempts: used,
                    });
                    for j in k + 1..=m {
                        hops.push(HopOutcome {
                            hop: j,
                            relay: None,
                            progress: floor,
                            attempts: 0,
                        });
                    }
                    break;
                }
            }
        }
        Ok(TrialOutcome { hops })
    }

    /// Every node that decodes the first slot of the source, as
    /// `(node, progress)` with positive progress, in decreasing progress.
    pub fn first_hop_decoders(&self, net: &Network, trial: u64) -> Result<Vec<(usize, f64)>> {
        let mut slot = self.open_slot(net, trial, 1 << SLOT_BITS, net.source);
        let origin = net.pos[net.source];
        let rc2 = self.candidate_radius * self.candidate_radius;
        let start = net.pos.partition_point(|q| q.x <= origin.x + self.candidate_radius);
        let mut out = Vec::new();
        for v in (0..start).rev() {
            let q = net.pos[v];
            if q.x <= origin.x {
                break;
            }
            if slot.is_tx[v] || origin.dist2(q) > rc2 || self.ceiling_term(net, &slot, v) < self.threshold {
                continue;
            }
            if term_of(self.cfg.mode, self.sir(net, &mut slot, v)?) >= self.threshold {
                out.push((v, q.x - origin.x));
            }
        }
        Ok(out)
    }

    /// PRD sample of one trial: `R lambda p (D_M - D_{M-1})`.
    fn prd_sample(&self, outcome: &TrialOutcome) -> f64 {
        let m = outcome.diversity();
        self.cfg.rate * self.cfg.lambda * self.cfg.p * (outcome.progress(m) - outcome.progress(m - 1))
    }

    pub fn estimate(&self) -> Result<PrdEstimate> {
        estimate_many(std::slice::from_ref(self), self.cfg.trials)?
            .pop()
            .ok_or_else(|| Error::Contract("no estimate produced".into()))
    }
}

#[derive(Debug, Clone, Default)]
struct Moments {
    n: u64,
    prd: (f64, f64),
    d: Vec<(f64, f64)>,
    stalls: u64,
}

impl Moments {
    fn new(m: usize) -> Self {
        Moments {
            d: vec![(0.0, 0.0); m],
            ..Default::default()
        }
    }

    fn add(&mut self, prd: f64, outcome: &TrialOutcome) {
        self.n += 1;
        self.prd.0 += prd;
        self.prd.1 += prd * prd;
        for (k, acc) in self.d.iter_mut().enumerate() {
            let x = outcome.progress(k + 1);
            acc.0 += x;
            acc.1 += x * x;
        }
        self.stalls += outcome.stalled() as u64;
    }

    fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.prd.0 += other.prd.0;
        self.prd.1 += other.prd.1;
        for (a, b) in self.d.iter_mut().zip(&other.d) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self.stalls += other.stalls;
    }

    fn mean_stderr(&self, (s, s2): (f64, f64)) -> (f64, f64) {
        let n = self.n as f64;
        let mean = s / n;
        if self.n < 2 {
            return (mean, f64::NAN);
        }
        let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    fn finish(&self) -> PrdEstimate {
        let (prd, prd_stderr) = self.mean_stderr(self.prd);
        let (progress, progress_stderr) = self.d.iter().map(|&d| self.mean_stderr(d)).unzip();
        PrdEstimate {
            prd,
            prd_stderr,
            trials: self.n,
            progress,
            progress_stderr,
            stalls: self.stalls,
        }
    }
}

/// Estimates every simulator's PRD over the same `trials` trial indices.
///
/// Simulators sharing `lambda` and `seed` also share node realizations,
/// roles and fading wherever their keys coincide, so differences between
/// them carry little sampling noise. Simulators with similar windows run on
/// one realization sampled on the union of their windows. Trials are
/// processed in fixed chunks and reduced in chunk order: the result does not
/// depend on the number of threads.
pub fn estimate_many(sims: &[Simulator], trials: u64) -> Result<Vec<PrdEstimate>> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1", 0.0));
    }
    if sims.is_empty() {
        return Ok(Vec::new());
    }
    let groups = share_groups(sims);
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<Moments>> {
            let mut acc: Vec<Moments> = sims.iter().map(|s| Moments::new(s.cfg.diversity)).collect();
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                for (window, members) in &groups {
                    let first = &sims[members[0]];
                    let net = Network::sample(first.cfg.lambda, window, first.cfg.seed, t)?;
                    for &i in members {
                        let out = sims[i].run(&net, t)?;
                        acc[i].add(sims[i].prd_sample(&out), &out);
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total: Vec<Moments> = sims.iter().map(|s| Moments::new(s.cfg.diversity)).collect();
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().map(Moments::finish).collect())
}

/// Largest ratio of a shared window's area to its largest member's.
const SHARE_SLACK: f64 = 1.5;

fn union(a: &Window, b: &Window) -> Window {
    Window {
        x_min: a.x_min.min(b.x_min),
        x_max: a.x_max.max(b.x_max),
        y_min: a.y_min.min(b.y_min),
        y_max: a.y_max.max(b.y_max),
    }
}

/// Groups simulators that can run on one realization: same `lambda` and
/// `seed`, tolerant of larger windows, and with a union window at most
/// `SHARE_SLACK` times the largest member window. Members keep input order.
fn share_groups(sims: &[Simulator]) -> Vec<(Window, Vec<usize>)> {
    let mut order: Vec<usize> = (0..sims.len()).collect();
    order.sort_by(|&a, &b| sims[b].window.area().total_cmp(&sims[a].window.area()).then(a.cmp(&b)));
    let mut groups: Vec<(Window, f64, Vec<usize>)> = Vec::new();
    for i in order {
        let s = &sims[i];
        let slot = if s.window_free() {
            groups.iter().position(|(w, largest, members)| {
                let head = &sims[members[0]];
                head.window_free()
                    && head.cfg.lambda == s.cfg.lambda
                    && head.cfg.seed == s.cfg.seed
                    && union(w, &s.window).area() <= SHARE_SLACK * largest
            })
        } else {
            None
        };
        match slot {
            Some(g) => {
                groups[g].0 = union(&groups[g].0, &s.window);
                groups[g].2.push(i);
            }
            None => groups.push((s.window, s.window.area(), vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(w, _, mut members)| {
            members.sort_unstable();
            (w, members)
        })
        .collect()
}

/// First-hop contention outcomes over `trials` trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentionStats {
    pub trials: u64,
    pub bits: u32,
    pub d_max: f64,
    /// Trials with at least one decoder.
    pub contended: u64,
    pub mean_decoders: f64,
    /// Contended trials whose winner is the farthest decoder.
    pub exact_winner: u64,
    /// Contended trials ending with several equal codes.
    pub code_ties: u64,
    /// Mean progress of the farthest decoder, zero without decoders.
    pub mean_best_progress: f64,
    /// Mean progress of the contention winner, zero without decoders.
    pub mean_winner_progress: f64,
}

/// Runs the bit contention among the first-hop decoders of each trial and
/// compares its winner with the farthest decoder. `d_max` defaults to the
/// candidate radius, which bounds every decoder's progress.
pub fn contention_statistics(config: &SimConfig) -> Result<ContentionStats> {
    let sim = Simulator::new(config)?;
    let bits = config.contention_bits;
    let d_max = config.contention_d_max.unwrap_or(sim.candidate_radius);
    let per_trial: Vec<(usize, bool, bool, f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<(usize, bool, bool, f64, f64)> {
            let net = Network::sample(config.lambda, &sim.window, config.seed, t)?;
            let decoders = sim.first_hop_decoders(&net, t)?;
            let Some(&(best, best_progress)) = decoders.first() else {
                return Ok((0, false, false, 0.0, 0.0));
            };
            let clipped: Vec<(usize, f64)> = decoders.iter().map(|&(v, d)| (v, d.min(d_max))).collect();
            let mut rng = substream(config.seed, Purpose::Contention, &[t]);
            let winner = contention_winner(&clipped, bits, d_max, &mut rng)?.ok_or_else(|| {
                Error::Contract("contention among decoders produced no winner".into())
            })?;
            let top = quantize_progress(clipped[0].1, bits, d_max)?;
            let tied = clipped
                .iter()
                .filter(|&&(_, d)| quantize_progress(d, bits, d_max).is_ok_and(|q| q == top))
                .count()
                > 1;
            let winner_progress = decoders.iter().find(|&&(v, _)| v == winner).map_or(0.0, |&(_, d)| d);
            Ok((decoders.len(), winner == best, tied, best_progress, winner_progress))
        })
        .collect::<Result<_>>()?;
    let n = config.trials as f64;
    let mut stats = ContentionStats {
        trials: config.trials,
        bits,
        d_max,
        contended: 0,
        mean_decoders: 0.0,
        exact_winner: 0,
        code_ties: 0,
        mean_best_progress: 0.0,
        mean_winner_progress: 0.0,
    };
    for &(count, exact, tied, best, won) in &per_trial {
        if count > 0 {
            stats.contended += 1;
        }
        stats.exact_winner += u64::from(count > 0 && exact);
        stats.code_ties += u64::from(tied);
        stats.mean_decoders += count as f64 / n;
        stats.mean_best_progress += best / n;
        stats.mean_winner_progress += won / n;
    }
    Ok(stats)
}

/// Runs trial number `trial` of `config`.
pub fn simulate_trial(config: &SimConfig, trial: u64) -> Result<TrialOutcome> {
    Simulator::new(config)?.trial(trial)
}

/// PRD estimate over `config.trials` trials.
pub fn estimate_prd(config: &SimConfig) -> Result<PrdEstimate> {
    Simulator::new(config)?.estimate()
}
