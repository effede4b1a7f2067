//! Cooperative multihop relaying: decoding rules, relay selection, the
//! distributed contention scheme and the Monte Carlo estimator.

mod contention;
mod sim;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contention::{contention_winner, quantize_progress};
pub use sim::{
    candidate_radius, contention_statistics, estimate_many, estimate_prd, simulate_trial, ContentionStats, HopOutcome, Network, PrdEstimate, Simulator,
    TrialOutcome, NEAR_FIELD,
};

/// How relays combine the blocks they have received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CombiningMode {
    /// No cooperation: decode from the current transmission only.
    #[serde(rename = "NC")]
    Nc,
    /// Incremental redundancy: accumulate mutual information.
    #[serde(rename = "IRC")]
    Irc,
    /// Repetition (maximal-ratio) combining: accumulate SIR.
    #[serde(rename = "RC")]
    Rc,
}

impl CombiningMode {
    pub const ALL: [CombiningMode; 3] = [CombiningMode::Nc, CombiningMode::Irc, CombiningMode::Rc];

    pub fn as_str(self) -> &'static str {
        match self {
            CombiningMode::Nc => "NC",
            CombiningMode::Irc => "IRC",
            CombiningMode::Rc => "RC",
        }
    }

    /// Checks the diversity order against the mode: NC is exactly 1,
    /// cooperative modes need at least 2.
    pub fn check_diversity(self, m: usize) -> Result<()> {
        match (self, m) {
            (CombiningMode::Nc, 1) => Ok(()),
            (CombiningMode::Nc, _) => Err(Error::Configuration(format!(
                "mode NC requires M = 1 (got M = {m})"
            ))),
            (_, m) if m >= 2 => Ok(()),
            (mode, m) => Err(Error::Configuration(format!(
                "mode {mode} requires M >= 2 (got M = {m})"
            ))),
        }
    }
}

impl fmt::Display for CombiningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombiningMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NC" => Ok(CombiningMode::Nc),
            "IRC" => Ok(CombiningMode::Irc),
            "RC" => Ok(CombiningMode::Rc),
            other => Err(Error::Key {
                key: "mode".into(),
                message: format!("expected one of NC, IRC, RC (got `{other}`)"),
            }),
        }
    }
}

/// Per-node decoding state: the terms received in recent hops (MI for IRC,
/// SIR for RC), oldest first. Hops during which the node transmitted leave
/// no term.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayAccumulator {
    node: usize,
    mode: CombiningMode,
    capacity: usize,
    terms: VecDeque<(usize, f64)>,
}

impl RelayAccumulator {
    /// Holds at most `diversity - 1` past terms.
    pub fn new(node: usize, mode: CombiningMode, diversity: usize) -> Self {
        RelayAccumulator {
            node,
            mode,
            capacity: diversity.saturating_sub(1),
            terms: VecDeque::new(),
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn mode(&self) -> CombiningMode {
        self.mode
    }

    /// Records the term received at `hop`, evicting the oldest one when the
    /// window is full.
    pub fn push(&mut self, hop: usize, term: f64) -> Result<()> {
        if !(term >= 0.0) {
            return Err(Error::param("term", "accumulated terms must be non-negative", term));
        }
        if self.capacity == 0 {
            return Ok(());
        }
        if self.terms.len() == self.capacity {
            self.terms.pop_front();
        }
        self.terms.push_back((hop, term));
        Ok(())
    }

    /// Hops for which this node holds a block.
    pub fn hops(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().map(|&(h, _)| h)
    }

    pub fn terms(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|&(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Decoding threshold on the accumulated quantity: `R` bits for NC/IRC,
/// `2^R - 1` for RC.
#[inline]
pub(crate) fn threshold(mode: CombiningMode, rate: f64) -> f64 {
    match mode {
        CombiningMode::Nc | CombiningMode::Irc => rate,
        CombiningMode::Rc => rate.exp2() - 1.0,
    }
}

/// Maps an SIR to the quantity the mode accumulates.
#[inline]
pub(crate) fn term_of(mode: CombiningMode, sir: f64) -> f64 {
    match mode {
        CombiningMode::Nc | CombiningMode::Irc => sir.ln_1p() / std::f64::consts::LN_2,
        CombiningMode::Rc => sir,
    }
}

/// Whether `acc` plus the current transmission's term reaches the decoding
/// threshold. `current` is an MI in bits for NC/IRC and an SIR for RC; NC
/// ignores the stored history.
pub fn decode_success(acc: &RelayAccumulator, current: f64, mode: CombiningMode, rate: f64) -> bool {
    let stored: f64 = match mode {
        CombiningMode::Nc => 0.0,
        _ => acc.terms().sum(),
    };
    stored + current >= threshold(mode, rate)
}

/// Candidate with the largest strictly positive progress; ties keep the
/// first.
pub fn select_forwarding_relay(candidates: &[(usize, f64)]) -> Option<usize> {
    candidates
        .iter()
        .filter(|(_, progress)| *progress > 0.0)
        .fold(None::<(usize, f64)>, |best, &(id, progress)| match best {
            Some((_, b)) if b >= progress => best,
            _ => Some((id, progress)),
        })
        .map(|(id, _)| id)
}
