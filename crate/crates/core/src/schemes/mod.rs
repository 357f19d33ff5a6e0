//! Achievability schemes simulated over the prime-field channel.

pub mod decoder;
pub mod engine;
pub mod mds;
pub mod pipe;
pub mod plan;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::channel::SubcarrierConfig;
use crate::error::SchemeError;
use crate::scalar::{is_unit_interval, Rational};
use crate::state::JointStateDistribution;

pub use engine::{simulate, AuditReport, EngineConfig};
pub use mds::{mds_combine, mds_recover};
pub use plan::{plan_levels, SchemePlan, SubcarrierPlan};

/// Which rate pair a multicarrier run aims for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeTarget {
    Symmetric,
    D1,
    D2,
    Q1,
    Q2,
}

impl SchemeTarget {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeTarget::Symmetric => "symmetric",
            SchemeTarget::D1 => "D1",
            SchemeTarget::D2 => "D2",
            SchemeTarget::Q1 => "Q1",
            SchemeTarget::Q2 => "Q2",
        }
    }

    /// The user favoured by a separation target.
    pub fn leader(&self) -> Option<usize> {
        match self {
            SchemeTarget::Q1 => Some(0),
            SchemeTarget::Q2 => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" | "sym" => Ok(SchemeTarget::Symmetric),
            "d1" => Ok(SchemeTarget::D1),
            "d2" => Ok(SchemeTarget::D2),
            "q1" => Ok(SchemeTarget::Q1),
            "q2" => Ok(SchemeTarget::Q2),
            other => Err(format!("unknown target {other:?}")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Per subcarrier: slots spent in phase F while the phase machine runs.
    pub phase_f_slots: Vec<u64>,
    /// Per subcarrier: slots with an active phase machine.
    pub phase_slots: Vec<u64>,
    pub generations: u64,
    pub combinations: u64,
    /// Symbols still waiting in pipe queues at the end of the run.
    pub backlog: u64,
    pub pending_equations: [u64; 2],
    pub audit: Option<AuditReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub scheme: String,
    pub seed: u64,
    pub slots: u64,
    /// Correctly decoded payload symbols per user.
    pub delivered: [u64; 2],
    /// `delivered / slots`; one level in one slot carries one symbol.
    pub rates: [f64; 2],
    pub failures: u64,
    pub diagnostics: Diagnostics,
}

impl SimResult {
    /// Fraction of phase-machine slots spent in phase F, over all subcarriers.
    pub fn f_occupancy(&self) -> Option<f64> {
        let total: u64 = self.diagnostics.phase_slots.iter().sum();
        (total > 0).then(|| self.diagnostics.phase_f_slots.iter().sum::<u64>() as f64 / total as f64)
    }
}

fn iid(m: usize, p: &Rational) -> Result<JointStateDistribution, SchemeError> {
    if !is_unit_interval(p) {
        return Err(SchemeError::Precondition(format!("probability {p} outside [0, 1]")));
    }
    Ok(JointStateDistribution::make_iid(m, p.clone()))
}

fn single(n: usize, k: usize) -> Result<Vec<SubcarrierConfig>, SchemeError> {
    Ok(vec![SubcarrierConfig::checked(n, k).map_err(SchemeError::Precondition)?])
}

pub fn check_weak(n: usize, k: usize, slots: usize) -> Result<(), SchemeError> {
    if k > n || slots == 0 {
        return Err(SchemeError::Precondition(format!(
            "weak scheme needs k ≤ n and N ≥ 1, got ({n},{k}), N={slots}"
        )));
    }
    Ok(())
}

pub fn check_strong(n: usize, k: usize, slots: usize) -> Result<(), SchemeError> {
    if !(n < k && k <= 2 * n) || slots == 0 {
        return Err(SchemeError::Precondition(format!(
            "strong scheme needs n < k ≤ 2n and N ≥ 1, got ({n},{k}), N={slots}"
        )));
    }
    Ok(())
}

pub fn check_relay(n: usize, k: usize, block_len: usize, blocks: usize) -> Result<(), SchemeError> {
    if k <= 2 * n || block_len < 100 || blocks < 2 {
        return Err(SchemeError::Precondition(format!(
            "bursty relaying needs k > 2n, N_B ≥ 100 and at least 2 blocks, got ({n},{k}), N_B={block_len}, blocks={blocks}"
        )));
    }
    Ok(())
}

pub fn check_corner(target: SchemeTarget) -> Result<(), SchemeError> {
    if target == SchemeTarget::Symmetric {
        return Err(SchemeError::Precondition("corner target must be D1, D2, Q1 or Q2".into()));
    }
    Ok(())
}

/// Phase F/R machine for `k ≤ n` over `slots` slots.
pub fn run_single_weak(n: usize, k: usize, p: &Rational, slots: usize, rng: &mut dyn RngCore) -> Result<SimResult, SchemeError> {
    check_weak(n, k, slots)?;
    let config = EngineConfig::new(single(n, k)?, slots, 1, SchemeTarget::Symmetric);
    simulate(&config, &iid(1, p)?, "single-weak", rng.next_u64(), None)
}

/// Phase F/R machine for `n < k ≤ 2n` over `slots` slots.
pub fn run_single_strong(n: usize, k: usize, p: &Rational, slots: usize, rng: &mut dyn RngCore) -> Result<SimResult, SchemeError> {
    check_strong(n, k, slots)?;
    let config = EngineConfig::new(single(n, k)?, slots, 1, SchemeTarget::Symmetric);
    simulate(&config, &iid(1, p)?, "single-strong", rng.next_u64(), None)
}

/// Block bursty relaying for `k > 2n`.
pub fn run_bursty_relay(
    n: usize,
    k: usize,
    p: &Rational,
    block_len: usize,
    blocks: usize,
    rng: &mut dyn RngCore,
) -> Result<SimResult, SchemeError> {
    check_relay(n, k, block_len, blocks)?;
    let config = EngineConfig::new(single(n, k)?, block_len, blocks, SchemeTarget::Symmetric);
    simulate(&config, &iid(1, p)?, "bursty-relay", rng.next_u64(), None)
}

/// Symmetric-rate multicarrier scheme: helping, parallel composition and
/// leftover bursty relaying as planned by [`plan_levels`].
pub fn run_multicarrier(
    cfgs: &[SubcarrierConfig],
    dist: &JointStateDistribution,
    block_len: usize,
    blocks: usize,
    rng: &mut dyn RngCore,
) -> Result<SimResult, SchemeError> {
    let config = EngineConfig::new(cfgs.to_vec(), block_len, blocks, SchemeTarget::Symmetric);
    simulate(&config, dist, "multicarrier", rng.next_u64(), None)
}

/// Corner-point schemes: asymmetric relaying (D1/D2) and separation (Q1/Q2).
pub fn run_corner(
    cfgs: &[SubcarrierConfig],
    dist: &JointStateDistribution,
    target: SchemeTarget,
    block_len: usize,
    blocks: usize,
    rng: &mut dyn RngCore,
) -> Result<SimResult, SchemeError> {
    check_corner(target)?;
    let config = EngineConfig::new(cfgs.to_vec(), block_len, blocks, target);
    simulate(&config, dist, &format!("corner-{}", target.as_str()), rng.next_u64(), None)
}
