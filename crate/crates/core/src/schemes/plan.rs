//! Per-subcarrier level allocation shared by all multicarrier schemes.

use std::ops::Range;

use crate::capacity::delta;
use crate::channel::{Regime, SubcarrierConfig};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubcarrierPlan {
    pub cfg: SubcarrierConfig,
    pub regime: Regime,
    /// Transmitter levels carrying own fresh symbols in phase F.
    pub fresh: Vec<usize>,
    /// Transmitter levels that are never used.
    pub unused: Vec<usize>,
    /// Middle levels of a very strong subcarrier.
    pub helper: Vec<usize>,
    /// Interfered levels resolved by the helping mechanism.
    pub helped: usize,
}

impl SubcarrierPlan {
    fn new(cfg: SubcarrierConfig) -> Self {
        let (n, k) = (cfg.n(), cfg.k());
        let regime = cfg.regime();
        let (fresh, unused, helper) = match regime {
            Regime::Weak => ((0..n).collect(), Vec::new(), Vec::new()),
            Regime::Strong => ((0..n).collect(), (n..k).collect(), Vec::new()),
            Regime::VeryStrong => ((0..n).collect(), (k - n..k).collect(), (n..k - n).collect()),
        };
        SubcarrierPlan {
            cfg,
            regime,
            fresh,
            unused,
            helper,
            helped: 0,
        }
    }

    /// Number of own levels that face interference in phase F.
    pub fn interfered(&self) -> usize {
        let (n, k) = (self.cfg.n(), self.cfg.k());
        match self.regime {
            Regime::Weak => k,
            Regime::Strong => 2 * n - k,
            Regime::VeryStrong => 0,
        }
    }

    /// `(ñ, k̃) = (n − h, k − h)`
    pub fn effective(&self) -> (usize, usize) {
        (self.cfg.n() - self.helped, self.cfg.k() - self.helped)
    }

    /// Whether the phase F/R machine runs on the unhelped interfered levels.
    pub fn phase_active(&self) -> bool {
        self.interfered() > self.helped
    }

    /// Transmitter levels retransmitting learned interference in phase R.
    pub fn phase_levels(&self) -> Range<usize> {
        let (n, k, h) = (self.cfg.n(), self.cfg.k(), self.helped);
        if !self.phase_active() {
            return 0..0;
        }
        match self.regime {
            Regime::Weak => 0..k - h,
            Regime::Strong => k - n + h..n,
            Regime::VeryStrong => 0..0,
        }
    }

    /// Transmitter levels whose symbols land on the other receiver's helped
    /// levels when the cross link is active.
    pub fn ledger_levels(&self) -> Range<usize> {
        let (n, k, h) = (self.cfg.n(), self.cfg.k(), self.helped);
        match self.regime {
            Regime::Weak => k - h..k,
            Regime::Strong => k - n..k - n + h,
            Regime::VeryStrong => 0..0,
        }
    }

    /// Receiver levels designated as helped.
    pub fn helped_rx_levels(&self) -> Range<usize> {
        let (n, k, h) = (self.cfg.n(), self.cfg.k(), self.helped);
        match self.regime {
            Regime::Weak => n - h..n,
            Regime::Strong => k - n..k - n + h,
            Regime::VeryStrong => 0..0,
        }
    }

    /// Upper limit on `h` for this subcarrier.
    pub fn helped_cap(&self) -> usize {
        self.interfered()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemePlan {
    pub subcarriers: Vec<SubcarrierPlan>,
    pub delta: i64,
    /// `(subcarrier, level)` helper levels carrying helping combinations.
    pub help_levels: Vec<(usize, usize)>,
    /// Helper levels left over for bursty relaying.
    pub leftover_levels: Vec<(usize, usize)>,
}

impl SchemePlan {
    pub fn helped_total(&self) -> usize {
        self.subcarriers.iter().map(|s| s.helped).sum()
    }

    pub fn helper_total(&self) -> usize {
        self.help_levels.len() + self.leftover_levels.len()
    }

    pub fn leftover(&self) -> usize {
        self.leftover_levels.len()
    }
}

/// Helps every interfered level when there are enough helper levels;
/// otherwise assigns helped counts greedily in subcarrier order.
pub fn plan_levels(cfgs: &[SubcarrierConfig]) -> SchemePlan {
    let mut subcarriers: Vec<SubcarrierPlan> = cfgs.iter().map(|&c| SubcarrierPlan::new(c)).collect();
    let helpers: Vec<(usize, usize)> = subcarriers
        .iter()
        .enumerate()
        .flat_map(|(j, s)| s.helper.iter().map(move |&l| (j, l)))
        .collect();
    let mut budget = helpers.len();
    for s in &mut subcarriers {
        let h = s.helped_cap().min(budget);
        s.helped = h;
        budget -= h;
    }
    let used = helpers.len() - budget;
    SchemePlan {
        delta: delta(cfgs),
        help_levels: helpers[..used].to_vec(),
        leftover_levels: helpers[used..].to_vec(),
        subcarriers,
    }
}
