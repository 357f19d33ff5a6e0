//! Repeated seeded trials, confidence intervals, and comparison against the
//! capacity formulas and the outer-bound region.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::capacity::{corner_points, sym_capacity, total_n};
use crate::channel::{Regime, SubcarrierConfig};
use crate::error::SchemeError;
use crate::region::RateRegion;
use crate::scalar::{int, Rational};
use crate::schemes::{
    check_corner, check_relay, check_strong, check_weak, simulate, EngineConfig, SchemeTarget, SimResult,
};
use crate::state::JointStateDistribution;

/// Environment variable capping the number of trial workers.
pub const THREADS_ENV: &str = "BIL_THREADS";

/// Everything needed to run one trial of a scheme.
#[derive(Clone, Debug)]
pub enum SchemeSpec {
    SingleWeak { n: usize, k: usize, p: Rational, slots: usize },
    SingleStrong { n: usize, k: usize, p: Rational, slots: usize },
    BurstyRelay { n: usize, k: usize, p: Rational, block_len: usize, blocks: usize },
    Multicarrier { cfgs: Vec<SubcarrierConfig>, dist: JointStateDistribution, block_len: usize, blocks: usize },
    Corner {
        cfgs: Vec<SubcarrierConfig>,
        dist: JointStateDistribution,
        target: SchemeTarget,
        block_len: usize,
        blocks: usize,
    },
}

impl SchemeSpec {
    /// Picks the single-carrier scheme matching the regime of `(n, k)`.
    /// `slots` is split into blocks only for bursty relaying.
    pub fn single(n: usize, k: usize, p: Rational, block_len: usize, blocks: usize) -> Self {
        match SubcarrierConfig::new(n, k).regime() {
            Regime::Weak => SchemeSpec::SingleWeak { n, k, p, slots: block_len * blocks },
            Regime::Strong => SchemeSpec::SingleStrong { n, k, p, slots: block_len * blocks },
            Regime::VeryStrong => SchemeSpec::BurstyRelay { n, k, p, block_len, blocks },
        }
    }

    pub fn name(&self) -> String {
        match self {
            SchemeSpec::SingleWeak { .. } => "single-weak".into(),
            SchemeSpec::SingleStrong { .. } => "single-strong".into(),
            SchemeSpec::BurstyRelay { .. } => "bursty-relay".into(),
            SchemeSpec::Multicarrier { .. } => "multicarrier".into(),
            SchemeSpec::Corner { target, .. } => format!("corner-{}", target.as_str()),
        }
    }

    pub fn cfgs(&self) -> Vec<SubcarrierConfig> {
        match self {
            SchemeSpec::SingleWeak { n, k, .. }
            | SchemeSpec::SingleStrong { n, k, .. }
            | SchemeSpec::BurstyRelay { n, k, .. } => vec![SubcarrierConfig::new(*n, *k)],
            SchemeSpec::Multicarrier { cfgs, .. } | SchemeSpec::Corner { cfgs, .. } => cfgs.clone(),
        }
    }

    pub fn distribution(&self) -> JointStateDistribution {
        match self {
            SchemeSpec::SingleWeak { p, .. } | SchemeSpec::SingleStrong { p, .. } | SchemeSpec::BurstyRelay { p, .. } => {
                JointStateDistribution::make_iid(1, p.clone())
            }
            SchemeSpec::Multicarrier { dist, .. } | SchemeSpec::Corner { dist, .. } => dist.clone(),
        }
    }

    pub fn p(&self) -> Rational {
        self.distribution().p().clone()
    }

    pub fn target(&self) -> SchemeTarget {
        match self {
            SchemeSpec::Corner { target, .. } => *target,
            _ => SchemeTarget::Symmetric,
        }
    }

    /// `(N_B, blocks)`; phase schemes run one block of `N` slots.
    pub fn blocks(&self) -> (usize, usize) {
        match self {
            SchemeSpec::SingleWeak { slots, .. } | SchemeSpec::SingleStrong { slots, .. } => (*slots, 1),
            SchemeSpec::BurstyRelay { block_len, blocks, .. }
            | SchemeSpec::Multicarrier { block_len, blocks, .. }
            | SchemeSpec::Corner { block_len, blocks, .. } => (*block_len, *blocks),
        }
    }

    /// The same scheme with `N` (phase schemes) or `N_B` replaced by `size`.
    pub fn resized(&self, size: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            SchemeSpec::SingleWeak { slots, .. } | SchemeSpec::SingleStrong { slots, .. } => *slots = size,
            SchemeSpec::BurstyRelay { block_len, .. }
            | SchemeSpec::Multicarrier { block_len, .. }
            | SchemeSpec::Corner { block_len, .. } => *block_len = size,
        }
        out
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        match self {
            SchemeSpec::SingleWeak { n, k, slots, .. } => check_weak(*n, *k, *slots),
            SchemeSpec::SingleStrong { n, k, slots, .. } => check_strong(*n, *k, *slots),
            SchemeSpec::BurstyRelay { n, k, block_len, blocks, .. } => check_relay(*n, *k, *block_len, *blocks),
            SchemeSpec::Multicarrier { .. } => Ok(()),
            SchemeSpec::Corner { target, .. } => check_corner(*target),
        }
    }

    /// Rate pair the scheme is designed to approach.
    pub fn formula(&self) -> [Rational; 2] {
        let cfgs = self.cfgs();
        let p = self.p();
        match self.target() {
            SchemeTarget::Symmetric => {
                let c = sym_capacity(&cfgs, &p);
                [c.clone(), c]
            }
            target => {
                let corner = corner_points(&cfgs, &p)
                    .into_iter()
                    .find(|c| c.label == target.as_str())
                    .expect("every target names a labeled point");
                [corner.r1, corner.r2]
            }
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        let (block_len, blocks) = self.blocks();
        EngineConfig::new(self.cfgs(), block_len, blocks, self.target())
    }

    pub fn run(&self, seed: u64) -> Result<SimResult, SchemeError> {
        self.validate()?;
        simulate(&self.engine_config(), &self.distribution(), &self.name(), seed, None)
    }
}

/// Seed of trial `index` under `master`: one ChaCha stream per trial, so the
/// randomness of a trial does not depend on how many trials run.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Worker count: the machine's parallelism, capped by `BIL_THREADS`.
pub fn worker_threads() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap > 0 => cap.min(available),
        _ => available,
    }
}

#[derive(Clone, Debug)]
pub struct Estimate {
    pub mean: [f64; 2],
    /// Half-width of the normal-approximation 95% interval.
    pub ci: [f64; 2],
    pub trials: Vec<SimResult>,
}

impl Estimate {
    pub fn from_trials(trials: Vec<SimResult>) -> Self {
        let n = trials.len() as f64;
        let mut mean = [0.0; 2];
        let mut ci = [0.0; 2];
        for u in 0..2 {
            mean[u] = trials.iter().map(|t| t.rates[u]).sum::<f64>() / n;
            if trials.len() > 1 {
                let var = trials.iter().map(|t| (t.rates[u] - mean[u]).powi(2)).sum::<f64>() / (n - 1.0);
                ci[u] = 1.96 * var.sqrt() / n.sqrt();
            }
        }
        Estimate { mean, ci, trials }
    }

    pub fn failures(&self) -> u64 {
        self.trials.iter().map(|t| t.failures).sum()
    }
}

/// Runs `trials` independent trials of `spec` in parallel; the result is a
/// function of `(spec, trials, master_seed)` only.
pub fn estimate_rates(spec: &SchemeSpec, trials: usize, master_seed: u64) -> Result<Estimate, SchemeError> {
    if trials == 0 {
        return Err(SchemeError::Precondition("at least one trial is required".into()));
    }
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| SchemeError::Internal(format!("thread pool: {e}")))?;
    let results: Result<Vec<SimResult>, SchemeError> = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|i| spec.run(trial_seed(master_seed, i)))
            .collect()
    });
    Ok(Estimate::from_trials(results?))
}

/// Default statistical margin: 1% of `Σ n_j`.
pub fn default_margin(cfgs: &[SubcarrierConfig]) -> Rational {
    int(total_n(cfgs)) / int(100)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCheck {
    pub passed: bool,
    /// The rate pair after subtracting the margin from both coordinates.
    pub shrunk: [f64; 2],
    /// `(label, b − a·r)` per halfplane at the shrunk point.
    pub slacks: Vec<(String, f64)>,
    pub violated: Option<String>,
}

/// Whether `rates` (for instance [`SimResult::rates`] or an [`Estimate`]
/// mean), with `margin` subtracted from each coordinate, lies in `region`.
pub fn verify_against_region(rates: [f64; 2], region: &RateRegion<Rational>, margin: &Rational) -> RegionCheck {
    let zero = Rational::from_integer(0.into());
    let shrink = |r: f64| {
        let r = Rational::from_float(r).unwrap_or_else(|| zero.clone());
        let s = r - margin.clone();
        if s < zero {
            zero.clone()
        } else {
            s
        }
    };
    let (r1, r2) = (shrink(rates[0]), shrink(rates[1]));
    let membership = region.contains(&r1, &r2);
    let slacks = region
        .halfplanes
        .iter()
        .zip(&membership.slacks)
        .map(|(h, s)| (h.label.clone(), crate::scalar::Scalar::to_f64(s)))
        .collect();
    RegionCheck {
        passed: membership.inside,
        shrunk: [crate::scalar::Scalar::to_f64(&r1), crate::scalar::Scalar::to_f64(&r2)],
        slacks,
        violated: membership.first_violation().map(|i| region.halfplanes[i].label.clone()),
    }
}

/// Largest relative deviation of `mean` from `formula` over both users;
/// absolute where the formula is zero.
pub fn relative_gap(mean: [f64; 2], formula: &[Rational; 2]) -> f64 {
    (0..2)
        .map(|u| {
            let f = crate::scalar::Scalar::to_f64(&formula[u]);
            if f > 0.0 {
                (mean[u] - f).abs() / f
            } else {
                mean[u].abs()
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub size: usize,
    pub mean: [f64; 2],
    /// Largest absolute deviation from the formula over both users.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// Gaps shrink with size, allowing a single inversion.
    pub monotone: bool,
}

pub fn convergence_sweep(
    spec: &SchemeSpec,
    sizes: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<Sweep, SchemeError> {
    if sizes.len() < 2 {
        return Err(SchemeError::Precondition("a sweep needs at least two sizes".into()));
    }
    let formula = spec.formula().map(|f| crate::scalar::Scalar::to_f64(&f));
    let mut rows = Vec::new();
    for &size in sizes {
        let est = estimate_rates(&spec.resized(size), trials, master_seed)?;
        let gap = (0..2).map(|u| (est.mean[u] - formula[u]).abs()).fold(0.0, f64::max);
        rows.push(SweepRow { size, mean: est.mean, gap });
    }
    let inversions = rows.windows(2).filter(|w| w[1].gap > w[0].gap).count();
    Ok(Sweep { monotone: inversions <= 1, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::region;
    use crate::scalar::rat;

    fn toy() -> Vec<SubcarrierConfig> {
        vec![SubcarrierConfig::new(1, 1), SubcarrierConfig::new(1, 3)]
    }

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        assert_eq!(trial_seed(9, 3), trial_seed(9, 3));
        assert_ne!(trial_seed(9, 3), trial_seed(9, 4));
        assert_ne!(trial_seed(9, 3), trial_seed(10, 3));
    }

    #[test]
    fn region_verdicts() {
        let r = region(&toy(), &rat(1, 2));
        let margin = default_margin(&toy());
        assert_eq!(margin, rat(1, 50));
        assert!(verify_against_region([0.0, 0.0], &r, &margin).passed);
        let check = verify_against_region([2.0, 2.0], &r, &margin);
        assert!(check.passed);
        let causal = check.slacks.iter().find(|(l, _)| l.starts_with("causal")).unwrap();
        assert!(causal.1 < 0.1);
        let bad = verify_against_region([3.0, 3.0], &r, &margin);
        assert!(!bad.passed);
        assert!(bad.violated.is_some());
    }

    #[test]
    fn zero_probability_has_no_variance() {
        let spec = SchemeSpec::single(2, 1, rat(0, 1), 500, 1);
        let est = estimate_rates(&spec, 3, 1).unwrap();
        assert_eq!(est.mean, [2.0, 2.0]);
        assert_eq!(est.ci, [0.0, 0.0]);
    }

    #[test]
    fn estimates_are_deterministic() {
        let spec = SchemeSpec::single(1, 1, rat(1, 2), 2000, 1);
        let a = estimate_rates(&spec, 4, 77).unwrap();
        let b = estimate_rates(&spec, 4, 77).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.trials, b.trials);
    }

    #[test]
    fn formulas_for_targets() {
        let ex2 = vec![SubcarrierConfig::new(1, 1), SubcarrierConfig::new(1, 4)];
        let spec = SchemeSpec::Corner {
            dist: JointStateDistribution::make_iid(2, rat(1, 2)),
            cfgs: ex2,
            target: SchemeTarget::D1,
            block_len: 100,
            blocks: 2,
        };
        assert_eq!(spec.formula(), [rat(5, 2), int(2)]);
        let q1 = SchemeSpec::Corner {
            dist: JointStateDistribution::make_iid(1, rat(1, 2)),
            cfgs: vec![SubcarrierConfig::new(2, 1)],
            target: SchemeTarget::Q1,
            block_len: 100,
            blocks: 2,
        };
        assert_eq!(q1.formula(), [int(2), int(1)]);
        assert_eq!(SchemeSpec::single(1, 3, rat(1, 2), 100, 2).formula(), [rat(5, 4), rat(5, 4)]);
    }

    #[test]
    fn sweep_needs_two_sizes() {
        let spec = SchemeSpec::single(2, 1, rat(0, 1), 10, 1);
        assert!(convergence_sweep(&spec, &[10], 1, 0).is_err());
        let sweep = convergence_sweep(&spec, &[10, 20, 40], 1, 0).unwrap();
        assert!(sweep.rows.iter().all(|r| r.gap == 0.0));
        assert!(sweep.monotone);
    }
}
