//! Capacity region of the parallel linear deterministic channel with bursty
//! interference and feedback.
//!
//! With `Δ = Σ max(n,k) + (n−k)⁺ − 2n`, the region is
//!
//! ```text
//! R_i              ≤ pΔ + Σ n(1+p) − (n−k)⁺p      (per-user)
//! R_i + p·R_i'     ≤ pΔ + Σ n(1+p)                 (causal)
//! R_i + R_i'       ≤ pΔ + 2Σ n                     (sum, implied when Δ ≤ 0)
//! ```
//!
//! for both orderings of the users.

use crate::channel::SubcarrierConfig;
use crate::region::{nonnegativity, Corner, Halfplane, RateRegion};
use crate::scalar::{pos, Rational, Scalar};

/// Helper-minus-helped level budget.
pub fn delta(cfgs: &[SubcarrierConfig]) -> i64 {
    cfgs.iter()
        .map(|c| {
            let (n, k) = (c.n() as i64, c.k() as i64);
            n.max(k) + pos(n - k) - 2 * n
        })
        .sum()
}

pub fn total_n(cfgs: &[SubcarrierConfig]) -> i64 {
    cfgs.iter().map(|c| c.n() as i64).sum()
}

/// `Σ (n − k)⁺`
pub fn total_weak_excess(cfgs: &[SubcarrierConfig]) -> i64 {
    cfgs.iter().map(|c| pos(c.n() as i64 - c.k() as i64)).sum()
}

/// Right-hand sides of the three bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds<T> {
    pub per_user: T,
    pub causal: T,
    pub sum: T,
}

pub fn bounds<T: Scalar>(cfgs: &[SubcarrierConfig], p: &T) -> Bounds<T> {
    let d = T::from_i64(delta(cfgs));
    let n = T::from_i64(total_n(cfgs));
    let excess = T::from_i64(total_weak_excess(cfgs));
    let one = T::one();
    let pd = p.clone() * d;
    Bounds {
        per_user: pd.clone() + n.clone() * (one.clone() + p.clone()) - excess * p.clone(),
        causal: pd.clone() + n.clone() * (one + p.clone()),
        sum: pd + T::from_i64(2) * n,
    }
}

/// The region with both user orderings of every bound plus nonnegativity.
/// The sum bound is flagged inactive when `Δ ≤ 0`.
pub fn region_generic<T: Scalar>(cfgs: &[SubcarrierConfig], p: T) -> RateRegion<T> {
    let b = bounds(cfgs, &p);
    let (zero, one) = (T::zero(), T::one());
    let sum_active = delta(cfgs) > 0;
    let mut hs = vec![
        Halfplane::new(one.clone(), zero.clone(), b.per_user.clone(), "per-user R1"),
        Halfplane::new(zero.clone(), one.clone(), b.per_user, "per-user R2"),
        Halfplane::new(one.clone(), p.clone(), b.causal.clone(), "causal R1 + pR2"),
        Halfplane::new(p.clone(), one.clone(), b.causal, "causal R2 + pR1"),
        Halfplane::new(one.clone(), one.clone(), b.sum.clone(), "sum R1 + R2"),
        Halfplane::new(one.clone(), one, b.sum, "sum R2 + R1"),
    ];
    hs[4].active = sum_active;
    hs[5].active = sum_active;
    hs.extend(nonnegativity());
    let mut region = RateRegion::new(hs);
    region.corners = corner_points(cfgs, &p);
    region
}

pub fn region(cfgs: &[SubcarrierConfig], p: &Rational) -> RateRegion<Rational> {
    region_generic(cfgs, p.clone())
}

pub const CORNER_LABELS: [&str; 8] = ["P1", "Q1", "D1", "R_C", "R_NC", "D2", "Q2", "P2"];

/// The eight labeled points, each flagged with whether it is a corner for
/// the sign of `Δ`: `D1`, `D2`, `R_NC` need `Δ ≥ 0`, `R_C` needs `Δ ≤ 0`.
pub fn corner_points<T: Scalar>(cfgs: &[SubcarrierConfig], p: &T) -> Vec<Corner<T>> {
    let d = delta(cfgs);
    let dt = T::from_i64(d);
    let n = T::from_i64(total_n(cfgs));
    let excess = T::from_i64(total_weak_excess(cfgs));
    let b = bounds(cfgs, p);
    let one = T::one();
    let r_c = p.clone() / (one.clone() + p.clone()) * dt.clone() + n.clone();
    let r_nc = p.clone() / T::from_i64(2) * dt.clone() + n.clone();
    let d_high = p.clone() * dt + n.clone();
    let corner = |label: &str, r1: T, r2: T, applicable: bool| Corner {
        label: label.to_string(),
        r1,
        r2,
        applicable,
    };
    vec![
        corner("P1", b.per_user.clone(), T::zero(), true),
        corner("Q1", b.per_user.clone(), excess.clone(), true),
        corner("D1", d_high.clone(), n.clone(), d >= 0),
        corner("R_C", r_c.clone(), r_c, d <= 0),
        corner("R_NC", r_nc.clone(), r_nc, d >= 0),
        corner("D2", n.clone(), d_high, d >= 0),
        corner("Q2", excess, b.per_user.clone(), true),
        corner("P2", T::zero(), b.per_user, true),
    ]
}

/// `Σn + min(pΔ/2, pΔ/(1+p))`
pub fn sym_capacity_generic<T: Scalar>(cfgs: &[SubcarrierConfig], p: &T) -> T {
    let dt = T::from_i64(delta(cfgs));
    let n = T::from_i64(total_n(cfgs));
    let half = p.clone() * dt.clone() / T::from_i64(2);
    let causal = p.clone() * dt / (T::one() + p.clone());
    n + T::min_of(half, causal)
}

pub fn sym_capacity(cfgs: &[SubcarrierConfig], p: &Rational) -> Rational {
    sym_capacity_generic(cfgs, p)
}

/// Per-user achievable symmetric rate of a single subcarrier run on its own.
pub fn single_carrier_rate<T: Scalar>(cfg: SubcarrierConfig, p: &T) -> T {
    sym_capacity_generic(&[cfg], p)
}
