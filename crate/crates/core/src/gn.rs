//! Gaussian-channel outer bounds, generalized degrees of freedom, and the
//! separability verdict. All logarithms are base 2.

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::region::{nonnegativity, Halfplane, RateRegion};
use crate::scalar::{Rational, Scalar};

pub const OUTER_BOUND_TAG: &str = "outer-bound-only";

/// Direct and interfering gain magnitudes of one subcarrier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnSubcarrier {
    g_d: f64,
    g_i: f64,
}

impl GnSubcarrier {
    pub fn new(g_d: f64, g_i: f64) -> Result<Self, String> {
        for g in [g_d, g_i] {
            if !g.is_finite() || g < 0.0 {
                return Err(format!("gain magnitude {g} must be finite and nonnegative"));
            }
        }
        Ok(GnSubcarrier { g_d, g_i })
    }

    /// Only magnitudes enter the bounds, so phases are dropped here.
    pub fn from_complex(g_d: Complex64, g_i: Complex64) -> Result<Self, String> {
        Self::new(g_d.norm(), g_i.norm())
    }

    pub fn g_d(&self) -> f64 {
        self.g_d
    }

    pub fn g_i(&self) -> f64 {
        self.g_i
    }

    fn direct_capacity(&self) -> f64 {
        (1.0 + self.g_d * self.g_d).log2()
    }
}

/// `Δ_G = Σ log(1 + (|gD| + |gI|)²) + log(1 + gD²/(1 + gI²)) − 2 log(1 + gD²)`
pub fn delta_g(cfgs: &[GnSubcarrier]) -> f64 {
    cfgs.iter()
        .map(|c| {
            let (d, i) = (c.g_d, c.g_i);
            (1.0 + (d + i).powi(2)).log2() + (1.0 + d * d / (1.0 + i * i)).log2()
                - 2.0 * c.direct_capacity()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GnBounds {
    pub per_user: f64,
    pub causal: f64,
    pub sum: f64,
}

pub fn gn_bounds(cfgs: &[GnSubcarrier], p: f64) -> GnBounds {
    let direct: f64 = cfgs.iter().map(GnSubcarrier::direct_capacity).sum();
    let per_user = cfgs
        .iter()
        .map(|c| {
            (1.0 - p) * c.direct_capacity()
                + p * (1.0 + c.g_d * c.g_d + c.g_i * c.g_i).log2()
        })
        .sum();
    let dg = delta_g(cfgs);
    GnBounds {
        per_user,
        causal: p * dg + (1.0 + p) * direct,
        sum: p * dg + 2.0 * direct,
    }
}

/// Outer-bound region with the same halfplane layout as the exact region.
pub fn gn_region(cfgs: &[GnSubcarrier], p: f64) -> RateRegion<f64> {
    let b = gn_bounds(cfgs, p);
    let mut hs = vec![
        Halfplane::new(1.0, 0.0, b.per_user, "per-user R1"),
        Halfplane::new(0.0, 1.0, b.per_user, "per-user R2"),
        Halfplane::new(1.0, p, b.causal, "causal R1 + pR2"),
        Halfplane::new(p, 1.0, b.causal, "causal R2 + pR1"),
        Halfplane::new(1.0, 1.0, b.sum, "sum R1 + R2"),
        Halfplane::new(1.0, 1.0, b.sum, "sum R2 + R1"),
    ];
    hs.extend(nonnegativity());
    let mut region = RateRegion::new(hs);
    region.tag = Some(OUTER_BOUND_TAG.to_string());
    region
}

/// `Δ_GDoF = Σ max(1, β) + (1 − β)⁺ − 2`
pub fn delta_gdof<T: Scalar>(betas: &[T]) -> T {
    let one = T::one();
    betas.iter().fold(T::zero(), |acc, b| {
        acc + T::max_of(one.clone(), b.clone())
            + T::max_of(one.clone() - b.clone(), T::zero())
            - T::from_i64(2)
    })
}

/// Interference exponents `β_j` and the burst probability.
#[derive(Clone, Debug, PartialEq)]
pub struct GdofProfile<T = Rational> {
    pub betas: Vec<T>,
    pub p: T,
}

impl<T: Scalar> GdofProfile<T> {
    pub fn new(betas: Vec<T>, p: T) -> Result<Self, String> {
        if betas.is_empty() {
            return Err("at least one subcarrier is required".into());
        }
        if betas.iter().any(|b| *b < T::zero()) {
            return Err("β must be nonnegative".into());
        }
        if p < T::zero() || p > T::one() {
            return Err("p must lie in [0, 1]".into());
        }
        Ok(GdofProfile { betas, p })
    }
}

/// `1 + min(pΔ/2, pΔ/(1+p)) / M`
pub fn gdof<T: Scalar>(profile: &GdofProfile<T>) -> T {
    let d = delta_gdof(&profile.betas);
    let p = profile.p.clone();
    let m = T::from_i64(profile.betas.len() as i64);
    let half = p.clone() * d.clone() / T::from_i64(2);
    let causal = p.clone() * d / (T::one() + p);
    T::one() + T::min_of(half, causal) / m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separability {
    Separable,
    RequiresCrossCoding,
    DegenerateSeparable,
}

impl Separability {
    pub fn as_str(&self) -> &'static str {
        match self {
            Separability::Separable => "separable",
            Separability::RequiresCrossCoding => "requires-cross-coding",
            Separability::DegenerateSeparable => "degenerate-separable",
        }
    }
}

/// Whether coding subcarriers independently reaches the symmetric capacity.
/// Accepts link ratios `α_j` or exponents `β_j` alike.
pub fn separability(ratios: &[Rational], p: &Rational) -> Separability {
    if p.is_zero() || p.is_one() {
        return Separability::DegenerateSeparable;
    }
    let two = Rational::from_integer(2.into());
    if ratios.iter().all(|a| *a <= two) || ratios.iter().all(|a| *a >= two) {
        Separability::Separable
    } else {
        Separability::RequiresCrossCoding
    }
}
