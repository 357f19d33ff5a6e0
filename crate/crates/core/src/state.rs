//! Joint interference-state process across subcarriers.
//!
//! A slot's state is a vector `s ∈ {0,1}^M`; `s_j = 1` means the cross link
//! of subcarrier `j` is active at both receivers during that slot. States are
//! drawn i.i.d. over time from an arbitrary joint pmf whose marginals all
//! equal `p`.
//!
//! State vectors are stored as `M`-bit integers with subcarrier 1 in the most
//! significant position, so the bitstring `"10"` means only subcarrier 1 is
//! interfered.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{ParseError, StateError};
use crate::scalar::{format_rational, parse_rational, rational_from_json, Rational};

pub const MAX_SUBCARRIERS: usize = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVector {
    bits: u64,
    m: u8,
}

impl StateVector {
    pub fn from_bits(bits: u64, m: usize) -> Self {
        debug_assert!(m <= MAX_SUBCARRIERS && (m == 64 || bits >> m == 0));
        StateVector { bits, m: m as u8 }
    }

    pub fn from_flags(flags: &[bool]) -> Self {
        let bits = flags
            .iter()
            .fold(0u64, |acc, &f| (acc << 1) | u64::from(f));
        StateVector::from_bits(bits, flags.len())
    }

    pub fn zeros(m: usize) -> Self {
        StateVector::from_bits(0, m)
    }

    pub fn ones(m: usize) -> Self {
        StateVector::from_bits(low_mask(m), m)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.m as usize
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    /// Interference indicator of subcarrier `j` (0-based).
    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.bits >> (self.m as usize - 1 - j)) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len())
            .map(|j| if self.get(j) { '1' } else { '0' })
            .collect()
    }

    pub fn parse(s: &str) -> Result<Self, ParseError> {
        if s.is_empty() || s.len() > MAX_SUBCARRIERS || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(ParseError::StateKey(s.to_string()));
        }
        Ok(StateVector::from_flags(
            &s.chars().map(|c| c == '1').collect::<Vec<_>>(),
        ))
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S({})", self.to_bitstring())
    }
}

fn low_mask(m: usize) -> u64 {
    if m >= 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// How the probabilities were supplied; binary64 input is validated with a
/// `1e-12` tolerance instead of exact equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Exact,
    Binary64,
}

const BINARY64_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct JointStateDistribution {
    m: usize,
    p: Rational,
    pmf: BTreeMap<u64, Rational>,
    precision: Precision,
    kind: DistributionKind,
}

/// Provenance tag carried into reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistributionKind {
    Iid,
    Identical,
    Custom,
}

impl DistributionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistributionKind::Iid => "iid",
            DistributionKind::Identical => "identical",
            DistributionKind::Custom => "custom",
        }
    }
}

impl JointStateDistribution {
    /// Builds a distribution without checking it; see [`Self::validate`].
    pub fn from_parts(
        m: usize,
        p: Rational,
        pmf: impl IntoIterator<Item = (StateVector, Rational)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (s, w) in pmf {
            *map.entry(s.bits()).or_insert_with(Rational::zero) += w;
        }
        JointStateDistribution {
            m,
            p,
            pmf: map,
            precision: Precision::Exact,
            kind: DistributionKind::Custom,
        }
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    /// Independent subcarriers, each interfered with probability `p`.
    pub fn make_iid(m: usize, p: Rational) -> Self {
        assert!((1..=24).contains(&m), "make_iid supports 1..=24 subcarriers");
        let q = Rational::one() - &p;
        let mut pmf = BTreeMap::new();
        for bits in 0..(1u64 << m) {
            let ones = bits.count_ones() as usize;
            let w = num_traits::pow(p.clone(), ones) * num_traits::pow(q.clone(), m - ones);
            if !w.is_zero() {
                pmf.insert(bits, w);
            }
        }
        JointStateDistribution {
            m,
            p,
            pmf,
            precision: Precision::Exact,
            kind: DistributionKind::Iid,
        }
    }

    /// Fully correlated states: every subcarrier is interfered together.
    pub fn make_identical(m: usize, p: Rational) -> Self {
        assert!((1..=MAX_SUBCARRIERS).contains(&m));
        let mut pmf = BTreeMap::new();
        let q = Rational::one() - &p;
        if !q.is_zero() {
            pmf.insert(0, q);
        }
        if !p.is_zero() {
            pmf.insert(low_mask(m), p.clone());
        }
        JointStateDistribution {
            m,
            p,
            pmf,
            precision: Precision::Exact,
            kind: DistributionKind::Identical,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn probability(&self, s: StateVector) -> Rational {
        self.pmf.get(&s.bits()).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (StateVector, &Rational)> + '_ {
        let m = self.m;
        self.pmf
            .iter()
            .filter(|(_, w)| !w.is_zero())
            .map(move |(&b, w)| (StateVector::from_bits(b, m), w))
    }

    /// `P(S_j = 1)` for subcarrier `j` (0-based).
    pub fn marginal(&self, j: usize) -> Rational {
        self.pmf
            .iter()
            .filter(|(&b, _)| StateVector::from_bits(b, self.m).get(j))
            .fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    fn close(&self, a: &Rational, b: &Rational) -> bool {
        match self.precision {
            Precision::Exact => a == b,
            Precision::Binary64 => {
                (a - b).abs().to_f64().is_some_and(|d| d <= BINARY64_TOLERANCE)
            }
        }
    }

    pub fn validate(&self) -> Result<(), StateError> {
        if self.m == 0 || self.m > MAX_SUBCARRIERS {
            return Err(StateError::Malformed(format!("M = {} out of range", self.m)));
        }
        if self.pmf.is_empty() {
            return Err(StateError::Malformed("empty pmf".into()));
        }
        if !crate::scalar::is_unit_interval(&self.p) {
            return Err(StateError::Malformed(format!(
                "p = {} outside [0,1]",
                format_rational(&self.p)
            )));
        }
        let mut total = Rational::zero();
        for (&bits, w) in &self.pmf {
            if bits & !low_mask(self.m) != 0 {
                return Err(StateError::Malformed(format!(
                    "state {bits:#b} does not fit in {} subcarriers",
                    self.m
                )));
            }
            if w.is_negative() || *w > Rational::one() {
                return Err(StateError::ProbabilityOutOfRange {
                    state: StateVector::from_bits(bits, self.m).to_bitstring(),
                });
            }
            total += w;
        }
        if !self.close(&total, &Rational::one()) {
            return Err(StateError::MassDeficit {
                total: format_rational(&total),
            });
        }
        for j in 0..self.m {
            let marginal = self.marginal(j);
            if !self.close(&marginal, &self.p) {
                return Err(StateError::MarginalMismatch {
                    subcarrier: j + 1,
                    marginal: format_rational(&marginal),
                    expected: format_rational(&self.p),
                });
            }
        }
        Ok(())
    }

    pub fn sampler(&self) -> Result<StateSampler, StateError> {
        self.validate()?;
        let mut keys = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = Rational::zero();
        for (s, w) in self.support() {
            acc += w;
            keys.push(s.bits());
            cumulative.push(acc.to_f64().unwrap_or(1.0));
        }
        if let Some(last) = cumulative.last_mut() {
            *last = f64::INFINITY;
        }
        Ok(StateSampler {
            m: self.m,
            keys,
            cumulative,
        })
    }

    /// Fractional partition `G(E) = P(S = s_E) / p` over the nonempty
    /// support, with the per-subcarrier coverage sums.
    pub fn fractional_partition(&self) -> Result<FractionalPartition, StateError> {
        if self.p.is_zero() {
            return Err(StateError::UndefinedPartition);
        }
        let weights: BTreeMap<u64, Rational> = self
            .support()
            .filter(|(s, _)| s.bits() != 0)
            .map(|(s, w)| (s.bits(), w / &self.p))
            .collect();
        let coverage = (0..self.m)
            .map(|j| {
                weights
                    .iter()
                    .filter(|(&b, _)| StateVector::from_bits(b, self.m).get(j))
                    .fold(Rational::zero(), |acc, (_, w)| acc + w)
            })
            .collect();
        Ok(FractionalPartition {
            m: self.m,
            weights,
            coverage,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pmf: serde_json::Map<String, serde_json::Value> = self
            .support()
            .map(|(s, w)| (s.to_bitstring(), serde_json::Value::String(format_rational(w))))
            .collect();
        serde_json::json!({
            "M": self.m,
            "p": format_rational(&self.p),
            "pmf": pmf,
        })
    }

    /// Reads either the explicit form `{"M", "p", "pmf"}` or the shorthand
    /// `{"kind": "iid" | "identical", "M", "p"}`. The result is validated.
    pub fn from_json(v: &serde_json::Value) -> Result<Self, StateError> {
        let obj = v
            .as_object()
            .ok_or_else(|| StateError::Malformed("distribution must be an object".into()))?;
        let m = obj
            .get("M")
            .and_then(|m| m.as_u64())
            .ok_or_else(|| StateError::Malformed("missing integer field M".into()))?
            as usize;
        let p_value = obj
            .get("p")
            .ok_or_else(|| StateError::Malformed("missing field p".into()))?;
        let p = rational_from_json(p_value)?;
        let precision = if p_value.is_f64() {
            Precision::Binary64
        } else {
            Precision::Exact
        };
        if m == 0 || m > MAX_SUBCARRIERS {
            return Err(StateError::Malformed(format!("M = {m} out of range")));
        }
        let dist = match obj.get("kind").and_then(|k| k.as_str()) {
            Some("iid") => {
                if m > 24 {
                    return Err(StateError::Malformed("iid shorthand supports M <= 24".into()));
                }
                if !crate::scalar::is_unit_interval(&p) {
                    return Err(StateError::Malformed("p outside [0,1]".into()));
                }
                JointStateDistribution::make_iid(m, p)
            }
            Some("identical") => {
                if !crate::scalar::is_unit_interval(&p) {
                    return Err(StateError::Malformed("p outside [0,1]".into()));
                }
                JointStateDistribution::make_identical(m, p)
            }
            Some(other) => {
                return Err(StateError::Malformed(format!("unknown kind `{other}`")));
            }
            None => {
                let pmf = obj
                    .get("pmf")
                    .and_then(|x| x.as_object())
                    .ok_or_else(|| StateError::Malformed("missing pmf object".into()))?;
                let mut entries = Vec::with_capacity(pmf.len());
                let mut precision = precision;
                for (key, w) in pmf {
                    let s = StateVector::parse(key)?;
                    if s.len() != m {
                        return Err(StateError::Malformed(format!(
                            "state key `{key}` has {} bits, expected {m}",
                            s.len()
                        )));
                    }
                    if w.is_f64() {
                        precision = Precision::Binary64;
                    }
                    entries.push((s, rational_from_json(w)?));
                }
                JointStateDistribution::from_parts(m, p, entries).with_precision(precision)
            }
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// Draws state vectors from a validated distribution.
#[derive(Clone, Debug)]
pub struct StateSampler {
    m: usize,
    keys: Vec<u64>,
    cumulative: Vec<f64>,
}

impl StateSampler {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        let bits = if self.keys.len() == 1 {
            self.keys[0]
        } else {
            let u: f64 = rng.gen();
            let idx = self.cumulative.partition_point(|&c| c <= u);
            self.keys[idx.min(self.keys.len() - 1)]
        };
        StateVector::from_bits(bits, self.m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionalPartition {
    m: usize,
    weights: BTreeMap<u64, Rational>,
    coverage: Vec<Rational>,
}

impl FractionalPartition {
    /// Weight of the subset whose indicator vector is `e`.
    pub fn weight(&self, e: StateVector) -> Option<&Rational> {
        self.weights.get(&e.bits())
    }

    pub fn weights(&self) -> impl Iterator<Item = (StateVector, &Rational)> + '_ {
        let m = self.m;
        self.weights
            .iter()
            .map(move |(&b, w)| (StateVector::from_bits(b, m), w))
    }

    /// `Σ_{E ∋ j} G(E)` for every subcarrier.
    pub fn coverage(&self) -> &[Rational] {
        &self.coverage
    }

    /// Subcarriers (1-based) whose coverage differs from 1.
    pub fn failing_subcarriers(&self) -> Vec<usize> {
        self.coverage
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_one())
            .map(|(j, _)| j + 1)
            .collect()
    }

    pub fn is_valid(&self) -> bool {
        self.failing_subcarriers().is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let weights: serde_json::Map<String, serde_json::Value> = self
            .weights()
            .map(|(s, w)| (s.to_bitstring(), serde_json::Value::String(format_rational(w))))
            .collect();
        serde_json::json!({
            "weights": weights,
            "coverage": self.coverage.iter().map(format_rational).collect::<Vec<_>>(),
            "valid": self.is_valid(),
        })
    }
}

/// Parses a `"num/den"` probability; exposed for config loaders.
pub fn parse_probability(s: &str) -> Result<Rational, StateError> {
    let p = parse_rational(s)?;
    if !crate::scalar::is_unit_interval(&p) {
        return Err(StateError::Malformed(format!("probability {s} outside [0,1]")));
    }
    Ok(p)
}
