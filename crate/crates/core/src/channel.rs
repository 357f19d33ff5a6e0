//! Symmetric linear deterministic interference channel with a bursty cross
//! link, one instance per subcarrier.
//!
//! Each transmitter sends a level vector of `q = max(n, k)` field symbols per
//! subcarrier, index 0 being the top level. Receiver `i` observes its own
//! transmitter's vector shifted down by `q - n` plus, when the subcarrier's
//! state bit is set, the other transmitter's vector shifted down by `q - k`.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ChannelError;
use crate::field::PrimeField;
use crate::scalar::Rational;
use crate::state::{JointStateDistribution, StateSampler, StateVector};

#[derive(Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SubcarrierConfig {
    n: usize,
    k: usize,
}

/// Interference regime of a subcarrier, by `α = k / n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `α ≤ 1`
    Weak,
    /// `1 < α ≤ 2`
    Strong,
    /// `α > 2`
    VeryStrong,
}

impl SubcarrierConfig {
    pub const fn new(n: usize, k: usize) -> Self {
        SubcarrierConfig { n, k }
    }

    /// Like [`Self::new`] but rejects subcarriers without a direct link.
    pub fn checked(n: usize, k: usize) -> Result<Self, String> {
        if n == 0 {
            return Err(format!("subcarrier (n={n}, k={k}) has no direct link"));
        }
        Ok(SubcarrierConfig { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.n.max(self.k)
    }

    /// `k / n`, or `None` when `n = 0`.
    pub fn alpha(&self) -> Option<Rational> {
        (self.n > 0).then(|| Rational::new(BigInt::from(self.k), BigInt::from(self.n)))
    }

    pub fn regime(&self) -> Regime {
        if self.k <= self.n {
            Regime::Weak
        } else if self.k <= 2 * self.n {
            Regime::Strong
        } else {
            Regime::VeryStrong
        }
    }

    /// Receiver level at which transmitter level `l` of the own link lands.
    pub fn own_offset(&self) -> usize {
        self.q() - self.n
    }

    /// Receiver level at which transmitter level `l` of the cross link lands.
    pub fn cross_offset(&self) -> usize {
        self.q() - self.k
    }
}

impl fmt::Debug for SubcarrierConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, k={})", self.n, self.k)
    }
}

/// Field symbols on the levels of one subcarrier, top level first.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LevelVector(Vec<u32>);

impl LevelVector {
    pub fn zeros(q: usize) -> Self {
        LevelVector(vec![0; q])
    }

    pub fn new(entries: Vec<u32>) -> Self {
        LevelVector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [u32] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }

    pub fn check(&self, q: usize, field: &PrimeField) -> Result<(), ChannelError> {
        if self.0.len() != q {
            return Err(ChannelError::LengthMismatch {
                expected: q,
                got: self.0.len(),
            });
        }
        if let Some(&bad) = self.0.iter().find(|&&v| !field.contains(v)) {
            return Err(ChannelError::FieldMismatch(bad, field.modulus()));
        }
        Ok(())
    }

    pub fn add(&self, other: &LevelVector, field: &PrimeField) -> LevelVector {
        LevelVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| field.add(a, b))
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for LevelVector {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

/// Down-shift by `d` levels: output level `i` is input level `i - d`, zero
/// above.
pub fn shift_apply(q: usize, d: usize, x: &LevelVector) -> Result<LevelVector, ChannelError> {
    if d > q {
        return Err(ChannelError::ShiftOutOfRange { q, shift: d });
    }
    if x.len() != q {
        return Err(ChannelError::LengthMismatch {
            expected: q,
            got: x.len(),
        });
    }
    let mut out = vec![0; q];
    out[d..].copy_from_slice(&x.0[..q - d]);
    Ok(LevelVector(out))
}

/// Output of one receiver on one subcarrier.
pub fn transfer(
    cfg: SubcarrierConfig,
    field: &PrimeField,
    x_own: &LevelVector,
    x_other: &LevelVector,
    s: bool,
) -> Result<LevelVector, ChannelError> {
    let q = cfg.q();
    x_own.check(q, field)?;
    x_other.check(q, field)?;
    let mut y = shift_apply(q, cfg.own_offset(), x_own)?;
    if s {
        let cross = shift_apply(q, cfg.cross_offset(), x_other)?;
        for (a, b) in y.0.iter_mut().zip(cross.0) {
            *a = field.add(*a, b);
        }
    }
    Ok(y)
}

/// What a transmitter learns about slot `slot` through its receiver's
/// feedback: the received vectors and the realized state.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackRecord {
    pub slot: u64,
    pub received: Vec<LevelVector>,
    pub state: StateVector,
}

/// Both receivers' outputs for one slot.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotOutput {
    pub slot: u64,
    pub state: StateVector,
    /// `y[i][j]` is receiver `i`'s vector on subcarrier `j`.
    pub y: [Vec<LevelVector>; 2],
}

/// One synchronous slot across all subcarriers with a fresh state draw.
/// Both cross links of subcarrier `j` are gated by the same `s_j`.
pub fn step_system<R: rand::Rng + ?Sized>(
    cfgs: &[SubcarrierConfig],
    field: &PrimeField,
    sampler: &StateSampler,
    tx: [&[LevelVector]; 2],
    rng: &mut R,
) -> Result<(StateVector, [Vec<LevelVector>; 2]), ChannelError> {
    for input in tx {
        if input.len() != cfgs.len() {
            return Err(ChannelError::SubcarrierCount {
                expected: cfgs.len(),
                got: input.len(),
            });
        }
    }
    if sampler.m() != cfgs.len() {
        return Err(ChannelError::SubcarrierCount {
            expected: cfgs.len(),
            got: sampler.m(),
        });
    }
    let s = sampler.sample(rng);
    let mut y: [Vec<LevelVector>; 2] = [Vec::with_capacity(cfgs.len()), Vec::with_capacity(cfgs.len())];
    for (j, &cfg) in cfgs.iter().enumerate() {
        for i in 0..2 {
            y[i].push(transfer(cfg, field, &tx[i][j], &tx[1 - i][j], s.get(j))?);
        }
    }
    Ok((s, y))
}

/// A running channel: owns the state RNG and the unit-delay feedback queues.
///
/// Feedback for slot `t` becomes available through [`Self::take_feedback`]
/// only after [`Self::step`] for slot `t` has returned, so a transmitter can
/// use it no earlier than slot `t + 1`.
#[derive(Debug)]
pub struct ChannelSession {
    cfgs: Vec<SubcarrierConfig>,
    field: PrimeField,
    sampler: StateSampler,
    rng: ChaCha8Rng,
    slot: u64,
    feedback: [VecDeque<FeedbackRecord>; 2],
}

impl ChannelSession {
    pub fn new(
        cfgs: Vec<SubcarrierConfig>,
        dist: &JointStateDistribution,
        field: PrimeField,
        seed: u64,
    ) -> Result<Self, ChannelError> {
        if dist.m() != cfgs.len() {
            return Err(ChannelError::SubcarrierCount {
                expected: cfgs.len(),
                got: dist.m(),
            });
        }
        Ok(ChannelSession {
            cfgs,
            field,
            sampler: dist.sampler()?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            slot: 0,
            feedback: [VecDeque::new(), VecDeque::new()],
        })
    }

    pub fn cfgs(&self) -> &[SubcarrierConfig] {
        &self.cfgs
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    /// Index of the next slot to be transmitted.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn step(&mut self, tx1: &[LevelVector], tx2: &[LevelVector]) -> Result<SlotOutput, ChannelError> {
        let (state, y) = step_system(&self.cfgs, &self.field, &self.sampler, [tx1, tx2], &mut self.rng)?;
        let slot = self.slot;
        self.slot += 1;
        for (i, queue) in self.feedback.iter_mut().enumerate() {
            queue.push_back(FeedbackRecord {
                slot,
                received: y[i].clone(),
                state,
            });
        }
        Ok(SlotOutput { slot, state, y })
    }

    /// Oldest undelivered feedback record for transmitter `user`.
    pub fn take_feedback(&mut self, user: usize) -> Option<FeedbackRecord> {
        self.feedback[user].pop_front()
    }
}
