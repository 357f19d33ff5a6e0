//! Receiver-side linear decoder.
//!
//! Every received level yields one equation over at most two unknowns (the
//! own and the cross transmitter's symbol on the aligned levels). Equations
//! with a single unresolved unknown are solved immediately; the value then
//! propagates to every stored equation mentioning it. Two equations over the
//! same pair of unknowns are solved jointly. Combination values feed a
//! per-generation collector that recovers the source symbols once enough
//! distinct points have arrived.

use std::collections::HashMap;

use smallvec::SmallVec;

use crate::error::DecodeTrace;
use crate::field::PrimeField;
use crate::schemes::mds::{combo_value, mds_recover};

/// A payload symbol: the transmitter that owns it and its position in that
/// transmitter's message stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId {
    pub user: u8,
    pub serial: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unknown {
    Sym(SymbolId),
    /// Evaluation of generation `gen` of pipe `pipe` at `point`.
    Combo { pipe: u16, gen: u32, point: u32 },
}

/// What a transmitter puts on one level: `coeff · unknown`.
pub type Label = (Unknown, u32);

/// Source symbols of every generation formed by every pipe. Shared protocol
/// knowledge: both ends can reconstruct it from the state history.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    pipes: Vec<Vec<Vec<SymbolId>>>,
}

impl Registry {
    pub fn new(pipes: usize) -> Self {
        Registry {
            pipes: vec![Vec::new(); pipes],
        }
    }

    pub fn register(&mut self, pipe: u16, members: Vec<SymbolId>) -> u32 {
        let gens = &mut self.pipes[pipe as usize];
        gens.push(members);
        (gens.len() - 1) as u32
    }

    pub fn members(&self, pipe: u16, gen: u32) -> &[SymbolId] {
        &self.pipes[pipe as usize][gen as usize]
    }

    pub fn generations(&self, pipe: u16) -> usize {
        self.pipes[pipe as usize].len()
    }
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Equation {
    terms: SmallVec<[Label; 2]>,
    rhs: u32,
}

#[derive(Clone, Debug)]
enum Collector {
    Collecting(Vec<(u32, u32)>),
    Done(Vec<u32>),
}

#[derive(Debug)]
pub struct Decoder {
    field: PrimeField,
    user: usize,
    known: [Vec<u32>; 2],
    eqs: HashMap<u32, Equation>,
    next_eq: u32,
    waiting: HashMap<Unknown, SmallVec<[u32; 2]>>,
    pairs: HashMap<(Unknown, Unknown), u32>,
    collectors: HashMap<(u16, u32), Collector>,
    combo_waiting: HashMap<(u16, u32), Vec<u32>>,
    completed: Vec<(u16, u32)>,
    worklist: Vec<Unknown>,
    slot: u64,
    failure: Option<DecodeTrace>,
}

impl Decoder {
    pub fn new(field: PrimeField, user: usize) -> Self {
        Decoder {
            field,
            user,
            known: [Vec::new(), Vec::new()],
            eqs: HashMap::new(),
            next_eq: 0,
            waiting: HashMap::new(),
            pairs: HashMap::new(),
            collectors: HashMap::new(),
            combo_waiting: HashMap::new(),
            completed: Vec::new(),
            worklist: Vec::new(),
            slot: 0,
            failure: None,
        }
    }

    pub fn set_slot(&mut self, slot: u64) {
        self.slot = slot;
    }

    pub fn failure(&self) -> Option<&DecodeTrace> {
        self.failure.as_ref()
    }

    /// Generations fully recovered since the last call.
    pub fn take_completed(&mut self) -> Vec<(u16, u32)> {
        std::mem::take(&mut self.completed)
    }

    pub fn symbol(&self, id: SymbolId) -> Option<u32> {
        match self.known[id.user as usize].get(id.serial as usize) {
            Some(&v) if v != NONE => Some(v),
            _ => None,
        }
    }

    /// Number of equations still waiting for unknowns.
    pub fn pending(&self) -> usize {
        self.eqs.len()
    }

    fn fail(&mut self, detail: String) {
        if self.failure.is_none() {
            self.failure = Some(DecodeTrace {
                slot: self.slot,
                user: self.user,
                detail,
            });
        }
    }

    fn value(&mut self, u: Unknown, reg: &Registry) -> Option<u32> {
        match u {
            Unknown::Sym(id) => self.symbol(id),
            Unknown::Combo { pipe, gen, point } => {
                match self.collectors.get(&(pipe, gen)) {
                    Some(Collector::Done(values)) => return Some(combo_value(&self.field, values, point)),
                    Some(Collector::Collecting(_)) => return None,
                    None => {}
                }
                // a generation whose members are all known through other means
                let members = reg.members(pipe, gen);
                let values: Option<Vec<u32>> = members.iter().map(|&m| self.symbol(m)).collect();
                match values {
                    Some(values) => {
                        let v = combo_value(&self.field, &values, point);
                        self.finish(pipe, gen, values);
                        Some(v)
                    }
                    None => {
                        self.collectors.insert((pipe, gen), Collector::Collecting(Vec::new()));
                        None
                    }
                }
            }
        }
    }

    fn finish(&mut self, pipe: u16, gen: u32, values: Vec<u32>) {
        self.collectors.insert((pipe, gen), Collector::Done(values));
        if let Some(points) = self.combo_waiting.remove(&(pipe, gen)) {
            self.worklist
                .extend(points.into_iter().map(|point| Unknown::Combo { pipe, gen, point }));
        }
    }

    /// Adds the equation `Σ coeff·unknown = rhs`.
    pub fn add_equation(&mut self, terms: &[Label], rhs: u32, reg: &Registry) {
        let f = self.field.clone();
        let mut rhs = rhs;
        let mut rest: SmallVec<[Label; 2]> = SmallVec::new();
        for &(u, c) in terms {
            if c == 0 {
                continue;
            }
            match self.value(u, reg) {
                Some(v) => rhs = f.sub(rhs, f.mul(c, v)),
                None => match rest.iter_mut().find(|(w, _)| *w == u) {
                    Some(t) => t.1 = f.add(t.1, c),
                    None => rest.push((u, c)),
                },
            }
        }
        rest.retain(|t| t.1 != 0);
        self.reduce(rest, rhs, reg);
        self.drain(reg);
    }

    fn reduce(&mut self, terms: SmallVec<[Label; 2]>, rhs: u32, reg: &Registry) {
        let f = self.field.clone();
        match terms.len() {
            0 => {
                if rhs != 0 {
                    self.fail(format!("inconsistent equation, residual {rhs}"));
                }
            }
            1 => {
                let (u, c) = terms[0];
                let v = f.div(rhs, c).expect("nonzero coefficient");
                self.assign(u, v, reg);
            }
            2 => {
                let key = if terms[0].0 <= terms[1].0 {
                    (terms[0].0, terms[1].0)
                } else {
                    (terms[1].0, terms[0].0)
                };
                if let Some(&other_id) = self.pairs.get(&key) {
                    let other = self.eqs[&other_id].clone();
                    let coeff = |eq: &SmallVec<[Label; 2]>, u: Unknown| {
                        eq.iter().find(|t| t.0 == u).map_or(0, |t| t.1)
                    };
                    let (a1, a2) = (coeff(&terms, key.0), coeff(&terms, key.1));
                    let (b1, b2) = (coeff(&other.terms, key.0), coeff(&other.terms, key.1));
                    let det = f.sub(f.mul(a1, b2), f.mul(a2, b1));
                    if det == 0 {
                        // parallel: either a duplicate or a contradiction
                        let scale = if b1 != 0 { f.div(a1, b1) } else { f.div(a2, b2) };
                        let scale = scale.expect("nonzero coefficient");
                        if f.mul(scale, other.rhs) != rhs {
                            self.fail("contradictory equation pair".into());
                        }
                        return;
                    }
                    let x = f
                        .div(f.sub(f.mul(rhs, b2), f.mul(a2, other.rhs)), det)
                        .expect("nonzero determinant");
                    self.assign(key.0, x, reg);
                    return;
                }
                let id = self.next_eq;
                self.next_eq += 1;
                for &(u, _) in &terms {
                    self.waiting.entry(u).or_default().push(id);
                    if let Unknown::Combo { pipe, gen, point } = u {
                        self.combo_waiting.entry((pipe, gen)).or_default().push(point);
                    }
                }
                self.pairs.insert(key, id);
                self.eqs.insert(id, Equation { terms, rhs });
            }
            _ => unreachable!("level equations have at most two unknowns"),
        }
    }

    fn assign(&mut self, u: Unknown, v: u32, reg: &Registry) {
        match u {
            Unknown::Sym(id) => {
                let slot = &mut self.known[id.user as usize];
                let idx = id.serial as usize;
                if slot.len() <= idx {
                    slot.resize(idx + 1, NONE);
                }
                if slot[idx] != NONE {
                    if slot[idx] != v {
                        self.fail(format!("symbol {id:?} decoded to two values"));
                    }
                    return;
                }
                slot[idx] = v;
                self.worklist.push(u);
            }
            Unknown::Combo { pipe, gen, point } => {
                let g = reg.members(pipe, gen).len();
                let entry = self
                    .collectors
                    .entry((pipe, gen))
                    .or_insert_with(|| Collector::Collecting(Vec::new()));
                let recovered = match entry {
                    Collector::Done(values) => {
                        if combo_value(&self.field, values, point) != v {
                            self.fail(format!("combination {pipe}/{gen}@{point} disagrees with its generation"));
                        }
                        return;
                    }
                    Collector::Collecting(points) => {
                        if points.iter().any(|&(p, _)| p == point) {
                            return;
                        }
                        points.push((point, v));
                        if points.len() < g {
                            return;
                        }
                        mds_recover(&self.field, points, g)
                    }
                };
                match recovered {
                    Ok(values) => {
                        self.completed.push((pipe, gen));
                        for (&m, &val) in reg.members(pipe, gen).iter().zip(&values) {
                            self.assign(Unknown::Sym(m), val, reg);
                        }
                        self.finish(pipe, gen, values);
                    }
                    Err(e) => self.fail(format!("generation {pipe}/{gen}: {e}")),
                }
            }
        }
    }

    fn drain(&mut self, reg: &Registry) {
        while let Some(u) = self.worklist.pop() {
            let Some(ids) = self.waiting.remove(&u) else {
                continue;
            };
            let Some(val) = self.value(u, reg) else {
                self.waiting.insert(u, ids);
                continue;
            };
            for id in ids {
                let Some(eq) = self.eqs.remove(&id) else {
                    continue;
                };
                let key = if eq.terms[0].0 <= eq.terms[1].0 {
                    (eq.terms[0].0, eq.terms[1].0)
                } else {
                    (eq.terms[1].0, eq.terms[0].0)
                };
                self.pairs.remove(&key);
                let f = &self.field;
                let mut rhs = eq.rhs;
                let mut rest: SmallVec<[Label; 2]> = SmallVec::new();
                for (w, c) in eq.terms {
                    if w == u {
                        rhs = f.sub(rhs, f.mul(c, val));
                    } else {
                        rest.push((w, c));
                    }
                }
                self.reduce(rest, rhs, reg);
            }
        }
    }

    /// Compares every decoded symbol of `user` against the transmitted
    /// values; returns the number of correct symbols or the first mismatch.
    pub fn verify(&self, user: usize, truth: &[u32]) -> Result<u64, DecodeTrace> {
        let mut correct = 0;
        for (serial, (&got, &want)) in self.known[user].iter().zip(truth).enumerate() {
            if got == NONE {
                continue;
            }
            if got != want {
                return Err(DecodeTrace {
                    slot: self.slot,
                    user: self.user,
                    detail: format!("symbol {serial} of user {} decoded as {got}, sent {want}", user + 1),
                });
            }
            correct += 1;
        }
        Ok(correct)
    }
}
