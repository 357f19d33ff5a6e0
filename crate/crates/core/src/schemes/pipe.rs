//! Combination pipes: a transmitter sends MDS combinations of a symbol
//! batch toward one receiver over levels that reach it only through the
//! cross link. The transmitter sees from feedback which combinations arrived
//! and keeps sending a generation until the receiver holds enough of them.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MdsError, SchemeError};
use crate::field::PrimeField;
use crate::schemes::decoder::{Label, Registry, SymbolId, Unknown};
use crate::schemes::mds::combo_value;
use crate::state::StateVector;

/// A transmitter's payload stream, drawn uniformly from the field on demand.
#[derive(Debug)]
pub struct MessageStore {
    user: u8,
    modulus: u32,
    values: Vec<u32>,
    rng: ChaCha8Rng,
}

impl MessageStore {
    pub fn new(user: usize, field: &PrimeField, seed: u64) -> Self {
        MessageStore {
            user: user as u8,
            modulus: field.modulus(),
            values: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn fresh(&mut self) -> (SymbolId, u32) {
        let v = self.rng.gen_range(0..self.modulus);
        let id = SymbolId {
            user: self.user,
            serial: self.values.len() as u32,
        };
        self.values.push(v);
        (id, v)
    }

    pub fn value(&self, serial: u32) -> u32 {
        self.values[serial as usize]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PipeKind {
    /// Own symbols that interfered at the other receiver's helped levels.
    Help,
    /// Fresh own symbols, to be relayed back by the other transmitter.
    Fresh,
    /// The other transmitter's symbols decoded by the own receiver.
    Relay,
}

#[derive(Clone, Copy, Debug)]
struct Queued {
    id: SymbolId,
    value: u32,
    ready: u64,
}

#[derive(Debug)]
struct ActiveGen {
    gen: u32,
    values: Vec<u32>,
    next_point: u32,
    received: usize,
    inflight: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PipeStats {
    pub generations: u64,
    pub combinations: u64,
    pub enqueued: u64,
}

#[derive(Debug)]
pub struct Pipe {
    pub id: u16,
    pub kind: PipeKind,
    pub sender: usize,
    pub recipient: usize,
    gen_cap: usize,
    staged: Vec<Queued>,
    queue: VecDeque<Queued>,
    active: Vec<ActiveGen>,
    inflight: Vec<(u32, usize)>,
    pub stats: PipeStats,
}

impl Pipe {
    pub fn new(id: u16, kind: PipeKind, sender: usize, gen_cap: usize) -> Self {
        Pipe {
            id,
            kind,
            sender,
            recipient: 1 - sender,
            gen_cap: gen_cap.max(1),
            staged: Vec::new(),
            queue: VecDeque::new(),
            active: Vec::new(),
            inflight: Vec::new(),
            stats: PipeStats::default(),
        }
    }

    /// Records a symbol learned at `slot`; it waits for [`Self::commit`].
    pub fn stage(&mut self, id: SymbolId, value: u32, slot: u64) {
        self.staged.push(Queued { id, value, ready: slot + 1 });
    }

    /// Releases staged symbols; none is used before `ready`.
    pub fn commit(&mut self, ready: u64) {
        for mut q in self.staged.drain(..) {
            q.ready = q.ready.max(ready);
            self.queue.push_back(q);
            self.stats.enqueued += 1;
        }
    }

    /// Queues a symbol usable from slot `ready` on.
    pub fn push(&mut self, id: SymbolId, value: u32, ready: u64) {
        self.queue.push_back(Queued { id, value, ready });
        self.stats.enqueued += 1;
    }

    /// Symbols not yet placed in any generation.
    pub fn backlog(&self) -> usize {
        self.queue.len() + self.staged.len()
    }

    fn form(&mut self, slot: u64, reg: &mut Registry, store: &mut MessageStore) -> bool {
        let mut members = Vec::new();
        let mut values = Vec::new();
        match self.kind {
            PipeKind::Fresh => {
                for _ in 0..self.gen_cap {
                    let (id, v) = store.fresh();
                    members.push(id);
                    values.push(v);
                }
            }
            PipeKind::Help | PipeKind::Relay => {
                while members.len() < self.gen_cap {
                    match self.queue.front() {
                        Some(q) if q.ready <= slot => {
                            let q = self.queue.pop_front().expect("front exists");
                            members.push(q.id);
                            values.push(q.value);
                        }
                        _ => break,
                    }
                }
            }
        }
        if members.is_empty() {
            return false;
        }
        let gen = reg.register(self.id, members);
        self.stats.generations += 1;
        self.active.push(ActiveGen {
            gen,
            values,
            next_point: 0,
            received: 0,
            inflight: 0,
        });
        true
    }

    /// Next combination to send at `slot` on subcarrier `j`, if any.
    pub fn next_label(
        &mut self,
        slot: u64,
        j: usize,
        field: &PrimeField,
        reg: &mut Registry,
        store: &mut MessageStore,
    ) -> Result<Option<(Label, u32)>, SchemeError> {
        let pos = match self
            .active
            .iter()
            .position(|g| g.received + g.inflight < g.values.len())
        {
            Some(pos) => pos,
            None => {
                if !self.form(slot, reg, store) {
                    return Ok(None);
                }
                self.active.len() - 1
            }
        };
        let g = &mut self.active[pos];
        if g.next_point >= field.modulus() {
            return Err(MdsError::FieldTooSmall {
                count: g.next_point as usize + 1,
                modulus: field.modulus(),
            }
            .into());
        }
        let point = g.next_point;
        g.next_point += 1;
        g.inflight += 1;
        self.inflight.push((g.gen, j));
        self.stats.combinations += 1;
        let label = (
            Unknown::Combo {
                pipe: self.id,
                gen: g.gen,
                point,
            },
            1,
        );
        Ok(Some((label, combo_value(field, &g.values, point))))
    }

    /// Accounts the combinations sent in the slot whose state is `s`.
    pub fn on_feedback(&mut self, s: StateVector) {
        for (gen, j) in self.inflight.drain(..) {
            if let Some(g) = self.active.iter_mut().find(|g| g.gen == gen) {
                g.inflight -= 1;
                if s.get(j) {
                    g.received += 1;
                }
            }
        }
        self.active.retain(|g| g.received < g.values.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sends_until_enough_combinations_arrive() {
        let f = PrimeField::default();
        let mut reg = Registry::new(1);
        let mut store = MessageStore::new(0, &f, 1);
        let mut pipe = Pipe::new(0, PipeKind::Fresh, 0, 3);
        let on = StateVector::ones(1);
        let off = StateVector::zeros(1);
        let mut sent = 0;
        for (t, s) in [on, off, on, off, on].into_iter().enumerate() {
            let (label, _) = pipe.next_label(t as u64, 0, &f, &mut reg, &mut store).unwrap().unwrap();
            assert!(matches!(label.0, Unknown::Combo { gen: 0, .. }));
            pipe.on_feedback(s);
            sent += 1;
        }
        assert_eq!(sent, 5);
        // the first generation is complete, so the next slot opens another
        let (label, _) = pipe.next_label(5, 0, &f, &mut reg, &mut store).unwrap().unwrap();
        assert!(matches!(label.0, Unknown::Combo { gen: 1, point: 0, .. }));
        assert_eq!(reg.members(0, 0).len(), 3);
    }

    #[test]
    fn queued_symbols_wait_for_their_slot() {
        let f = PrimeField::default();
        let mut reg = Registry::new(1);
        let mut store = MessageStore::new(1, &f, 1);
        let mut pipe = Pipe::new(0, PipeKind::Help, 1, 8);
        pipe.stage(SymbolId { user: 1, serial: 0 }, 5, 3);
        assert_eq!(pipe.next_label(4, 0, &f, &mut reg, &mut store).unwrap(), None);
        pipe.commit(10);
        assert_eq!(pipe.next_label(9, 0, &f, &mut reg, &mut store).unwrap(), None);
        let (_, v) = pipe.next_label(10, 0, &f, &mut reg, &mut store).unwrap().unwrap();
        // a one-member generation evaluates to the symbol at every point
        assert_eq!(v, 5);
        assert_eq!(pipe.backlog(), 0);
    }
}
