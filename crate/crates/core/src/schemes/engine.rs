//! Slot-by-slot simulation of the two transmitter/receiver pairs.
//!
//! Transmitters attach a [`Label`] to every level they drive, the channel
//! carries the actual field values, and each receiver decodes from its
//! output vectors plus the labels (the schedule is deterministic given the
//! state history, which both ends observe). Transmitters update their
//! phase machines, ledgers and pipes only from their own delayed feedback.

use std::collections::HashMap;
use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::channel::{ChannelSession, FeedbackRecord, LevelVector, Regime, SubcarrierConfig};
use crate::error::SchemeError;
use crate::field::PrimeField;
use crate::schemes::decoder::{Decoder, Label, Registry, SymbolId, Unknown};
use crate::schemes::pipe::{MessageStore, Pipe, PipeKind};
use crate::schemes::plan::{plan_levels, SchemePlan};
use crate::schemes::{Diagnostics, SchemeTarget, SimResult};
use crate::state::{JointStateDistribution, StateVector};

/// Phase-R retransmission scale used by the second user when a subcarrier
/// runs the α = 1 machine.
pub const DEFAULT_THETA: u32 = 2;
pub const DEFAULT_GENERATION: usize = 64;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub cfgs: Vec<SubcarrierConfig>,
    pub block_len: usize,
    pub blocks: usize,
    pub target: SchemeTarget,
    pub field: PrimeField,
    pub generation: usize,
    pub theta: u32,
    pub audit: bool,
}

impl EngineConfig {
    pub fn new(cfgs: Vec<SubcarrierConfig>, block_len: usize, blocks: usize, target: SchemeTarget) -> Self {
        EngineConfig {
            cfgs,
            block_len,
            blocks,
            target,
            field: PrimeField::default(),
            generation: DEFAULT_GENERATION,
            theta: DEFAULT_THETA,
            audit: false,
        }
    }

    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn slots(&self) -> u64 {
        (self.block_len * self.blocks) as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Unused,
    Fresh,
    /// Fresh in phase F, the other transmitter's F-slot symbol in phase R.
    Phase,
    /// The other transmitter's previous-slot symbol at the same level.
    Forward,
    Help,
    /// Leftover helper level; pipe chosen per block by the target.
    Leftover,
    FreshPipe,
    RelayPipe,
}

const HELP: usize = 0;
const FRESH: usize = 1;
const RELAY: usize = 2;

fn pipe_index(user: usize, kind: usize) -> usize {
    3 * user + kind
}

/// Outcome of the instrumented dependency checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    /// Transmitted labels whose inputs were checked.
    pub checked: u64,
    pub violations: Vec<String>,
    /// Ledger entries computed from own feedback, per transmitter.
    pub ledger: [u64; 2],
    /// Ledger entries that disagree with the channel's record.
    pub ledger_mismatches: u64,
    /// Interfered symbols placed in more than one helping generation.
    pub ledger_reused: u64,
    /// Both transmitters' phase machines agreed in every slot.
    pub phases_agree: bool,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.ledger_mismatches == 0 && self.ledger_reused == 0 && self.phases_agree
    }
}

#[derive(Clone, Copy, Debug)]
struct Learned {
    unknown: Unknown,
    value: u32,
    slot: u64,
}

struct Tx {
    store: MessageStore,
    roles: Vec<Vec<Role>>,
    in_r: Vec<bool>,
    learned: Vec<Vec<Option<Learned>>>,
    labels: Vec<Vec<Option<Label>>>,
    values: Vec<LevelVector>,
}

struct Audit {
    report: AuditReport,
    truth: [Vec<SymbolId>; 2],
    own: [Vec<SymbolId>; 2],
    // slot at which a transmitter came to know a foreign symbol
    decoded_at: [HashMap<SymbolId, u64>; 2],
    // interference slot of each ledger symbol
    interfered_at: [HashMap<SymbolId, u64>; 2],
    seen_generations: Vec<usize>,
    used: std::collections::HashSet<SymbolId>,
}

pub struct Engine<'a> {
    config: &'a EngineConfig,
    plan: SchemePlan,
    session: ChannelSession,
    tx: [Tx; 2],
    rx: [Decoder; 2],
    pipes: Vec<Pipe>,
    registry: Registry,
    audit: Option<Audit>,
    f_slots: Vec<u64>,
    phase_slots: Vec<u64>,
    trace: Option<&'a mut dyn Write>,
}

fn roles_for(plan: &SchemePlan, target: SchemeTarget) -> [Vec<Vec<Role>>; 2] {
    let mut out: [Vec<Vec<Role>>; 2] = [Vec::new(), Vec::new()];
    for s in &plan.subcarriers {
        let (n, k, q) = (s.cfg.n(), s.cfg.k(), s.cfg.q());
        match target.leader() {
            Some(leader) => {
                let mut lead = vec![Role::Unused; q];
                let mut follow = vec![Role::Unused; q];
                if s.regime == Regime::Weak {
                    lead.iter_mut().for_each(|r| *r = Role::Fresh);
                    for (l, r) in follow.iter_mut().enumerate() {
                        *r = if l < k { Role::Forward } else { Role::Fresh };
                    }
                } else {
                    for (l, r) in lead.iter_mut().enumerate() {
                        *r = if l < n { Role::Fresh } else { Role::FreshPipe };
                    }
                    follow[..k - n].iter_mut().for_each(|r| *r = Role::RelayPipe);
                }
                out[leader].push(lead);
                out[1 - leader].push(follow);
            }
            None => {
                let mut roles = vec![Role::Unused; q];
                for &l in &s.fresh {
                    roles[l] = Role::Fresh;
                }
                for l in s.phase_levels() {
                    roles[l] = Role::Phase;
                }
                for u in &mut out {
                    u.push(roles.clone());
                }
            }
        }
    }
    if target.leader().is_none() {
        for &(j, l) in &plan.help_levels {
            for u in &mut out {
                u[j][l] = Role::Help;
            }
        }
        for &(j, l) in &plan.leftover_levels {
            for u in &mut out {
                u[j][l] = Role::Leftover;
            }
        }
    }
    out
}

impl<'a> Engine<'a> {
    pub fn new(
        config: &'a EngineConfig,
        dist: &JointStateDistribution,
        seed: u64,
        trace: Option<&'a mut dyn Write>,
    ) -> Result<Self, SchemeError> {
        if config.cfgs.is_empty() {
            return Err(SchemeError::Precondition("no subcarriers".into()));
        }
        if config.block_len == 0 || config.blocks == 0 {
            return Err(SchemeError::Precondition("block length and block count must be positive".into()));
        }
        if dist.m() != config.cfgs.len() {
            return Err(SchemeError::Precondition(format!(
                "distribution has {} subcarriers, configuration has {}",
                dist.m(),
                config.cfgs.len()
            )));
        }
        if config.field.modulus() <= config.theta.max(2) {
            return Err(SchemeError::Precondition("field too small for the retransmission scale".into()));
        }
        let plan = plan_levels(&config.cfgs);
        if matches!(config.target, SchemeTarget::D1 | SchemeTarget::D2) && plan.delta <= 0 {
            return Err(SchemeError::Precondition(format!(
                "{} needs a positive level surplus, got {}",
                config.target.as_str(),
                plan.delta
            )));
        }
        let mut seeds = ChaCha8Rng::seed_from_u64(seed);
        let state_seed = seeds.next_u64();
        let session = ChannelSession::new(config.cfgs.clone(), dist, config.field.clone(), state_seed)?;
        let roles = roles_for(&plan, config.target);
        let m = config.cfgs.len();
        let [r0, r1] = roles;
        let make_tx = |user: usize, roles: Vec<Vec<Role>>, seed: u64| Tx {
            store: MessageStore::new(user, &config.field, seed),
            in_r: vec![false; m],
            learned: config.cfgs.iter().map(|c| vec![None; c.q()]).collect(),
            labels: config.cfgs.iter().map(|c| vec![None; c.q()]).collect(),
            values: config.cfgs.iter().map(|c| LevelVector::zeros(c.q())).collect(),
            roles,
        };
        let tx = [make_tx(0, r0, seeds.next_u64()), make_tx(1, r1, seeds.next_u64())];
        let mut pipes = Vec::new();
        for user in 0..2 {
            for (kind, pk) in [PipeKind::Help, PipeKind::Fresh, PipeKind::Relay].into_iter().enumerate() {
                pipes.push(Pipe::new(pipe_index(user, kind) as u16, pk, user, config.generation));
            }
        }
        let audit = config.audit.then(|| Audit {
            report: AuditReport {
                phases_agree: true,
                ..AuditReport::default()
            },
            truth: [Vec::new(), Vec::new()],
            own: [Vec::new(), Vec::new()],
            decoded_at: [HashMap::new(), HashMap::new()],
            interfered_at: [HashMap::new(), HashMap::new()],
            seen_generations: vec![0; 6],
            used: Default::default(),
        });
        Ok(Engine {
            config,
            session,
            tx,
            rx: [Decoder::new(config.field.clone(), 0), Decoder::new(config.field.clone(), 1)],
            pipes,
            registry: Registry::new(6),
            audit,
            f_slots: vec![0; m],
            phase_slots: vec![0; m],
            trace,
            plan,
        })
    }

    pub fn plan(&self) -> &SchemePlan {
        &self.plan
    }

    fn leftover_kind(&self, user: usize, block: usize) -> usize {
        match self.config.target {
            SchemeTarget::D1 => [FRESH, RELAY][user],
            SchemeTarget::D2 => [RELAY, FRESH][user],
            _ => {
                if block.is_multiple_of(2) {
                    FRESH
                } else {
                    RELAY
                }
            }
        }
    }

    fn theta(&self, user: usize, j: usize) -> u32 {
        let s = &self.plan.subcarriers[j];
        let (n, k) = s.effective();
        if user == 1 && s.regime == Regime::Weak && n == k {
            self.config.theta
        } else {
            1
        }
    }

    fn build(&mut self, user: usize, t: u64) -> Result<(), SchemeError> {
        let block = (t / self.config.block_len as u64) as usize;
        let field = self.config.field.clone();
        let leftover = self.leftover_kind(user, block);
        for j in 0..self.config.cfgs.len() {
            let theta = self.theta(user, j);
            let q = self.config.cfgs[j].q();
            for l in 0..q {
                let role = self.tx[user].roles[j][l];
                let in_r = self.tx[user].in_r[j];
                let entry: Option<(Label, u32)> = match role {
                    Role::Unused => None,
                    Role::Fresh => Some(self.fresh(user)),
                    Role::Phase if !in_r => Some(self.fresh(user)),
                    Role::Phase | Role::Forward => {
                        let learned = self.tx[user].learned[j][l];
                        match (role, learned) {
                            (_, Some(x)) => {
                                self.check_dependency(x.slot, t, || format!("retransmission on subcarrier {j} level {l}"));
                                let scale = if role == Role::Phase { theta } else { 1 };
                                Some(((x.unknown, scale), field.mul(scale, x.value)))
                            }
                            (Role::Forward, None) => None,
                            _ => {
                                return Err(SchemeError::Internal(format!(
                                    "phase R on subcarrier {j} level {l} without a learned symbol at slot {t}"
                                )))
                            }
                        }
                    }
                    Role::Help => self.pipe_label(user, HELP, t, j)?,
                    Role::Leftover => self.pipe_label(user, leftover, t, j)?,
                    Role::FreshPipe => self.pipe_label(user, FRESH, t, j)?,
                    Role::RelayPipe => self.pipe_label(user, RELAY, t, j)?,
                };
                let tx = &mut self.tx[user];
                tx.labels[j][l] = entry.map(|e| e.0);
                tx.values[j].as_mut_slice()[l] = entry.map_or(0, |e| e.1);
            }
        }
        Ok(())
    }

    fn fresh(&mut self, user: usize) -> (Label, u32) {
        let (id, v) = self.tx[user].store.fresh();
        ((Unknown::Sym(id), 1), v)
    }

    fn pipe_label(&mut self, user: usize, kind: usize, t: u64, j: usize) -> Result<Option<(Label, u32)>, SchemeError> {
        let idx = pipe_index(user, kind);
        let out = self.pipes[idx].next_label(
            t,
            j,
            &self.config.field,
            &mut self.registry,
            &mut self.tx[user].store,
        )?;
        if self.audit.is_some() {
            self.audit_generations(idx, t);
        }
        Ok(out)
    }

    fn check_dependency(&mut self, learned: u64, t: u64, what: impl FnOnce() -> String) {
        if let Some(a) = &mut self.audit {
            a.report.checked += 1;
            if learned >= t {
                a.report
                    .violations
                    .push(format!("slot {t}: {} uses feedback from slot {learned}", what()));
            }
        }
    }

    fn audit_generations(&mut self, idx: usize, t: u64) {
        let Some(a) = &mut self.audit else { return };
        let pipe = &self.pipes[idx];
        let total = self.registry.generations(pipe.id);
        let block_len = self.config.block_len as u64;
        for gen in a.seen_generations[idx]..total {
            for &m in self.registry.members(pipe.id, gen as u32) {
                a.report.checked += 1;
                match pipe.kind {
                    PipeKind::Fresh => {}
                    PipeKind::Help => {
                        let ok = a.interfered_at[pipe.sender]
                            .get(&m)
                            .is_some_and(|&s| s / block_len < t / block_len);
                        if !ok {
                            a.report
                                .violations
                                .push(format!("slot {t}: helping symbol {m:?} not from an earlier block"));
                        }
                        if !a.used.insert(m) {
                            a.report.ledger_reused += 1;
                        }
                    }
                    PipeKind::Relay => {
                        let ok = a.decoded_at[pipe.sender].get(&m).is_some_and(|&s| s < t);
                        if !ok {
                            a.report
                                .violations
                                .push(format!("slot {t}: relayed symbol {m:?} not decoded before use"));
                        }
                    }
                }
            }
        }
        a.seen_generations[idx] = total;
    }

    fn observe(&mut self, user: usize, t: u64, y: &[LevelVector], s: StateVector) {
        let other = 1 - user;
        let rx = &mut self.rx[user];
        rx.set_slot(t);
        for (j, cfg) in self.config.cfgs.iter().enumerate() {
            let (own_off, cross_off) = (cfg.own_offset(), cfg.cross_offset());
            for r in 0..cfg.q() {
                let mut terms: [Option<Label>; 2] = [None, None];
                if r >= own_off {
                    terms[0] = self.tx[user].labels[j][r - own_off];
                }
                if s.get(j) && r >= cross_off {
                    terms[1] = self.tx[other].labels[j][r - cross_off];
                }
                let terms: smallvec::SmallVec<[Label; 2]> = terms.into_iter().flatten().collect();
                rx.add_equation(&terms, y[j][r], &self.registry);
            }
        }
    }

    /// Transmitter `user` digests the feedback record of slot `fb.slot`.
    fn feedback(&mut self, user: usize, fb: &FeedbackRecord) {
        let other = 1 - user;
        let t = fb.slot;
        let field = self.config.field.clone();
        let uses_help = self.config.target.leader().is_none();
        for (j, cfg) in self.config.cfgs.iter().enumerate() {
            let s_j = fb.state.get(j);
            let (own_off, cross_off) = (cfg.own_offset(), cfg.cross_offset());
            for m in 0..cfg.q() {
                let r = m + cross_off;
                let mut learned = None;
                if s_j && r < cfg.q() {
                    if let Some((unknown, coeff)) = self.tx[other].labels[j][m] {
                        let own = if r >= own_off {
                            self.tx[user].values[j][r - own_off]
                        } else {
                            0
                        };
                        let diff = field.sub(fb.received[j][r], own);
                        let value = field.div(diff, coeff).expect("labels carry nonzero coefficients");
                        learned = Some(Learned { unknown, value, slot: t });
                    }
                }
                self.tx[user].learned[j][m] = learned;
            }
            if uses_help && s_j {
                for l in self.plan.subcarriers[j].ledger_levels() {
                    if let Some((Unknown::Sym(id), _)) = self.tx[user].labels[j][l] {
                        let v = self.tx[user].values[j][l];
                        self.pipes[pipe_index(user, HELP)].stage(id, v, t);
                        if let Some(a) = &mut self.audit {
                            a.own[user].push(id);
                            a.interfered_at[user].insert(id, t);
                        }
                    }
                }
            }
            let s = &self.plan.subcarriers[j];
            if uses_help && s.phase_active() {
                let tx = &mut self.tx[user];
                tx.in_r[j] = !tx.in_r[j] && s_j;
            }
        }
        for kind in [HELP, FRESH, RELAY] {
            self.pipes[pipe_index(user, kind)].on_feedback(fb.state);
        }
    }

    /// Queues for relaying the other user's symbols that this user's
    /// receiver recovered from the other's fresh pipe.
    fn collect_relays(&mut self, user: usize, t: u64) {
        let fresh_pipe = pipe_index(1 - user, FRESH) as u16;
        for (pipe, gen) in self.rx[user].take_completed() {
            if pipe != fresh_pipe {
                continue;
            }
            for &m in self.registry.members(pipe, gen) {
                let v = self.rx[user].symbol(m).expect("completed generation members are known");
                self.pipes[pipe_index(user, RELAY)].push(m, v, t + 1);
                if let Some(a) = &mut self.audit {
                    a.decoded_at[user].insert(m, t);
                }
            }
        }
    }

    fn record_truth(&mut self, s: StateVector) {
        let Some(a) = &mut self.audit else { return };
        if self.config.target.leader().is_some() {
            return;
        }
        for (j, sub) in self.plan.subcarriers.iter().enumerate() {
            if !s.get(j) {
                continue;
            }
            let cross_off = sub.cfg.cross_offset();
            for user in 0..2 {
                // the other receiver's helped levels, seen from this transmitter
                for r in sub.helped_rx_levels() {
                    if r < cross_off {
                        continue;
                    }
                    if let Some((Unknown::Sym(id), _)) = self.tx[user].labels[j][r - cross_off] {
                        a.truth[user].push(id);
                    }
                }
            }
        }
    }

    fn write_trace(&mut self, t: u64, s: StateVector, y: &[Vec<LevelVector>; 2]) -> Result<(), SchemeError> {
        let Some(w) = self.trace.as_deref_mut() else { return Ok(()) };
        let tx: Vec<Vec<&[u32]>> = self
            .tx
            .iter()
            .map(|tx| tx.values.iter().map(|v| v.as_slice()).collect())
            .collect();
        let rx: Vec<Vec<&[u32]>> = y.iter().map(|v| v.iter().map(|l| l.as_slice()).collect()).collect();
        let phase: Vec<&str> = self.tx[0].in_r.iter().map(|&r| if r { "R" } else { "F" }).collect();
        let record = json!({"t": t, "s": s.to_bitstring(), "tx": tx, "rx": rx, "phase": phase});
        writeln!(w, "{record}").map_err(|e| SchemeError::Internal(format!("trace: {e}")))
    }

    fn fail_on_decode(&self) -> Result<(), SchemeError> {
        for rx in &self.rx {
            if let Some(trace) = rx.failure() {
                return Err(SchemeError::DecodeFailure(trace.clone()));
            }
        }
        Ok(())
    }

    pub fn run(mut self, scheme: &str, seed: u64) -> Result<SimResult, SchemeError> {
        let total = self.config.slots();
        let block_len = self.config.block_len as u64;
        for t in 0..total {
            if t > 0 && t % block_len == 0 {
                for user in 0..2 {
                    self.pipes[pipe_index(user, HELP)].commit(t);
                }
            }
            for (j, s) in self.plan.subcarriers.iter().enumerate() {
                if s.phase_active() && self.config.target.leader().is_none() {
                    self.phase_slots[j] += 1;
                    if !self.tx[0].in_r[j] {
                        self.f_slots[j] += 1;
                    }
                }
            }
            if let Some(a) = &mut self.audit {
                if self.tx[0].in_r != self.tx[1].in_r {
                    a.report.phases_agree = false;
                }
            }
            self.build(0, t)?;
            self.build(1, t)?;
            let out = self.session.step(&self.tx[0].values, &self.tx[1].values)?;
            self.record_truth(out.state);
            self.write_trace(t, out.state, &out.y)?;
            for user in 0..2 {
                self.observe(user, t, &out.y[user], out.state);
            }
            self.fail_on_decode()?;
            for user in 0..2 {
                let fb = self
                    .session
                    .take_feedback(user)
                    .ok_or_else(|| SchemeError::Internal(format!("missing feedback for slot {t}")))?;
                self.feedback(user, &fb);
                self.collect_relays(user, t);
            }
        }
        let mut delivered = [0u64; 2];
        for user in 0..2 {
            delivered[user] = self.rx[user]
                .verify(user, self.tx[user].store.values())
                .map_err(SchemeError::DecodeFailure)?;
        }
        let audit = self.audit.map(|mut a| {
            for user in 0..2 {
                a.truth[user].sort_unstable();
                a.own[user].sort_unstable();
                a.report.ledger[user] = a.own[user].len() as u64;
                let mismatched = a.truth[user].len().abs_diff(a.own[user].len())
                    + a.truth[user].iter().zip(&a.own[user]).filter(|(x, y)| x != y).count();
                a.report.ledger_mismatches += mismatched as u64;
            }
            a.report
        });
        let backlog = self.pipes.iter().map(|p| p.backlog() as u64).sum();
        let generations = self.pipes.iter().map(|p| p.stats.generations).sum();
        let combinations = self.pipes.iter().map(|p| p.stats.combinations).sum();
        Ok(SimResult {
            scheme: scheme.to_string(),
            seed,
            slots: total,
            delivered,
            rates: [delivered[0] as f64 / total as f64, delivered[1] as f64 / total as f64],
            failures: 0,
            diagnostics: Diagnostics {
                phase_f_slots: self.f_slots,
                phase_slots: self.phase_slots,
                generations,
                combinations,
                backlog,
                pending_equations: [self.rx[0].pending() as u64, self.rx[1].pending() as u64],
                audit,
            },
        })
    }
}

/// Runs one trial of the scheme described by `config`.
pub fn simulate<'a>(
    config: &'a EngineConfig,
    dist: &JointStateDistribution,
    scheme: &str,
    seed: u64,
    trace: Option<&'a mut dyn Write>,
) -> Result<SimResult, SchemeError> {
    Engine::new(config, dist, seed, trace)?.run(scheme, seed)
}
