//! State-space exploration of the system–observer product.
//!
//! The explorer walks all interleavings at transition granularity (BFS by
//! default, so the first diagnostic trace has minimal step count), keyed by
//! a canonical byte serialization of each product state. Digests only
//! bucket the visited set; equality is always decided on the full
//! serialization, so hash collisions cannot drop states.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{DataType, SystemDef, Value};
use crate::msc::VerdictMode;
use crate::observer::{
    initial_probe_event, observer_init, observer_step, ObserverConfig, ObserverDef, StateKind,
};
use crate::semantics::{
    enabled_moves_restricted, fire, initial_state, EnvRestrictions, FireError, GlobalState, Move,
    QueueItem, StepEvent,
};

/// Name of the built-in pseudo-property that reports queue overflows.
pub const NO_OVERFLOW: &str = "no-overflow";

/// How a property's observer classifications translate into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// Report the first success classification as a found witness.
    ExistsWitness,
    /// An error classification (scenario matched) is a violation.
    ExistsViolation,
    /// Every execution must stay error-free; exhaustion proves it.
    ForAllPrefix,
    /// Plain state-machine observers and stop conditions; semantics of
    /// [`CheckMode::ForAllPrefix`], reported under its own label.
    Safety,
}

impl CheckMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckMode::ExistsWitness => "exists-witness",
            CheckMode::ExistsViolation => "exists-violation",
            CheckMode::ForAllPrefix => "forall-prefix",
            CheckMode::Safety => "safety",
        }
    }
}

impl From<VerdictMode> for CheckMode {
    fn from(m: VerdictMode) -> Self {
        match m {
            VerdictMode::ExistsWitness => CheckMode::ExistsWitness,
            VerdictMode::ExistsViolation => CheckMode::ExistsViolation,
            VerdictMode::ForAllPrefix => CheckMode::ForAllPrefix,
        }
    }
}

/// One property to check: an observer plus the verdict rule applied to it.
#[derive(Debug, Clone)]
pub struct PropertySpec {
    pub observer: ObserverDef,
    pub mode: CheckMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Holds,
    Violated,
    WitnessFound,
    NoWitness,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Holds => "holds",
            Outcome::Violated => "violated",
            Outcome::WitnessFound => "witness-found",
            Outcome::NoWitness => "no-witness",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

/// A replayable diagnostic run: firing the moves in order from the initial
/// state reproduces every recorded event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub steps: Vec<(Move, StepEvent)>,
}

/// What stopped the search before this property could resolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LimitHit {
    pub states: bool,
    pub depth: bool,
    /// Another property's resolution ended the search early.
    pub early_stop: bool,
    pub interrupted: bool,
}

impl LimitHit {
    pub fn any(self) -> bool {
        self.states || self.depth || self.early_stop || self.interrupted
    }

    /// Stable labels for reports, in a fixed order.
    pub fn labels(self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.states {
            v.push("states");
        }
        if self.depth {
            v.push("depth");
        }
        if self.early_stop {
            v.push("early-stop");
        }
        if self.interrupted {
            v.push("interrupted");
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyStats {
    /// Distinct product states discovered when the outcome was established.
    pub states_explored: u64,
    pub transitions_fired: u64,
    pub peak_depth: u64,
    /// Set only on [`Outcome::Inconclusive`] caused by a limit.
    pub limit_hit: Option<LimitHit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyVerdict {
    pub name: String,
    pub mode: CheckMode,
    pub outcome: Outcome,
    pub traces: Vec<Trace>,
    pub stats: PropertyStats,
    /// Human-readable amplification (e.g. which queue overflowed).
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalStats {
    pub states_explored: u64,
    /// States with no enabled move at all (and hence no active timer).
    pub deadlocks: u64,
    pub transitions_fired: u64,
    pub peak_depth: u64,
    /// Frontier emptied with no limit hit, interrupt, or early stop.
    pub exhausted: bool,
    pub interrupted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploreReport {
    /// One verdict per requested property, in input order, followed by the
    /// built-in [`NO_OVERFLOW`] pseudo-property if it was violated.
    pub properties: Vec<PropertyVerdict>,
    pub global: GlobalStats,
    /// Canonical serializations of the reachable *system* states (observer
    /// part projected away); present when
    /// [`ExplorerConfig::collect_system_states`] is set.
    pub system_states: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone)]
pub struct ExplorerConfig {
    pub max_states: usize,
    pub max_depth: usize,
    /// Distinct diagnostic traces kept per resolved property; distinctness
    /// means distinct terminal product states.
    pub max_traces: usize,
    pub bfs: bool,
    /// Halt the whole search as soon as one property is violated. When
    /// false the search always runs to exhaustion (or a limit) and collects
    /// up to `max_traces` traces per property.
    pub stop_on_first_violation: bool,
    pub env_restrictions: EnvRestrictions,
    /// Checked between expansions; set it from a signal handler to stop
    /// promptly with an inconclusive partial report.
    pub interrupt: Option<Arc<AtomicBool>>,
    pub collect_system_states: bool,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        ExplorerConfig {
            max_states: 1_000_000,
            max_depth: 10_000,
            max_traces: 1,
            bfs: true,
            stop_on_first_violation: true,
            env_restrictions: EnvRestrictions::default(),
            interrupt: None,
            collect_system_states: false,
        }
    }
}

/// Exploration aborts on expression-evaluation failures; they indicate a
/// modeling bug, not a verifiable property.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("evaluation failed at depth {depth} in state [{state}]: {source}")]
    Semantics {
        depth: u64,
        state: String,
        #[source]
        source: FireError,
    },
}

// ---------------------------------------------------------------------------
// Canonical serialization and digests

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn encode_value(v: &Value, out: &mut Vec<u8>) {
    match v {
        Value::Bool(b) => out.push(*b as u8),
        Value::Int(i) => out.extend_from_slice(&i.to_le_bytes()),
        Value::Enum(e) => push_u16(out, *e),
    }
}

fn read_u16(bytes: &[u8], pos: &mut usize) -> u16 {
    let v = u16::from_le_bytes([bytes[*pos], bytes[*pos + 1]]);
    *pos += 2;
    v
}

fn read_u32(bytes: &[u8], pos: &mut usize) -> u32 {
    let v = u32::from_le_bytes(bytes[*pos..*pos + 4].try_into().unwrap());
    *pos += 4;
    v
}

fn decode_value(ty: &DataType, bytes: &[u8], pos: &mut usize) -> Value {
    match ty {
        DataType::Bool => {
            let b = bytes[*pos] != 0;
            *pos += 1;
            Value::Bool(b)
        }
        DataType::Int { .. } => {
            let v = i64::from_le_bytes(bytes[*pos..*pos + 8].try_into().unwrap());
            *pos += 8;
            Value::Int(v)
        }
        DataType::Enum { .. } => Value::Enum(read_u16(bytes, pos)),
    }
}

/// Append the canonical serialization of the system part: per process in
/// declaration order, location, variables, length-prefixed queue, timers.
pub fn encode_global(g: &GlobalState, out: &mut Vec<u8>) {
    for ps in &g.procs {
        push_u16(out, ps.location.0 as u16);
        for v in &ps.vars {
            encode_value(v, out);
        }
        push_u32(out, ps.queue.len() as u32);
        for item in &ps.queue {
            match item {
                QueueItem::Signal { signal, payload, sender } => {
                    out.push(0);
                    push_u16(out, signal.0 as u16);
                    push_u16(out, sender.0 as u16);
                    match payload {
                        Some(v) => {
                            out.push(1);
                            encode_value(v, out);
                        }
                        None => out.push(0),
                    }
                }
                QueueItem::Timeout { timer } => {
                    out.push(1);
                    push_u16(out, timer.0 as u16);
                }
            }
        }
        for t in &ps.timers {
            match t {
                Some(remaining) => {
                    out.push(1);
                    push_u32(out, *remaining);
                }
                None => out.push(0),
            }
        }
    }
}

/// Canonical serialization of a whole product state. Equal states yield
/// equal bytes; distinct states yield distinct bytes (the encoding is
/// injective given the system and observer definitions used to decode).
pub fn encode_product(g: &GlobalState, cfgs: &[ObserverConfig], out: &mut Vec<u8>) {
    encode_global(g, out);
    for cfg in cfgs {
        match cfg {
            ObserverConfig::Det { state, locals } => {
                push_u16(out, state.0 as u16);
                for v in locals {
                    encode_value(v, out);
                }
            }
            ObserverConfig::Powerset { threads } => {
                push_u32(out, threads.len() as u32);
                for (s, locals) in threads {
                    push_u16(out, s.0 as u16);
                    for v in locals {
                        encode_value(v, out);
                    }
                }
            }
        }
    }
}

fn decode_product(
    sys: &SystemDef,
    observers: &[&ObserverDef],
    bytes: &[u8],
) -> (GlobalState, Vec<ObserverConfig>) {
    let mut pos = 0;
    let mut procs = Vec::with_capacity(sys.processes.len());
    for pdef in &sys.processes {
        let location = crate::model::LocId(read_u16(bytes, &mut pos) as usize);
        let vars = pdef
            .vars
            .iter()
            .map(|v| decode_value(&v.ty, bytes, &mut pos))
            .collect();
        let qlen = read_u32(bytes, &mut pos) as usize;
        let mut queue = VecDeque::with_capacity(qlen);
        for _ in 0..qlen {
            let tag = bytes[pos];
            pos += 1;
            if tag == 0 {
                let signal = crate::model::SigId(read_u16(bytes, &mut pos) as usize);
                let sender = crate::model::ProcId(read_u16(bytes, &mut pos) as usize);
                let has_payload = bytes[pos] != 0;
                pos += 1;
                let payload = if has_payload {
                    let ty = sys.signal(signal).payload.as_ref().expect("payload type");
                    Some(decode_value(ty, bytes, &mut pos))
                } else {
                    None
                };
                queue.push_back(QueueItem::Signal { signal, payload, sender });
            } else {
                queue.push_back(QueueItem::Timeout {
                    timer: crate::model::TimerId(read_u16(bytes, &mut pos) as usize),
                });
            }
        }
        let timers = pdef
            .timers
            .iter()
            .map(|_| {
                let active = bytes[pos] != 0;
                pos += 1;
                active.then(|| read_u32(bytes, &mut pos))
            })
            .collect();
        procs.push(crate::semantics::ProcessState { location, vars, queue, timers });
    }
    let g = GlobalState { procs };
    let mut cfgs = Vec::with_capacity(observers.len());
    for obs in observers {
        if obs.powerset {
            let count = read_u32(bytes, &mut pos) as usize;
            let mut threads = Vec::with_capacity(count);
            for _ in 0..count {
                let state = crate::observer::ObsStateId(read_u16(bytes, &mut pos) as usize);
                let locals = obs
                    .locals
                    .iter()
                    .map(|v| decode_value(&v.ty, bytes, &mut pos))
                    .collect();
                threads.push((state, locals));
            }
            cfgs.push(ObserverConfig::Powerset { threads });
        } else {
            let state = crate::observer::ObsStateId(read_u16(bytes, &mut pos) as usize);
            let locals = obs
                .locals
                .iter()
                .map(|v| decode_value(&v.ty, bytes, &mut pos))
                .collect();
            cfgs.push(ObserverConfig::Det { state, locals });
        }
    }
    debug_assert_eq!(pos, bytes.len());
    (g, cfgs)
}

/// 64-bit FNV-1a over the canonical serialization. Digests bucket the
/// visited set; equality is always confirmed on the full bytes.
pub fn state_digest(canonical: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in canonical {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Digest-bucketed store of canonical serializations with parent links.
struct VisitedSet {
    buckets: HashMap<u64, Vec<u32>>,
    nodes: Vec<Box<[u8]>>,
}

impl VisitedSet {
    fn new() -> Self {
        VisitedSet { buckets: HashMap::new(), nodes: Vec::new() }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Returns the node's index and whether it was newly inserted.
    fn lookup_or_insert(&mut self, canonical: &[u8]) -> (u32, bool) {
        let bucket = self.buckets.entry(state_digest(canonical)).or_default();
        for &idx in bucket.iter() {
            if self.nodes[idx as usize].as_ref() == canonical {
                return (idx, false);
            }
        }
        let idx = self.nodes.len() as u32;
        self.nodes.push(canonical.into());
        bucket.push(idx);
        (idx, true)
    }
}

/// Compact one-line state rendering for diagnostics.
pub fn render_state(sys: &SystemDef, g: &GlobalState) -> String {
    let mut parts = Vec::new();
    for (pi, ps) in g.procs.iter().enumerate() {
        let pdef = &sys.processes[pi];
        let mut s = format!("{}@{}", pdef.name, pdef.locations[ps.location.0]);
        if !ps.vars.is_empty() {
            let vars: Vec<String> = ps
                .vars
                .iter()
                .zip(&pdef.vars)
                .map(|(v, d)| format!("{}={}", d.name, v.display(&d.ty)))
                .collect();
            s.push_str(&format!("({})", vars.join(",")));
        }
        if !ps.queue.is_empty() {
            let items: Vec<String> = ps
                .queue
                .iter()
                .map(|item| match item {
                    QueueItem::Signal { signal, payload, .. } => match payload {
                        Some(v) => format!(
                            "{}({})",
                            sys.signal(*signal).name,
                            v.display(sys.signal(*signal).payload.as_ref().unwrap())
                        ),
                        None => sys.signal(*signal).name.clone(),
                    },
                    QueueItem::Timeout { timer } => pdef.timers[timer.0].clone(),
                })
                .collect();
            s.push_str(&format!(" q=[{}]", items.join(",")));
        }
        parts.push(s);
    }
    parts.join(" | ")
}

// ---------------------------------------------------------------------------
// Exploration

struct PropTrack {
    outcome: Option<Outcome>,
    traces: Vec<Trace>,
    snapshot: Option<PropertyStats>,
}

impl PropTrack {
    fn frozen(&self, max_traces: usize) -> bool {
        self.outcome.is_some() && self.traces.len() >= max_traces
    }
}

/// Explore the product graph exhaustively within the configured limits and
/// compute one verdict per property.
pub fn explore(
    sys: &SystemDef,
    props: &[PropertySpec],
    cfg: &ExplorerConfig,
) -> Result<ExploreReport, ExploreError> {
    let observers: Vec<&ObserverDef> = props.iter().map(|p| &p.observer).collect();
    let mut visited = VisitedSet::new();
    let mut parent: Vec<Option<(u32, Move)>> = Vec::new();
    let mut depth: Vec<u32> = Vec::new();
    let mut frontier: VecDeque<u32> = VecDeque::new();
    let mut system_states: HashSet<Vec<u8>> = HashSet::new();

    let mut track: Vec<PropTrack> = props
        .iter()
        .map(|_| PropTrack { outcome: None, traces: Vec::new(), snapshot: None })
        .collect();
    let mut overflow_traces: Vec<Trace> = Vec::new();
    let mut overflow_nodes: HashSet<u32> = HashSet::new();
    let mut overflow_detail: Option<String> = None;
    let mut overflow_snapshot: Option<PropertyStats> = None;

    let mut fired: u64 = 0;
    let mut peak_depth: u64 = 0;
    let mut deadlocks: u64 = 0;
    let mut states_limit = false;
    let mut depth_limit = false;
    let mut interrupted = false;
    let mut halted = false;

    // Observers take one probe step against the initial state so that
    // predicate-only transitions can classify (or cut) at step zero.
    let g0 = initial_state(sys);
    let probe = initial_probe_event();
    let mut cfgs0 = Vec::with_capacity(props.len());
    let mut init_kinds = Vec::with_capacity(props.len());
    let mut init_cut = false;
    for obs in &observers {
        let o = observer_step(obs, &observer_init(obs), &g0, &probe).map_err(|e| {
            ExploreError::Semantics { depth: 0, state: render_state(sys, &g0), source: e }
        })?;
        init_cut |= o.cut;
        init_kinds.push(o.classification);
        cfgs0.push(o.next);
    }

    if !init_cut {
        let mut bytes = Vec::new();
        encode_product(&g0, &cfgs0, &mut bytes);
        if cfg.collect_system_states {
            let mut gb = Vec::new();
            encode_global(&g0, &mut gb);
            system_states.insert(gb);
        }
        let (root, _) = visited.lookup_or_insert(&bytes);
        parent.push(None);
        depth.push(0);
        frontier.push_back(root);

        // Classifications of the initial state itself.
        for (i, kind) in init_kinds.iter().enumerate() {
            record_classification(
                props, cfg, &mut track, &mut halted, i, *kind, root, &parent, sys,
                visited.len() as u64, fired, peak_depth,
            );
        }

        'search: while let Some(node) = if cfg.bfs { frontier.pop_front() } else { frontier.pop_back() } {
            if halted {
                break;
            }
            if let Some(flag) = &cfg.interrupt {
                if flag.load(Ordering::Relaxed) {
                    interrupted = true;
                    break;
                }
            }
            let d = depth[node as usize];
            let (g, cfgs) = decode_product(sys, &observers, &visited.nodes[node as usize]);
            let moves = enabled_moves_restricted(sys, &g, &cfg.env_restrictions).map_err(|e| {
                ExploreError::Semantics {
                    depth: d as u64,
                    state: render_state(sys, &g),
                    source: e,
                }
            })?;
            if moves.is_empty() {
                deadlocks += 1;
                continue;
            }
            if d as usize >= cfg.max_depth {
                depth_limit = true;
                continue;
            }
            for m in &moves {
                let (g2, ev) = match fire(sys, &g, m) {
                    Ok(x) => x,
                    Err(e @ FireError::QueueOverflow { .. }) => {
                        if overflow_nodes.insert(node) && overflow_traces.len() < cfg.max_traces {
                            overflow_traces.push(reconstruct_trace(sys, &parent, node));
                        }
                        if overflow_detail.is_none() {
                            overflow_detail = Some(e.to_string());
                            overflow_snapshot = Some(PropertyStats {
                                states_explored: visited.len() as u64,
                                transitions_fired: fired,
                                peak_depth,
                                limit_hit: None,
                            });
                        }
                        continue;
                    }
                    Err(e) => {
                        return Err(ExploreError::Semantics {
                            depth: d as u64,
                            state: render_state(sys, &g),
                            source: e,
                        })
                    }
                };
                fired += 1;
                let mut cut = false;
                let mut kinds = Vec::with_capacity(props.len());
                let mut next_cfgs = Vec::with_capacity(props.len());
                for (obs, ocfg) in observers.iter().zip(&cfgs) {
                    let o = observer_step(obs, ocfg, &g2, &ev).map_err(|e| {
                        ExploreError::Semantics {
                            depth: d as u64 + 1,
                            state: render_state(sys, &g2),
                            source: e,
                        }
                    })?;
                    cut |= o.cut;
                    kinds.push(o.classification);
                    next_cfgs.push(o.next);
                }
                if cut {
                    continue; // successor pruned before classification
                }
                let mut bytes = Vec::new();
                encode_product(&g2, &next_cfgs, &mut bytes);
                let (idx, inserted) = {
                    if visited.len() >= cfg.max_states {
                        // Inserting would exceed the budget; peek first.
                        let (idx, inserted) = visited.lookup_or_insert(&bytes);
                        if inserted {
                            // Roll back: we only wanted a membership test.
                            visited.nodes.pop();
                            visited
                                .buckets
                                .get_mut(&state_digest(&bytes))
                                .unwrap()
                                .pop();
                            states_limit = true;
                            break 'search;
                        }
                        (idx, false)
                    } else {
                        visited.lookup_or_insert(&bytes)
                    }
                };
                if !inserted {
                    continue;
                }
                parent.push(Some((node, m.clone())));
                depth.push(d + 1);
                peak_depth = peak_depth.max(d as u64 + 1);
                if cfg.collect_system_states {
                    let mut gb = Vec::new();
                    encode_global(&g2, &mut gb);
                    system_states.insert(gb);
                }
                for (i, kind) in kinds.iter().enumerate() {
                    record_classification(
                        props, cfg, &mut track, &mut halted, i, *kind, idx, &parent, sys,
                        visited.len() as u64, fired, peak_depth,
                    );
                }
                if halted {
                    break 'search;
                }
                frontier.push_back(idx);
            }
            if cfg.stop_on_first_violation
                && !props.is_empty()
                && track.iter().all(|t| t.frozen(cfg.max_traces))
            {
                halted = true;
                break;
            }
        }
    }

    let exhausted =
        frontier.is_empty() && !states_limit && !depth_limit && !interrupted && !halted;
    let final_stats = |limit: Option<LimitHit>| PropertyStats {
        states_explored: visited.len() as u64,
        transitions_fired: fired,
        peak_depth,
        limit_hit: limit,
    };
    let limit = {
        let l = LimitHit {
            states: states_limit,
            depth: depth_limit,
            early_stop: halted,
            interrupted,
        };
        l.any().then_some(l)
    };

    let mut verdicts = Vec::new();
    for (i, p) in props.iter().enumerate() {
        let t = &mut track[i];
        let (outcome, stats) = match t.outcome {
            Some(o) => (o, t.snapshot.unwrap()),
            None if exhausted => {
                let o = if p.mode == CheckMode::ExistsWitness {
                    Outcome::NoWitness
                } else {
                    Outcome::Holds
                };
                (o, final_stats(None))
            }
            None => (Outcome::Inconclusive, final_stats(limit)),
        };
        verdicts.push(PropertyVerdict {
            name: p.observer.name.clone(),
            mode: p.mode,
            outcome,
            traces: std::mem::take(&mut t.traces),
            stats,
            detail: None,
        });
    }
    if !overflow_traces.is_empty() {
        verdicts.push(PropertyVerdict {
            name: NO_OVERFLOW.into(),
            mode: CheckMode::Safety,
            outcome: Outcome::Violated,
            traces: overflow_traces,
            stats: overflow_snapshot.unwrap(),
            detail: overflow_detail,
        });
    }

    Ok(ExploreReport {
        properties: verdicts,
        global: GlobalStats {
            states_explored: visited.len() as u64,
            deadlocks,
            transitions_fired: fired,
            peak_depth,
            exhausted,
            interrupted,
        },
        system_states: cfg.collect_system_states.then(|| {
            let mut v: Vec<Vec<u8>> = system_states.into_iter().collect();
            v.sort();
            v
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn record_classification(
    props: &[PropertySpec],
    cfg: &ExplorerConfig,
    track: &mut [PropTrack],
    halted: &mut bool,
    i: usize,
    kind: StateKind,
    node: u32,
    parent: &[Option<(u32, Move)>],
    sys: &SystemDef,
    states_explored: u64,
    fired: u64,
    peak_depth: u64,
) {
    let t = &mut track[i];
    if t.frozen(cfg.max_traces) {
        return;
    }
    let outcome = match (props[i].mode, kind) {
        (CheckMode::ExistsWitness, StateKind::Success) => Outcome::WitnessFound,
        (CheckMode::ExistsWitness, _) => return,
        (_, StateKind::Error) => Outcome::Violated,
        (_, _) => return,
    };
    if t.outcome.is_none() {
        t.outcome = Some(outcome);
        t.snapshot = Some(PropertyStats {
            states_explored,
            transitions_fired: fired,
            peak_depth,
            limit_hit: None,
        });
    }
    if t.traces.len() < cfg.max_traces {
        t.traces.push(reconstruct_trace(sys, parent, node));
    }
    if cfg.stop_on_first_violation && outcome == Outcome::Violated {
        *halted = true;
    }
}

/// Walk the parent links back to the root, then refire the moves to attach
/// each step's event.
fn reconstruct_trace(sys: &SystemDef, parent: &[Option<(u32, Move)>], node: u32) -> Trace {
    let mut moves = Vec::new();
    let mut cur = node;
    while let Some((prev, m)) = &parent[cur as usize] {
        moves.push(m.clone());
        cur = *prev;
    }
    moves.reverse();
    let mut g = initial_state(sys);
    let mut steps = Vec::with_capacity(moves.len());
    for m in moves {
        let (g2, ev) = fire(sys, &g, &m).expect("recorded move must refire");
        steps.push((m, ev));
        g = g2;
    }
    Trace { steps }
}

/// Uniformly random enabled move at each step, reproducible from the seed.
/// Stops at `steps`, on deadlock, or when the only enabled move overflows a
/// queue.
pub fn random_walk(
    sys: &SystemDef,
    cfg: &ExplorerConfig,
    steps: usize,
    seed: u64,
) -> Result<Trace, ExploreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = initial_state(sys);
    let mut trace = Trace::default();
    for n in 0..steps {
        let moves = enabled_moves_restricted(sys, &g, &cfg.env_restrictions).map_err(|e| {
            ExploreError::Semantics { depth: n as u64, state: render_state(sys, &g), source: e }
        })?;
        if moves.is_empty() {
            break;
        }
        let m = moves[rng.random_range(0..moves.len())].clone();
        match fire(sys, &g, &m) {
            Ok((g2, ev)) => {
                trace.steps.push((m, ev));
                g = g2;
            }
            Err(FireError::QueueOverflow { .. }) => break,
            Err(e) => {
                return Err(ExploreError::Semantics {
                    depth: n as u64,
                    state: render_state(sys, &g),
                    source: e,
                })
            }
        }
    }
    Ok(trace)
}
