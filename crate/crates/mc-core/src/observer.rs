//! Dynamic observers: property automata stepped synchronously with the
//! system, reading the post-step state and the last step's events.
//!
//! User-written observers are deterministic (first matching transition in
//! textual order wins, at most one step per system step). Observers compiled
//! from message sequence charts are nondeterministic and tracked as a
//! powerset of (state, locals) threads, advanced per output micro-event.

use crate::diag::Diagnostic;
use crate::model::{
    expr_type, index_newtype, value_conforms, DataType, Expr, ProcId, SigId, SystemDef,
    TimerId, Ty, TypeCtx, Value, VarDecl, VarId,
};
use crate::semantics::{
    eval_expr, EvalCtx, FireError, GlobalState, QueueItem, StepEvent, StepKind,
};

index_newtype!(
    /// Index into [`ObserverDef::states`].
    ObsStateId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Regular,
    Success,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsState {
    pub name: String,
    pub kind: StateKind,
}

/// An event pattern over one atomic step. `bind` names the payload binding
/// made available to the guard as binding slot 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventPattern {
    Output { signal: SigId, from: ProcId, to: Option<ProcId>, bind: Option<String> },
    Input { signal: SigId, by: ProcId, bind: Option<String> },
    /// Matches the time step in which the timer expired.
    TimeoutExpiry { timer: TimerId, owner: ProcId },
    DiscardSignal { signal: SigId, by: ProcId },
    DiscardTimer { timer: TimerId, by: ProcId },
}

impl EventPattern {
    pub fn bind_name(&self) -> Option<&str> {
        match self {
            EventPattern::Output { bind, .. } | EventPattern::Input { bind, .. } => {
                bind.as_deref()
            }
            _ => None,
        }
    }
}

/// Guards and assignment expressions use [`Expr::Var`] for observer locals,
/// [`Expr::RemoteVar`]/[`Expr::AtLoc`] for system state, and
/// [`Expr::Binding`]\(0) for the pattern's payload binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsTransition {
    pub from: ObsStateId,
    pub pattern: Option<EventPattern>,
    pub guard: Option<Expr>,
    pub assigns: Vec<(VarId, Expr)>,
    pub cut: bool,
    pub target: ObsStateId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObserverDef {
    pub name: String,
    pub locals: Vec<VarDecl>,
    pub states: Vec<ObsState>,
    pub initial: ObsStateId,
    /// Further states the initial powerset contains besides `initial`
    /// (compiled non-anchored MSC observers start as `{idle, s0}`). Always
    /// empty for deterministic observers.
    pub extra_initial: Vec<ObsStateId>,
    /// In textual order; order is the tie-break rule for deterministic
    /// observers.
    pub transitions: Vec<ObsTransition>,
    /// Nondeterministic (compiled-MSC) observers track a thread set instead
    /// of a single state. This flag never round-trips through DSL text.
    pub powerset: bool,
}

impl ObserverDef {
    pub fn state(&self, id: ObsStateId) -> &ObsState {
        &self.states[id.0]
    }
    pub fn find_state(&self, name: &str) -> Option<ObsStateId> {
        self.states.iter().position(|s| s.name == name).map(ObsStateId)
    }
    fn initial_locals(&self) -> Vec<Value> {
        self.locals.iter().map(|v| v.init).collect()
    }
}

/// Where an observer currently is. Deterministic observers hold one state
/// plus locals; powerset observers hold a sorted, deduplicated set of
/// (state, locals) threads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ObserverConfig {
    Det { state: ObsStateId, locals: Vec<Value> },
    Powerset { threads: Vec<(ObsStateId, Vec<Value>)> },
}

/// Result of one observer step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObserverOutcome {
    pub next: ObserverConfig,
    /// Error if any tracked state is error-kind, else success if any is
    /// success-kind, else regular.
    pub classification: StateKind,
    /// True iff a taken transition was flagged `cut`: the explorer discards
    /// the successor state.
    pub cut: bool,
}

/// The initial configuration: the initial state (as a singleton thread set
/// for powerset observers) with locals at their declared initials.
pub fn observer_init(obs: &ObserverDef) -> ObserverConfig {
    let locals = obs.initial_locals();
    if obs.powerset {
        let mut threads: Vec<_> = std::iter::once(obs.initial)
            .chain(obs.extra_initial.iter().copied())
            .map(|s| (s, locals.clone()))
            .collect();
        threads.sort();
        threads.dedup();
        ObserverConfig::Powerset { threads }
    } else {
        ObserverConfig::Det { state: obs.initial, locals }
    }
}

/// A synthetic step used to evaluate predicate-only transitions against the
/// initial state before any move fires. No event pattern matches it.
pub fn initial_probe_event() -> StepEvent {
    StepEvent {
        kind: StepKind::TimeElapse,
        consumed: None,
        outputs: Vec::new(),
        timeouts_enqueued: Vec::new(),
    }
}

fn classify(obs: &ObserverDef, states: impl Iterator<Item = ObsStateId>) -> StateKind {
    let mut seen_success = false;
    for s in states {
        match obs.state(s).kind {
            StateKind::Error => return StateKind::Error,
            StateKind::Success => seen_success = true,
            StateKind::Regular => {}
        }
    }
    if seen_success {
        StateKind::Success
    } else {
        StateKind::Regular
    }
}

/// Advance `cfg` over one system step. Pure: same arguments, same outcome.
pub fn observer_step(
    obs: &ObserverDef,
    cfg: &ObserverConfig,
    g_after: &GlobalState,
    ev: &StepEvent,
) -> Result<ObserverOutcome, FireError> {
    match cfg {
        ObserverConfig::Det { state, locals } => det_step(obs, *state, locals, g_after, ev),
        ObserverConfig::Powerset { threads } => powerset_step(obs, threads, g_after, ev),
    }
}

fn det_step(
    obs: &ObserverDef,
    state: ObsStateId,
    locals: &[Value],
    g_after: &GlobalState,
    ev: &StepEvent,
) -> Result<ObserverOutcome, FireError> {
    for tr in obs.transitions.iter().filter(|t| t.from == state) {
        let binding = match &tr.pattern {
            None => None,
            Some(p) => match match_pattern(p, ev) {
                Some(b) => Some(b),
                None => continue,
            },
        };
        let bound = binding.unwrap_or(None);
        if !guard_true(obs, tr, locals, bound, g_after)? {
            continue;
        }
        let mut next_locals = locals.to_vec();
        apply_assigns(obs, tr, &mut next_locals, bound, g_after)?;
        return Ok(ObserverOutcome {
            next: ObserverConfig::Det { state: tr.target, locals: next_locals },
            classification: classify(obs, std::iter::once(tr.target)),
            cut: tr.cut,
        });
    }
    Ok(ObserverOutcome {
        next: ObserverConfig::Det { state, locals: locals.to_vec() },
        classification: classify(obs, std::iter::once(state)),
        cut: false,
    })
}

fn powerset_step(
    obs: &ObserverDef,
    threads: &[(ObsStateId, Vec<Value>)],
    g_after: &GlobalState,
    ev: &StepEvent,
) -> Result<ObserverOutcome, FireError> {
    let mut current: Vec<(ObsStateId, Vec<Value>)> = threads.to_vec();
    let mut cut = false;
    // Each output of the step is matched as its own micro-event, in action
    // order, so one step can advance a thread through several rows.
    for out in &ev.outputs {
        let micro = StepEvent {
            kind: ev.kind.clone(),
            consumed: None,
            outputs: vec![out.clone()],
            timeouts_enqueued: Vec::new(),
        };
        let mut next: Vec<(ObsStateId, Vec<Value>)> = Vec::new();
        for (state, locals) in &current {
            let mut advanced = false;
            for tr in obs.transitions.iter().filter(|t| t.from == *state) {
                let bound = match &tr.pattern {
                    None => None,
                    Some(p) => match match_pattern(p, &micro) {
                        Some(b) => b,
                        None => continue,
                    },
                };
                if !guard_true(obs, tr, locals, bound, g_after)? {
                    continue;
                }
                let mut next_locals = locals.clone();
                apply_assigns(obs, tr, &mut next_locals, bound, g_after)?;
                // Locals are dead weight on absorbing states; normalizing
                // them keeps the thread set (and state digests) small.
                if is_terminal(obs, tr.target) {
                    next_locals = obs.initial_locals();
                }
                cut |= tr.cut;
                advanced = true;
                next.push((tr.target, next_locals));
            }
            if !advanced {
                next.push((*state, locals.clone()));
            }
        }
        next.sort();
        next.dedup();
        current = next;
    }
    let classification = classify(obs, current.iter().map(|(s, _)| *s));
    Ok(ObserverOutcome {
        next: ObserverConfig::Powerset { threads: current },
        classification,
        cut,
    })
}

/// A state no transition leaves: locals can never be read again.
fn is_terminal(obs: &ObserverDef, s: ObsStateId) -> bool {
    !obs.transitions.iter().any(|t| t.from == s)
}

/// Does `p` match `ev`? `Some(binding)` on match, with the bound payload (if
/// the pattern binds one).
fn match_pattern(p: &EventPattern, ev: &StepEvent) -> Option<Option<Value>> {
    match p {
        EventPattern::Output { signal, from, to, bind } => {
            for out in &ev.outputs {
                if out.signal == *signal
                    && out.from == *from
                    && to.map_or(true, |t| out.to == t)
                {
                    return Some(if bind.is_some() { out.payload } else { None });
                }
            }
            None
        }
        EventPattern::Input { signal, by, bind } => match (&ev.kind, &ev.consumed) {
            (StepKind::Fired { proc, .. }, Some(QueueItem::Signal { signal: s, payload, .. }))
                if proc == by && s == signal =>
            {
                Some(if bind.is_some() { *payload } else { None })
            }
            _ => None,
        },
        EventPattern::TimeoutExpiry { timer, owner } => ev
            .timeouts_enqueued
            .contains(&(*owner, *timer))
            .then_some(None),
        EventPattern::DiscardSignal { signal, by } => match &ev.kind {
            StepKind::Discarded { proc, item: QueueItem::Signal { signal: s, .. } }
                if proc == by && s == signal =>
            {
                Some(None)
            }
            _ => None,
        },
        EventPattern::DiscardTimer { timer, by } => match &ev.kind {
            StepKind::Discarded { proc, item: QueueItem::Timeout { timer: t } }
                if proc == by && t == timer =>
            {
                Some(None)
            }
            _ => None,
        },
    }
}

fn guard_true(
    obs: &ObserverDef,
    tr: &ObsTransition,
    locals: &[Value],
    bound: Option<Value>,
    g_after: &GlobalState,
) -> Result<bool, FireError> {
    let Some(guard) = &tr.guard else { return Ok(true) };
    let bindings = [bound];
    let ctx = EvalCtx { vars: locals, bindings: &bindings, global: Some(g_after) };
    match eval_expr(guard, &ctx) {
        Ok(Value::Bool(b)) => Ok(b),
        Ok(_) => unreachable!("observer guard not Bool-typed"),
        Err(source) => Err(FireError::Eval {
            context: format!("guard in observer {}", obs.name),
            source,
        }),
    }
}

fn apply_assigns(
    obs: &ObserverDef,
    tr: &ObsTransition,
    locals: &mut Vec<Value>,
    bound: Option<Value>,
    g_after: &GlobalState,
) -> Result<(), FireError> {
    let bindings = [bound];
    for (var, e) in &tr.assigns {
        let v = {
            let ctx = EvalCtx { vars: locals, bindings: &bindings, global: Some(g_after) };
            eval_expr(e, &ctx).map_err(|source| FireError::Eval {
                context: format!("assignment in observer {}", obs.name),
                source,
            })?
        };
        locals[var.0] = v;
    }
    Ok(())
}

/// Generate the two-state observer for a Boolean stop condition: `watch`
/// (initial) jumps to the absorbing error state `err` as soon as
/// `condition` holds after any step. No event pattern: a pure state
/// predicate.
pub fn make_bsc_observer(name: &str, condition: Expr) -> ObserverDef {
    ObserverDef {
        name: name.to_string(),
        locals: vec![],
        states: vec![
            ObsState { name: "watch".into(), kind: StateKind::Regular },
            ObsState { name: "err".into(), kind: StateKind::Error },
        ],
        initial: ObsStateId(0),
        extra_initial: vec![],
        transitions: vec![ObsTransition {
            from: ObsStateId(0),
            pattern: None,
            guard: Some(condition),
            assigns: vec![],
            cut: false,
            target: ObsStateId(1),
        }],
        powerset: false,
    }
}

/// Structural validation of an observer against the system it references.
pub fn validate_observer(obs: &ObserverDef, sys: &SystemDef) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    macro_rules! err {
        ($($arg:tt)*) => { diags.push(Diagnostic::error(format!($($arg)*))) };
    }

    if obs.states.is_empty() {
        err!("observer {} has no states", obs.name);
        return diags;
    }
    if obs.initial.0 >= obs.states.len() {
        err!("observer {} initial state is unresolved", obs.name);
        return diags;
    }
    if !obs.powerset && !obs.extra_initial.is_empty() {
        err!("observer {} is deterministic and cannot have extra initial states", obs.name);
    }
    if obs.extra_initial.iter().any(|s| s.0 >= obs.states.len()) {
        err!("observer {} has an unresolved extra initial state", obs.name);
        return diags;
    }
    for (i, s) in obs.states.iter().enumerate() {
        if obs.states[..i].iter().any(|o| o.name == s.name) {
            err!("duplicate observer state {}", s.name);
        }
    }
    if !obs
        .states
        .iter()
        .any(|s| matches!(s.kind, StateKind::Success | StateKind::Error))
    {
        err!("observer {} needs at least one success or error state", obs.name);
    }
    for (i, v) in obs.locals.iter().enumerate() {
        if obs.locals[..i].iter().any(|o| o.name == v.name) {
            err!("duplicate observer variable {}", v.name);
        }
        if !value_conforms(&v.init, &v.ty) {
            err!("initial value of observer variable {} is out of range", v.name);
        }
    }

    for (ti, tr) in obs.transitions.iter().enumerate() {
        if tr.from.0 >= obs.states.len() || tr.target.0 >= obs.states.len() {
            err!("transition #{ti} of observer {} has an unresolved state", obs.name);
            continue;
        }
        let from = obs.state(tr.from);
        if !matches!(from.kind, StateKind::Regular) {
            err!(
                "state {} is {} and must be absorbing, but has an outgoing transition",
                from.name,
                if matches!(from.kind, StateKind::Success) { "success" } else { "error" }
            );
        }
        let bind_ty = match &tr.pattern {
            Some(p) => match pattern_bind_type(p, sys) {
                Ok(t) => t,
                Err(msg) => {
                    err!("transition #{ti} of observer {}: {msg}", obs.name);
                    None
                }
            },
            None => None,
        };
        let binding_tys: Vec<DataType> = bind_ty.iter().cloned().collect();
        let ctx = TypeCtx {
            sys,
            local_vars: &obs.locals,
            bindings: &binding_tys,
            allow_remote: true,
        };
        if let Some(g) = &tr.guard {
            match expr_type(g, Some(&Ty::Bool), &ctx) {
                Ok(Ty::Bool) => {}
                Ok(t) => err!(
                    "guard of transition #{ti} of observer {} has type {}, expected Bool",
                    obs.name,
                    t.name()
                ),
                Err(msg) => err!("guard of transition #{ti} of observer {}: {msg}", obs.name),
            }
        }
        for (var, e) in &tr.assigns {
            let Some(decl) = obs.locals.get(var.0) else {
                err!("transition #{ti} of observer {} assigns an unresolved variable", obs.name);
                continue;
            };
            match expr_type(e, Some(&decl.ty.ty()), &ctx) {
                Ok(t) if t == decl.ty.ty() => {}
                Ok(t) => err!(
                    "assignment to {} in observer {} has type {}, expected {}",
                    decl.name,
                    obs.name,
                    t.name(),
                    decl.ty.ty().name()
                ),
                Err(msg) => {
                    err!("assignment to {} in observer {}: {msg}", decl.name, obs.name)
                }
            }
        }
    }
    diags
}

/// The payload type a pattern binds, or an error for unresolvable patterns.
fn pattern_bind_type(p: &EventPattern, sys: &SystemDef) -> Result<Option<DataType>, String> {
    let check_sig = |s: &SigId| -> Result<(), String> {
        if s.0 >= sys.signals.len() {
            Err("unresolved signal".into())
        } else {
            Ok(())
        }
    };
    let check_proc = |p: &ProcId| -> Result<(), String> {
        if p.0 >= sys.processes.len() {
            Err("unresolved process".into())
        } else {
            Ok(())
        }
    };
    match p {
        EventPattern::Output { signal, from, to, bind } => {
            check_sig(signal)?;
            check_proc(from)?;
            if let Some(t) = to {
                check_proc(t)?;
            }
            bind_payload(sys, *signal, bind)
        }
        EventPattern::Input { signal, by, bind } => {
            check_sig(signal)?;
            check_proc(by)?;
            bind_payload(sys, *signal, bind)
        }
        EventPattern::TimeoutExpiry { timer, owner } => {
            check_proc(owner)?;
            if timer.0 >= sys.process(*owner).timers.len() {
                return Err("unresolved timer".into());
            }
            Ok(None)
        }
        EventPattern::DiscardSignal { signal, by } => {
            check_sig(signal)?;
            check_proc(by)?;
            Ok(None)
        }
        EventPattern::DiscardTimer { timer, by } => {
            check_proc(by)?;
            if timer.0 >= sys.process(*by).timers.len() {
                return Err("unresolved timer".into());
            }
            Ok(None)
        }
    }
}

fn bind_payload(
    sys: &SystemDef,
    signal: SigId,
    bind: &Option<String>,
) -> Result<Option<DataType>, String> {
    match (bind, &sys.signal(signal).payload) {
        (None, _) => Ok(None),
        (Some(_), Some(t)) => Ok(Some(t.clone())),
        (Some(_), None) => Err(format!(
            "pattern binds a payload but signal {} carries none",
            sys.signal(signal).name
        )),
    }
}

/// Predicate wrapper used by tests and oracles: does `at` hold, meaning the
/// configuration has some thread in the named state?
pub fn config_at(obs: &ObserverDef, cfg: &ObserverConfig, state: &str) -> bool {
    let Some(id) = obs.find_state(state) else { return false };
    match cfg {
        ObserverConfig::Det { state, .. } => *state == id,
        ObserverConfig::Powerset { threads } => threads.iter().any(|(s, _)| *s == id),
    }
}
