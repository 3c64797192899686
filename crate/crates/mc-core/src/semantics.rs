//! Execution semantics: runtime state, enabled-move enumeration, atomic
//! firing, and expression evaluation.
//!
//! A step is atomic: trigger plus all actions of one transition. Time is
//! discrete and eager — a time move is offered only when nothing else can
//! move and at least one timer is running, and then it is the only move.

use crate::model::{
    Action, Expr, LocId, ProcId, SigId, SystemDef, TimerId, TransId, Trigger, UnOp, Value,
};
use std::collections::HashMap;
use std::collections::VecDeque;
use thiserror::Error;

/// An entry in a process input queue.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueueItem {
    Signal { signal: SigId, payload: Option<Value>, sender: ProcId },
    /// Expiry of one of the owner's timers.
    Timeout { timer: TimerId },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProcessState {
    pub location: LocId,
    /// Valuation in declaration order.
    pub vars: Vec<Value>,
    pub queue: VecDeque<QueueItem>,
    /// Remaining ticks per timer, `None` when inactive.
    pub timers: Vec<Option<u32>>,
}

/// State of the whole system: one [`ProcessState`] per process, in
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub procs: Vec<ProcessState>,
}

/// One schedulable step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Move {
    /// Fire transition `trans` of `proc`. `env_payload` carries the chosen
    /// stimulus value for transitions that enumerate an environment payload
    /// domain (it becomes binding slot 0).
    Process { proc: ProcId, trans: TransId, env_payload: Option<Value> },
    /// Drop a queue head that no transition from the current location can
    /// consume.
    Discard { proc: ProcId },
    /// Let one time unit pass.
    Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputEvent {
    pub signal: SigId,
    pub payload: Option<Value>,
    pub from: ProcId,
    pub to: ProcId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Fired { proc: ProcId, trans: TransId },
    Discarded { proc: ProcId, item: QueueItem },
    TimeElapse,
}

/// What one atomic step did. This is what observers see and what traces
/// record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEvent {
    pub kind: StepKind,
    /// The queue item consumed by an Input or Timeout trigger.
    pub consumed: Option<QueueItem>,
    /// Messages sent, in action order.
    pub outputs: Vec<OutputEvent>,
    /// Timers that expired during a TimeElapse step, as (owner, timer), in
    /// declaration order.
    pub timeouts_enqueued: Vec<(ProcId, TimerId)>,
}

impl StepEvent {
    /// The acting process; `None` for time steps.
    pub fn process(&self) -> Option<ProcId> {
        match self.kind {
            StepKind::Fired { proc, .. } | StepKind::Discarded { proc, .. } => Some(proc),
            StepKind::TimeElapse => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow")]
    ArithmeticOverflow,
}

/// Errors surfaced by [`enabled_moves`] and [`fire`]. Queue overflow is a
/// verifiable defect, not a crash: the explorer reports it as a violation
/// of the built-in `no-overflow` pseudo-property.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("queue overflow: {signal} from {from} overflows the queue of {to}")]
    QueueOverflow { signal: String, from: String, to: String },
    #[error("assignment out of range: {process}.{var} := {value}")]
    RangeError { process: String, var: String, value: String },
    #[error("{context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: EvalError,
    },
    #[error("move is not enabled in this state")]
    NotEnabled,
}

/// Evaluation context: a local variable frame, payload binding slots, and —
/// for observer expressions — the global state for remote references.
pub struct EvalCtx<'a> {
    pub vars: &'a [Value],
    pub bindings: &'a [Option<Value>],
    pub global: Option<&'a GlobalState>,
}

impl EvalCtx<'_> {
    pub const EMPTY: EvalCtx<'static> = EvalCtx { vars: &[], bindings: &[], global: None };
}

/// Evaluate an expression. Evaluation is strict (both operands of `and`/`or`
/// are evaluated); division truncates toward zero and `mod` keeps the sign
/// of the dividend. Unresolved references panic — definitions are validated
/// before they reach the semantics.
pub fn eval_expr(e: &Expr, ctx: &EvalCtx) -> Result<Value, EvalError> {
    use crate::model::BinOp::*;
    Ok(match e {
        Expr::Const(v) => *v,
        Expr::Var(v) => ctx.vars[v.0],
        Expr::RemoteVar(p, v) => {
            let g = ctx.global.expect("remote reference outside observer context");
            g.procs[p.0].vars[v.0]
        }
        Expr::AtLoc(p, l) => {
            let g = ctx.global.expect("location predicate outside observer context");
            Value::Bool(g.procs[p.0].location == *l)
        }
        Expr::Binding(slot) => ctx.bindings[*slot].expect("payload binding not set"),
        Expr::Unary(op, inner) => {
            let v = eval_expr(inner, ctx)?;
            match (op, v) {
                (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (UnOp::Neg, Value::Int(n)) => {
                    Value::Int(n.checked_neg().ok_or(EvalError::ArithmeticOverflow)?)
                }
                _ => unreachable!("ill-typed unary operand"),
            }
        }
        Expr::Binary(op, l, r) => {
            let lv = eval_expr(l, ctx)?;
            let rv = eval_expr(r, ctx)?;
            match op {
                Add | Sub | Mul | Div | Mod => {
                    let (Value::Int(a), Value::Int(b)) = (lv, rv) else {
                        unreachable!("ill-typed arithmetic operand")
                    };
                    let n = match op {
                        Add => a.checked_add(b).ok_or(EvalError::ArithmeticOverflow)?,
                        Sub => a.checked_sub(b).ok_or(EvalError::ArithmeticOverflow)?,
                        Mul => a.checked_mul(b).ok_or(EvalError::ArithmeticOverflow)?,
                        Div => {
                            if b == 0 {
                                return Err(EvalError::DivisionByZero);
                            }
                            a.checked_div(b).ok_or(EvalError::ArithmeticOverflow)?
                        }
                        Mod => {
                            if b == 0 {
                                return Err(EvalError::DivisionByZero);
                            }
                            a.checked_rem(b).ok_or(EvalError::ArithmeticOverflow)?
                        }
                        _ => unreachable!(),
                    };
                    Value::Int(n)
                }
                Lt | Le | Gt | Ge => {
                    let (Value::Int(a), Value::Int(b)) = (lv, rv) else {
                        unreachable!("ill-typed comparison operand")
                    };
                    Value::Bool(match op {
                        Lt => a < b,
                        Le => a <= b,
                        Gt => a > b,
                        Ge => a >= b,
                        _ => unreachable!(),
                    })
                }
                Eq => Value::Bool(lv == rv),
                Ne => Value::Bool(lv != rv),
                And | Or => {
                    let (Value::Bool(a), Value::Bool(b)) = (lv, rv) else {
                        unreachable!("ill-typed logic operand")
                    };
                    Value::Bool(if matches!(op, And) { a && b } else { a || b })
                }
            }
        }
    })
}

/// The initial global state: every process at its initial location with
/// initial valuations, empty queues, all timers inactive.
pub fn initial_state(sys: &SystemDef) -> GlobalState {
    GlobalState {
        procs: sys
            .processes
            .iter()
            .map(|p| ProcessState {
                location: p.initial,
                vars: p.vars.iter().map(|v| v.init).collect(),
                queue: VecDeque::new(),
                timers: vec![None; p.timers.len()],
            })
            .collect(),
    }
}

/// Restriction of environment stimulus domains: for an (env process,
/// emitted signal) pair, the payload values to enumerate instead of the
/// signal's full domain. Values are kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnvRestrictions {
    map: HashMap<(ProcId, SigId), Vec<Value>>,
}

impl EnvRestrictions {
    pub fn restrict(&mut self, proc: ProcId, signal: SigId, mut values: Vec<Value>) {
        values.sort();
        values.dedup();
        self.map.insert((proc, signal), values);
    }
    pub fn get(&self, proc: ProcId, signal: SigId) -> Option<&[Value]> {
        self.map.get(&(proc, signal)).map(|v| v.as_slice())
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
    /// Deterministic listing for report output.
    pub fn entries(&self) -> Vec<((ProcId, SigId), Vec<Value>)> {
        let mut v: Vec<_> = self.map.iter().map(|(k, vs)| (*k, vs.clone())).collect();
        v.sort();
        v
    }
}

/// Enumerate the enabled moves of `g`, in deterministic order: processes in
/// declaration order; within a process its transitions in declaration order
/// (environment payload values ascending), then a discard move if the queue
/// head is unconsumable. A time move is offered only when nothing else is
/// enabled and some timer is active, and then it is the only move.
pub fn enabled_moves(sys: &SystemDef, g: &GlobalState) -> Result<Vec<Move>, FireError> {
    enabled_moves_restricted(sys, g, &EnvRestrictions::default())
}

/// [`enabled_moves`] with environment stimulus domains narrowed per
/// `restrictions`.
pub fn enabled_moves_restricted(
    sys: &SystemDef,
    g: &GlobalState,
    restrictions: &EnvRestrictions,
) -> Result<Vec<Move>, FireError> {
    let mut moves = Vec::new();
    for (pi, proc) in sys.processes.iter().enumerate() {
        let pid = ProcId(pi);
        let ps = &g.procs[pi];
        let head = ps.queue.front();
        let mut head_consumable = false;

        for (ti, tr) in proc.transitions_from(ps.location) {
            // An environment process only stimulates when the stimulus can
            // be delivered: moves whose outputs would overflow a queue are
            // not offered (system processes keep the overflow defect).
            if proc.is_env && !env_outputs_fit(sys, g, &tr.actions) {
                // The head-consumability bookkeeping below is untouched:
                // env transitions never consume.
                continue;
            }
            match &tr.trigger {
                Trigger::Input { signal, bind } => {
                    let Some(QueueItem::Signal { signal: hs, payload, .. }) = head else {
                        continue;
                    };
                    if hs != signal {
                        continue;
                    }
                    head_consumable = true;
                    let bindings = [if bind.is_some() { *payload } else { None }];
                    let ctx = EvalCtx { vars: &ps.vars, bindings: &bindings, global: None };
                    if guard_holds(tr.guard.as_ref(), &ctx, proc, ti)? {
                        moves.push(Move::Process { proc: pid, trans: ti, env_payload: None });
                    }
                }
                Trigger::Timeout { timer } => {
                    let Some(QueueItem::Timeout { timer: ht }) = head else {
                        continue;
                    };
                    if ht != timer {
                        continue;
                    }
                    head_consumable = true;
                    let ctx = EvalCtx { vars: &ps.vars, bindings: &[], global: None };
                    if guard_holds(tr.guard.as_ref(), &ctx, proc, ti)? {
                        moves.push(Move::Process { proc: pid, trans: ti, env_payload: None });
                    }
                }
                Trigger::Spontaneous => match &tr.env_payload {
                    None => {
                        let ctx = EvalCtx { vars: &ps.vars, bindings: &[], global: None };
                        if guard_holds(tr.guard.as_ref(), &ctx, proc, ti)? {
                            moves.push(Move::Process { proc: pid, trans: ti, env_payload: None });
                        }
                    }
                    Some(dom) => {
                        let domain = emitted_signal(&tr.actions)
                            .and_then(|s| restrictions.get(pid, s))
                            .map(|vs| vs.to_vec())
                            .unwrap_or_else(|| dom.values());
                        for v in domain {
                            let bindings = [Some(v)];
                            let ctx =
                                EvalCtx { vars: &ps.vars, bindings: &bindings, global: None };
                            if guard_holds(tr.guard.as_ref(), &ctx, proc, ti)? {
                                moves.push(Move::Process {
                                    proc: pid,
                                    trans: ti,
                                    env_payload: Some(v),
                                });
                            }
                        }
                    }
                },
            }
        }

        // Implicit discard: the head matches no input/timeout trigger signal
        // of any transition from this location (guards do not matter — a
        // guard-blocked matching input keeps the head queued).
        if let Some(item) = head {
            let signal_matched = proc.transitions_from(ps.location).any(|(_, tr)| {
                match (&tr.trigger, item) {
                    (Trigger::Input { signal, .. }, QueueItem::Signal { signal: hs, .. }) => {
                        signal == hs
                    }
                    (Trigger::Timeout { timer }, QueueItem::Timeout { timer: ht }) => timer == ht,
                    _ => false,
                }
            });
            let _ = head_consumable;
            if !signal_matched {
                moves.push(Move::Discard { proc: pid });
            }
        }
    }

    if moves.is_empty() {
        let any_timer_active =
            g.procs.iter().any(|ps| ps.timers.iter().any(|t| t.is_some()));
        if any_timer_active {
            moves.push(Move::Time);
        }
    }
    Ok(moves)
}

fn guard_holds(
    guard: Option<&Expr>,
    ctx: &EvalCtx,
    proc: &crate::model::ProcessDef,
    trans: TransId,
) -> Result<bool, FireError> {
    match guard {
        None => Ok(true),
        Some(e) => match eval_expr(e, ctx) {
            Ok(Value::Bool(b)) => Ok(b),
            Ok(_) => unreachable!("guard not Bool-typed"),
            Err(source) => Err(FireError::Eval {
                context: format!("guard of transition #{} of {}", trans.0, proc.name),
                source,
            }),
        },
    }
}

/// The signal of the first output action, used to look up env restrictions
/// for emits-generated transitions.
fn emitted_signal(actions: &[Action]) -> Option<SigId> {
    actions.iter().find_map(|a| match a {
        Action::Output { signal, .. } => Some(*signal),
        _ => None,
    })
}

/// Would the outputs of an env transition all fit in their target queues?
fn env_outputs_fit(sys: &SystemDef, g: &GlobalState, actions: &[Action]) -> bool {
    let mut extra: HashMap<ProcId, usize> = HashMap::new();
    for a in actions {
        if let Action::Output { to, .. } = a {
            *extra.entry(*to).or_insert(0) += 1;
        }
    }
    extra
        .into_iter()
        .all(|(to, n)| g.procs[to.0].queue.len() + n <= sys.queue_capacity(to))
}

/// Fire `m` on `g` and return the successor plus what happened. `m` must be
/// enabled; a cheap re-check of trigger and guard turns misuse into
/// [`FireError::NotEnabled`].
pub fn fire(sys: &SystemDef, g: &GlobalState, m: &Move) -> Result<(GlobalState, StepEvent), FireError> {
    let mut next = g.clone();
    match m {
        Move::Time => {
            let mut timeouts = Vec::new();
            let mut any_active = false;
            for (pi, ps) in next.procs.iter_mut().enumerate() {
                for (ti, slot) in ps.timers.iter_mut().enumerate() {
                    if let Some(remaining) = slot {
                        any_active = true;
                        *remaining -= 1;
                        if *remaining == 0 {
                            *slot = None;
                            let cap = sys.queue_capacity(ProcId(pi));
                            if ps.queue.len() >= cap {
                                let p = &sys.processes[pi];
                                return Err(FireError::QueueOverflow {
                                    signal: p.timers[ti].clone(),
                                    from: p.name.clone(),
                                    to: p.name.clone(),
                                });
                            }
                            ps.queue.push_back(QueueItem::Timeout { timer: TimerId(ti) });
                            timeouts.push((ProcId(pi), TimerId(ti)));
                        }
                    }
                }
            }
            if !any_active {
                // Time may only pass while a timer is running.
                return Err(FireError::NotEnabled);
            }
            Ok((
                next,
                StepEvent {
                    kind: StepKind::TimeElapse,
                    consumed: None,
                    outputs: Vec::new(),
                    timeouts_enqueued: timeouts,
                },
            ))
        }
        Move::Discard { proc } => {
            let item =
                next.procs[proc.0].queue.pop_front().ok_or(FireError::NotEnabled)?;
            Ok((
                next,
                StepEvent {
                    kind: StepKind::Discarded { proc: *proc, item: item.clone() },
                    consumed: None,
                    outputs: Vec::new(),
                    timeouts_enqueued: Vec::new(),
                },
            ))
        }
        Move::Process { proc, trans, env_payload } => {
            let pdef = sys.process(*proc);
            let tr = pdef.transitions.get(trans.0).ok_or(FireError::NotEnabled)?;
            if tr.from != next.procs[proc.0].location {
                return Err(FireError::NotEnabled);
            }

            // Consume the trigger and establish binding slot 0.
            let mut bindings = [None];
            let mut consumed = None;
            match &tr.trigger {
                Trigger::Input { signal, bind } => {
                    match next.procs[proc.0].queue.front() {
                        Some(QueueItem::Signal { signal: hs, .. }) if hs == signal => {}
                        _ => return Err(FireError::NotEnabled),
                    }
                    let item = next.procs[proc.0].queue.pop_front().unwrap();
                    if bind.is_some() {
                        if let QueueItem::Signal { payload, .. } = &item {
                            bindings[0] = *payload;
                        }
                    }
                    consumed = Some(item);
                }
                Trigger::Timeout { timer } => {
                    match next.procs[proc.0].queue.front() {
                        Some(QueueItem::Timeout { timer: ht }) if ht == timer => {}
                        _ => return Err(FireError::NotEnabled),
                    }
                    consumed = next.procs[proc.0].queue.pop_front();
                }
                Trigger::Spontaneous => {
                    if tr.env_payload.is_some() {
                        bindings[0] = *env_payload;
                        if bindings[0].is_none() {
                            return Err(FireError::NotEnabled);
                        }
                    }
                }
            }

            {
                let ps = &next.procs[proc.0];
                let ctx = EvalCtx { vars: &ps.vars, bindings: &bindings, global: None };
                if !guard_holds(tr.guard.as_ref(), &ctx, pdef, *trans)? {
                    return Err(FireError::NotEnabled);
                }
            }

            let mut outputs = Vec::new();
            for (ai, action) in tr.actions.iter().enumerate() {
                let eval = |e: &Expr, next: &GlobalState| -> Result<Value, FireError> {
                    let ctx = EvalCtx {
                        vars: &next.procs[proc.0].vars,
                        bindings: &bindings,
                        global: None,
                    };
                    eval_expr(e, &ctx).map_err(|source| FireError::Eval {
                        context: format!(
                            "action #{ai} of transition #{} of {}",
                            trans.0, pdef.name
                        ),
                        source,
                    })
                };
                match action {
                    Action::Assign { var, value } => {
                        let v = eval(value, &next)?;
                        let decl = &pdef.vars[var.0];
                        if !crate::model::value_conforms(&v, &decl.ty) {
                            return Err(FireError::RangeError {
                                process: pdef.name.clone(),
                                var: decl.name.clone(),
                                value: v.display(&decl.ty),
                            });
                        }
                        next.procs[proc.0].vars[var.0] = v;
                    }
                    Action::Output { signal, payload, to } => {
                        let v = payload.as_ref().map(|e| eval(e, &next)).transpose()?;
                        let cap = sys.queue_capacity(*to);
                        if next.procs[to.0].queue.len() >= cap {
                            return Err(FireError::QueueOverflow {
                                signal: sys.signal(*signal).name.clone(),
                                from: pdef.name.clone(),
                                to: sys.process(*to).name.clone(),
                            });
                        }
                        next.procs[to.0].queue.push_back(QueueItem::Signal {
                            signal: *signal,
                            payload: v,
                            sender: *proc,
                        });
                        outputs.push(OutputEvent {
                            signal: *signal,
                            payload: v,
                            from: *proc,
                            to: *to,
                        });
                    }
                    Action::SetTimer { timer, duration } => {
                        let Value::Int(d) = eval(duration, &next)? else {
                            unreachable!("ill-typed timer duration")
                        };
                        // Durations are at least one tick.
                        let d = d.clamp(1, u32::MAX as i64) as u32;
                        next.procs[proc.0].timers[timer.0] = Some(d);
                    }
                    Action::ResetTimer { timer } => {
                        next.procs[proc.0].timers[timer.0] = None;
                        next.procs[proc.0]
                            .queue
                            .retain(|it| !matches!(it, QueueItem::Timeout { timer: t } if t == timer));
                    }
                }
            }
            next.procs[proc.0].location = tr.target;
            Ok((
                next,
                StepEvent {
                    kind: StepKind::Fired { proc: *proc, trans: *trans },
                    consumed,
                    outputs,
                    timeouts_enqueued: Vec::new(),
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    /// ping <-> pong: ping spontaneously serves, then each side returns the
    /// ball; pong counts rallies with a timer-free counter.
    fn ping_pong() -> SystemDef {
        let ball = Signal { name: "ball".into(), payload: None };
        let ping = ProcessDef {
            name: "ping".into(),
            is_env: false,
            queue_capacity: Some(1),
            vars: vec![],
            timers: vec![],
            locations: vec!["serve".into(), "rally".into()],
            initial: LocId(0),
            transitions: vec![
                Transition::new(
                    LocId(0),
                    Trigger::Spontaneous,
                    None,
                    vec![Action::Output { signal: SigId(0), payload: None, to: ProcId(1) }],
                    LocId(1),
                ),
                Transition::new(
                    LocId(1),
                    Trigger::Input { signal: SigId(0), bind: None },
                    None,
                    vec![Action::Output { signal: SigId(0), payload: None, to: ProcId(1) }],
                    LocId(1),
                ),
            ],
            emits: vec![],
        };
        let pong = ProcessDef {
            name: "pong".into(),
            is_env: false,
            queue_capacity: Some(1),
            vars: vec![VarDecl {
                name: "hits".into(),
                ty: DataType::Int { min: 0, max: 3 },
                init: Value::Int(0),
            }],
            timers: vec![],
            locations: vec!["play".into()],
            initial: LocId(0),
            transitions: vec![Transition::new(
                LocId(0),
                Trigger::Input { signal: SigId(0), bind: None },
                Some(Expr::binary(BinOp::Lt, Expr::Var(VarId(0)), Expr::int(3))),
                vec![
                    Action::Assign {
                        var: VarId(0),
                        value: Expr::binary(BinOp::Add, Expr::Var(VarId(0)), Expr::int(1)),
                    },
                    Action::Output { signal: SigId(0), payload: None, to: ProcId(0) },
                ],
                LocId(0),
            )],
            emits: vec![],
        };
        SystemDef {
            name: "ping_pong".into(),
            signals: vec![ball],
            processes: vec![ping, pong],
            default_queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }

    fn timered() -> SystemDef {
        // one process: arm a 2-tick timer, then wait for it
        SystemDef {
            name: "timered".into(),
            signals: vec![],
            processes: vec![ProcessDef {
                name: "w".into(),
                is_env: false,
                queue_capacity: None,
                vars: vec![],
                timers: vec!["t".into()],
                locations: vec!["arm".into(), "wait".into(), "done".into()],
                initial: LocId(0),
                transitions: vec![
                    Transition::new(
                        LocId(0),
                        Trigger::Spontaneous,
                        None,
                        vec![Action::SetTimer { timer: TimerId(0), duration: Expr::int(2) }],
                        LocId(1),
                    ),
                    Transition::new(
                        LocId(1),
                        Trigger::Timeout { timer: TimerId(0) },
                        None,
                        vec![],
                        LocId(2),
                    ),
                ],
                emits: vec![],
            }],
            default_queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }

    #[test]
    fn initial_state_shape() {
        let sys = ping_pong();
        assert_eq!(validate_system(&sys), vec![]);
        let g = initial_state(&sys);
        assert_eq!(g.procs.len(), 2);
        assert_eq!(g.procs[0].location, LocId(0));
        assert_eq!(g.procs[1].vars, vec![Value::Int(0)]);
        assert!(g.procs.iter().all(|p| p.queue.is_empty()));
        assert!(g.procs.iter().all(|p| p.timers.iter().all(|t| t.is_none())));
    }

    #[test]
    fn serve_then_rally() {
        let sys = ping_pong();
        let g0 = initial_state(&sys);
        let moves = enabled_moves(&sys, &g0).unwrap();
        assert_eq!(
            moves,
            vec![Move::Process { proc: ProcId(0), trans: TransId(0), env_payload: None }]
        );
        let (g1, ev) = fire(&sys, &g0, &moves[0]).unwrap();
        assert_eq!(ev.outputs.len(), 1);
        assert_eq!(ev.outputs[0].to, ProcId(1));
        assert_eq!(g1.procs[1].queue.len(), 1);
        assert_eq!(g1.procs[0].location, LocId(1));

        // pong returns the ball and counts the hit
        let moves = enabled_moves(&sys, &g1).unwrap();
        assert_eq!(
            moves,
            vec![Move::Process { proc: ProcId(1), trans: TransId(0), env_payload: None }]
        );
        let (g2, ev) = fire(&sys, &g1, &moves[0]).unwrap();
        assert_eq!(g2.procs[1].vars[0], Value::Int(1));
        assert_eq!(
            ev.consumed,
            Some(QueueItem::Signal { signal: SigId(0), payload: None, sender: ProcId(0) })
        );
        assert_eq!(g2.procs[0].queue.len(), 1);
    }

    #[test]
    fn guard_false_blocks_without_discard() {
        // After three rallies pong's guard fails; the ball sits at its head:
        // the signal matches an input trigger, so there is no discard either.
        let sys = ping_pong();
        let mut g = initial_state(&sys);
        loop {
            let moves = enabled_moves(&sys, &g).unwrap();
            if moves.is_empty() {
                break;
            }
            g = fire(&sys, &g, &moves[0]).unwrap().0;
        }
        assert_eq!(g.procs[1].vars[0], Value::Int(3));
        assert_eq!(g.procs[1].queue.len(), 1);
    }

    #[test]
    fn unconsumable_head_is_discardable() {
        let sys = ping_pong();
        let mut g = initial_state(&sys);
        // Put a ball in ping's queue while it is still at `serve`, where no
        // transition inputs `ball`.
        g.procs[0]
            .queue
            .push_back(QueueItem::Signal { signal: SigId(0), payload: None, sender: ProcId(1) });
        let moves = enabled_moves(&sys, &g).unwrap();
        assert!(moves.contains(&Move::Discard { proc: ProcId(0) }), "{moves:?}");
        let (g2, ev) = fire(&sys, &g, &Move::Discard { proc: ProcId(0) }).unwrap();
        assert!(g2.procs[0].queue.is_empty());
        assert!(matches!(ev.kind, StepKind::Discarded { proc: ProcId(0), .. }));
    }

    #[test]
    fn time_only_when_nothing_else_and_timer_active() {
        let sys = timered();
        let g0 = initial_state(&sys);
        // the arming transition is spontaneous, so no time move yet
        assert_eq!(
            enabled_moves(&sys, &g0).unwrap(),
            vec![Move::Process { proc: ProcId(0), trans: TransId(0), env_payload: None }]
        );
        let (g1, _) = fire(&sys, &g0, &enabled_moves(&sys, &g0).unwrap()[0]).unwrap();
        assert_eq!(g1.procs[0].timers[0], Some(2));
        // now only time can pass
        assert_eq!(enabled_moves(&sys, &g1).unwrap(), vec![Move::Time]);
        let (g2, ev) = fire(&sys, &g1, &Move::Time).unwrap();
        assert_eq!(g2.procs[0].timers[0], Some(1));
        assert!(ev.timeouts_enqueued.is_empty());
        // second tick expires the timer and enqueues its timeout
        let (g3, ev) = fire(&sys, &g2, &Move::Time).unwrap();
        assert_eq!(g3.procs[0].timers[0], None);
        assert_eq!(ev.timeouts_enqueued, vec![(ProcId(0), TimerId(0))]);
        assert_eq!(g3.procs[0].queue.front(), Some(&QueueItem::Timeout { timer: TimerId(0) }));
        // the timeout transition consumes it
        let moves = enabled_moves(&sys, &g3).unwrap();
        assert_eq!(
            moves,
            vec![Move::Process { proc: ProcId(0), trans: TransId(1), env_payload: None }]
        );
        let (g4, _) = fire(&sys, &g3, &moves[0]).unwrap();
        assert_eq!(g4.procs[0].location, LocId(2));
        assert!(enabled_moves(&sys, &g4).unwrap().is_empty()); // deadlock, no timers
    }

    #[test]
    fn output_into_full_queue_overflows() {
        let sys = ping_pong();
        let mut g = initial_state(&sys);
        g.procs[1]
            .queue
            .push_back(QueueItem::Signal { signal: SigId(0), payload: None, sender: ProcId(0) });
        // capacity 1: serving into pong's full queue is an overflow defect
        let m = Move::Process { proc: ProcId(0), trans: TransId(0), env_payload: None };
        let err = fire(&sys, &g, &m).unwrap_err();
        assert_eq!(
            err,
            FireError::QueueOverflow { signal: "ball".into(), from: "ping".into(), to: "pong".into() }
        );
    }

    #[test]
    fn env_stimulus_blocks_on_full_queue() {
        // an env process emitting into a capacity-1 queue stops stimulating
        // once the queue is full, rather than manufacturing an overflow
        let mut sys = ping_pong();
        sys.processes[0].is_env = true;
        sys.processes[0].transitions.truncate(1);
        sys.processes[0].transitions[0].target = LocId(0);
        let mut g = initial_state(&sys);
        assert_eq!(enabled_moves(&sys, &g).unwrap().len(), 1);
        g.procs[1]
            .queue
            .push_back(QueueItem::Signal { signal: SigId(0), payload: None, sender: ProcId(0) });
        let moves = enabled_moves(&sys, &g).unwrap();
        assert!(
            !moves.iter().any(|m| matches!(m, Move::Process { proc: ProcId(0), .. })),
            "{moves:?}"
        );
    }

    #[test]
    fn env_payload_domain_enumerates_and_restricts() {
        let sig = Signal { name: "req".into(), payload: Some(DataType::Int { min: 0, max: 3 }) };
        let env = ProcessDef {
            name: "user".into(),
            is_env: true,
            queue_capacity: None,
            vars: vec![],
            timers: vec![],
            locations: vec!["main".into()],
            initial: LocId(0),
            transitions: vec![Transition {
                from: LocId(0),
                trigger: Trigger::Spontaneous,
                guard: None,
                actions: vec![Action::Output {
                    signal: SigId(0),
                    payload: Some(Expr::Binding(0)),
                    to: ProcId(1),
                }],
                target: LocId(0),
                env_payload: Some(DataType::Int { min: 0, max: 3 }),
                from_emits: true,
            }],
            emits: vec![SigId(0)],
        };
        let server = ProcessDef {
            name: "server".into(),
            is_env: false,
            queue_capacity: None,
            vars: vec![],
            timers: vec![],
            locations: vec!["s".into()],
            initial: LocId(0),
            transitions: vec![Transition::new(
                LocId(0),
                Trigger::Input { signal: SigId(0), bind: Some("n".into()) },
                None,
                vec![],
                LocId(0),
            )],
            emits: vec![],
        };
        let sys = SystemDef {
            name: "reqs".into(),
            signals: vec![sig],
            processes: vec![env, server],
            default_queue_capacity: DEFAULT_QUEUE_CAPACITY,
        };
        assert_eq!(validate_system(&sys), vec![]);
        let g = initial_state(&sys);
        let moves = enabled_moves(&sys, &g).unwrap();
        let payloads: Vec<_> = moves
            .iter()
            .filter_map(|m| match m {
                Move::Process { env_payload, .. } => *env_payload,
                _ => None,
            })
            .collect();
        assert_eq!(
            payloads,
            vec![Value::Int(0), Value::Int(1), Value::Int(2), Value::Int(3)]
        );

        let mut restr = EnvRestrictions::default();
        restr.restrict(ProcId(0), SigId(0), vec![Value::Int(3), Value::Int(1)]);
        let moves = enabled_moves_restricted(&sys, &g, &restr).unwrap();
        let payloads: Vec<_> = moves
            .iter()
            .filter_map(|m| match m {
                Move::Process { env_payload, .. } => *env_payload,
                _ => None,
            })
            .collect();
        assert_eq!(payloads, vec![Value::Int(1), Value::Int(3)]);

        // firing delivers the chosen payload
        let (g2, ev) = fire(&sys, &g, &moves[1]).unwrap();
        assert_eq!(ev.outputs[0].payload, Some(Value::Int(3)));
        assert_eq!(
            g2.procs[1].queue.front(),
            Some(&QueueItem::Signal {
                signal: SigId(0),
                payload: Some(Value::Int(3)),
                sender: ProcId(0)
            })
        );
    }

    #[test]
    fn reset_purges_pending_timeout() {
        let mut sys = timered();
        // wait location also allows a spontaneous reset
        sys.processes[0].transitions.push(Transition::new(
            LocId(1),
            Trigger::Spontaneous,
            None,
            vec![Action::ResetTimer { timer: TimerId(0) }],
            LocId(0),
        ));
        let g0 = initial_state(&sys);
        let arm = Move::Process { proc: ProcId(0), trans: TransId(0), env_payload: None };
        let (mut g, _) = fire(&sys, &g0, &arm).unwrap();
        g.procs[0].queue.push_back(QueueItem::Timeout { timer: TimerId(0) });
        let reset = Move::Process { proc: ProcId(0), trans: TransId(2), env_payload: None };
        let (g2, _) = fire(&sys, &g, &reset).unwrap();
        assert_eq!(g2.procs[0].timers[0], None);
        assert!(g2.procs[0].queue.is_empty());
    }

    #[test]
    fn division_truncates_toward_zero() {
        let ctx = EvalCtx::EMPTY;
        let div = |a: i64, b: i64| {
            eval_expr(&Expr::binary(BinOp::Div, Expr::int(a), Expr::int(b)), &ctx).unwrap()
        };
        let rem = |a: i64, b: i64| {
            eval_expr(&Expr::binary(BinOp::Mod, Expr::int(a), Expr::int(b)), &ctx).unwrap()
        };
        assert_eq!(div(7, 2), Value::Int(3));
        assert_eq!(div(-7, 2), Value::Int(-3));
        assert_eq!(rem(-7, 2), Value::Int(-1));
        assert_eq!(rem(7, -2), Value::Int(1));
        // identity a = (a div b)*b + (a mod b), exhaustively on small values
        for a in -100..=100i64 {
            for b in (-10..=10i64).filter(|&b| b != 0) {
                let (Value::Int(q), Value::Int(r)) = (div(a, b), rem(a, b)) else {
                    unreachable!()
                };
                assert_eq!(a, q * b + r, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let ctx = EvalCtx::EMPTY;
        let e = Expr::binary(BinOp::Div, Expr::int(1), Expr::int(0));
        assert_eq!(eval_expr(&e, &ctx), Err(EvalError::DivisionByZero));
        let e = Expr::binary(BinOp::Mod, Expr::int(1), Expr::int(0));
        assert_eq!(eval_expr(&e, &ctx), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn assignment_out_of_range_is_reported() {
        let sys = ping_pong();
        let mut g = initial_state(&sys);
        g.procs[1].vars[0] = Value::Int(3);
        // force the guard aside: hand-fire the rally transition with hits=3
        // by dropping the guard from a copy of the model
        let mut sys2 = sys.clone();
        sys2.processes[1].transitions[0].guard = None;
        g.procs[1]
            .queue
            .push_back(QueueItem::Signal { signal: SigId(0), payload: None, sender: ProcId(0) });
        let m = Move::Process { proc: ProcId(1), trans: TransId(0), env_payload: None };
        let err = fire(&sys2, &g, &m).unwrap_err();
        assert!(
            matches!(err, FireError::RangeError { ref var, .. } if var == "hits"),
            "{err:?}"
        );
    }
}
