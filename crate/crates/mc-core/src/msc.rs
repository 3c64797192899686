//! Annotated message-sequence-chart properties: the property type, the
//! MSC-to-observer compiler, and an automaton-free reference matcher used
//! as a test oracle.
//!
//! Matching is over send events. An annotation chooses the verdict mode:
//! `search intended` asks for a witness execution, `search unintended`
//! hunts for a violating match, `verify intended` demands every execution
//! comply with a prefix of the chart. `from-start` anchors matching at the
//! first event; without it a match may start anywhere (tracked with an
//! `idle` thread that keeps spawning fresh attempts). `nonstrict` lets
//! unmatched events between the chart's instances pass; strict matching
//! kills an attempt on any such event.

use crate::ast::{lower_expr, ExprScope, RawExpr};
use crate::diag::Diagnostic;
use crate::model::{DataType, Expr, ProcId, SigId, SystemDef, Ty, UnOp, Value, VarDecl, VarId};
use crate::observer::{ObsState, ObsStateId, ObsTransition, ObserverDef, EventPattern, StateKind};
use crate::semantics::{eval_expr, EvalCtx, OutputEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MscMode {
    Search,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Intended,
    Unintended,
}

/// How the explorer turns observer classifications into a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictMode {
    /// search intended: find one complying execution.
    ExistsWitness,
    /// search unintended: a complying execution is a violation.
    ExistsViolation,
    /// verify intended: every execution must comply with a prefix.
    ForAllPrefix,
}

/// One message row: `instances[from] -> instances[to] : signal(bind) when
/// guard`. The guard may reference this row's binding and bindings of
/// earlier rows, nothing else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MscRow {
    pub from: usize,
    pub to: usize,
    pub signal: String,
    pub bind: Option<String>,
    pub guard: Option<RawExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MscProperty {
    pub name: String,
    pub mode: MscMode,
    pub from_start: bool,
    pub nonstrict: bool,
    pub polarity: Polarity,
    pub instances: Vec<String>,
    pub rows: Vec<MscRow>,
}

impl MscProperty {
    pub fn verdict_mode(&self) -> VerdictMode {
        match (self.mode, self.polarity) {
            (MscMode::Verify, _) => VerdictMode::ForAllPrefix,
            (MscMode::Search, Polarity::Intended) => VerdictMode::ExistsWitness,
            (MscMode::Search, Polarity::Unintended) => VerdictMode::ExistsViolation,
        }
    }
}

/// Annotation and shape checks that need no system.
pub fn validate_msc(p: &MscProperty) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    macro_rules! err {
        ($($arg:tt)*) => { diags.push(Diagnostic::error(format!($($arg)*))) };
    }
    if p.mode == MscMode::Verify {
        if p.polarity != Polarity::Intended {
            err!("verify requires intended");
        }
        if p.nonstrict {
            err!("verify does not allow nonstrict");
        }
    }
    if p.rows.is_empty() {
        err!("msc {} has no message rows", p.name);
    }
    if p.instances.is_empty() {
        err!("msc {} declares no instances", p.name);
    }
    for (i, inst) in p.instances.iter().enumerate() {
        if p.instances[..i].contains(inst) {
            err!("duplicate instance {inst}");
        }
    }
    let mut seen_binds: Vec<&str> = Vec::new();
    for (ri, row) in p.rows.iter().enumerate() {
        if row.from >= p.instances.len() || row.to >= p.instances.len() {
            err!("row {} references an undeclared instance", ri + 1);
            continue;
        }
        if row.from == row.to {
            err!("row {}: a message cannot go from {} to itself", ri + 1, p.instances[row.from]);
        }
        if let Some(b) = &row.bind {
            if seen_binds.contains(&b.as_str()) {
                err!("row {}: binding '{b}' is already bound by an earlier row", ri + 1);
            }
            seen_binds.push(b);
        }
    }
    diags
}

/// A property with every name resolved against a system. Row guards are in
/// "uniform" form: every binding reference is [`Expr::Binding`]\(slot) over
/// the property-wide binding table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedMsc {
    pub name: String,
    pub mode: MscMode,
    pub from_start: bool,
    pub nonstrict: bool,
    pub polarity: Polarity,
    pub instances: Vec<ProcId>,
    pub binds: Vec<(String, DataType)>,
    pub rows: Vec<ResolvedRow>,
    /// All (from, to, signal) send triples between instances, derived from
    /// the system's output actions, plus the row triples. Sorted.
    pub alphabet: Vec<(ProcId, ProcId, SigId)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRow {
    pub from: ProcId,
    pub to: ProcId,
    pub signal: SigId,
    pub bind_slot: Option<usize>,
    pub guard: Option<Expr>,
}

pub fn resolve_msc(p: &MscProperty, sys: &SystemDef) -> Result<ResolvedMsc, Vec<Diagnostic>> {
    let mut diags = validate_msc(p);
    if !diags.is_empty() {
        return Err(diags);
    }
    macro_rules! err {
        ($($arg:tt)*) => { diags.push(Diagnostic::error(format!($($arg)*))) };
    }

    let mut instances = Vec::new();
    for name in &p.instances {
        match sys.find_process(name) {
            Some(pid) => instances.push(pid),
            None => err!("unresolved instance '{name}'"),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    // Binding table in row order, typed by the bound signal's payload.
    let mut binds: Vec<(String, DataType)> = Vec::new();
    let mut rows = Vec::new();
    for (ri, row) in p.rows.iter().enumerate() {
        let Some(sig) = sys.find_signal(&row.signal) else {
            err!("row {}: unresolved signal '{}'", ri + 1, row.signal);
            continue;
        };
        let bind_slot = match &row.bind {
            None => None,
            Some(b) => match &sys.signal(sig).payload {
                Some(ty) => {
                    binds.push((b.clone(), ty.clone()));
                    Some(binds.len() - 1)
                }
                None => {
                    err!(
                        "row {}: signal {} carries no payload to bind",
                        ri + 1,
                        row.signal
                    );
                    None
                }
            },
        };
        let guard = match &row.guard {
            None => None,
            Some(raw) => {
                // Only this row's and earlier rows' bindings are in scope.
                let scope = ExprScope {
                    sys,
                    locals: &[],
                    bindings: &binds,
                    allow_remote: false,
                };
                match lower_expr(raw, Some(&Ty::Bool), &scope) {
                    Ok((e, Ty::Bool)) => Some(e),
                    Ok((_, t)) => {
                        err!("row {}: guard has type {}, expected Bool", ri + 1, t.name());
                        None
                    }
                    Err(msg) => {
                        err!("row {}: {msg}", ri + 1);
                        None
                    }
                }
            }
        };
        rows.push(ResolvedRow {
            from: instances[row.from],
            to: instances[row.to],
            signal: sig,
            bind_slot,
            guard,
        });
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let mut alphabet: Vec<(ProcId, ProcId, SigId)> = Vec::new();
    for (pi, proc) in sys.processes.iter().enumerate() {
        let from = ProcId(pi);
        if !instances.contains(&from) {
            continue;
        }
        for tr in &proc.transitions {
            for a in &tr.actions {
                if let crate::model::Action::Output { signal, to, .. } = a {
                    if instances.contains(to) {
                        alphabet.push((from, *to, *signal));
                    }
                }
            }
        }
    }
    alphabet.extend(rows.iter().map(|r| (r.from, r.to, r.signal)));
    alphabet.sort();
    alphabet.dedup();

    Ok(ResolvedMsc {
        name: p.name.clone(),
        mode: p.mode,
        from_start: p.from_start,
        nonstrict: p.nonstrict,
        polarity: p.polarity,
        instances,
        binds,
        rows,
        alphabet,
    })
}

/// Rewrite a uniform-form guard into observer-transition form: this row's
/// binding becomes slot 0, earlier bindings become observer locals.
fn to_observer_form(e: &Expr, this_slot: Option<usize>) -> Expr {
    match e {
        Expr::Binding(slot) if Some(*slot) == this_slot => Expr::Binding(0),
        Expr::Binding(slot) => Expr::Var(VarId(*slot)),
        Expr::Unary(op, inner) => {
            Expr::Unary(*op, Box::new(to_observer_form(inner, this_slot)))
        }
        Expr::Binary(op, l, r) => Expr::binary(
            *op,
            to_observer_form(l, this_slot),
            to_observer_form(r, this_slot),
        ),
        other => other.clone(),
    }
}

/// Compile an MSC property into a powerset observer plus the verdict mode
/// the explorer should apply.
///
/// The automaton is a chain `s0 … sn` (one row per hop); `sn` is success
/// for intended properties and error for unintended ones. Without
/// `from-start` an `idle` state joins the initial set and respawns a fresh
/// attempt on every row-1 match, so a match can begin anywhere. Under
/// strict matching every state of the chain jumps to `deviate` on an
/// alphabet event that does not match its expected row; `deviate` is an
/// error state only for anchored verify properties — everywhere else it is
/// a dead end that silently kills one attempt.
pub fn compile_msc(
    p: &MscProperty,
    sys: &SystemDef,
) -> Result<(ObserverDef, VerdictMode), Vec<Diagnostic>> {
    let r = resolve_msc(p, sys)?;
    let mode = p.verdict_mode();
    let n = r.rows.len();
    let strict = !r.nonstrict;
    let anchored = r.from_start;

    let mut states = Vec::new();
    let idle = if anchored {
        None
    } else {
        states.push(ObsState { name: "idle".into(), kind: StateKind::Regular });
        Some(ObsStateId(0))
    };
    let s0 = states.len();
    for k in 0..=n {
        let kind = if k == n {
            match r.polarity {
                Polarity::Intended => StateKind::Success,
                Polarity::Unintended => StateKind::Error,
            }
        } else {
            StateKind::Regular
        };
        states.push(ObsState { name: format!("s{k}"), kind });
    }
    let sk = |k: usize| ObsStateId(s0 + k);
    let deviate = if strict {
        let kind = if mode == VerdictMode::ForAllPrefix && anchored {
            StateKind::Error
        } else {
            StateKind::Regular
        };
        states.push(ObsState { name: "deviate".into(), kind });
        Some(ObsStateId(states.len() - 1))
    } else {
        None
    };

    let locals: Vec<VarDecl> = r
        .binds
        .iter()
        .map(|(name, ty)| VarDecl { name: name.clone(), ty: ty.clone(), init: ty.values()[0] })
        .collect();

    let row_pattern = |row: &ResolvedRow| EventPattern::Output {
        signal: row.signal,
        from: row.from,
        to: Some(row.to),
        bind: row.bind_slot.map(|s| r.binds[s].0.clone()),
    };
    let row_guard = |row: &ResolvedRow| row.guard.as_ref().map(|g| to_observer_form(g, row.bind_slot));
    let row_assigns = |row: &ResolvedRow| -> Vec<(VarId, Expr)> {
        row.bind_slot.map(|s| (VarId(s), Expr::Binding(0))).into_iter().collect()
    };

    let mut transitions = Vec::new();
    if let Some(idle) = idle {
        // Self-loop first so the restart thread survives its own spawn.
        transitions.push(ObsTransition {
            from: idle,
            pattern: Some(row_pattern(&r.rows[0])),
            guard: row_guard(&r.rows[0]),
            assigns: vec![],
            cut: false,
            target: idle,
        });
        transitions.push(ObsTransition {
            from: idle,
            pattern: Some(row_pattern(&r.rows[0])),
            guard: row_guard(&r.rows[0]),
            assigns: row_assigns(&r.rows[0]),
            cut: false,
            target: sk(1),
        });
    }
    for (k, row) in r.rows.iter().enumerate() {
        transitions.push(ObsTransition {
            from: sk(k),
            pattern: Some(row_pattern(row)),
            guard: row_guard(row),
            assigns: row_assigns(row),
            cut: false,
            target: sk(k + 1),
        });
    }
    if let Some(dev) = deviate {
        for k in 0..n {
            let row = &r.rows[k];
            let row_triple = (row.from, row.to, row.signal);
            for &(f, t, s) in &r.alphabet {
                if (f, t, s) == row_triple {
                    continue;
                }
                transitions.push(ObsTransition {
                    from: sk(k),
                    pattern: Some(EventPattern::Output {
                        signal: s,
                        from: f,
                        to: Some(t),
                        bind: None,
                    }),
                    guard: None,
                    assigns: vec![],
                    cut: false,
                    target: dev,
                });
            }
            // The row's own event with a failing guard is a deviation too.
            if let Some(g) = row_guard(row) {
                transitions.push(ObsTransition {
                    from: sk(k),
                    pattern: Some(row_pattern(row)),
                    guard: Some(Expr::Unary(UnOp::Not, Box::new(g))),
                    assigns: vec![],
                    cut: false,
                    target: dev,
                });
            }
        }
    }

    let obs = ObserverDef {
        name: r.name.clone(),
        locals,
        states,
        initial: idle.unwrap_or_else(|| sk(0)),
        extra_initial: if idle.is_some() { vec![sk(0)] } else { vec![] },
        transitions,
        powerset: true,
    };
    Ok((obs, mode))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    /// All rows matched in order.
    Complete,
    /// Anchored strict matching ran out of live attempts: some relevant
    /// event mismatched on every tracked attempt.
    Deviated,
    Pending,
}

/// Automaton-free matcher: scan `events` (send events, in order) directly
/// against the rows, tracking every attempt like the powerset observer
/// does. Used as the oracle the compiled observer is tested against.
///
/// Panics if a row guard fails to evaluate; guards of checked properties
/// are total.
pub fn reference_match(r: &ResolvedMsc, events: &[OutputEvent]) -> MatchOutcome {
    let n = r.rows.len();
    let strict = !r.nonstrict;
    let empty: Vec<Option<Value>> = vec![None; r.binds.len()];

    let row_matches = |k: usize, e: &OutputEvent, binds: &[Option<Value>]| -> bool {
        let row = &r.rows[k];
        if e.from != row.from || e.to != row.to || e.signal != row.signal {
            return false;
        }
        match &row.guard {
            None => true,
            Some(g) => {
                let mut b = binds.to_vec();
                if let Some(slot) = row.bind_slot {
                    b[slot] = e.payload;
                }
                let ctx = EvalCtx { vars: &[], bindings: &b, global: None };
                match eval_expr(g, &ctx) {
                    Ok(Value::Bool(x)) => x,
                    Ok(_) => unreachable!("msc guard not Bool-typed"),
                    Err(err) => panic!("msc guard of row {} must be total: {err}", k + 1),
                }
            }
        }
    };
    let advance = |k: usize, e: &OutputEvent, binds: &[Option<Value>]| -> (usize, Vec<Option<Value>>) {
        if k + 1 == n {
            // terminal: bindings can never be read again
            (n, empty.clone())
        } else {
            let mut b = binds.to_vec();
            if let Some(slot) = r.rows[k].bind_slot {
                b[slot] = e.payload;
            }
            (k + 1, b)
        }
    };

    let mut attempts: Vec<(usize, Vec<Option<Value>>)> = vec![(0, empty.clone())];
    let mut completed = false;
    for e in events {
        let relevant = r.instances.contains(&e.from) && r.instances.contains(&e.to);
        let mut next = Vec::new();
        for (k, binds) in &attempts {
            if *k == n {
                next.push((*k, binds.clone()));
            } else if row_matches(*k, e, binds) {
                let adv = advance(*k, e, binds);
                completed |= adv.0 == n;
                next.push(adv);
            } else if relevant && strict {
                // attempt killed
            } else {
                next.push((*k, binds.clone()));
            }
        }
        if !r.from_start && row_matches(0, e, &empty) {
            let adv = advance(0, e, &empty);
            completed |= adv.0 == n;
            next.push(adv);
        }
        next.sort();
        next.dedup();
        if r.from_start && next.is_empty() {
            // Matching must begin at the first event; no attempt survives.
            return MatchOutcome::Deviated;
        }
        attempts = next;
    }
    if completed {
        MatchOutcome::Complete
    } else {
        MatchOutcome::Pending
    }
}
