//! Core model types: data types, values, expressions, signals, transitions,
//! processes and systems, plus structural validation.
//!
//! A system is a fixed set of processes communicating through bounded
//! per-process FIFO queues. Everything here is immutable definition data;
//! runtime state lives in [`crate::semantics`].

use crate::diag::Diagnostic;

pub const DEFAULT_QUEUE_CAPACITY: u32 = 4;

macro_rules! index_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub usize);
    };
}
pub(crate) use index_newtype;

index_newtype!(
    /// Index into [`SystemDef::signals`].
    SigId
);
index_newtype!(
    /// Index into [`SystemDef::processes`].
    ProcId
);
index_newtype!(
    /// Index into [`ProcessDef::locations`] of the owning process.
    LocId
);
index_newtype!(
    /// Index into [`ProcessDef::vars`] of the owning process.
    VarId
);
index_newtype!(
    /// Index into [`ProcessDef::timers`] of the owning process.
    TimerId
);
index_newtype!(
    /// Index into [`ProcessDef::transitions`] of the owning process.
    TransId
);

/// A variable or payload type. Every type has a finite value domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataType {
    Bool,
    Int { min: i64, max: i64 },
    Enum { literals: Vec<String> },
}

impl DataType {
    /// Number of values in the domain. Zero for an empty integer range.
    pub fn value_count(&self) -> u64 {
        match self {
            DataType::Bool => 2,
            DataType::Int { min, max } => {
                if min > max {
                    0
                } else {
                    (max - min) as u64 + 1
                }
            }
            DataType::Enum { literals } => literals.len() as u64,
        }
    }

    /// The full domain in ascending order (false before true, integers by
    /// value, enum literals by declaration order).
    pub fn values(&self) -> Vec<Value> {
        match self {
            DataType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            DataType::Int { min, max } => (*min..=*max).map(Value::Int).collect(),
            DataType::Enum { literals } => {
                (0..literals.len()).map(|i| Value::Enum(i as u16)).collect()
            }
        }
    }

    /// The structural type used for expression checking.
    pub fn ty(&self) -> Ty {
        match self {
            DataType::Bool => Ty::Bool,
            DataType::Int { .. } => Ty::Int,
            DataType::Enum { literals } => Ty::Enum(literals.clone()),
        }
    }
}

/// A runtime value. Enum values are indices into the literal list of the
/// type that governs the context (variable declaration or signal payload).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(u16),
}

impl Value {
    /// Render against the governing type, so enum values print as literals.
    pub fn display(&self, ty: &DataType) -> String {
        match (self, ty) {
            (Value::Enum(i), DataType::Enum { literals }) => literals
                .get(*i as usize)
                .cloned()
                .unwrap_or_else(|| format!("<enum {i}>")),
            (Value::Bool(b), _) => b.to_string(),
            (Value::Int(n), _) => n.to_string(),
            (Value::Enum(i), _) => format!("<enum {i}>"),
        }
    }
}

/// Does `v` belong to the domain of `t`?
pub fn value_conforms(v: &Value, t: &DataType) -> bool {
    match (v, t) {
        (Value::Bool(_), DataType::Bool) => true,
        (Value::Int(n), DataType::Int { min, max }) => min <= n && n <= max,
        (Value::Enum(i), DataType::Enum { literals }) => (*i as usize) < literals.len(),
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod)
    }
    pub fn is_ordering(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
    pub fn is_equality(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne)
    }
    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

/// An expression over process variables, payload bindings and (in observer
/// contexts) remote process state. Division truncates toward zero and
/// `a mod b` has the sign of `a`, so `a = (a div b) * b + (a mod b)` holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Value),
    /// A variable of the owning process (system context) or an observer
    /// local (observer context).
    Var(VarId),
    /// `proc.var` — observer contexts only.
    RemoteVar(ProcId, VarId),
    /// `proc @ location` — observer contexts only.
    AtLoc(ProcId, LocId),
    /// A payload binding slot introduced by the surrounding trigger/pattern.
    Binding(usize),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bool(b: bool) -> Expr {
        Expr::Const(Value::Bool(b))
    }
    pub fn int(n: i64) -> Expr {
        Expr::Const(Value::Int(n))
    }
    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }
}

/// Structural type of an expression. Integer ranges are a runtime concern
/// (assignments are range-checked when fired), so all integers share one
/// structural type; enums are compared by literal list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ty {
    Bool,
    Int,
    Enum(Vec<String>),
}

impl Ty {
    pub fn name(&self) -> String {
        match self {
            Ty::Bool => "Bool".into(),
            Ty::Int => "Int".into(),
            Ty::Enum(lits) => format!("Enum {{{}}}", lits.join(", ")),
        }
    }
}

/// Context for checking an [`Expr`]: the local variable frame, the payload
/// binding slots in scope, and whether remote references are allowed.
pub struct TypeCtx<'a> {
    pub sys: &'a SystemDef,
    pub local_vars: &'a [VarDecl],
    pub bindings: &'a [DataType],
    pub allow_remote: bool,
}

/// Type-check `e`, optionally against an expected type (needed to give bare
/// enum literals a type). Returns the structural type or a description of
/// the first problem found.
pub fn expr_type(e: &Expr, expected: Option<&Ty>, ctx: &TypeCtx) -> Result<Ty, String> {
    let ty = match e {
        Expr::Const(Value::Bool(_)) => Ty::Bool,
        Expr::Const(Value::Int(_)) => Ty::Int,
        Expr::Const(Value::Enum(i)) => match expected {
            Some(Ty::Enum(lits)) if (*i as usize) < lits.len() => Ty::Enum(lits.clone()),
            Some(Ty::Enum(_)) => return Err(format!("enum literal index {i} out of range")),
            _ => return Err("enum literal used without an enum-typed context".into()),
        },
        Expr::Var(v) => match ctx.local_vars.get(v.0) {
            Some(decl) => decl.ty.ty(),
            None => return Err(format!("unresolved variable #{}", v.0)),
        },
        Expr::RemoteVar(p, v) => {
            if !ctx.allow_remote {
                return Err("process variables cannot be referenced here".into());
            }
            let proc = ctx
                .sys
                .processes
                .get(p.0)
                .ok_or_else(|| format!("unresolved process #{}", p.0))?;
            match proc.vars.get(v.0) {
                Some(decl) => decl.ty.ty(),
                None => {
                    return Err(format!("unresolved variable #{} of process {}", v.0, proc.name))
                }
            }
        }
        Expr::AtLoc(p, l) => {
            if !ctx.allow_remote {
                return Err("location predicates cannot be used here".into());
            }
            let proc = ctx
                .sys
                .processes
                .get(p.0)
                .ok_or_else(|| format!("unresolved process #{}", p.0))?;
            if l.0 >= proc.locations.len() {
                return Err(format!("unresolved location #{} of process {}", l.0, proc.name));
            }
            Ty::Bool
        }
        Expr::Binding(slot) => match ctx.bindings.get(*slot) {
            Some(ty) => ty.ty(),
            None => return Err(format!("unresolved payload binding slot {slot}")),
        },
        Expr::Unary(op, inner) => {
            let want = match op {
                UnOp::Not => Ty::Bool,
                UnOp::Neg => Ty::Int,
            };
            let it = expr_type(inner, Some(&want), ctx)?;
            if it != want {
                return Err(format!("operand of {:?} has type {}", op, it.name()));
            }
            want
        }
        Expr::Binary(op, l, r) => {
            if op.is_equality() {
                // Either side may be a bare enum literal that needs the
                // other side's type; try left first, then lean on the right.
                let lt = expr_type(l, None, ctx);
                let (lt, rt) = match lt {
                    Ok(lt) => {
                        let rt = expr_type(r, Some(&lt), ctx)?;
                        (lt, rt)
                    }
                    Err(_) => {
                        let rt = expr_type(r, None, ctx)?;
                        let lt = expr_type(l, Some(&rt), ctx)?;
                        (lt, rt)
                    }
                };
                if lt != rt {
                    return Err(format!(
                        "cannot compare {} with {}",
                        lt.name(),
                        rt.name()
                    ));
                }
                Ty::Bool
            } else {
                let want = if op.is_logic() { Ty::Bool } else { Ty::Int };
                let lt = expr_type(l, Some(&want), ctx)?;
                let rt = expr_type(r, Some(&want), ctx)?;
                if lt != want || rt != want {
                    return Err(format!(
                        "operands of {:?} must be {}, got {} and {}",
                        op,
                        want.name(),
                        lt.name(),
                        rt.name()
                    ));
                }
                if op.is_arith() {
                    Ty::Int
                } else {
                    Ty::Bool
                }
            }
        }
    };
    if let Some(want) = expected {
        if &ty != want {
            return Err(format!("expected {}, got {}", want.name(), ty.name()));
        }
    }
    Ok(ty)
}

/// A message type. Signals carry at most one payload value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signal {
    pub name: String,
    pub payload: Option<DataType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: DataType,
    pub init: Value,
}

/// What fires a transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    /// Consume the queue head if it is this signal; `bind` names the payload
    /// in the guard and actions (binding slot 0).
    Input { signal: SigId, bind: Option<String> },
    /// Consume the queue head if it is the expiry of this timer.
    Timeout { timer: TimerId },
    /// Always eligible; consumes nothing.
    Spontaneous,
}

/// One effect of a transition, executed in order and atomically with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Assign { var: VarId, value: Expr },
    Output { signal: SigId, payload: Option<Expr>, to: ProcId },
    SetTimer { timer: TimerId, duration: Expr },
    ResetTimer { timer: TimerId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub from: LocId,
    pub trigger: Trigger,
    /// `None` means `true`.
    pub guard: Option<Expr>,
    pub actions: Vec<Action>,
    pub target: LocId,
    /// For transitions expanded from an `emits` declaration: the payload
    /// domain to enumerate. The payload is delivered as binding slot 0.
    pub env_payload: Option<DataType>,
    /// True for transitions expanded from `emits` (not pretty-printed).
    pub from_emits: bool,
}

impl Transition {
    pub fn new(from: LocId, trigger: Trigger, guard: Option<Expr>, actions: Vec<Action>, target: LocId) -> Self {
        Transition { from, trigger, guard, actions, target, env_payload: None, from_emits: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDef {
    pub name: String,
    /// Environment processes model external stimulus: spontaneous
    /// output-only transitions, never inputs.
    pub is_env: bool,
    /// `None` uses [`SystemDef::default_queue_capacity`].
    pub queue_capacity: Option<u32>,
    pub vars: Vec<VarDecl>,
    pub timers: Vec<String>,
    pub locations: Vec<String>,
    pub initial: LocId,
    pub transitions: Vec<Transition>,
    /// Signals declared through the `emits` shorthand, kept for printing.
    pub emits: Vec<SigId>,
}

impl ProcessDef {
    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }
    pub fn find_timer(&self, name: &str) -> Option<TimerId> {
        self.timers.iter().position(|t| t == name).map(TimerId)
    }
    pub fn find_location(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l == name).map(LocId)
    }
    /// Transitions leaving `loc`, in declaration order.
    pub fn transitions_from(&self, loc: LocId) -> impl Iterator<Item = (TransId, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.from == loc)
            .map(|(i, t)| (TransId(i), t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemDef {
    pub name: String,
    pub signals: Vec<Signal>,
    pub processes: Vec<ProcessDef>,
    pub default_queue_capacity: u32,
}

impl SystemDef {
    pub fn find_signal(&self, name: &str) -> Option<SigId> {
        self.signals.iter().position(|s| s.name == name).map(SigId)
    }
    pub fn find_process(&self, name: &str) -> Option<ProcId> {
        self.processes.iter().position(|p| p.name == name).map(ProcId)
    }
    pub fn signal(&self, s: SigId) -> &Signal {
        &self.signals[s.0]
    }
    pub fn process(&self, p: ProcId) -> &ProcessDef {
        &self.processes[p.0]
    }
    pub fn queue_capacity(&self, p: ProcId) -> usize {
        self.processes[p.0]
            .queue_capacity
            .unwrap_or(self.default_queue_capacity) as usize
    }
}

fn ident_ok(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Check every structural invariant of a system definition and return one
/// diagnostic per violation. A definition produced by the parser always
/// passes; this also guards programmatically built models.
pub fn validate_system(sys: &SystemDef) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    macro_rules! err {
        ($($arg:tt)*) => { diags.push(Diagnostic::error(format!($($arg)*))) };
    }

    if !ident_ok(&sys.name) {
        err!("system name '{}' is not an identifier", sys.name);
    }

    // Signals: unique names, well-formed payload types.
    for (i, s) in sys.signals.iter().enumerate() {
        if !ident_ok(&s.name) {
            err!("signal name '{}' is not an identifier", s.name);
        }
        if sys.signals[..i].iter().any(|o| o.name == s.name) {
            err!("duplicate signal '{}'", s.name);
        }
        if let Some(ty) = &s.payload {
            check_type(ty, &format!("payload of signal {}", s.name), &mut diags);
        }
    }

    if sys.processes.is_empty() {
        err!("a system needs at least one process");
    }
    if sys.processes.iter().all(|p| p.is_env) {
        err!("a system needs at least one non-env process");
    }
    if sys.default_queue_capacity == 0 {
        err!("default queue capacity must be positive");
    }

    for (pi, proc) in sys.processes.iter().enumerate() {
        let pname = &proc.name;
        if !ident_ok(pname) {
            err!("process name '{pname}' is not an identifier");
        }
        if sys.processes[..pi].iter().any(|o| o.name == *pname) {
            err!("duplicate process '{pname}'");
        }
        if proc.queue_capacity == Some(0) {
            err!("process {pname}: queue capacity must be positive");
        }
        if proc.locations.is_empty() {
            err!("process {pname} has no locations");
            continue;
        }
        for (i, l) in proc.locations.iter().enumerate() {
            if proc.locations[..i].contains(l) {
                err!("process {pname}: duplicate location '{l}'");
            }
        }
        if proc.initial.0 >= proc.locations.len() {
            err!("process {pname}: unresolved initial location");
        }
        for (i, v) in proc.vars.iter().enumerate() {
            if proc.vars[..i].iter().any(|o| o.name == v.name) {
                err!("process {pname}: duplicate variable '{}'", v.name);
            }
            check_type(&v.ty, &format!("variable {pname}.{}", v.name), &mut diags);
            if !value_conforms(&v.init, &v.ty) {
                err!(
                    "process {pname}: initial value of '{}' is outside its type",
                    v.name
                );
            }
        }
        for (i, t) in proc.timers.iter().enumerate() {
            if proc.timers[..i].contains(t) {
                err!("process {pname}: duplicate timer '{t}'");
            }
        }
        if !proc.emits.is_empty() && !proc.is_env {
            err!("process {pname}: 'emits' is only allowed in env processes");
        }
        for &s in &proc.emits {
            if s.0 >= sys.signals.len() {
                err!("process {pname}: emits unresolved signal #{}", s.0);
            }
        }

        for (ti, tr) in proc.transitions.iter().enumerate() {
            let where_ = format!("process {pname}, transition #{ti}");
            if tr.from.0 >= proc.locations.len() {
                err!("{where_}: unresolved source location");
            }
            if tr.target.0 >= proc.locations.len() {
                err!("{where_}: unresolved target location");
            }

            // Environment processes only generate stimulus.
            if proc.is_env {
                if !matches!(tr.trigger, Trigger::Spontaneous) {
                    err!("{where_}: environment process consumes input");
                }
                if tr.actions.iter().any(|a| !matches!(a, Action::Output { .. })) {
                    err!("{where_}: env process actions must be outputs");
                }
            }

            // The binding slot available to guard and actions.
            let mut bindings: Vec<DataType> = Vec::new();
            match &tr.trigger {
                Trigger::Input { signal, bind } => {
                    if signal.0 >= sys.signals.len() {
                        err!("{where_}: unresolved input signal");
                    } else {
                        let sig = sys.signal(*signal);
                        match (&sig.payload, bind) {
                            (Some(ty), Some(_)) => bindings.push(ty.clone()),
                            (None, Some(_)) => err!(
                                "{where_}: signal {} has no payload to bind",
                                sig.name
                            ),
                            _ => {}
                        }
                    }
                }
                Trigger::Timeout { timer } => {
                    if timer.0 >= proc.timers.len() {
                        err!("{where_}: unresolved timer");
                    }
                }
                Trigger::Spontaneous => {}
            }
            if let Some(dom) = &tr.env_payload {
                check_type(dom, &where_, &mut diags);
                bindings.push(dom.clone());
            }

            let ctx = TypeCtx { sys, local_vars: &proc.vars, bindings: &bindings, allow_remote: false };
            if let Some(g) = &tr.guard {
                if let Err(e) = expr_type(g, Some(&Ty::Bool), &ctx) {
                    err!("{where_}: guard: {e}");
                }
            }
            for (ai, a) in tr.actions.iter().enumerate() {
                match a {
                    Action::Assign { var, value } => match proc.vars.get(var.0) {
                        None => err!("{where_}: assignment to unresolved variable"),
                        Some(decl) => {
                            if let Err(e) = expr_type(value, Some(&decl.ty.ty()), &ctx) {
                                err!("{where_}: assignment to {}: {e}", decl.name);
                            }
                        }
                    },
                    Action::Output { signal, payload, to } => {
                        if to.0 >= sys.processes.len() {
                            err!("{where_}: action #{ai}: unresolved process");
                            continue;
                        }
                        if signal.0 >= sys.signals.len() {
                            err!("{where_}: action #{ai}: unresolved signal");
                            continue;
                        }
                        let sig = sys.signal(*signal);
                        match (&sig.payload, payload) {
                            (Some(ty), Some(e)) => {
                                if let Err(msg) = expr_type(e, Some(&ty.ty()), &ctx) {
                                    err!("{where_}: output {}: {msg}", sig.name);
                                }
                            }
                            (Some(_), None) => err!(
                                "{where_}: output {} needs a payload",
                                sig.name
                            ),
                            (None, Some(_)) => err!(
                                "{where_}: output {} takes no payload",
                                sig.name
                            ),
                            (None, None) => {}
                        }
                    }
                    Action::SetTimer { timer, duration } => {
                        if timer.0 >= proc.timers.len() {
                            err!("{where_}: set of unresolved timer");
                        }
                        if let Err(e) = expr_type(duration, Some(&Ty::Int), &ctx) {
                            err!("{where_}: timer duration: {e}");
                        }
                    }
                    Action::ResetTimer { timer } => {
                        if timer.0 >= proc.timers.len() {
                            err!("{where_}: reset of unresolved timer");
                        }
                    }
                }
            }
        }
    }
    diags
}

fn check_type(ty: &DataType, where_: &str, diags: &mut Vec<Diagnostic>) {
    match ty {
        DataType::Bool => {}
        DataType::Int { min, max } => {
            if min > max {
                diags.push(Diagnostic::error(format!("{where_}: empty integer range {min}..{max}")));
            }
        }
        DataType::Enum { literals } => {
            if literals.is_empty() {
                diags.push(Diagnostic::error(format!("{where_}: enum with no literals")));
            }
            for (i, l) in literals.iter().enumerate() {
                if !ident_ok(l) {
                    diags.push(Diagnostic::error(format!(
                        "{where_}: enum literal '{l}' is not an identifier"
                    )));
                }
                if literals[..i].contains(l) {
                    diags.push(Diagnostic::error(format!("{where_}: duplicate enum literal '{l}'")));
                }
            }
        }
    }
}
