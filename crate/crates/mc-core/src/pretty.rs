//! Printers that turn resolved definitions back into DSL text.
//!
//! Printing a parsed system and re-parsing the output yields a structurally
//! identical [`SystemDef`]; the same holds for deterministic observers
//! (powerset observers built from MSC compilation have no textual form).

use crate::ast::raw_to_string;
use crate::model::{
    expr_type, Action, DataType, Expr, LocId, ProcessDef, SystemDef, Transition, Trigger, Ty,
    TypeCtx, Value, VarDecl,
};
use crate::observer::{EventPattern, ObsStateId, ObsTransition, ObserverDef, StateKind};
use crate::ast::RawExpr;

/// Render a data type as it appears in declarations.
pub fn datatype_str(ty: &DataType) -> String {
    match ty {
        DataType::Bool => "Bool".into(),
        DataType::Int { min, max } => format!("Int {min}..{max}"),
        DataType::Enum { literals } => format!("Enum {{{}}}", literals.join(", ")),
    }
}

/// Name context for raising a resolved [`Expr`] back to a [`RawExpr`].
struct NameEnv<'a> {
    sys: &'a SystemDef,
    locals: &'a [VarDecl],
    bindings: &'a [(String, DataType)],
}

impl NameEnv<'_> {
    fn type_of(&self, e: &Expr) -> Option<Ty> {
        let binds: Vec<DataType> = self.bindings.iter().map(|(_, t)| t.clone()).collect();
        let ctx = TypeCtx {
            sys: self.sys,
            local_vars: self.locals,
            bindings: &binds,
            allow_remote: true,
        };
        expr_type(e, None, &ctx).ok()
    }
}

/// Rebuild the name-based tree for `e`. `expected` supplies enum literal
/// names for constants whose type is not visible in the expression itself.
fn raise(e: &Expr, expected: Option<&Ty>, env: &NameEnv) -> RawExpr {
    match e {
        Expr::Const(Value::Bool(b)) => RawExpr::Bool(*b),
        Expr::Const(Value::Int(n)) => RawExpr::Int(*n),
        Expr::Const(Value::Enum(i)) => match expected {
            Some(Ty::Enum(lits)) if (*i as usize) < lits.len() => {
                RawExpr::Name(lits[*i as usize].clone())
            }
            _ => RawExpr::Name(format!("enum#{i}")),
        },
        Expr::Var(v) => RawExpr::Name(env.locals[v.0].name.clone()),
        Expr::RemoteVar(p, v) => {
            let proc = env.sys.process(*p);
            RawExpr::Field(proc.name.clone(), proc.vars[v.0].name.clone())
        }
        Expr::AtLoc(p, l) => {
            let proc = env.sys.process(*p);
            RawExpr::AtLoc(proc.name.clone(), proc.locations[l.0].clone())
        }
        Expr::Binding(i) => RawExpr::Name(env.bindings[*i].0.clone()),
        Expr::Unary(op, a) => RawExpr::unary(*op, raise(a, None, env)),
        Expr::Binary(op, a, b) => {
            let (ha, hb) = if op.is_equality() {
                (env.type_of(b), env.type_of(a))
            } else {
                (None, None)
            };
            RawExpr::binary(*op, raise(a, ha.as_ref(), env), raise(b, hb.as_ref(), env))
        }
    }
}

fn expr_str(e: &Expr, expected: Option<&Ty>, env: &NameEnv) -> String {
    raw_to_string(&raise(e, expected, env))
}

fn action_str(a: &Action, proc: &ProcessDef, sys: &SystemDef, env: &NameEnv) -> String {
    match a {
        Action::Assign { var, value } => {
            let decl = &proc.vars[var.0];
            format!("{} := {};", decl.name, expr_str(value, Some(&decl.ty.ty()), env))
        }
        Action::Output { signal, payload, to } => {
            let sname = &sys.signal(*signal).name;
            let tname = &sys.process(*to).name;
            match payload {
                Some(e) => {
                    let want = sys.signal(*signal).payload.as_ref().map(|t| t.ty());
                    format!("output {sname}({}) to {tname};", expr_str(e, want.as_ref(), env))
                }
                None => format!("output {sname} to {tname};"),
            }
        }
        Action::SetTimer { timer, duration } => {
            format!("set {}, {};", proc.timers[timer.0], expr_str(duration, Some(&Ty::Int), env))
        }
        Action::ResetTimer { timer } => format!("reset {};", proc.timers[timer.0]),
    }
}

fn transition_str(t: &Transition, proc: &ProcessDef, sys: &SystemDef) -> String {
    let mut bindings: Vec<(String, DataType)> = Vec::new();
    let trig = match &t.trigger {
        Trigger::Input { signal, bind } => {
            if let (Some(b), Some(ty)) = (bind, &sys.signal(*signal).payload) {
                bindings.push((b.clone(), ty.clone()));
            }
            match bind {
                Some(b) => format!("on input {}({b})", sys.signal(*signal).name),
                None => format!("on input {}", sys.signal(*signal).name),
            }
        }
        Trigger::Timeout { timer } => format!("on timeout {}", proc.timers[timer.0]),
        Trigger::Spontaneous => "on spontaneous".to_string(),
    };
    let env = NameEnv { sys, locals: &proc.vars, bindings: &bindings };
    let guard = match &t.guard {
        Some(g) => format!(" when {}", expr_str(g, Some(&Ty::Bool), &env)),
        None => String::new(),
    };
    let body = if t.actions.is_empty() {
        "{ }".to_string()
    } else {
        let items: Vec<String> =
            t.actions.iter().map(|a| action_str(a, proc, sys, &env)).collect();
        format!("{{ {} }}", items.join(" "))
    };
    format!("{trig}{guard} {body} -> {}", proc.locations[t.target.0])
}

/// Render a system as DSL text that parses back to the same definition.
pub fn print_system(sys: &SystemDef) -> String {
    let mut s = format!("system {};\n", sys.name);
    if !sys.signals.is_empty() {
        s.push('\n');
    }
    for sig in &sys.signals {
        match &sig.payload {
            None => s += &format!("signal {};\n", sig.name),
            Some(ty) => s += &format!("signal {}({});\n", sig.name, datatype_str(ty)),
        }
    }
    for proc in &sys.processes {
        s.push('\n');
        let env = if proc.is_env { "env " } else { "" };
        let queue = proc.queue_capacity.map(|n| format!(" queue {n}")).unwrap_or_default();
        s += &format!("{env}process {}{queue} {{\n", proc.name);
        if !proc.emits.is_empty() {
            let names: Vec<String> =
                proc.emits.iter().map(|id| sys.signal(*id).name.clone()).collect();
            s += &format!("  emits {};\n}}\n", names.join(", "));
            continue;
        }
        for v in &proc.vars {
            s += &format!(
                "  var {}: {} := {};\n",
                v.name,
                datatype_str(&v.ty),
                v.init.display(&v.ty)
            );
        }
        for t in &proc.timers {
            s += &format!("  timer {t};\n");
        }
        if !proc.vars.is_empty() || !proc.timers.is_empty() {
            s.push('\n');
        }
        for (li, loc) in proc.locations.iter().enumerate() {
            let trans: Vec<&Transition> = proc
                .transitions
                .iter()
                .filter(|t| t.from == LocId(li) && !t.from_emits)
                .collect();
            if trans.is_empty() {
                s += &format!("  state {loc} {{\n  }}\n");
            } else {
                s += &format!("  state {loc} {{\n");
                for t in trans {
                    s += &format!("    {};\n", transition_str(t, proc, sys));
                }
                s += "  }\n";
            }
        }
        s += &format!("\n  initial {};\n}}\n", proc.locations[proc.initial.0]);
    }
    s
}

fn pattern_str(
    p: &EventPattern,
    sys: &SystemDef,
    bindings: &mut Vec<(String, DataType)>,
) -> String {
    match p {
        EventPattern::Output { signal, from, to, bind } => {
            let mut s =
                format!("output {} from {}", sys.signal(*signal).name, sys.process(*from).name);
            if let Some(t) = to {
                s += &format!(" to {}", sys.process(*t).name);
            }
            if let Some(b) = bind {
                if let Some(ty) = &sys.signal(*signal).payload {
                    bindings.push((b.clone(), ty.clone()));
                }
                s += &format!(" ({b})");
            }
            s
        }
        EventPattern::Input { signal, by, bind } => {
            let mut s =
                format!("input {} by {}", sys.signal(*signal).name, sys.process(*by).name);
            if let Some(b) = bind {
                if let Some(ty) = &sys.signal(*signal).payload {
                    bindings.push((b.clone(), ty.clone()));
                }
                s += &format!(" ({b})");
            }
            s
        }
        EventPattern::TimeoutExpiry { timer, owner } => {
            let proc = sys.process(*owner);
            format!("timeout {} in {}", proc.timers[timer.0], proc.name)
        }
        EventPattern::DiscardSignal { signal, by } => {
            format!("discard {} by {}", sys.signal(*signal).name, sys.process(*by).name)
        }
        EventPattern::DiscardTimer { timer, by } => {
            let proc = sys.process(*by);
            format!("discard {} by {}", proc.timers[timer.0], proc.name)
        }
    }
}

/// Render one observer transition as `when … -> target` DSL text (also
/// used to describe compiled MSC automata, which have no full DSL form).
pub fn print_obs_transition(t: &ObsTransition, obs: &ObserverDef, sys: &SystemDef) -> String {
    let mut bindings: Vec<(String, DataType)> = Vec::new();
    let pat = t.pattern.as_ref().map(|p| pattern_str(p, sys, &mut bindings));
    let env = NameEnv { sys, locals: &obs.locals, bindings: &bindings };
    let mut s = String::from("when ");
    match (&pat, &t.guard) {
        (Some(p), Some(g)) => {
            s += p;
            s += ", ";
            s += &expr_str(g, Some(&Ty::Bool), &env);
        }
        (Some(p), None) => s += p,
        (None, Some(g)) => s += &expr_str(g, Some(&Ty::Bool), &env),
        (None, None) => s += "true",
    }
    if !t.assigns.is_empty() {
        let items: Vec<String> = t
            .assigns
            .iter()
            .map(|(v, e)| {
                let decl = &obs.locals[v.0];
                format!("{} := {};", decl.name, expr_str(e, Some(&decl.ty.ty()), &env))
            })
            .collect();
        s += &format!(" {{ {} }}", items.join(" "));
    }
    if t.cut {
        s += " cut";
    }
    s += &format!(" -> {}", obs.states[t.target.0].name);
    s
}

/// Render a deterministic observer as DSL text that parses back to the
/// same definition.
pub fn print_observer(obs: &ObserverDef, sys: &SystemDef) -> String {
    let mut s = format!("observer {};\n", obs.name);
    if !obs.locals.is_empty() {
        s.push('\n');
        for v in &obs.locals {
            s += &format!(
                "var {}: {} := {};\n",
                v.name,
                datatype_str(&v.ty),
                v.init.display(&v.ty)
            );
        }
    }
    s.push('\n');
    for (si, st) in obs.states.iter().enumerate() {
        let kind = match st.kind {
            StateKind::Regular => "",
            StateKind::Success => " kind success",
            StateKind::Error => " kind error",
        };
        let trans: Vec<&ObsTransition> =
            obs.transitions.iter().filter(|t| t.from == ObsStateId(si)).collect();
        if trans.is_empty() {
            s += &format!("state {}{kind};\n", st.name);
        } else {
            s += &format!("state {}{kind} {{\n", st.name);
            for t in trans {
                s += &format!("  {};\n", print_obs_transition(t, obs, sys));
            }
            s += "}\n";
        }
    }
    s += &format!("\ninitial {};\n", obs.states[obs.initial.0].name);
    s
}

/// The observer text generated for a Boolean stop condition: a watch state
/// that moves to an error state as soon as `condition` holds.
pub fn bsc_template(name: &str, condition: &str) -> String {
    format!(
        "observer {name};\n\nstate watch {{\n  when {condition} -> err;\n}}\nstate err kind error;\n\ninitial watch;\n"
    )
}
