//! Name-based expression trees as written in source text, plus lowering
//! into the resolved [`Expr`] form.
//!
//! Raw expressions survive until a system is available to resolve against:
//! MSC guards are stored raw inside [`crate::msc::MscProperty`], and the
//! `bsc new` generator re-prints a raw condition without resolving it.
//!
//! Operator precedence, loosest to tightest: `or`, `and`, `not`,
//! comparisons (non-associative), `+ -`, `* div mod`, unary `-`.

use crate::model::{
    BinOp, DataType, Expr, SystemDef, Ty, UnOp, Value, VarDecl,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawExpr {
    Bool(bool),
    Int(i64),
    /// Unqualified name: a binding, a local variable, or an enum literal —
    /// decided during lowering.
    Name(String),
    /// `process.variable`
    Field(String, String),
    /// `process @ location`
    AtLoc(String, String),
    Unary(UnOp, Box<RawExpr>),
    Binary(BinOp, Box<RawExpr>, Box<RawExpr>),
}

impl RawExpr {
    pub fn unary(op: UnOp, e: RawExpr) -> RawExpr {
        RawExpr::Unary(op, Box::new(e))
    }
    pub fn binary(op: BinOp, l: RawExpr, r: RawExpr) -> RawExpr {
        RawExpr::Binary(op, Box::new(l), Box::new(r))
    }
}

/// Name environment for lowering. Populate `locals` with either process
/// variables or observer locals (whichever owns the expression); `bindings`
/// are named payload slots, in slot order.
pub struct ExprScope<'a> {
    pub sys: &'a SystemDef,
    pub locals: &'a [VarDecl],
    pub bindings: &'a [(String, DataType)],
    /// Observer expressions may read any process; process and MSC
    /// expressions may not.
    pub allow_remote: bool,
}

impl<'a> ExprScope<'a> {
    pub fn new(sys: &'a SystemDef) -> Self {
        ExprScope { sys, locals: &[], bindings: &[], allow_remote: false }
    }
}

fn binop_name(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "div",
        BinOp::Mod => "mod",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::Eq => "=",
        BinOp::Ne => "!=",
        BinOp::And => "and",
        BinOp::Or => "or",
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 4,
        BinOp::Add | BinOp::Sub => 5,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
    }
}

/// Render with the minimum parentheses that re-parse identically.
pub fn raw_to_string(e: &RawExpr) -> String {
    fn go(e: &RawExpr, out: &mut String, min_prec: u8) {
        match e {
            RawExpr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            RawExpr::Int(n) => out.push_str(&n.to_string()),
            RawExpr::Name(n) => out.push_str(n),
            RawExpr::Field(p, v) => {
                out.push_str(p);
                out.push('.');
                out.push_str(v);
            }
            RawExpr::AtLoc(p, l) => {
                out.push_str(p);
                out.push_str(" @ ");
                out.push_str(l);
            }
            RawExpr::Unary(op, inner) => {
                let (txt, prec) = match op {
                    UnOp::Not => ("not ", 3),
                    UnOp::Neg => ("-", 7),
                };
                let wrap = prec < min_prec;
                if wrap {
                    out.push('(');
                }
                out.push_str(txt);
                go(inner, out, prec + 1);
                if wrap {
                    out.push(')');
                }
            }
            RawExpr::Binary(op, l, r) => {
                let prec = binop_prec(*op);
                let wrap = prec < min_prec;
                if wrap {
                    out.push('(');
                }
                // Comparisons are non-associative: both sides need one
                // level tighter. Arithmetic and logic are left-associative.
                let (lp, rp) = if binop_prec(*op) == 4 { (5, 5) } else { (prec, prec + 1) };
                go(l, out, lp);
                out.push(' ');
                out.push_str(binop_name(*op));
                out.push(' ');
                go(r, out, rp);
                if wrap {
                    out.push(')');
                }
            }
        }
    }
    let mut s = String::new();
    go(e, &mut s, 0);
    s
}

/// Resolve names and check types, producing a resolved [`Expr`] and its
/// type. `expected` is the hint that gives bare enum literals a type; the
/// caller enforces the final type where one is required.
pub fn lower_expr(
    e: &RawExpr,
    expected: Option<&Ty>,
    scope: &ExprScope,
) -> Result<(Expr, Ty), String> {
    match e {
        RawExpr::Bool(b) => Ok((Expr::Const(Value::Bool(*b)), Ty::Bool)),
        RawExpr::Int(n) => Ok((Expr::Const(Value::Int(*n)), Ty::Int)),
        RawExpr::Name(n) => {
            if let Some(slot) = scope.bindings.iter().position(|(b, _)| b == n) {
                return Ok((Expr::Binding(slot), scope.bindings[slot].1.ty()));
            }
            if let Some(i) = scope.locals.iter().position(|v| &v.name == n) {
                return Ok((Expr::Var(crate::model::VarId(i)), scope.locals[i].ty.ty()));
            }
            if let Some(Ty::Enum(lits)) = expected {
                if let Some(i) = lits.iter().position(|l| l == n) {
                    return Ok((
                        Expr::Const(Value::Enum(i as u16)),
                        Ty::Enum(lits.clone()),
                    ));
                }
            }
            Err(format!("unresolved name '{n}'"))
        }
        RawExpr::Field(p, v) => {
            if !scope.allow_remote {
                return Err(format!(
                    "process variables cannot be referenced here ('{p}.{v}')"
                ));
            }
            let pid = scope
                .sys
                .find_process(p)
                .ok_or_else(|| format!("unresolved process '{p}'"))?;
            let proc = scope.sys.process(pid);
            let vid = proc
                .find_var(v)
                .ok_or_else(|| format!("process {p} has no variable '{v}'"))?;
            Ok((Expr::RemoteVar(pid, vid), proc.vars[vid.0].ty.ty()))
        }
        RawExpr::AtLoc(p, l) => {
            if !scope.allow_remote {
                return Err(format!(
                    "location predicates cannot be referenced here ('{p} @ {l}')"
                ));
            }
            let pid = scope
                .sys
                .find_process(p)
                .ok_or_else(|| format!("unresolved process '{p}'"))?;
            let lid = scope
                .sys
                .process(pid)
                .find_location(l)
                .ok_or_else(|| format!("process {p} has no location '{l}'"))?;
            Ok((Expr::AtLoc(pid, lid), Ty::Bool))
        }
        RawExpr::Unary(op, inner) => match op {
            UnOp::Not => {
                let (ie, ty) = lower_expr(inner, Some(&Ty::Bool), scope)?;
                if ty != Ty::Bool {
                    return Err(format!("'not' needs Bool, found {}", ty.name()));
                }
                Ok((Expr::Unary(UnOp::Not, Box::new(ie)), Ty::Bool))
            }
            UnOp::Neg => {
                let (ie, ty) = lower_expr(inner, Some(&Ty::Int), scope)?;
                if ty != Ty::Int {
                    return Err(format!("'-' needs Int, found {}", ty.name()));
                }
                Ok((Expr::Unary(UnOp::Neg, Box::new(ie)), Ty::Int))
            }
        },
        RawExpr::Binary(op, l, r) => {
            if op.is_arith() || op.is_ordering() {
                let (le, lt) = lower_expr(l, Some(&Ty::Int), scope)?;
                let (re, rt) = lower_expr(r, Some(&Ty::Int), scope)?;
                if lt != Ty::Int || rt != Ty::Int {
                    return Err(format!(
                        "'{}' needs Int operands, found {} and {}",
                        binop_name(*op),
                        lt.name(),
                        rt.name()
                    ));
                }
                let ty = if op.is_arith() { Ty::Int } else { Ty::Bool };
                Ok((Expr::binary(*op, le, re), ty))
            } else if op.is_equality() {
                // Try left-first so a bare enum literal on either side picks
                // up its type from the other.
                let (le, re, lt) = match lower_expr(l, None, scope) {
                    Ok((le, lt)) => {
                        let (re, rt) = lower_expr(r, Some(&lt), scope)?;
                        if lt != rt {
                            return Err(format!(
                                "'{}' compares {} with {}",
                                binop_name(*op),
                                lt.name(),
                                rt.name()
                            ));
                        }
                        (le, re, lt)
                    }
                    Err(first) => {
                        let (re, rt) = lower_expr(r, None, scope).map_err(|_| first.clone())?;
                        let (le, lt) = lower_expr(l, Some(&rt), scope).map_err(|_| first)?;
                        if lt != rt {
                            return Err(format!(
                                "'{}' compares {} with {}",
                                binop_name(*op),
                                lt.name(),
                                rt.name()
                            ));
                        }
                        (le, re, lt)
                    }
                };
                let _ = lt;
                Ok((Expr::binary(*op, le, re), Ty::Bool))
            } else {
                let (le, lt) = lower_expr(l, Some(&Ty::Bool), scope)?;
                let (re, rt) = lower_expr(r, Some(&Ty::Bool), scope)?;
                if lt != Ty::Bool || rt != Ty::Bool {
                    return Err(format!(
                        "'{}' needs Bool operands, found {} and {}",
                        binop_name(*op),
                        lt.name(),
                        rt.name()
                    ));
                }
                Ok((Expr::binary(*op, le, re), Ty::Bool))
            }
        }
    }
}
