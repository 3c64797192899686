//! Recursive-descent parsers for the three DSLs: systems (`.sys`),
//! observers (`.obs`) and message-sequence-chart properties (`.msc`),
//! plus the shared expression grammar.
//!
//! Parsing is two-phase: a syntax pass builds a raw, name-based tree and
//! stops at the first syntax error; a lowering pass resolves names, checks
//! types and collects every problem it finds. All diagnostics carry a
//! source position.

use crate::ast::{lower_expr, ExprScope, RawExpr};
use crate::diag::{Diagnostic, Pos};
use crate::lexer::{is_keyword, lex, Tok, Token};
use crate::model::{
    validate_system, Action, BinOp, DataType, Expr, LocId, ProcId, ProcessDef, Signal,
    SystemDef, Transition, Trigger, Ty, UnOp, Value, VarDecl, VarId, DEFAULT_QUEUE_CAPACITY,
};
use crate::msc::{validate_msc, MscMode, MscProperty, MscRow, Polarity};
use crate::observer::{
    validate_observer, EventPattern, ObsState, ObsStateId, ObsTransition, ObserverDef,
    StateKind,
};

type PResult<T> = Result<T, Diagnostic>;

fn err_at<T>(pos: Pos, msg: impl Into<String>) -> PResult<T> {
    Err(Diagnostic::error_at(pos.line, pos.col, msg))
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, Diagnostic> {
        Ok(Parser { toks: lex(text)?, i: 0 })
    }

    fn cur(&self) -> &Token {
        &self.toks[self.i]
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<Pos> {
        if self.peek() == &t {
            Ok(self.advance().pos)
        } else {
            err_at(self.pos(), format!("expected {what}, found {}", self.peek()))
        }
    }

    fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.at_word(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str, what: &str) -> PResult<Pos> {
        if self.at_word(w) {
            Ok(self.advance().pos)
        } else {
            err_at(self.pos(), format!("expected {what}, found {}", self.peek()))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        match self.peek() {
            Tok::Word(w) if !is_keyword(w) => {
                let t = self.advance();
                let Tok::Word(w) = t.tok else { unreachable!() };
                Ok((w, t.pos))
            }
            Tok::Word(w) => err_at(
                self.pos(),
                format!("'{w}' is a reserved keyword and cannot be {what}"),
            ),
            other => err_at(self.pos(), format!("expected {what}, found {other}")),
        }
    }

    // ----- expressions ---------------------------------------------------

    fn parse_expr(&mut self) -> PResult<RawExpr> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> PResult<RawExpr> {
        let mut e = self.parse_and()?;
        while self.eat_word("or") {
            e = RawExpr::binary(BinOp::Or, e, self.parse_and()?);
        }
        Ok(e)
    }

    fn parse_and(&mut self) -> PResult<RawExpr> {
        let mut e = self.parse_not()?;
        while self.eat_word("and") {
            e = RawExpr::binary(BinOp::And, e, self.parse_not()?);
        }
        Ok(e)
    }

    fn parse_not(&mut self) -> PResult<RawExpr> {
        if self.eat_word("not") {
            Ok(RawExpr::unary(UnOp::Not, self.parse_not()?))
        } else {
            self.parse_cmp()
        }
    }

    fn cmp_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Lt => Some(BinOp::Lt),
            Tok::Le => Some(BinOp::Le),
            Tok::Gt => Some(BinOp::Gt),
            Tok::Ge => Some(BinOp::Ge),
            Tok::Eq => Some(BinOp::Eq),
            Tok::NotEq => Some(BinOp::Ne),
            _ => None,
        }
    }

    fn parse_cmp(&mut self) -> PResult<RawExpr> {
        let l = self.parse_add()?;
        let Some(op) = self.cmp_op() else { return Ok(l) };
        self.advance();
        let r = self.parse_add()?;
        if self.cmp_op().is_some() {
            return err_at(self.pos(), "comparisons cannot be chained");
        }
        Ok(RawExpr::binary(op, l, r))
    }

    fn parse_add(&mut self) -> PResult<RawExpr> {
        let mut e = self.parse_mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            e = RawExpr::binary(op, e, self.parse_mul()?);
        }
        Ok(e)
    }

    fn parse_mul(&mut self) -> PResult<RawExpr> {
        let mut e = self.parse_unary()?;
        loop {
            let op = if self.peek() == &Tok::Star {
                BinOp::Mul
            } else if self.at_word("div") {
                BinOp::Div
            } else if self.at_word("mod") {
                BinOp::Mod
            } else {
                break;
            };
            self.advance();
            e = RawExpr::binary(op, e, self.parse_unary()?);
        }
        Ok(e)
    }

    fn parse_unary(&mut self) -> PResult<RawExpr> {
        if self.eat(&Tok::Minus) {
            Ok(RawExpr::unary(UnOp::Neg, self.parse_unary()?))
        } else {
            self.parse_atom()
        }
    }

    fn parse_atom(&mut self) -> PResult<RawExpr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(RawExpr::Int(n))
            }
            Tok::LParen => {
                self.advance();
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Word(w) if w == "true" => {
                self.advance();
                Ok(RawExpr::Bool(true))
            }
            Tok::Word(w) if w == "false" => {
                self.advance();
                Ok(RawExpr::Bool(false))
            }
            Tok::Word(w) if !is_keyword(&w) => {
                self.advance();
                if self.eat(&Tok::Dot) {
                    let (v, _) = self.expect_ident("a variable name")?;
                    Ok(RawExpr::Field(w, v))
                } else if self.eat(&Tok::At) {
                    let (l, _) = self.expect_ident("a location name")?;
                    Ok(RawExpr::AtLoc(w, l))
                } else {
                    Ok(RawExpr::Name(w))
                }
            }
            other => err_at(self.pos(), format!("expected an expression, found {other}")),
        }
    }

    // ----- types, literals, variable declarations ------------------------

    fn parse_signed_int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        match *self.peek() {
            Tok::Int(n) => {
                self.advance();
                Ok(if neg { -n } else { n })
            }
            ref other => err_at(self.pos(), format!("expected an integer, found {other}")),
        }
    }

    fn parse_datatype(&mut self) -> PResult<DataType> {
        let pos = self.pos();
        if self.eat_word("Bool") {
            Ok(DataType::Bool)
        } else if self.eat_word("Int") {
            let min = self.parse_signed_int()?;
            self.expect(Tok::DotDot, "'..'")?;
            let max = self.parse_signed_int()?;
            if min > max {
                return err_at(pos, format!("empty integer range {min}..{max}"));
            }
            Ok(DataType::Int { min, max })
        } else if self.eat_word("Enum") {
            self.expect(Tok::LBrace, "'{'")?;
            let mut literals: Vec<String> = Vec::new();
            loop {
                let (l, lpos) = self.expect_ident("an enum literal")?;
                if literals.contains(&l) {
                    return err_at(lpos, format!("duplicate enum literal '{l}'"));
                }
                literals.push(l);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace, "'}'")?;
            Ok(DataType::Enum { literals })
        } else {
            err_at(
                pos,
                format!(
                    "expected a type (Bool, Int lo..hi, or Enum {{..}}), found {}",
                    self.peek()
                ),
            )
        }
    }

    fn parse_literal(&mut self) -> PResult<(RawLit, Pos)> {
        let pos = self.pos();
        if self.eat_word("true") {
            return Ok((RawLit::Bool(true), pos));
        }
        if self.eat_word("false") {
            return Ok((RawLit::Bool(false), pos));
        }
        match self.peek().clone() {
            Tok::Int(_) | Tok::Minus => Ok((RawLit::Int(self.parse_signed_int()?), pos)),
            Tok::Word(w) if !is_keyword(&w) => {
                self.advance();
                Ok((RawLit::Name(w), pos))
            }
            other => err_at(pos, format!("expected a literal, found {other}")),
        }
    }

    fn parse_vardecl(&mut self) -> PResult<RawVar> {
        let pos = self.expect_word("var", "'var'")?;
        let (name, _) = self.expect_ident("a variable name")?;
        self.expect(Tok::Colon, "':'")?;
        let ty = self.parse_datatype()?;
        self.expect(Tok::Assign, "':='")?;
        let (init, init_pos) = self.parse_literal()?;
        self.expect(Tok::Semi, "';'")?;
        Ok(RawVar { name, ty, init, init_pos, pos })
    }
}

// ----- raw trees ----------------------------------------------------------

enum RawLit {
    Bool(bool),
    Int(i64),
    Name(String),
}

struct RawVar {
    name: String,
    ty: DataType,
    init: RawLit,
    init_pos: Pos,
    pos: Pos,
}

struct RawSystem {
    name: String,
    signals: Vec<RawSignal>,
    processes: Vec<RawProc>,
}

struct RawSignal {
    name: String,
    payload: Option<DataType>,
    pos: Pos,
}

struct RawProc {
    name: String,
    is_env: bool,
    queue: Option<(u32, Pos)>,
    emits: Vec<(String, Pos)>,
    vars: Vec<RawVar>,
    timers: Vec<(String, Pos)>,
    states: Vec<RawState>,
    initial: Option<(String, Pos)>,
    pos: Pos,
}

struct RawState {
    name: String,
    pos: Pos,
    trans: Vec<RawTrans>,
}

struct RawTrans {
    pos: Pos,
    trigger: RawTrigger,
    guard: Option<RawExpr>,
    actions: Vec<RawAction>,
    target: (String, Pos),
}

enum RawTrigger {
    Input { signal: (String, Pos), bind: Option<String> },
    Timeout { timer: (String, Pos) },
    Spontaneous,
}

enum RawAction {
    Assign { var: String, value: RawExpr, pos: Pos },
    Output { signal: String, payload: Option<RawExpr>, to: String, pos: Pos },
    Set { timer: String, duration: RawExpr, pos: Pos },
    Reset { timer: String, pos: Pos },
}

// ----- system syntax -------------------------------------------------------

fn parse_system_raw(p: &mut Parser) -> PResult<RawSystem> {
    p.expect_word("system", "'system'")?;
    let (name, _) = p.expect_ident("a system name")?;
    p.expect(Tok::Semi, "';'")?;

    let mut signals = Vec::new();
    while p.at_word("signal") {
        let pos = p.advance().pos;
        let (name, _) = p.expect_ident("a signal name")?;
        let payload = if p.eat(&Tok::LParen) {
            let ty = p.parse_datatype()?;
            p.expect(Tok::RParen, "')'")?;
            Some(ty)
        } else {
            None
        };
        p.expect(Tok::Semi, "';'")?;
        signals.push(RawSignal { name, payload, pos });
    }

    let mut processes = Vec::new();
    while p.at_word("env") || p.at_word("process") {
        processes.push(parse_process(p)?);
    }
    if p.peek() != &Tok::Eof {
        return err_at(
            p.pos(),
            format!("expected 'process' or end of input, found {}", p.peek()),
        );
    }
    if processes.is_empty() {
        return err_at(p.pos(), "a system needs at least one process");
    }
    Ok(RawSystem { name, signals, processes })
}

fn parse_process(p: &mut Parser) -> PResult<RawProc> {
    let pos = p.pos();
    let is_env = p.eat_word("env");
    p.expect_word("process", "'process'")?;
    let (name, _) = p.expect_ident("a process name")?;
    let queue = if p.eat_word("queue") {
        let qpos = p.pos();
        let Tok::Int(n) = *p.peek() else {
            return err_at(qpos, format!("expected a queue capacity, found {}", p.peek()));
        };
        p.advance();
        let n = u32::try_from(n)
            .map_err(|_| Diagnostic::error_at(qpos.line, qpos.col, "queue capacity too large"))?;
        Some((n, qpos))
    } else {
        None
    };
    p.expect(Tok::LBrace, "'{'")?;

    let mut proc = RawProc {
        name,
        is_env,
        queue,
        emits: vec![],
        vars: vec![],
        timers: vec![],
        states: vec![],
        initial: None,
        pos,
    };

    // Environment shorthand: the whole body is one `emits` line.
    if is_env && p.at_word("emits") {
        p.advance();
        loop {
            proc.emits.push(p.expect_ident("a signal name")?);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(Tok::Semi, "';'")?;
        p.expect(Tok::RBrace, "'}'")?;
        return Ok(proc);
    }

    while p.at_word("var") {
        proc.vars.push(p.parse_vardecl()?);
    }
    while p.at_word("timer") {
        p.advance();
        let t = p.expect_ident("a timer name")?;
        p.expect(Tok::Semi, "';'")?;
        proc.timers.push(t);
    }
    while p.at_word("state") {
        proc.states.push(parse_state(p)?);
    }
    if !p.at_word("initial") {
        return err_at(p.pos(), format!("expected 'state' or 'initial', found {}", p.peek()));
    }
    p.advance();
    proc.initial = Some(p.expect_ident("a location name")?);
    p.expect(Tok::Semi, "';'")?;
    p.expect(Tok::RBrace, "'}'")?;
    Ok(proc)
}

fn parse_state(p: &mut Parser) -> PResult<RawState> {
    let pos = p.expect_word("state", "'state'")?;
    let (name, _) = p.expect_ident("a location name")?;
    p.expect(Tok::LBrace, "'{'")?;
    let mut trans = Vec::new();
    while p.at_word("on") {
        trans.push(parse_transition(p)?);
    }
    p.expect(Tok::RBrace, "'on' or '}'")?;
    Ok(RawState { name, pos, trans })
}

fn parse_transition(p: &mut Parser) -> PResult<RawTrans> {
    let pos = p.expect_word("on", "'on'")?;
    let trigger = if p.eat_word("input") {
        let signal = p.expect_ident("a signal name")?;
        let bind = if p.eat(&Tok::LParen) {
            let (b, _) = p.expect_ident("a binding name")?;
            p.expect(Tok::RParen, "')'")?;
            Some(b)
        } else {
            None
        };
        RawTrigger::Input { signal, bind }
    } else if p.eat_word("timeout") {
        RawTrigger::Timeout { timer: p.expect_ident("a timer name")? }
    } else if p.eat_word("spontaneous") {
        RawTrigger::Spontaneous
    } else {
        return err_at(
            p.pos(),
            format!("expected 'input', 'timeout' or 'spontaneous', found {}", p.peek()),
        );
    };
    let guard = if p.eat_word("when") { Some(p.parse_expr()?) } else { None };
    p.expect(Tok::LBrace, "'{'")?;
    let mut actions = Vec::new();
    loop {
        let apos = p.pos();
        if p.eat(&Tok::RBrace) {
            break;
        }
        if p.eat_word("output") {
            let (signal, _) = p.expect_ident("a signal name")?;
            let payload = if p.eat(&Tok::LParen) {
                let e = p.parse_expr()?;
                p.expect(Tok::RParen, "')'")?;
                Some(e)
            } else {
                None
            };
            p.expect_word("to", "'to'")?;
            let (to, _) = p.expect_ident("a process name")?;
            p.expect(Tok::Semi, "';'")?;
            actions.push(RawAction::Output { signal, payload, to, pos: apos });
        } else if p.eat_word("set") {
            let (timer, _) = p.expect_ident("a timer name")?;
            p.expect(Tok::Comma, "','")?;
            let duration = p.parse_expr()?;
            p.expect(Tok::Semi, "';'")?;
            actions.push(RawAction::Set { timer, duration, pos: apos });
        } else if p.eat_word("reset") {
            let (timer, _) = p.expect_ident("a timer name")?;
            p.expect(Tok::Semi, "';'")?;
            actions.push(RawAction::Reset { timer, pos: apos });
        } else if matches!(p.peek(), Tok::Word(w) if !is_keyword(w)) {
            let (var, _) = p.expect_ident("a variable name")?;
            p.expect(Tok::Assign, "':='")?;
            let value = p.parse_expr()?;
            p.expect(Tok::Semi, "';'")?;
            actions.push(RawAction::Assign { var, value, pos: apos });
        } else {
            return err_at(apos, format!("expected an action or '}}', found {}", p.peek()));
        }
    }
    p.expect(Tok::Arrow, "'->'")?;
    let target = p.expect_ident("a location name")?;
    p.expect(Tok::Semi, "';'")?;
    Ok(RawTrans { pos, trigger, guard, actions, target })
}

// ----- lowering ------------------------------------------------------------

struct Low {
    diags: Vec<Diagnostic>,
}

impl Low {
    fn err(&mut self, pos: Pos, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error_at(pos.line, pos.col, msg));
    }
}

fn lower_lit(lit: &RawLit, ty: &DataType) -> Result<Value, String> {
    match (lit, ty) {
        (RawLit::Bool(b), DataType::Bool) => Ok(Value::Bool(*b)),
        (RawLit::Int(n), DataType::Int { min, max }) => {
            if min <= n && n <= max {
                Ok(Value::Int(*n))
            } else {
                Err(format!("value {n} is outside Int {min}..{max}"))
            }
        }
        (RawLit::Name(n), DataType::Enum { literals }) => literals
            .iter()
            .position(|l| l == n)
            .map(|i| Value::Enum(i as u16))
            .ok_or_else(|| format!("'{n}' is not a literal of the enum type")),
        (_, ty) => Err(format!("literal does not fit type {}", ty.ty().name())),
    }
}

fn lower_vars(raw: &[RawVar], low: &mut Low) -> Vec<VarDecl> {
    let mut vars: Vec<VarDecl> = Vec::new();
    for v in raw {
        if vars.iter().any(|d| d.name == v.name) {
            low.err(v.pos, format!("duplicate variable '{}'", v.name));
            continue;
        }
        match lower_lit(&v.init, &v.ty) {
            Ok(init) => vars.push(VarDecl { name: v.name.clone(), ty: v.ty.clone(), init }),
            Err(msg) => low.err(v.init_pos, format!("initial value of '{}': {msg}", v.name)),
        }
    }
    vars
}

fn lower_system(raw: &RawSystem) -> Result<SystemDef, Vec<Diagnostic>> {
    let mut low = Low { diags: Vec::new() };

    let mut signals: Vec<Signal> = Vec::new();
    for s in &raw.signals {
        if signals.iter().any(|o| o.name == s.name) {
            low.err(s.pos, format!("duplicate signal '{}'", s.name));
            continue;
        }
        signals.push(Signal { name: s.name.clone(), payload: s.payload.clone() });
    }

    if raw.processes.iter().all(|p| p.is_env) {
        low.err(raw.processes[0].pos, "a system needs at least one non-env process");
    }

    // Skeletons first (everything but transitions), so that outputs and
    // emits can resolve destination processes declared in any order.
    let mut procs: Vec<ProcessDef> = Vec::new();
    for rp in &raw.processes {
        if procs.iter().any(|o| o.name == rp.name) {
            low.err(rp.pos, format!("duplicate process '{}'", rp.name));
        }
        if let Some((0, qpos)) = rp.queue {
            low.err(qpos, "queue capacity must be positive");
        }
        let vars = lower_vars(&rp.vars, &mut low);
        let mut timers: Vec<String> = Vec::new();
        for (t, tpos) in &rp.timers {
            if timers.contains(t) {
                low.err(*tpos, format!("duplicate timer '{t}'"));
            } else {
                timers.push(t.clone());
            }
        }
        let mut locations: Vec<String> = Vec::new();
        for st in &rp.states {
            if locations.contains(&st.name) {
                low.err(st.pos, format!("duplicate location '{}'", st.name));
            } else {
                locations.push(st.name.clone());
            }
        }
        let initial;
        if rp.states.is_empty() && !rp.emits.is_empty() {
            locations.push("run".into());
            initial = LocId(0);
        } else if rp.states.is_empty() {
            low.err(rp.pos, format!("process {} has no states", rp.name));
            locations.push("run".into());
            initial = LocId(0);
        } else {
            let (iname, ipos) = rp.initial.as_ref().expect("states imply an initial");
            match locations.iter().position(|l| l == iname) {
                Some(i) => initial = LocId(i),
                None => {
                    low.err(*ipos, format!("process {} has no location '{iname}'", rp.name));
                    initial = LocId(0);
                }
            }
        }
        procs.push(ProcessDef {
            name: rp.name.clone(),
            is_env: rp.is_env,
            queue_capacity: rp.queue.map(|(n, _)| n),
            vars,
            timers,
            locations,
            initial,
            transitions: vec![],
            emits: vec![],
        });
    }

    let mut sys = SystemDef {
        name: raw.name.clone(),
        signals,
        processes: procs,
        default_queue_capacity: DEFAULT_QUEUE_CAPACITY,
    };

    let mut all_trans: Vec<Vec<Transition>> = Vec::new();
    for (pi, rp) in raw.processes.iter().enumerate() {
        let mut out = Vec::new();
        for st in &rp.states {
            let Some(from) = sys.processes[pi].find_location(&st.name) else { continue };
            for tr in &st.trans {
                if let Some(t) = lower_transition(tr, from, pi, &sys, &mut low) {
                    out.push(t);
                }
            }
        }
        all_trans.push(out);
    }
    for (pi, trans) in all_trans.into_iter().enumerate() {
        sys.processes[pi].transitions = trans;
    }

    // Expand `emits`: one spontaneous self-loop per (signal, receiver),
    // receivers being the non-env processes that consume the signal,
    // in declaration order. The payload, if any, is nondeterministic.
    for (pi, rp) in raw.processes.iter().enumerate() {
        if rp.emits.is_empty() {
            continue;
        }
        let mut emit_ids = Vec::new();
        let mut new_trans = Vec::new();
        for (sname, spos) in &rp.emits {
            let Some(sig) = sys.find_signal(sname) else {
                low.err(*spos, format!("unresolved signal '{sname}'"));
                continue;
            };
            if emit_ids.contains(&sig) {
                low.err(*spos, format!("signal '{sname}' is already emitted"));
                continue;
            }
            emit_ids.push(sig);
            let payload_ty = sys.signal(sig).payload.clone();
            let receivers: Vec<ProcId> = sys
                .processes
                .iter()
                .enumerate()
                .filter(|(_, q)| {
                    !q.is_env
                        && q.transitions.iter().any(
                            |t| matches!(t.trigger, Trigger::Input { signal, .. } if signal == sig),
                        )
                })
                .map(|(qi, _)| ProcId(qi))
                .collect();
            if receivers.is_empty() {
                low.err(*spos, format!("signal '{sname}' emitted by {} has no receiver", rp.name));
            }
            for to in receivers {
                new_trans.push(Transition {
                    from: LocId(0),
                    trigger: Trigger::Spontaneous,
                    guard: None,
                    actions: vec![Action::Output {
                        signal: sig,
                        payload: payload_ty.as_ref().map(|_| Expr::Binding(0)),
                        to,
                    }],
                    target: LocId(0),
                    env_payload: payload_ty.clone(),
                    from_emits: true,
                });
            }
        }
        sys.processes[pi].transitions.extend(new_trans);
        sys.processes[pi].emits = emit_ids;
    }

    if !low.diags.is_empty() {
        return Err(low.diags);
    }
    let residual = validate_system(&sys);
    if !residual.is_empty() {
        return Err(residual);
    }
    Ok(sys)
}

fn lower_transition(
    tr: &RawTrans,
    from: LocId,
    pi: usize,
    sys: &SystemDef,
    low: &mut Low,
) -> Option<Transition> {
    let proc = &sys.processes[pi];
    let mut bindings: Vec<(String, DataType)> = Vec::new();
    let trigger = match &tr.trigger {
        RawTrigger::Input { signal: (s, spos), bind } => {
            if proc.is_env {
                low.err(tr.pos, "environment process consumes input");
            }
            let Some(sig) = sys.find_signal(s) else {
                low.err(*spos, format!("unresolved signal '{s}'"));
                return None;
            };
            match (&sys.signal(sig).payload, bind) {
                (Some(ty), Some(b)) => bindings.push((b.clone(), ty.clone())),
                (None, Some(_)) => low.err(*spos, format!("signal {s} has no payload to bind")),
                _ => {}
            }
            Trigger::Input { signal: sig, bind: bind.clone() }
        }
        RawTrigger::Timeout { timer: (t, tpos) } => {
            if proc.is_env {
                low.err(tr.pos, "environment process consumes input");
            }
            let Some(timer) = proc.find_timer(t) else {
                low.err(*tpos, format!("process {} has no timer '{t}'", proc.name));
                return None;
            };
            Trigger::Timeout { timer }
        }
        RawTrigger::Spontaneous => Trigger::Spontaneous,
    };

    let scope =
        ExprScope { sys, locals: &proc.vars, bindings: &bindings, allow_remote: false };
    let guard = match &tr.guard {
        None => None,
        Some(g) => match lower_expr(g, Some(&Ty::Bool), &scope) {
            Ok((e, Ty::Bool)) => Some(e),
            Ok((_, ty)) => {
                low.err(tr.pos, format!("guard has type {}, expected Bool", ty.name()));
                None
            }
            Err(msg) => {
                low.err(tr.pos, msg);
                None
            }
        },
    };

    let mut actions = Vec::new();
    for a in &tr.actions {
        match a {
            RawAction::Assign { var, value, pos } => {
                if proc.is_env {
                    low.err(*pos, "environment process actions must be outputs");
                }
                let Some(vid) = proc.find_var(var) else {
                    low.err(*pos, format!("process {} has no variable '{var}'", proc.name));
                    continue;
                };
                let want = proc.vars[vid.0].ty.ty();
                match lower_expr(value, Some(&want), &scope) {
                    Ok((e, ty)) if ty == want => {
                        actions.push(Action::Assign { var: vid, value: e });
                    }
                    Ok((_, ty)) => low.err(
                        *pos,
                        format!(
                            "assignment to '{var}' has type {}, expected {}",
                            ty.name(),
                            want.name()
                        ),
                    ),
                    Err(msg) => low.err(*pos, msg),
                }
            }
            RawAction::Output { signal, payload, to, pos } => {
                let sig = sys.find_signal(signal);
                if sig.is_none() {
                    low.err(*pos, format!("unresolved signal '{signal}'"));
                }
                let dst = sys.find_process(to);
                if dst.is_none() {
                    low.err(*pos, format!("unresolved process '{to}'"));
                }
                let (Some(sig), Some(dst)) = (sig, dst) else { continue };
                let pl = match (&sys.signal(sig).payload, payload) {
                    (Some(ty), Some(e)) => {
                        let want = ty.ty();
                        match lower_expr(e, Some(&want), &scope) {
                            Ok((e, t)) if t == want => Some(e),
                            Ok((_, t)) => {
                                low.err(
                                    *pos,
                                    format!(
                                        "payload of {signal} has type {}, expected {}",
                                        t.name(),
                                        want.name()
                                    ),
                                );
                                None
                            }
                            Err(msg) => {
                                low.err(*pos, msg);
                                None
                            }
                        }
                    }
                    (None, Some(_)) => {
                        low.err(*pos, format!("signal {signal} carries no payload"));
                        None
                    }
                    (Some(_), None) => {
                        low.err(*pos, format!("output of {signal} needs a payload"));
                        None
                    }
                    (None, None) => None,
                };
                actions.push(Action::Output { signal: sig, payload: pl, to: dst });
            }
            RawAction::Set { timer, duration, pos } => {
                if proc.is_env {
                    low.err(*pos, "environment process actions must be outputs");
                }
                let Some(tid) = proc.find_timer(timer) else {
                    low.err(*pos, format!("process {} has no timer '{timer}'", proc.name));
                    continue;
                };
                match lower_expr(duration, Some(&Ty::Int), &scope) {
                    Ok((e, Ty::Int)) => {
                        actions.push(Action::SetTimer { timer: tid, duration: e });
                    }
                    Ok((_, ty)) => low.err(
                        *pos,
                        format!("timer duration has type {}, expected Int", ty.name()),
                    ),
                    Err(msg) => low.err(*pos, msg),
                }
            }
            RawAction::Reset { timer, pos } => {
                if proc.is_env {
                    low.err(*pos, "environment process actions must be outputs");
                }
                let Some(tid) = proc.find_timer(timer) else {
                    low.err(*pos, format!("process {} has no timer '{timer}'", proc.name));
                    continue;
                };
                actions.push(Action::ResetTimer { timer: tid });
            }
        }
    }

    let Some(target) = proc.find_location(&tr.target.0) else {
        low.err(tr.target.1, format!("process {} has no location '{}'", proc.name, tr.target.0));
        return None;
    };
    Some(Transition::new(from, trigger, guard, actions, target))
}

/// Parse a system definition. On success the result passes
/// [`validate_system`]; otherwise every collected diagnostic is returned.
pub fn parse_system(text: &str) -> Result<SystemDef, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let raw = parse_system_raw(&mut p).map_err(|d| vec![d])?;
    lower_system(&raw)
}

/// Parse a single expression (used by `bsc new` condition strings).
pub fn parse_raw_expr(text: &str) -> Result<RawExpr, Diagnostic> {
    let mut p = Parser::new(text)?;
    let e = p.parse_expr()?;
    if p.peek() != &Tok::Eof {
        return Err(Diagnostic::error_at(
            p.pos().line,
            p.pos().col,
            format!("expected end of input, found {}", p.peek()),
        ));
    }
    Ok(e)
}

// ----- observer syntax -------------------------------------------------------

struct RawObserver {
    name: String,
    pos: Pos,
    vars: Vec<RawVar>,
    states: Vec<RawObsState>,
    initial: Option<(String, Pos)>,
}

struct RawObsState {
    name: String,
    kind: StateKind,
    pos: Pos,
    trans: Vec<RawObsTrans>,
}

struct RawObsTrans {
    pos: Pos,
    pattern: Option<RawPattern>,
    preds: Vec<RawExpr>,
    assigns: Vec<(String, RawExpr, Pos)>,
    cut: bool,
    target: (String, Pos),
}

enum RawPattern {
    Output {
        signal: (String, Pos),
        from: (String, Pos),
        to: Option<(String, Pos)>,
        bind: Option<String>,
    },
    Input { signal: (String, Pos), by: (String, Pos), bind: Option<String> },
    Timeout { timer: (String, Pos), owner: (String, Pos) },
    Discard { name: (String, Pos), by: (String, Pos) },
}

fn parse_opt_bind(p: &mut Parser) -> PResult<Option<String>> {
    if p.eat(&Tok::LParen) {
        let (b, _) = p.expect_ident("a binding name")?;
        p.expect(Tok::RParen, "')'")?;
        Ok(Some(b))
    } else {
        Ok(None)
    }
}

fn parse_observer_raw(p: &mut Parser) -> PResult<RawObserver> {
    let pos = p.expect_word("observer", "'observer'")?;
    let (name, _) = p.expect_ident("an observer name")?;
    p.expect(Tok::Semi, "';'")?;
    let mut obs = RawObserver { name, pos, vars: vec![], states: vec![], initial: None };
    while p.at_word("var") {
        obs.vars.push(p.parse_vardecl()?);
    }
    loop {
        if p.at_word("state") {
            obs.states.push(parse_obs_state(p)?);
        } else if p.at_word("initial") {
            let ipos = p.advance().pos;
            if obs.initial.is_some() {
                return err_at(ipos, "more than one initial state");
            }
            obs.initial = Some(p.expect_ident("a state name")?);
            p.expect(Tok::Semi, "';'")?;
        } else if p.peek() == &Tok::Eof {
            break;
        } else {
            return err_at(
                p.pos(),
                format!("expected 'state', 'initial' or end of input, found {}", p.peek()),
            );
        }
    }
    if obs.initial.is_none() {
        return err_at(p.pos(), "missing initial state");
    }
    Ok(obs)
}

fn parse_obs_state(p: &mut Parser) -> PResult<RawObsState> {
    let pos = p.expect_word("state", "'state'")?;
    let (name, _) = p.expect_ident("a state name")?;
    let kind = if p.eat_word("kind") {
        if p.eat_word("success") {
            StateKind::Success
        } else if p.eat_word("error") {
            StateKind::Error
        } else {
            return err_at(p.pos(), format!("expected 'success' or 'error', found {}", p.peek()));
        }
    } else {
        StateKind::Regular
    };
    let mut trans = Vec::new();
    if !p.eat(&Tok::Semi) {
        p.expect(Tok::LBrace, "'{' or ';'")?;
        while p.at_word("when") {
            trans.push(parse_obs_trans(p)?);
        }
        p.expect(Tok::RBrace, "'when' or '}'")?;
    }
    Ok(RawObsState { name, kind, pos, trans })
}

fn parse_obs_trans(p: &mut Parser) -> PResult<RawObsTrans> {
    let pos = p.expect_word("when", "'when'")?;
    let mut pattern = None;
    let mut preds = Vec::new();
    if p.eat_word("output") {
        let signal = p.expect_ident("a signal name")?;
        p.expect_word("from", "'from'")?;
        let from = p.expect_ident("a process name")?;
        let to = if p.eat_word("to") { Some(p.expect_ident("a process name")?) } else { None };
        let bind = parse_opt_bind(p)?;
        pattern = Some(RawPattern::Output { signal, from, to, bind });
    } else if p.eat_word("input") {
        let signal = p.expect_ident("a signal name")?;
        p.expect_word("by", "'by'")?;
        let by = p.expect_ident("a process name")?;
        let bind = parse_opt_bind(p)?;
        pattern = Some(RawPattern::Input { signal, by, bind });
    } else if p.eat_word("timeout") {
        let timer = p.expect_ident("a timer name")?;
        p.expect_word("in", "'in'")?;
        let owner = p.expect_ident("a process name")?;
        pattern = Some(RawPattern::Timeout { timer, owner });
    } else if p.eat_word("discard") {
        let name = p.expect_ident("a signal or timer name")?;
        p.expect_word("by", "'by'")?;
        let by = p.expect_ident("a process name")?;
        pattern = Some(RawPattern::Discard { name, by });
    } else {
        preds.push(p.parse_expr()?);
    }
    if p.eat(&Tok::Comma) {
        preds.push(p.parse_expr()?);
    }
    let mut assigns = Vec::new();
    if p.eat(&Tok::LBrace) {
        loop {
            let apos = p.pos();
            if p.eat(&Tok::RBrace) {
                break;
            }
            let (var, _) = p.expect_ident("a variable name")?;
            p.expect(Tok::Assign, "':='")?;
            let e = p.parse_expr()?;
            p.expect(Tok::Semi, "';'")?;
            assigns.push((var, e, apos));
        }
    }
    let cut = p.eat_word("cut");
    p.expect(Tok::Arrow, "'->'")?;
    let target = p.expect_ident("a state name")?;
    p.expect(Tok::Semi, "';'")?;
    Ok(RawObsTrans { pos, pattern, preds, assigns, cut, target })
}

fn lower_observer(raw: &RawObserver, sys: &SystemDef) -> Result<ObserverDef, Vec<Diagnostic>> {
    let mut low = Low { diags: Vec::new() };
    let locals = lower_vars(&raw.vars, &mut low);

    let mut states: Vec<ObsState> = Vec::new();
    for st in &raw.states {
        if states.iter().any(|s| s.name == st.name) {
            low.err(st.pos, format!("duplicate state '{}'", st.name));
            continue;
        }
        states.push(ObsState { name: st.name.clone(), kind: st.kind });
    }
    let find = |n: &str| states.iter().position(|s| s.name == n).map(ObsStateId);

    let initial = {
        let (iname, ipos) = raw.initial.as_ref().expect("parser guarantees an initial");
        match find(iname) {
            Some(i) => i,
            None => {
                low.err(*ipos, format!("observer {} has no state '{iname}'", raw.name));
                ObsStateId(0)
            }
        }
    };
    if !states.iter().any(|s| matches!(s.kind, StateKind::Success | StateKind::Error)) {
        low.err(
            raw.pos,
            format!("observer {} needs at least one success or error state", raw.name),
        );
    }

    let mut transitions = Vec::new();
    for st in &raw.states {
        let Some(from) = find(&st.name) else { continue };
        if !st.trans.is_empty() && st.kind != StateKind::Regular {
            low.err(
                st.trans[0].pos,
                format!("state '{}' is absorbing and cannot have outgoing transitions", st.name),
            );
        }
        for tr in &st.trans {
            let mut bindings: Vec<(String, DataType)> = Vec::new();
            let bind_payload = |sig: crate::model::SigId,
                                    sname: &str,
                                    spos: Pos,
                                    bind: &Option<String>,
                                    bindings: &mut Vec<(String, DataType)>,
                                    low: &mut Low| {
                if let Some(b) = bind {
                    match &sys.signal(sig).payload {
                        Some(ty) => bindings.push((b.clone(), ty.clone())),
                        None => low.err(spos, format!("signal {sname} has no payload to bind")),
                    }
                }
            };
            let pattern = match &tr.pattern {
                None => None,
                Some(RawPattern::Output { signal: (s, spos), from: (f, fpos), to, bind }) => {
                    let Some(sig) = sys.find_signal(s) else {
                        low.err(*spos, format!("unresolved signal '{s}'"));
                        continue;
                    };
                    let Some(fp) = sys.find_process(f) else {
                        low.err(*fpos, format!("unresolved process '{f}'"));
                        continue;
                    };
                    let top = match to {
                        None => None,
                        Some((t, tpos)) => match sys.find_process(t) {
                            Some(tp) => Some(tp),
                            None => {
                                low.err(*tpos, format!("unresolved process '{t}'"));
                                continue;
                            }
                        },
                    };
                    bind_payload(sig, s, *spos, bind, &mut bindings, &mut low);
                    Some(EventPattern::Output { signal: sig, from: fp, to: top, bind: bind.clone() })
                }
                Some(RawPattern::Input { signal: (s, spos), by: (b, bpos), bind }) => {
                    let Some(sig) = sys.find_signal(s) else {
                        low.err(*spos, format!("unresolved signal '{s}'"));
                        continue;
                    };
                    let Some(bp) = sys.find_process(b) else {
                        low.err(*bpos, format!("unresolved process '{b}'"));
                        continue;
                    };
                    bind_payload(sig, s, *spos, bind, &mut bindings, &mut low);
                    Some(EventPattern::Input { signal: sig, by: bp, bind: bind.clone() })
                }
                Some(RawPattern::Timeout { timer: (t, tpos), owner: (o, opos) }) => {
                    let Some(op) = sys.find_process(o) else {
                        low.err(*opos, format!("unresolved process '{o}'"));
                        continue;
                    };
                    let Some(tid) = sys.process(op).find_timer(t) else {
                        low.err(*tpos, format!("process {o} has no timer '{t}'"));
                        continue;
                    };
                    Some(EventPattern::TimeoutExpiry { timer: tid, owner: op })
                }
                Some(RawPattern::Discard { name: (n, npos), by: (b, bpos) }) => {
                    let Some(bp) = sys.find_process(b) else {
                        low.err(*bpos, format!("unresolved process '{b}'"));
                        continue;
                    };
                    if let Some(sig) = sys.find_signal(n) {
                        Some(EventPattern::DiscardSignal { signal: sig, by: bp })
                    } else if let Some(tid) = sys.process(bp).find_timer(n) {
                        Some(EventPattern::DiscardTimer { timer: tid, by: bp })
                    } else {
                        low.err(*npos, format!("no signal or timer named '{n}'"));
                        continue;
                    }
                }
            };

            let scope = ExprScope { sys, locals: &locals, bindings: &bindings, allow_remote: true };
            let guard = if tr.preds.is_empty() {
                None
            } else {
                let mut it = tr.preds.iter();
                let mut g = it.next().expect("non-empty").clone();
                for more in it {
                    g = RawExpr::binary(BinOp::And, g, more.clone());
                }
                match lower_expr(&g, Some(&Ty::Bool), &scope) {
                    Ok((e, Ty::Bool)) => Some(e),
                    Ok((_, ty)) => {
                        low.err(tr.pos, format!("guard has type {}, expected Bool", ty.name()));
                        None
                    }
                    Err(msg) => {
                        low.err(tr.pos, msg);
                        None
                    }
                }
            };

            let mut assigns = Vec::new();
            for (var, e, apos) in &tr.assigns {
                let Some(vi) = locals.iter().position(|v| &v.name == var) else {
                    low.err(*apos, format!("observer {} has no variable '{var}'", raw.name));
                    continue;
                };
                let want = locals[vi].ty.ty();
                match lower_expr(e, Some(&want), &scope) {
                    Ok((e, t)) if t == want => assigns.push((VarId(vi), e)),
                    Ok((_, t)) => low.err(
                        *apos,
                        format!(
                            "assignment to '{var}' has type {}, expected {}",
                            t.name(),
                            want.name()
                        ),
                    ),
                    Err(msg) => low.err(*apos, msg),
                }
            }

            let Some(target) = find(&tr.target.0) else {
                low.err(
                    tr.target.1,
                    format!("observer {} has no state '{}'", raw.name, tr.target.0),
                );
                continue;
            };
            transitions.push(ObsTransition { from, pattern, guard, assigns, cut: tr.cut, target });
        }
    }

    if !low.diags.is_empty() {
        return Err(low.diags);
    }
    let obs = ObserverDef {
        name: raw.name.clone(),
        locals,
        states,
        initial,
        extra_initial: vec![],
        transitions,
        powerset: false,
    };
    let residual = validate_observer(&obs, sys);
    if !residual.is_empty() {
        return Err(residual);
    }
    Ok(obs)
}

/// Parse an observer definition and resolve it against `sys`. On success
/// the result passes [`validate_observer`].
pub fn parse_observer(text: &str, sys: &SystemDef) -> Result<ObserverDef, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let raw = parse_observer_raw(&mut p).map_err(|d| vec![d])?;
    lower_observer(&raw, sys)
}

// ----- msc syntax ------------------------------------------------------------

struct RawMsc {
    name: String,
    header: (MscMode, bool, bool, Polarity),
    instances: Vec<(String, Pos)>,
    rows: Vec<RawMscRow>,
}

struct RawMscRow {
    from: (String, Pos),
    to: (String, Pos),
    signal: String,
    bind: Option<String>,
    guard: Option<RawExpr>,
    pos: Pos,
}

/// Read one annotation word; a `-` joins words only when written without
/// spaces, so `from-start` is one word but `from - start` is not.
fn annotation_word(p: &mut Parser) -> PResult<(String, Pos)> {
    if !matches!(p.peek(), Tok::Word(_)) {
        return err_at(p.pos(), format!("expected an annotation word, found {}", p.peek()));
    }
    let t = p.advance();
    let Tok::Word(mut w) = t.tok else { unreachable!() };
    let mut end = t.end_col;
    while p.peek() == &Tok::Minus && p.cur().pos.line == t.pos.line && p.cur().pos.col == end {
        let m = p.advance();
        let joins = matches!(p.peek(), Tok::Word(_))
            && p.cur().pos.line == t.pos.line
            && p.cur().pos.col == m.end_col;
        if !joins {
            return err_at(m.pos, "'-' in an annotation word must join two words without spaces");
        }
        let nt = p.advance();
        let Tok::Word(nw) = nt.tok else { unreachable!() };
        w.push('-');
        w.push_str(&nw);
        end = nt.end_col;
    }
    Ok((w, t.pos))
}

fn parse_annotation(p: &mut Parser) -> PResult<(MscMode, bool, bool, Polarity)> {
    let (mw, mpos) = annotation_word(p)?;
    let mode = match mw.as_str() {
        "search" => MscMode::Search,
        "verify" => MscMode::Verify,
        _ => return err_at(mpos, format!("expected 'search' or 'verify', found '{mw}'")),
    };
    let mut from_start = false;
    let mut nonstrict = false;
    loop {
        if p.peek() == &Tok::Semi {
            return err_at(p.pos(), "expected 'intended' or 'unintended'");
        }
        let (w, wpos) = annotation_word(p)?;
        match w.as_str() {
            "from-start" => {
                if from_start {
                    return err_at(wpos, "duplicate annotation 'from-start'");
                }
                from_start = true;
            }
            "nonstrict" => {
                if mode == MscMode::Verify {
                    return err_at(wpos, "verify does not allow nonstrict");
                }
                if nonstrict {
                    return err_at(wpos, "duplicate annotation 'nonstrict'");
                }
                nonstrict = true;
            }
            "intended" => return Ok((mode, from_start, nonstrict, Polarity::Intended)),
            "unintended" => {
                if mode == MscMode::Verify {
                    return err_at(wpos, "verify requires intended");
                }
                return Ok((mode, from_start, nonstrict, Polarity::Unintended));
            }
            _ => return err_at(wpos, format!("unknown annotation '{w}'")),
        }
    }
}

fn parse_msc_raw(p: &mut Parser) -> PResult<RawMsc> {
    p.expect_word("msc", "'msc'")?;
    let (name, _) = p.expect_ident("an msc name")?;
    p.expect(Tok::Semi, "';'")?;
    p.expect_word("property", "'property'")?;
    p.expect_word("type", "'type'")?;
    p.expect(Tok::Colon, "':'")?;
    let header = parse_annotation(p)?;
    p.expect(Tok::Semi, "';'")?;
    p.expect_word("inst", "'inst'")?;
    let mut instances = vec![p.expect_ident("an instance name")?];
    while p.eat(&Tok::Comma) {
        instances.push(p.expect_ident("an instance name")?);
    }
    p.expect(Tok::Semi, "';'")?;

    let mut rows = Vec::new();
    while !p.at_word("endmsc") {
        if p.peek() == &Tok::Eof {
            return err_at(p.pos(), "expected a message row or 'endmsc', found end of input");
        }
        let pos = p.pos();
        let from = p.expect_ident("an instance name")?;
        p.expect(Tok::Arrow, "'->'")?;
        let to = p.expect_ident("an instance name")?;
        p.expect(Tok::Colon, "':'")?;
        let (signal, _) = p.expect_ident("a signal name")?;
        let bind = parse_opt_bind(p)?;
        let guard = if p.eat_word("when") { Some(p.parse_expr()?) } else { None };
        p.expect(Tok::Semi, "';'")?;
        rows.push(RawMscRow { from, to, signal, bind, guard, pos });
    }
    let endpos = p.advance().pos;
    p.expect(Tok::Semi, "';'")?;
    if p.peek() != &Tok::Eof {
        return err_at(p.pos(), format!("expected end of input, found {}", p.peek()));
    }
    if rows.is_empty() {
        return err_at(endpos, "an msc needs at least one message row");
    }
    Ok(RawMsc { name, header, instances, rows })
}

fn lower_msc(raw: &RawMsc) -> Result<MscProperty, Vec<Diagnostic>> {
    let mut low = Low { diags: Vec::new() };
    let mut instances: Vec<String> = Vec::new();
    for (n, pos) in &raw.instances {
        if instances.contains(n) {
            low.err(*pos, format!("duplicate instance {n}"));
        } else {
            instances.push(n.clone());
        }
    }
    let mut seen_binds: Vec<&str> = Vec::new();
    let mut rows = Vec::new();
    for (ri, row) in raw.rows.iter().enumerate() {
        let from = instances.iter().position(|i| *i == row.from.0);
        if from.is_none() {
            low.err(row.from.1, format!("row {}: '{}' is not a declared instance", ri + 1, row.from.0));
        }
        let to = instances.iter().position(|i| *i == row.to.0);
        if to.is_none() {
            low.err(row.to.1, format!("row {}: '{}' is not a declared instance", ri + 1, row.to.0));
        }
        let (Some(from), Some(to)) = (from, to) else { continue };
        if from == to {
            low.err(
                row.pos,
                format!("row {}: a message cannot go from {} to itself", ri + 1, row.from.0),
            );
        }
        if let Some(b) = &row.bind {
            if seen_binds.contains(&b.as_str()) {
                low.err(
                    row.pos,
                    format!("row {}: binding '{b}' is already bound by an earlier row", ri + 1),
                );
            }
            seen_binds.push(b);
        }
        rows.push(MscRow {
            from,
            to,
            signal: row.signal.clone(),
            bind: row.bind.clone(),
            guard: row.guard.clone(),
        });
    }
    if !low.diags.is_empty() {
        return Err(low.diags);
    }
    let (mode, from_start, nonstrict, polarity) = raw.header;
    let prop = MscProperty {
        name: raw.name.clone(),
        mode,
        from_start,
        nonstrict,
        polarity,
        instances,
        rows,
    };
    let residual = validate_msc(&prop);
    if !residual.is_empty() {
        return Err(residual);
    }
    Ok(prop)
}

/// Parse an MSC property file. Instance and signal names stay unresolved
/// (see [`crate::msc::resolve_msc`]); the annotation and row shape are
/// checked here, so the result passes [`validate_msc`].
pub fn parse_msc(text: &str) -> Result<MscProperty, Vec<Diagnostic>> {
    let mut p = Parser::new(text).map_err(|d| vec![d])?;
    let raw = parse_msc_raw(&mut p).map_err(|d| vec![d])?;
    lower_msc(&raw)
}
