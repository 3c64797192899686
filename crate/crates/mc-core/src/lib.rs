//! An explicit-state model checker for systems of asynchronously
//! communicating extended state machines.
//!
//! Processes own bounded FIFO queues and step atomically (trigger plus all
//! actions). Safety properties are expressed as Boolean stop conditions,
//! hand-written observers, or annotated message sequence charts compiled to
//! observers; violations come back as replayable traces renderable in a
//! fixed textual MSC format.

pub mod ast;
pub mod diag;
pub mod explore;
pub mod lexer;
pub mod model;
pub mod msc;
pub mod observer;
pub mod oracle;
pub mod parse;
pub mod pretty;
pub mod report;
pub mod semantics;
pub mod trace;

pub use diag::{Diagnostic, Pos, Severity};
pub use model::{
    validate_system, value_conforms, Action, BinOp, DataType, Expr, LocId, ProcId, ProcessDef,
    SigId, Signal, SystemDef, TimerId, TransId, Transition, Trigger, Ty, UnOp, Value, VarDecl,
    VarId, DEFAULT_QUEUE_CAPACITY,
};
pub use ast::{lower_expr, raw_to_string, ExprScope, RawExpr};
pub use parse::{parse_msc, parse_observer, parse_raw_expr, parse_system};
pub use pretty::{bsc_template, datatype_str, print_observer, print_obs_transition, print_system};
pub use report::{build_report, render_report, ReportDoc};
pub use explore::{
    encode_global, encode_product, explore, random_walk, render_state, state_digest, CheckMode,
    ExploreError, ExploreReport, ExplorerConfig, GlobalStats, LimitHit, Outcome, PropertySpec,
    PropertyStats, PropertyVerdict, Trace, NO_OVERFLOW,
};
pub use oracle::{brute_force, BruteForce};
pub use trace::{
    parse_msc_document, replay_trace, trace_events, trace_to_msc, MscDocument, MscEvent, Replay,
};
pub use msc::{
    compile_msc, reference_match, resolve_msc, validate_msc, MatchOutcome, MscMode, MscProperty,
    MscRow, Polarity, ResolvedMsc, ResolvedRow, VerdictMode,
};
pub use observer::{
    initial_probe_event, make_bsc_observer, observer_init, observer_step, validate_observer,
    EventPattern, ObsState, ObsStateId, ObsTransition, ObserverConfig, ObserverDef,
    ObserverOutcome, StateKind,
};
pub use semantics::{
    enabled_moves, enabled_moves_restricted, eval_expr, fire, initial_state, EnvRestrictions,
    EvalCtx, EvalError, FireError, GlobalState, Move, OutputEvent, ProcessState, QueueItem,
    StepEvent, StepKind,
};
