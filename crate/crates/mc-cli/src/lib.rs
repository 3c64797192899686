//! Command-line front end for the model checker: argument parsing and
//! orchestration of the parse → compile → explore → emit pipeline.
//!
//! Subcommands:
//! - `mc check` explores a system against one or more property files,
//!   optionally writing a JSON report and diagnostic trace files;
//! - `mc bsc new` generates an observer file from a Boolean stop condition;
//! - `mc msc compile` compiles an annotated message sequence chart into its
//!   observer automaton and dumps it as JSON;
//! - `mc simulate` runs one seeded random walk and optionally renders it.
//!
//! Exit codes: 0 when every checked property holds (or its witness was
//! found); 1 when any property is violated (or a searched witness does not
//! exist); 2 when any property is inconclusive and none is worse; 3 for
//! unusable input — unknown flags, unreadable files, parse or validation
//! errors. The built-in overflow pseudo-property is reported but never
//! drives the exit code.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mc_core::{
    build_report, bsc_template, compile_msc, datatype_str, explore, parse_msc, parse_observer,
    parse_raw_expr, parse_system, print_obs_transition, random_walk, raw_to_string, render_report,
    trace_to_msc, CheckMode, DataType, Diagnostic, EnvRestrictions, ExplorerConfig, ObserverDef,
    Outcome, PropertySpec, RawExpr, StateKind, SystemDef, Value, NO_OVERFLOW,
};

/// Exit code for unusable input: bad flags, unreadable files, parse errors.
const EXIT_INPUT: i32 = 3;

#[derive(Parser)]
#[command(
    name = "mc",
    version,
    about = "Explicit-state model checker for communicating state machines"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Explore a system model and check properties against it.
    Check(CheckArgs),
    /// Boolean stop conditions.
    #[command(subcommand)]
    Bsc(BscCmd),
    /// Annotated message sequence charts.
    #[command(subcommand)]
    Msc(MscCmd),
    /// Run one seeded random walk through a system model.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// System model file.
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Property file (`.obs` observer or `.msc` chart); repeatable.
    #[arg(long = "property", value_name = "FILE", required = true)]
    property: Vec<PathBuf>,
    /// Stop exploring after this many distinct states.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    max_states: Option<u64>,
    /// Stop exploring beyond this depth.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: Option<u64>,
    /// Diagnostic traces kept per property.
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u64).range(1..))]
    max_traces: Option<u64>,
    /// Exploration order.
    #[arg(long, value_enum, default_value_t = Order::Bfs)]
    order: Order,
    /// Queue capacity for processes without their own `queue` clause.
    #[arg(long, value_name = "Q", value_parser = clap::value_parser!(u32).range(1..))]
    queue_capacity: Option<u32>,
    /// Narrow an environment stimulus domain: `proc.signal=v1,v2`; repeatable.
    #[arg(long = "env-restrict", value_name = "SPEC")]
    env_restrict: Vec<String>,
    /// Keep exploring after the first violation instead of stopping.
    #[arg(long)]
    all_violations: bool,
    /// Write a JSON report here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Write diagnostic traces into this directory.
    #[arg(long, value_name = "DIR")]
    traces_dir: Option<PathBuf>,
    /// Print per-property and global statistics.
    #[arg(long)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Order {
    Bfs,
    Dfs,
}

#[derive(Subcommand)]
enum BscCmd {
    /// Generate an observer file from a Boolean stop condition.
    New(BscNewArgs),
}

#[derive(Args)]
struct BscNewArgs {
    /// Observer name; a plain identifier.
    #[arg(long, value_name = "NAME")]
    name: String,
    /// Boolean expression over process variables, e.g. 'battery.lvl < 10'.
    #[arg(long, value_name = "EXPR")]
    condition: String,
    /// Output observer file.
    #[arg(short = 'o', value_name = "FILE")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MscCmd {
    /// Compile a chart against a system and dump the observer as JSON.
    Compile(MscCompileArgs),
}

#[derive(Args)]
struct MscCompileArgs {
    /// Chart property file.
    #[arg(value_name = "FILE")]
    file: PathBuf,
    /// System model the chart refers to.
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Output JSON file.
    #[arg(short = 'o', value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// System model file.
    #[arg(long, value_name = "FILE")]
    system: PathBuf,
    /// Number of steps to attempt.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// Random seed; equal seeds reproduce the walk exactly.
    #[arg(long, value_name = "S")]
    seed: u64,
    /// Render the walk as a trace file.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

/// Run the tool on `args` (without the program name) and return the exit
/// code for the process.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let argv = std::iter::once("mc".to_string()).chain(args);
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land on stdout and succeed; everything else
            // is a usage error. Nothing has been written at this point.
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Check(a) => cmd_check(a),
        Cmd::Bsc(BscCmd::New(a)) => cmd_bsc_new(a),
        Cmd::Msc(MscCmd::Compile(a)) => cmd_msc_compile(a),
        Cmd::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("{msg}");
            EXIT_INPUT
        }
    }
}

// ---------------------------------------------------------------------------
// Shared input handling

fn read_input(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("error: cannot read {}: {e}", path.display()))
}

fn write_output(path: &Path, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("error: cannot write {}: {e}", path.display()))
}

/// Prefix each diagnostic with the file it came from.
fn render_diags(path: &Path, diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| {
            if d.pos.is_some() {
                format!("{}:{d}", path.display())
            } else {
                format!("{}: {d}", path.display())
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn load_system(path: &Path) -> Result<SystemDef, String> {
    let text = read_input(path)?;
    parse_system(&text).map_err(|ds| render_diags(path, &ds))
}

/// Load one property file; the kind is inferred from the extension.
fn load_property(path: &Path, sys: &SystemDef) -> Result<PropertySpec, String> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "obs" => {
            let text = read_input(path)?;
            let observer = parse_observer(&text, sys).map_err(|ds| render_diags(path, &ds))?;
            Ok(PropertySpec { observer, mode: CheckMode::Safety })
        }
        "msc" => {
            let text = read_input(path)?;
            let prop = parse_msc(&text).map_err(|ds| render_diags(path, &ds))?;
            let (observer, mode) = compile_msc(&prop, sys).map_err(|ds| render_diags(path, &ds))?;
            Ok(PropertySpec { observer, mode: mode.into() })
        }
        _ => Err(format!(
            "error: {}: property files must have a .obs or .msc extension",
            path.display()
        )),
    }
}

/// Parse one `--env-restrict proc.signal=v1,v2` spec into `restrictions`.
fn apply_env_restrict(
    restrictions: &mut EnvRestrictions,
    sys: &SystemDef,
    spec: &str,
) -> Result<(), String> {
    let fail = |msg: String| format!("error: --env-restrict {spec}: {msg}");
    let (target, values) =
        spec.split_once('=').ok_or_else(|| fail("expected proc.signal=v1,v2,...".into()))?;
    let (proc_name, sig_name) =
        target.split_once('.').ok_or_else(|| fail("expected proc.signal=v1,v2,...".into()))?;
    let pid = sys
        .find_process(proc_name)
        .ok_or_else(|| fail(format!("no process named '{proc_name}'")))?;
    if !sys.process(pid).is_env {
        return Err(fail(format!("process '{proc_name}' is not an environment process")));
    }
    let sid = sys
        .find_signal(sig_name)
        .ok_or_else(|| fail(format!("no signal named '{sig_name}'")))?;
    if !sys.process(pid).emits.contains(&sid) {
        return Err(fail(format!("process '{proc_name}' does not emit '{sig_name}'")));
    }
    let ty = sys
        .signal(sid)
        .payload
        .as_ref()
        .ok_or_else(|| fail(format!("signal '{sig_name}' carries no payload")))?;
    if values.is_empty() {
        return Err(fail("at least one value is required".into()));
    }
    let mut parsed = Vec::new();
    for v in values.split(',') {
        parsed.push(parse_value(v.trim(), ty).map_err(&fail)?);
    }
    restrictions.restrict(pid, sid, parsed);
    Ok(())
}

fn parse_value(text: &str, ty: &DataType) -> Result<Value, String> {
    match ty {
        DataType::Bool => match text {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("'{text}' is not a Bool value")),
        },
        DataType::Int { min, max } => {
            let n: i64 = text.parse().map_err(|_| format!("'{text}' is not an integer"))?;
            if n < *min || n > *max {
                return Err(format!("value {n} is outside Int {min}..{max}"));
            }
            Ok(Value::Int(n))
        }
        DataType::Enum { literals } => literals
            .iter()
            .position(|l| l == text)
            .map(|i| Value::Enum(i as u16))
            .ok_or_else(|| format!("'{text}' is not a literal of the enum type")),
    }
}

// ---------------------------------------------------------------------------
// Interrupt handling

static INTERRUPT: OnceLock<Arc<AtomicBool>> = OnceLock::new();

extern "C" fn on_interrupt(_sig: libc::c_int) {
    if let Some(flag) = INTERRUPT.get() {
        flag.store(true, Ordering::Relaxed);
    }
}

/// Install a SIGINT handler (idempotently) that requests prompt termination;
/// the explorer then reports unresolved properties as inconclusive and the
/// partial report is still written.
fn interrupt_flag() -> Arc<AtomicBool> {
    let flag = INTERRUPT.get_or_init(|| Arc::new(AtomicBool::new(false)));
    unsafe {
        libc::signal(
            libc::SIGINT,
            on_interrupt as extern "C" fn(libc::c_int) as libc::sighandler_t,
        );
    }
    flag.clone()
}

// ---------------------------------------------------------------------------
// mc check

fn cmd_check(a: CheckArgs) -> Result<i32, String> {
    let start = Instant::now();
    let mut sys = load_system(&a.system)?;
    if let Some(q) = a.queue_capacity {
        sys.default_queue_capacity = q;
    }

    let mut props = Vec::new();
    for path in &a.property {
        props.push(load_property(path, &sys)?);
    }

    let mut cfg = ExplorerConfig::default();
    if let Some(n) = a.max_states {
        cfg.max_states = n as usize;
    }
    if let Some(n) = a.max_depth {
        cfg.max_depth = n as usize;
    }
    if let Some(n) = a.max_traces {
        cfg.max_traces = n as usize;
    }
    cfg.bfs = a.order == Order::Bfs;
    cfg.stop_on_first_violation = !a.all_violations;
    for spec in &a.env_restrict {
        apply_env_restrict(&mut cfg.env_restrictions, &sys, spec)?;
    }
    cfg.interrupt = Some(interrupt_flag());

    let result = explore(&sys, &props, &cfg).map_err(|e| format!("error: {e}"))?;

    // Diagnostic traces; the overflow pseudo-property gets none.
    let mut trace_files: Vec<Vec<String>> = vec![Vec::new(); result.properties.len()];
    if let Some(dir) = &a.traces_dir {
        fs::create_dir_all(dir)
            .map_err(|e| format!("error: cannot create {}: {e}", dir.display()))?;
        for (i, p) in result.properties.iter().enumerate() {
            if p.name == NO_OVERFLOW {
                continue;
            }
            for (k, t) in p.traces.iter().enumerate() {
                let file = format!("{}-{}.trace.msc", p.name, k + 1);
                let doc = trace_to_msc(&sys, t, &format!("{}_{}", p.name, k + 1));
                write_output(&dir.join(&file), &doc)?;
                trace_files[i].push(file);
            }
        }
    }

    for p in &result.properties {
        match &p.detail {
            Some(d) => println!("{}: {} ({d})", p.name, p.outcome.as_str()),
            None => println!("{}: {}", p.name, p.outcome.as_str()),
        }
        if a.verbose {
            let mut line = format!(
                "  states {}  transitions {}  depth {}",
                p.stats.states_explored, p.stats.transitions_fired, p.stats.peak_depth
            );
            if let Some(l) = p.stats.limit_hit {
                line.push_str(&format!("  limit {}", l.labels().join(",")));
            }
            println!("{line}");
        }
    }
    if a.verbose {
        let g = &result.global;
        let end = if g.interrupted {
            "interrupted"
        } else if g.exhausted {
            "exhausted"
        } else {
            "stopped early"
        };
        println!(
            "explored {} states, {} transitions, {} deadlocks, peak depth {} ({end})",
            g.states_explored, g.transitions_fired, g.deadlocks, g.peak_depth
        );
    }

    if let Some(path) = &a.report {
        let elapsed = start.elapsed().as_millis() as u64;
        let doc = build_report(&sys, &cfg, &result, &trace_files, elapsed);
        write_output(path, &render_report(&doc))?;
    }

    let mut any_bad = false;
    let mut any_open = false;
    for p in result.properties.iter().filter(|p| p.name != NO_OVERFLOW) {
        match p.outcome {
            Outcome::Violated | Outcome::NoWitness => any_bad = true,
            Outcome::Inconclusive => any_open = true,
            Outcome::Holds | Outcome::WitnessFound => {}
        }
    }
    Ok(if any_bad {
        1
    } else if any_open {
        2
    } else {
        0
    })
}

// ---------------------------------------------------------------------------
// mc bsc new

fn cmd_bsc_new(a: BscNewArgs) -> Result<i32, String> {
    match parse_raw_expr(&a.name) {
        Ok(RawExpr::Name(_)) => {}
        _ => return Err(format!("error: --name: '{}' is not a plain identifier", a.name)),
    }
    // Only the syntax can be validated here; types resolve against the
    // system the observer is eventually checked with.
    let cond = parse_raw_expr(&a.condition).map_err(|d| format!("--condition: {d}"))?;
    write_output(&a.out, &bsc_template(&a.name, &raw_to_string(&cond)))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// mc msc compile

fn cmd_msc_compile(a: MscCompileArgs) -> Result<i32, String> {
    let sys = load_system(&a.system)?;
    let text = read_input(&a.file)?;
    let prop = parse_msc(&text).map_err(|ds| render_diags(&a.file, &ds))?;
    let (obs, mode) = compile_msc(&prop, &sys).map_err(|ds| render_diags(&a.file, &ds))?;
    write_output(&a.out, &observer_json(&obs, mode.into(), &sys))?;
    Ok(0)
}

/// Render a compiled observer as JSON. Compiled automata have no DSL form
/// (the powerset flag and extra initial states do not round-trip), so the
/// dump lists states, initial set, locals, and one rule string per
/// transition.
fn observer_json(obs: &ObserverDef, mode: CheckMode, sys: &SystemDef) -> String {
    let states: Vec<serde_json::Value> = obs
        .states
        .iter()
        .map(|s| {
            serde_json::json!({
                "name": s.name,
                "kind": match s.kind {
                    StateKind::Regular => "regular",
                    StateKind::Success => "success",
                    StateKind::Error => "error",
                },
            })
        })
        .collect();
    let mut initial = vec![obs.states[obs.initial.0].name.clone()];
    for s in &obs.extra_initial {
        initial.push(obs.states[s.0].name.clone());
    }
    let locals: Vec<serde_json::Value> = obs
        .locals
        .iter()
        .map(|v| {
            serde_json::json!({
                "name": v.name,
                "type": datatype_str(&v.ty),
                "init": v.init.display(&v.ty),
            })
        })
        .collect();
    let transitions: Vec<serde_json::Value> = obs
        .transitions
        .iter()
        .map(|t| {
            serde_json::json!({
                "from": obs.states[t.from.0].name,
                "rule": print_obs_transition(t, obs, sys),
            })
        })
        .collect();
    let doc = serde_json::json!({
        "observer": obs.name,
        "mode": mode.as_str(),
        "powerset": obs.powerset,
        "initial": initial,
        "locals": locals,
        "states": states,
        "transitions": transitions,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("observer dump serializes");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// mc simulate

fn cmd_simulate(a: SimulateArgs) -> Result<i32, String> {
    let sys = load_system(&a.system)?;
    let cfg = ExplorerConfig::default();
    let walk = random_walk(&sys, &cfg, a.steps as usize, a.seed)
        .map_err(|e| format!("error: {e}"))?;
    println!("simulated {} of {} steps with seed {}", walk.steps.len(), a.steps, a.seed);
    if let Some(path) = &a.trace {
        let name = format!("{}_walk", sys.name);
        write_output(path, &trace_to_msc(&sys, &walk, &name))?;
    }
    Ok(0)
}
