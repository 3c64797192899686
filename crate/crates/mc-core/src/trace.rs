//! Diagnostic-trace tooling: rendering a [`Trace`] as a textual message
//! sequence chart, parsing that text back (a minimal reader used to verify
//! round-trips), and validating traces by guided replay.
//!
//! The chart grammar is this tool's own fixed convention and is emitted
//! byte-stably: UTF-8, LF line endings, no trailing whitespace. Message
//! ids are assigned in emission order starting at 1, so every `in` or
//! `discard` id refers to an earlier `out` line.

use std::collections::VecDeque;

use crate::explore::{PropertySpec, Trace};
use crate::model::{SystemDef, Value};
use crate::observer::{initial_probe_event, observer_init, observer_step, StateKind};
use crate::semantics::{fire, initial_state, QueueItem, StepKind};

/// One chart event, in document order. `step` is the 1-based index of the
/// trace step that produced the event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MscEvent {
    Out { signal: String, msgid: u64, from: String, to: String, value: Option<String>, step: usize },
    In { signal: String, msgid: u64, by: String, from: String, value: Option<String>, step: usize },
    Timeout { timer: String, proc: String, step: usize },
    DiscardMsg { signal: String, msgid: u64, by: String, step: usize },
    DiscardTimer { timer: String, by: String, step: usize },
}

impl MscEvent {
    pub fn step(&self) -> usize {
        match self {
            MscEvent::Out { step, .. }
            | MscEvent::In { step, .. }
            | MscEvent::Timeout { step, .. }
            | MscEvent::DiscardMsg { step, .. }
            | MscEvent::DiscardTimer { step, .. } => *step,
        }
    }

    fn line(&self) -> String {
        let val = |v: &Option<String>| match v {
            Some(v) => format!(" ({v})"),
            None => String::new(),
        };
        match self {
            MscEvent::Out { signal, msgid, from, to, value, step } => {
                format!("out {signal},{msgid} from {from} to {to}{}; #{step}", val(value))
            }
            MscEvent::In { signal, msgid, by, from, value, step } => {
                format!("in {signal},{msgid} by {by} from {from}{}; #{step}", val(value))
            }
            MscEvent::Timeout { timer, proc, step } => {
                format!("timeout {timer} in {proc}; #{step}")
            }
            MscEvent::DiscardMsg { signal, msgid, by, step } => {
                format!("discard {signal},{msgid} by {by}; #{step}")
            }
            MscEvent::DiscardTimer { timer, by, step } => {
                format!("discard {timer} by {by}; #{step}")
            }
        }
    }
}

/// A parsed chart document (see [`parse_msc_document`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MscDocument {
    pub name: String,
    pub instances: Vec<String>,
    pub events: Vec<MscEvent>,
}

/// Compute the chart events of a trace. The trace must replay (it came out
/// of the explorer or a walk); message ids are tracked with shadow queues
/// that mirror the FIFO semantics.
pub fn trace_events(sys: &SystemDef, t: &Trace) -> Vec<MscEvent> {
    let pname = |p: crate::model::ProcId| sys.process(p).name.clone();
    let render = |sig: crate::model::SigId, v: &Option<Value>| {
        v.as_ref()
            .map(|v| v.display(sys.signal(sig).payload.as_ref().expect("payload type")).to_string())
    };

    // Shadow queue per process: msgid for signals, None for timeout items.
    let mut shadows: Vec<VecDeque<Option<u64>>> =
        sys.processes.iter().map(|_| VecDeque::new()).collect();
    let mut next_id: u64 = 0;
    let mut events = Vec::new();

    for (i, (_, ev)) in t.steps.iter().enumerate() {
        let step = i + 1;
        match &ev.kind {
            StepKind::Fired { proc, .. } => {
                if let Some(item) = &ev.consumed {
                    let id = shadows[proc.0].pop_front().expect("shadow queue underflow");
                    if let QueueItem::Signal { signal, payload, sender } = item {
                        events.push(MscEvent::In {
                            signal: sys.signal(*signal).name.clone(),
                            msgid: id.expect("signal without msgid"),
                            by: pname(*proc),
                            from: pname(*sender),
                            value: render(*signal, payload),
                            step,
                        });
                    }
                    // consuming a timeout item produces no line; its expiry
                    // was already rendered
                }
            }
            StepKind::Discarded { proc, item } => {
                let id = shadows[proc.0].pop_front().expect("shadow queue underflow");
                match item {
                    QueueItem::Signal { signal, .. } => events.push(MscEvent::DiscardMsg {
                        signal: sys.signal(*signal).name.clone(),
                        msgid: id.expect("signal without msgid"),
                        by: pname(*proc),
                        step,
                    }),
                    QueueItem::Timeout { timer } => events.push(MscEvent::DiscardTimer {
                        timer: sys.process(*proc).timers[timer.0].clone(),
                        by: pname(*proc),
                        step,
                    }),
                }
            }
            StepKind::TimeElapse => {
                for (proc, timer) in &ev.timeouts_enqueued {
                    events.push(MscEvent::Timeout {
                        timer: sys.process(*proc).timers[timer.0].clone(),
                        proc: pname(*proc),
                        step,
                    });
                    shadows[proc.0].push_back(None);
                }
            }
        }
        for out in &ev.outputs {
            next_id += 1;
            events.push(MscEvent::Out {
                signal: sys.signal(out.signal).name.clone(),
                msgid: next_id,
                from: pname(out.from),
                to: pname(out.to),
                value: render(out.signal, &out.payload),
                step,
            });
            shadows[out.to.0].push_back(Some(next_id));
        }
    }
    events
}

/// Render a trace as chart text: `msc` header, one `instance` line per
/// process in declaration order, the event lines, `endmsc;`.
pub fn trace_to_msc(sys: &SystemDef, t: &Trace, name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("msc {name};\n"));
    for p in &sys.processes {
        out.push_str(&format!("instance {};\n", p.name));
    }
    for ev in trace_events(sys, t) {
        out.push_str(&ev.line());
        out.push('\n');
    }
    out.push_str("endmsc;\n");
    out
}

/// Minimal reader for the chart text, strict about the emitted grammar.
/// Shipped as a test utility: round-trip tests check that parsing a
/// rendered trace reconstructs the exact event list.
pub fn parse_msc_document(text: &str) -> Result<MscDocument, String> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().ok_or("empty document")?.1;
    let name = header
        .strip_prefix("msc ")
        .and_then(|r| r.strip_suffix(';'))
        .ok_or_else(|| format!("bad header: {header}"))?
        .to_string();

    let mut instances = Vec::new();
    let mut events = Vec::new();
    let mut ended = false;
    for (ln, line) in lines {
        let err = |msg: &str| format!("line {}: {msg}: {line}", ln + 1);
        if ended {
            return Err(err("content after endmsc"));
        }
        if line == "endmsc;" {
            ended = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("instance ") {
            let inst = rest.strip_suffix(';').ok_or_else(|| err("missing ';'"))?;
            if !events.is_empty() {
                return Err(err("instance after events"));
            }
            instances.push(inst.to_string());
            continue;
        }
        // `<body>; #<step>`
        let (body, step) = line
            .rsplit_once("; #")
            .ok_or_else(|| err("missing step comment"))?;
        let step: usize = step.parse().map_err(|_| err("bad step index"))?;
        if let Some(last) = events.last() {
            if MscEvent::step(last) > step {
                return Err(err("step indices must not decrease"));
            }
        }
        let (value, body) = match body.strip_suffix(')') {
            Some(prefix) => {
                let (b, v) = prefix.rsplit_once(" (").ok_or_else(|| err("bad value"))?;
                (Some(v.to_string()), b)
            }
            None => (None, body),
        };
        let words: Vec<&str> = body.split(' ').collect();
        let sig_id = |w: &str| -> Result<(String, u64), String> {
            let (s, id) = w.split_once(',').ok_or_else(|| err("missing msgid"))?;
            Ok((s.to_string(), id.parse().map_err(|_| err("bad msgid"))?))
        };
        let ev = match words.as_slice() {
            ["out", si, "from", f, "to", t] => {
                let (signal, msgid) = sig_id(si)?;
                MscEvent::Out {
                    signal,
                    msgid,
                    from: f.to_string(),
                    to: t.to_string(),
                    value,
                    step,
                }
            }
            ["in", si, "by", b, "from", f] => {
                let (signal, msgid) = sig_id(si)?;
                MscEvent::In {
                    signal,
                    msgid,
                    by: b.to_string(),
                    from: f.to_string(),
                    value,
                    step,
                }
            }
            ["timeout", tmr, "in", p] if value.is_none() => MscEvent::Timeout {
                timer: tmr.to_string(),
                proc: p.to_string(),
                step,
            },
            ["discard", w, "by", b] if value.is_none() => {
                if w.contains(',') {
                    let (signal, msgid) = sig_id(w)?;
                    MscEvent::DiscardMsg { signal, msgid, by: b.to_string(), step }
                } else {
                    MscEvent::DiscardTimer { timer: w.to_string(), by: b.to_string(), step }
                }
            }
            _ => return Err(err("unrecognized event")),
        };
        events.push(ev);
    }
    if !ended {
        return Err("missing endmsc;".into());
    }
    Ok(MscDocument { name, instances, events })
}

/// Result of replaying a trace against a system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Replay {
    /// Every recorded event was reproduced; per-property classification
    /// after the final step (probe-only for empty traces).
    Ok { classifications: Vec<StateKind> },
    /// First step whose recomputed event (or firability) differs.
    Diverged { step: usize, expected: String, got: String },
}

/// Re-fire the trace's moves from the initial state, verify each recorded
/// event against the recomputed one, and report the observers' final
/// classifications for cross-checking a verdict.
pub fn replay_trace(sys: &SystemDef, t: &Trace, props: &[PropertySpec]) -> Replay {
    let mut g = initial_state(sys);
    let probe = initial_probe_event();
    let mut cfgs = Vec::with_capacity(props.len());
    let mut kinds = Vec::with_capacity(props.len());
    for p in props {
        match observer_step(&p.observer, &observer_init(&p.observer), &g, &probe) {
            Ok(o) => {
                kinds.push(o.classification);
                cfgs.push(o.next);
            }
            Err(e) => {
                return Replay::Diverged {
                    step: 0,
                    expected: "initial observer step".into(),
                    got: e.to_string(),
                }
            }
        }
    }
    for (i, (m, recorded)) in t.steps.iter().enumerate() {
        let step = i + 1;
        let (g2, ev) = match fire(sys, &g, m) {
            Ok(x) => x,
            Err(e) => {
                return Replay::Diverged {
                    step,
                    expected: format!("{recorded:?}"),
                    got: format!("move not firable: {e}"),
                }
            }
        };
        if &ev != recorded {
            return Replay::Diverged {
                step,
                expected: format!("{recorded:?}"),
                got: format!("{ev:?}"),
            };
        }
        for (j, p) in props.iter().enumerate() {
            match observer_step(&p.observer, &cfgs[j], &g2, &ev) {
                Ok(o) => {
                    kinds[j] = o.classification;
                    cfgs[j] = o.next;
                }
                Err(e) => {
                    return Replay::Diverged {
                        step,
                        expected: "observer step".into(),
                        got: e.to_string(),
                    }
                }
            }
        }
        g = g2;
    }
    Replay::Ok { classifications: kinds }
}
