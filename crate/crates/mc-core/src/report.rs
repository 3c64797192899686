//! The JSON check report written by `mc check --report`.
//!
//! Field order is fixed by the struct declarations, so two runs over the
//! same inputs render byte-identical documents once `elapsed_ms` is held
//! constant (it is the only timing-dependent field).

use serde::{Deserialize, Serialize};

use crate::explore::{ExploreReport, ExplorerConfig};
use crate::model::SystemDef;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub system: String,
    pub config: ReportConfig,
    pub properties: Vec<ReportProperty>,
    pub global: ReportGlobal,
}

/// The effective exploration configuration, echoed for reproducibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub order: String,
    pub max_states: u64,
    pub max_depth: u64,
    pub max_traces: u64,
    pub queue_capacity: u32,
    pub stop_on_first_violation: bool,
    /// Canonical `proc.signal=v1,v2` lines, sorted.
    pub env_restrictions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportProperty {
    pub name: String,
    pub mode: String,
    pub outcome: String,
    /// Trace file names, relative to the traces directory.
    pub traces: Vec<String>,
    pub stats: ReportStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportStats {
    pub states_explored: u64,
    pub transitions_fired: u64,
    pub peak_depth: u64,
    /// Which limits ended the search before this property resolved;
    /// empty when none did.
    pub limit_hit: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportGlobal {
    pub states_explored: u64,
    pub deadlocks: u64,
    pub elapsed_ms: u64,
}

/// Assemble the report document. `trace_files` holds, per property (in
/// report order), the names of the trace files written for it.
pub fn build_report(
    sys: &SystemDef,
    cfg: &ExplorerConfig,
    result: &ExploreReport,
    trace_files: &[Vec<String>],
    elapsed_ms: u64,
) -> ReportDoc {
    let env_restrictions = cfg
        .env_restrictions
        .entries()
        .into_iter()
        .map(|((proc, sig), values)| {
            let signal = sys.signal(sig);
            let ty = signal.payload.as_ref().expect("restricted signals carry payloads");
            let vals: Vec<String> = values.iter().map(|v| v.display(ty)).collect();
            format!("{}.{}={}", sys.process(proc).name, signal.name, vals.join(","))
        })
        .collect();
    let properties = result
        .properties
        .iter()
        .enumerate()
        .map(|(i, p)| ReportProperty {
            name: p.name.clone(),
            mode: p.mode.as_str().to_string(),
            outcome: p.outcome.as_str().to_string(),
            traces: trace_files.get(i).cloned().unwrap_or_default(),
            stats: ReportStats {
                states_explored: p.stats.states_explored,
                transitions_fired: p.stats.transitions_fired,
                peak_depth: p.stats.peak_depth,
                limit_hit: p
                    .stats
                    .limit_hit
                    .map(|l| l.labels().into_iter().map(str::to_string).collect())
                    .unwrap_or_default(),
            },
            detail: p.detail.clone(),
        })
        .collect();
    ReportDoc {
        system: sys.name.clone(),
        config: ReportConfig {
            order: if cfg.bfs { "bfs" } else { "dfs" }.to_string(),
            max_states: cfg.max_states as u64,
            max_depth: cfg.max_depth as u64,
            max_traces: cfg.max_traces as u64,
            queue_capacity: sys.default_queue_capacity,
            stop_on_first_violation: cfg.stop_on_first_violation,
            env_restrictions,
        },
        properties,
        global: ReportGlobal {
            states_explored: result.global.states_explored,
            deadlocks: result.global.deadlocks,
            elapsed_ms,
        },
    }
}

/// Render the document as pretty-printed JSON with a trailing newline.
pub fn render_report(doc: &ReportDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serialization cannot fail");
    s.push('\n');
    s
}
