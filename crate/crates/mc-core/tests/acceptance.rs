//! Acceptance gate: one test per shipped acceptance criterion. Each test
//! prints a single synopsis line on success; a failing assertion names the
//! criterion it belongs to.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mc_core::observer::config_at;
use mc_core::{
    brute_force, compile_msc, explore, lower_expr, make_bsc_observer, parse_msc, parse_observer,
    parse_raw_expr, parse_system, reference_match, replay_trace, resolve_msc, trace_to_msc,
    CheckMode, EnvRestrictions, ExploreReport, ExplorerConfig, ExprScope, MatchOutcome,
    ObserverConfig, ObserverDef, Outcome, OutputEvent, PropertySpec, QueueItem, Replay,
    ResolvedMsc, StateKind, StepEvent, StepKind, SystemDef, TransId, Ty, Value, NO_OVERFLOW,
};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn load_sys(rel: &str) -> SystemDef {
    let text = std::fs::read_to_string(repo(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"));
    parse_system(&text).unwrap_or_else(|e| panic!("{rel}: {e:?}"))
}

/// Boolean stop condition as a safety property.
fn bsc(sys: &SystemDef, name: &str, cond: &str) -> PropertySpec {
    let raw = parse_raw_expr(cond).unwrap_or_else(|e| panic!("{cond}: {e}"));
    let scope = ExprScope { sys, locals: &[], bindings: &[], allow_remote: true };
    let (e, ty) = lower_expr(&raw, Some(&Ty::Bool), &scope).unwrap_or_else(|e| panic!("{cond}: {e}"));
    assert_eq!(ty, Ty::Bool, "{cond}");
    PropertySpec { observer: make_bsc_observer(name, e), mode: CheckMode::Safety }
}

fn obs_file(sys: &SystemDef, rel: &str) -> PropertySpec {
    let text = std::fs::read_to_string(repo(rel)).unwrap();
    let observer = parse_observer(&text, sys).unwrap_or_else(|e| panic!("{rel}: {e:?}"));
    PropertySpec { observer, mode: CheckMode::Safety }
}

fn msc_text(sys: &SystemDef, text: &str) -> PropertySpec {
    let prop = parse_msc(text).unwrap_or_else(|e| panic!("{e:?}"));
    let (observer, mode) = compile_msc(&prop, sys).unwrap_or_else(|e| panic!("{e:?}"));
    PropertySpec { observer, mode: mode.into() }
}

fn msc_file(sys: &SystemDef, rel: &str) -> PropertySpec {
    msc_text(sys, &std::fs::read_to_string(repo(rel)).unwrap())
}

/// Exhaustive exploration (no early stop), BFS.
fn exhaustive(sys: &SystemDef, props: &[PropertySpec]) -> ExploreReport {
    let cfg = ExplorerConfig { stop_on_first_violation: false, ..ExplorerConfig::default() };
    explore(sys, props, &cfg).expect("exploration succeeds")
}

fn outcome_of(report: &ExploreReport, name: &str) -> Outcome {
    report
        .properties
        .iter()
        .find(|p| p.name == name)
        .unwrap_or_else(|| panic!("no verdict for {name}"))
        .outcome
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_oracle_equivalence_on_desk_scale_models() {
    // (model, properties): every pair is compared against the naive
    // enumerator on state count, deadlocks, per-property reachability,
    // shortest violation depth, and overflow reachability.
    let cases: Vec<(&str, Vec<(&str, &str)>)> = vec![
        ("models/ping_pong.sys", vec![("left_waits", "left@wait"), ("never", "false")]),
        ("models/battery_demo.sys", vec![("low_battery", "battery.lvl < 10"), ("never_negative", "battery.lvl < 0")]),
        ("models/token_ring.sys", vec![("ring_closed", "n1.seen = 7"), ("n0_high", "n0.seen > 6")]),
        ("models/overflow_demo.sys", vec![("sink_off", "sink@off")]),
        ("models/timer_demo.sys", vec![("wrapped", "clock.n >= 2")]),
    ];
    for (model, conds) in &cases {
        let t0 = Instant::now();
        let sys = load_sys(model);
        let mut props: Vec<PropertySpec> =
            conds.iter().map(|(n, c)| bsc(&sys, n, c)).collect();
        if *model == "models/timer_demo.sys" {
            // Exercise the timeout event pattern through both engines.
            props.push(obs_from_text(
                &sys,
                "observer expiry;\nstate watch {\n  when timeout t in clock -> seen;\n}\nstate seen kind error;\ninitial watch;\n",
            ));
        }

        let observers: Vec<ObserverDef> = props.iter().map(|p| p.observer.clone()).collect();
        let oracle = brute_force(&sys, &observers, &EnvRestrictions::default(), 20_000);
        assert!(!oracle.truncated, "{model}: oracle truncated");
        assert!(oracle.states <= 10_000, "{model}: {} states", oracle.states);

        let report = exhaustive(&sys, &props);
        assert!(report.global.exhausted, "{model}");
        assert_eq!(report.global.states_explored, oracle.states as u64, "{model}: states");
        assert_eq!(report.global.deadlocks, oracle.deadlocks as u64, "{model}: deadlocks");
        assert_eq!(
            report.properties.iter().any(|p| p.name == NO_OVERFLOW),
            oracle.overflow_reachable,
            "{model}: overflow"
        );
        for (i, p) in props.iter().enumerate() {
            let name = &p.observer.name;
            let verdict = &report.properties[i];
            assert_eq!(verdict.name, *name);
            let expected = if oracle.error_reachable[i] { Outcome::Violated } else { Outcome::Holds };
            assert_eq!(verdict.outcome, expected, "{model}/{name}");
            if expected == Outcome::Violated {
                assert_eq!(
                    verdict.traces[0].steps.len(),
                    oracle.min_error_depth[i].unwrap(),
                    "{model}/{name}: shortest depth"
                );
            }
        }
        let elapsed = t0.elapsed();
        assert!(elapsed.as_secs() < 10, "{model}: took {elapsed:?}");
    }
    println!("criterion 1 (oracle equivalence): PASS — 5 models matched the naive enumerator");
}

fn obs_from_text(sys: &SystemDef, text: &str) -> PropertySpec {
    let observer = parse_observer(text, sys).unwrap_or_else(|e| panic!("{e:?}"));
    PropertySpec { observer, mode: CheckMode::Safety }
}

#[test]
fn criterion_2_battery_stop_condition_scenario() {
    let sys = load_sys("models/battery_demo.sys");
    let low = bsc(&sys, "low_battery", "battery.lvl < 10");
    let report = explore(&sys, &[low.clone()], &ExplorerConfig::default()).unwrap();
    assert_eq!(report.properties[0].outcome, Outcome::Violated);

    let battery = sys.find_process("battery").unwrap();
    let tick = sys.find_signal("tick").unwrap();
    let trace = &report.properties[0].traces[0];
    let drains = trace
        .steps
        .iter()
        .filter(|(_, ev)| {
            matches!(&ev.kind, StepKind::Fired { proc, .. } if *proc == battery)
                && matches!(&ev.consumed, Some(QueueItem::Signal { signal, .. }) if *signal == tick)
        })
        .count();
    assert_eq!(drains, 13, "expected exactly 13 battery tick consumptions");

    // The oracle confirms the trace is a shortest violation.
    let oracle =
        brute_force(&sys, &[low.observer.clone()], &EnvRestrictions::default(), 20_000);
    assert_eq!(trace.steps.len(), oracle.min_error_depth[0].unwrap());

    let report = exhaustive(&sys, &[bsc(&sys, "never_negative", "battery.lvl < 0")]);
    assert_eq!(report.properties[0].outcome, Outcome::Holds);
    println!("criterion 2 (battery scenario): PASS — violated in 13 drains, lvl < 0 holds");
}

/// The ten valid annotation headers with a battery chart and its expected
/// verdict, as exercised in criterion 3.
fn header_table() -> Vec<(&'static str, &'static str, Outcome)> {
    vec![
        ("search intended", "fdir -> battery : stop;", Outcome::WitnessFound),
        ("search unintended", "battery -> fdir : level(x) when x < 10;", Outcome::Violated),
        ("search from-start intended", "battery -> fdir : level(x) when x > 90;", Outcome::WitnessFound),
        ("search from-start unintended", "battery -> fdir : level(x) when x < 90;", Outcome::Holds),
        (
            "search nonstrict intended",
            "battery -> fdir : level(x) when x < 15;\nfdir -> battery : stop;",
            Outcome::WitnessFound,
        ),
        (
            "search nonstrict unintended",
            "battery -> fdir : level(x) when x >= 15;\nbattery -> fdir : level(y) when y < 10;",
            Outcome::Violated,
        ),
        (
            "search from-start nonstrict intended",
            "battery -> fdir : level(x) when x > 90;\nfdir -> battery : stop;",
            Outcome::WitnessFound,
        ),
        (
            "search from-start nonstrict unintended",
            "battery -> fdir : level(x) when x > 90;\nfdir -> battery : stop;",
            Outcome::Violated,
        ),
        (
            "verify intended",
            "battery -> fdir : level(x) when x < 15;\nfdir -> battery : stop;",
            Outcome::Holds,
        ),
        ("verify from-start intended", "battery -> fdir : level(x) when x < 90;", Outcome::Violated),
    ]
}

fn chart(header: &str, rows: &str) -> String {
    format!("msc c;\nproperty type: {header};\ninst battery, fdir;\n{rows}\nendmsc;\n")
}

#[test]
fn criterion_3_annotation_coverage() {
    // All ten valid headers parse with the right flags.
    let flags = [
        ("search intended", false, false, false),
        ("search unintended", false, false, true),
        ("search from-start intended", true, false, false),
        ("search from-start unintended", true, false, true),
        ("search nonstrict intended", false, true, false),
        ("search nonstrict unintended", false, true, true),
        ("search from-start nonstrict intended", true, true, false),
        ("search from-start nonstrict unintended", true, true, true),
        ("verify intended", false, false, false),
        ("verify from-start intended", true, false, false),
    ];
    for (header, from_start, nonstrict, unintended) in flags {
        let p = parse_msc(&chart(header, "battery -> fdir : level;"))
            .unwrap_or_else(|e| panic!("{header}: {e:?}"));
        assert_eq!(p.from_start, from_start, "{header}");
        assert_eq!(p.nonstrict, nonstrict, "{header}");
        assert_eq!(p.polarity == mc_core::Polarity::Unintended, unintended, "{header}");
    }
    // Invalid combinations are rejected.
    for (header, needle) in [
        ("verify unintended", "verify requires intended"),
        ("verify nonstrict intended", "verify does not allow nonstrict"),
        ("verify from-start unintended", "verify requires intended"),
        ("check intended", "expected 'search' or 'verify'"),
        ("search from-start from-start intended", "duplicate annotation"),
        ("search from - start intended", "unknown annotation 'from'"),
        ("search", "expected 'intended' or 'unintended'"),
    ] {
        let err = parse_msc(&chart(header, "battery -> fdir : level;"))
            .expect_err(header)
            .iter()
            .map(|d| d.to_string())
            .collect::<String>();
        assert!(err.contains(needle), "{header}: {err}");
    }

    // Every header has a model/property pair exercising its verdict path,
    // and all five outcomes appear across the criterion.
    let sys = load_sys("models/battery_demo.sys");
    let mut seen = HashSet::new();
    for (header, rows, expected) in header_table() {
        let prop = msc_text(&sys, &chart(header, rows));
        let report = exhaustive(&sys, &[prop]);
        assert_eq!(report.properties[0].outcome, expected, "{header}");
        seen.insert(expected);
    }
    // no-witness: the searched response never happens on the mutated model.
    let broken = load_sys("defects/battery_missing_response.sys");
    let report = exhaustive(&broken, &[msc_text(&broken, &chart("search intended", "fdir -> battery : stop;"))]);
    assert_eq!(report.properties[0].outcome, Outcome::NoWitness);
    seen.insert(Outcome::NoWitness);
    // inconclusive: a state limit cuts the search short.
    let cfg = ExplorerConfig { max_states: 5, ..ExplorerConfig::default() };
    let report = explore(&sys, &[bsc(&sys, "low", "battery.lvl < 10")], &cfg).unwrap();
    assert_eq!(report.properties[0].outcome, Outcome::Inconclusive);
    assert!(report.properties[0].stats.limit_hit.unwrap().states);
    seen.insert(Outcome::Inconclusive);

    for o in [
        Outcome::WitnessFound,
        Outcome::NoWitness,
        Outcome::Violated,
        Outcome::Holds,
        Outcome::Inconclusive,
    ] {
        assert!(seen.contains(&o), "outcome {o:?} never exercised");
    }
    println!("criterion 3 (annotation coverage): PASS — 10 headers, 5 verdict paths");
}

// ---------------------------------------------------------------------------
// Criterion 4: compiled observer vs the automaton-free reference matcher.

/// Feed one send event per step through a compiled (powerset) observer.
fn drive_observer(obs: &ObserverDef, sys: &SystemDef, events: &[OutputEvent]) -> ObserverConfig {
    let g = mc_core::initial_state(sys);
    let mut cfg = mc_core::observer_init(obs);
    for e in events {
        let step = StepEvent {
            kind: StepKind::Fired { proc: e.from, trans: TransId(0) },
            consumed: None,
            outputs: vec![e.clone()],
            timeouts_enqueued: vec![],
        };
        cfg = mc_core::observer_step(obs, &cfg, &g, &step).unwrap().next;
    }
    cfg
}

/// Interpret a compiled observer's thread set as a match outcome.
fn observer_outcome(obs: &ObserverDef, r: &ResolvedMsc, cfg: &ObserverConfig) -> MatchOutcome {
    let terminal = format!("s{}", r.rows.len());
    if config_at(obs, cfg, &terminal) {
        return MatchOutcome::Complete;
    }
    if r.from_start {
        if let (Some(dev), ObserverConfig::Powerset { threads }) =
            (obs.find_state("deviate"), cfg)
        {
            if threads.iter().all(|(s, _)| *s == dev) {
                return MatchOutcome::Deviated;
            }
        }
    }
    MatchOutcome::Pending
}

#[test]
fn criterion_4_chart_compilation_agrees_with_the_reference_matcher() {
    let sys = load_sys("models/battery_demo.sys");
    let battery = sys.find_process("battery").unwrap();
    let fdir = sys.find_process("fdir").unwrap();
    let ground = sys.find_process("ground").unwrap();
    let level = sys.find_signal("level").unwrap();
    let stop = sys.find_signal("stop").unwrap();
    let tick = sys.find_signal("tick").unwrap();

    let mut charts: Vec<String> = vec![
        std::fs::read_to_string(repo("props/fdir_stops.msc")).unwrap(),
        std::fs::read_to_string(repo("props/stop_sent.msc")).unwrap(),
        std::fs::read_to_string(repo("props/stop_above_five.msc")).unwrap(),
    ];
    for (header, rows, _) in header_table() {
        charts.push(chart(header, rows));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE57);
    let mut sequences = 0u64;
    for text in &charts {
        let prop = parse_msc(text).unwrap();
        let resolved = resolve_msc(&prop, &sys).unwrap();
        let (obs, _) = compile_msc(&prop, &sys).unwrap();
        for _ in 0..10_000 {
            let len = rng.random_range(0..=10);
            let events: Vec<OutputEvent> = (0..len)
                .map(|_| match rng.random_range(0..4) {
                    0 | 1 => OutputEvent {
                        signal: level,
                        payload: Some(Value::Int(rng.random_range(0..=100))),
                        from: battery,
                        to: fdir,
                    },
                    2 => OutputEvent { signal: stop, payload: None, from: fdir, to: battery },
                    // Third-party noise the chart must ignore.
                    _ => OutputEvent { signal: tick, payload: None, from: ground, to: battery },
                })
                .collect();
            let want = reference_match(&resolved, &events);
            let got = observer_outcome(&obs, &resolved, &drive_observer(&obs, &sys, &events));
            assert_eq!(got, want, "{}: {events:?}", prop.name);
            sequences += 1;
        }
    }
    println!(
        "criterion 4 (chart fidelity): PASS — {sequences} random sequences, zero disagreements"
    );
}

#[test]
fn criterion_5_injected_defect_verdict_tables_match_the_golden_file() {
    let models = [
        "models/battery_demo.sys",
        "defects/battery_missing_response.sys",
        "defects/battery_wrong_threshold.sys",
        "defects/battery_swapped_destination.sys",
    ];
    let obs_props = ["low_battery", "never_negative", "stopped_reached", "stop_emitted"];
    let msc_props = ["fdir_stops", "stop_sent", "stop_above_five"];

    let mut table = String::from(
        "model\tlow_battery\tnever_negative\tstopped_reached\tstop_emitted\tfdir_stops\tstop_sent\tstop_above_five\n",
    );
    for model in models {
        let sys = load_sys(model);
        let mut props = Vec::new();
        for name in obs_props {
            props.push(obs_file(&sys, &format!("props/{name}.obs")));
        }
        for name in msc_props {
            props.push(msc_file(&sys, &format!("props/{name}.msc")));
        }
        let report = exhaustive(&sys, &props);
        table.push_str(&sys.name);
        for name in obs_props.iter().chain(msc_props.iter()) {
            table.push('\t');
            table.push_str(outcome_of(&report, name).as_str());
        }
        table.push('\n');
    }

    let golden = std::fs::read_to_string(repo("defects/verdicts.golden")).unwrap();
    assert_eq!(table, golden, "verdict table drifted from defects/verdicts.golden");
    println!("criterion 5 (injected defects): PASS — 4 models x 7 properties match the golden table");
}

#[test]
fn criterion_6_trace_integrity_and_report_determinism() {
    // Gather traces from a spread of models and properties.
    let mut replayed = 0usize;
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("models/battery_demo.sys", vec!["low_battery", "stopped_reached", "stop_emitted"]),
        ("defects/battery_wrong_threshold.sys", vec!["low_battery", "stop_emitted"]),
    ];
    for (model, names) in runs {
        let sys = load_sys(model);
        let props: Vec<PropertySpec> =
            names.iter().map(|n| obs_file(&sys, &format!("props/{n}.obs"))).collect();
        let cfg = ExplorerConfig {
            stop_on_first_violation: false,
            max_traces: 2,
            ..ExplorerConfig::default()
        };
        let report = explore(&sys, &props, &cfg).unwrap();
        for (i, verdict) in report.properties.iter().enumerate() {
            for trace in &verdict.traces {
                if verdict.name == NO_OVERFLOW {
                    continue; // overflow traces replay up to the defect, not into it
                }
                let replay = replay_trace(&sys, trace, std::slice::from_ref(&props[i]));
                let Replay::Ok { classifications } = replay else {
                    panic!("{model}/{}: trace diverged: {replay:?}", verdict.name);
                };
                assert_eq!(
                    classifications[0],
                    StateKind::Error,
                    "{model}/{}: final classification",
                    verdict.name
                );
                replayed += 1;
            }
        }
    }
    // Chart witnesses replay too.
    let sys = load_sys("models/battery_demo.sys");
    let stop_sent = msc_file(&sys, "props/stop_sent.msc");
    let report = explore(&sys, std::slice::from_ref(&stop_sent), &ExplorerConfig::default()).unwrap();
    let witness = &report.properties[0].traces[0];
    let Replay::Ok { classifications } = replay_trace(&sys, witness, std::slice::from_ref(&stop_sent))
    else {
        panic!("witness trace diverged");
    };
    assert_eq!(classifications[0], StateKind::Success);
    replayed += 1;

    // Golden renderings, byte for byte.
    assert_eq!(
        trace_to_msc(&sys, witness, "stop_sent_1"),
        include_str!("golden/stop_sent.trace.msc"),
        "stop_sent witness rendering drifted"
    );
    let low = explore(&sys, &[obs_file(&sys, "props/low_battery.obs")], &ExplorerConfig::default())
        .unwrap();
    assert_eq!(
        trace_to_msc(&sys, &low.properties[0].traces[0], "low_battery_1"),
        include_str!("golden/low_battery.trace.msc"),
        "low_battery trace rendering drifted"
    );

    // Reports are byte-identical across runs once elapsed time is pinned.
    let props = vec![
        obs_file(&sys, "props/low_battery.obs"),
        msc_file(&sys, "props/stop_sent.msc"),
        msc_file(&sys, "props/fdir_stops.msc"),
    ];
    let cfg = ExplorerConfig { stop_on_first_violation: false, ..ExplorerConfig::default() };
    let render = || {
        let r = explore(&sys, &props, &cfg).unwrap();
        mc_core::render_report(&mc_core::build_report(&sys, &cfg, &r, &[], 0))
    };
    assert_eq!(render(), render(), "reports differ across runs");

    println!("criterion 6 (trace integrity): PASS — {replayed} traces replayed, goldens matched");
}

#[test]
fn criterion_7_cut_soundness() {
    let sys = load_sys("models/battery_demo.sys");
    let cfg = ExplorerConfig {
        stop_on_first_violation: false,
        collect_system_states: true,
        ..ExplorerConfig::default()
    };
    let with_cut = explore(&sys, &[obs_file(&sys, "props/stop_cut.obs")], &cfg).unwrap();
    let without = explore(&sys, &[], &cfg).unwrap();
    assert_eq!(with_cut.properties[0].outcome, Outcome::Holds);

    let pruned: HashSet<Vec<u8>> = with_cut.system_states.unwrap().into_iter().collect();
    let full: HashSet<Vec<u8>> = without.system_states.unwrap().into_iter().collect();
    assert!(pruned.is_subset(&full), "cut exploration reached states the full one did not");
    assert!(
        pruned.len() < full.len(),
        "the cut should actually prune here ({} vs {})",
        pruned.len(),
        full.len()
    );
    println!(
        "criterion 7 (cut soundness): PASS — {} cut states ⊆ {} full states",
        pruned.len(),
        full.len()
    );
}

/// Parameterized ring used for the performance smoke test: `n` nodes each
/// inject one token; tokens hop until their counter reaches `m`, and every
/// hop folds into a checksum, so interleavings do not collapse.
fn ring_model(n: usize, m: i64, queue: u32, fold: i64) -> String {
    let mut out = format!("system ring{n}x{m};\n\nsignal token(Int 0..{m});\n");
    for i in 0..n {
        let next = (i + 1) % n;
        out.push_str(&format!(
            "\nprocess node{i} queue {queue} {{\n  var sum: Int 0..{max} := 0;\n  var fired: Int 0..1 := 0;\n\n  state relay {{\n    on spontaneous when fired = 0 {{ fired := 1; output token(0) to node{next}; }} -> relay;\n    on input token(t) when t < {m} {{ sum := (sum + t + 1) mod {fold}; output token(t + 1) to node{next}; }} -> relay;\n    on input token(t) when t >= {m} {{ sum := (sum + t + 1) mod {fold}; }} -> relay;\n  }}\n\n  initial relay;\n}}\n",
            max = fold - 1
        ));
    }
    out
}

fn peak_rss_bytes() -> u64 {
    let status = std::fs::read_to_string("/proc/self/status").unwrap_or_default();
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches(" kB").trim().parse().unwrap_or(0);
            return kb * 1024;
        }
    }
    0
}

#[test]
fn criterion_8_desk_scale_performance() {
    let sys = parse_system(&ring_model(5, 12, 2, 16)).unwrap();
    let quiet = bsc(&sys, "quiet", "node0.sum < 0");
    let cfg = ExplorerConfig {
        max_states: 20_000_000,
        stop_on_first_violation: false,
        ..ExplorerConfig::default()
    };
    let t0 = Instant::now();
    let report = explore(&sys, &[quiet], &cfg).unwrap();
    let elapsed = t0.elapsed();

    assert!(report.global.exhausted, "exploration did not exhaust");
    assert!(
        report.global.states_explored >= 1_000_000,
        "only {} states",
        report.global.states_explored
    );
    assert_eq!(report.properties[0].outcome, Outcome::Holds);
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}");
    let rss = peak_rss_bytes();
    assert!(rss < 4 << 30, "peak RSS {} bytes", rss);
    println!(
        "criterion 8 (performance): PASS — {} states exhausted in {:.1}s, peak RSS {} MiB",
        report.global.states_explored,
        elapsed.as_secs_f64(),
        rss >> 20
    );
}
