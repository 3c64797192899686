//! End-to-end tests that drive the compiled `mc` binary against the
//! shipped model and property corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn mc<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("stderr is UTF-8")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("process exits normally")
}

#[test]
fn violated_bsc_exits_one_and_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let traces = dir.path().join("traces");
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        repo("props/low_battery.obs").as_os_str(),
        "--report".as_ref(),
        report.as_os_str(),
        "--traces-dir".as_ref(),
        traces.as_os_str(),
    ]);
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("low_battery: violated"));

    let trace = std::fs::read_to_string(traces.join("low_battery-1.trace.msc")).unwrap();
    assert!(trace.starts_with("msc low_battery_1;\ninstance ground;\n"));
    assert!(trace.ends_with("endmsc;\n"));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["system"], "battery_demo");
    assert_eq!(doc["properties"][0]["name"], "low_battery");
    assert_eq!(doc["properties"][0]["outcome"], "violated");
    assert_eq!(doc["properties"][0]["traces"][0], "low_battery-1.trace.msc");
}

#[test]
fn holding_bsc_exits_zero_even_when_overflow_is_reported() {
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        repo("props/never_negative.obs").as_os_str(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("never_negative: holds"));
    assert!(text.contains("no-overflow: violated"));
}

#[test]
fn chart_properties_are_selected_by_extension() {
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        repo("props/fdir_stops.msc").as_os_str(),
        "--property".as_ref(),
        repo("props/stop_sent.msc").as_os_str(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("fdir_stops: holds"));
    assert!(text.contains("stop_sent: witness-found"));
}

#[test]
fn state_limit_forces_inconclusive_and_exit_two() {
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        repo("props/low_battery.obs").as_os_str(),
        "--max-states".as_ref(),
        "5".as_ref(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("low_battery: inconclusive"));
}

#[test]
fn unknown_flags_fail_without_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let traces = dir.path().join("traces");
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        repo("props/low_battery.obs").as_os_str(),
        "--report".as_ref(),
        report.as_os_str(),
        "--traces-dir".as_ref(),
        traces.as_os_str(),
        "--frobnicate".as_ref(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("--frobnicate"));
    assert!(!report.exists());
    assert!(!traces.exists());
}

#[test]
fn unreadable_and_malformed_inputs_exit_three() {
    let out = mc(&["check", "--system", "missing.sys", "--property", "missing.obs"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("cannot read"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sys");
    std::fs::write(&bad, "system s;\nprocess p {\n  bogus\n").unwrap();
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        bad.as_os_str(),
        "--property".as_ref(),
        repo("props/low_battery.obs").as_os_str(),
    ]);
    assert_eq!(code(&out), 3);
    let err = stderr(&out);
    assert!(err.contains("bad.sys:3:3: error:"), "{err}");

    let txt = dir.path().join("prop.txt");
    std::fs::write(&txt, "whatever").unwrap();
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        txt.as_os_str(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains(".obs or .msc"));
}

#[test]
fn observer_that_does_not_fit_the_system_exits_three() {
    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/ping_pong.sys").as_os_str(),
        "--property".as_ref(),
        repo("props/low_battery.obs").as_os_str(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("low_battery.obs:"));
}

#[test]
fn reports_are_reproducible_modulo_elapsed_time() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> serde_json::Value {
        let report = dir.path().join(name);
        let out = mc(&[
            "check".as_ref(),
            "--system".as_ref(),
            repo("models/battery_demo.sys").as_os_str(),
            "--property".as_ref(),
            repo("props/low_battery.obs").as_os_str(),
            "--property".as_ref(),
            repo("props/stop_sent.msc").as_os_str(),
            "--all-violations".as_ref(),
            "--report".as_ref(),
            report.as_os_str(),
        ]);
        assert_eq!(code(&out), 1);
        let mut doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        doc["global"]["elapsed_ms"] = 0.into();
        doc
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn env_restriction_never_grows_the_state_space() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("demo.sys");
    std::fs::write(
        &model,
        "system demo;\nsignal level(Int 0..3);\nenv process g {\n  emits level;\n}\nprocess p {\n  var seen: Int 0..3 := 0;\n  state run {\n    on input level(x) { seen := x; } -> run;\n  }\n  initial run;\n}\n",
    )
    .unwrap();
    let prop = dir.path().join("never.obs");
    std::fs::write(&prop, "observer never;\n\nstate watch {\n  when p.seen < 0 -> err;\n}\nstate err kind error;\n\ninitial watch;\n").unwrap();

    let states = |restrict: Option<&str>| -> u64 {
        let report = dir.path().join("r.json");
        let mut args: Vec<std::ffi::OsString> = vec![
            "check".into(),
            "--system".into(),
            model.as_os_str().into(),
            "--property".into(),
            prop.as_os_str().into(),
            "--report".into(),
            report.as_os_str().into(),
        ];
        if let Some(r) = restrict {
            args.push("--env-restrict".into());
            args.push(r.into());
        }
        let out = mc(&args);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        doc["global"]["states_explored"].as_u64().unwrap()
    };

    let full = states(None);
    let narrowed = states(Some("g.level=0,2"));
    let single = states(Some("g.level=1"));
    assert!(narrowed <= full, "narrowed {narrowed} > full {full}");
    assert!(single <= narrowed, "single {single} > narrowed {narrowed}");
}

#[test]
fn bad_env_restrict_specs_exit_three() {
    for (spec, needle) in [
        ("battery.tick=1", "not an environment process"),
        ("ground.tick=1", "carries no payload"),
        ("ground.level=1", "does not emit"),
        ("ground=1", "expected proc.signal"),
    ] {
        let out = mc(&[
            "check".as_ref(),
            "--system".as_ref(),
            repo("models/battery_demo.sys").as_os_str(),
            "--property".as_ref(),
            repo("props/low_battery.obs").as_os_str(),
            "--env-restrict".as_ref(),
            spec.as_ref(),
        ]);
        assert_eq!(code(&out), 3, "{spec}");
        assert!(stderr(&out).contains(needle), "{spec}: {}", stderr(&out));
    }
}

#[test]
fn bsc_new_generates_an_observer_the_checker_accepts() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("deep.obs");
    let out = mc(&[
        "bsc".as_ref(),
        "new".as_ref(),
        "--name".as_ref(),
        "deep_discharge".as_ref(),
        "--condition".as_ref(),
        "battery.lvl < 10".as_ref(),
        "-o".as_ref(),
        obs.as_os_str(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = std::fs::read_to_string(&obs).unwrap();
    assert_eq!(
        text,
        "observer deep_discharge;\n\nstate watch {\n  when battery.lvl < 10 -> err;\n}\nstate err kind error;\n\ninitial watch;\n"
    );

    let out = mc(&[
        "check".as_ref(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "--property".as_ref(),
        obs.as_os_str(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("deep_discharge: violated"));
}

#[test]
fn bsc_new_rejects_bad_names_and_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("x.obs");
    for (name, cond) in [("2fast", "x < 1"), ("state", "x < 1"), ("ok_name", "x <"), ("ok_name", "x < 1 1")] {
        let out = mc(&[
            "bsc".as_ref(),
            "new".as_ref(),
            "--name".as_ref(),
            name.as_ref(),
            "--condition".as_ref(),
            cond.as_ref(),
            "-o".as_ref(),
            obs.as_os_str(),
        ]);
        assert_eq!(code(&out), 3, "{name} / {cond}");
        assert!(!obs.exists());
    }
}

#[test]
fn msc_compile_dumps_the_observer_automaton() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("fdir.json");
    let out = mc(&[
        "msc".as_ref(),
        "compile".as_ref(),
        repo("props/fdir_stops.msc").as_os_str(),
        "--system".as_ref(),
        repo("models/battery_demo.sys").as_os_str(),
        "-o".as_ref(),
        json.as_os_str(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc["observer"], "fdir_stops");
    assert_eq!(doc["mode"], "forall-prefix");
    assert_eq!(doc["powerset"], true);
    assert_eq!(doc["initial"][0], "idle");
    assert_eq!(doc["initial"][1], "s0");
    assert!(doc["transitions"].as_array().unwrap().len() >= 4);

    let out = mc(&[
        "msc".as_ref(),
        "compile".as_ref(),
        repo("props/fdir_stops.msc").as_os_str(),
        "--system".as_ref(),
        repo("models/ping_pong.sys").as_os_str(),
        "-o".as_ref(),
        json.as_os_str(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("fdir_stops.msc:"));
}

#[test]
fn simulate_is_reproducible_and_renders_a_parsable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.trace.msc");
    let b = dir.path().join("b.trace.msc");
    let run = |path: &Path| -> String {
        let out = mc(&[
            "simulate".as_ref(),
            "--system".as_ref(),
            repo("models/token_ring.sys").as_os_str(),
            "--steps".as_ref(),
            "25".as_ref(),
            "--seed".as_ref(),
            "42".as_ref(),
            "--trace".as_ref(),
            path.as_os_str(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        stdout(&out)
    };
    let out_a = run(&a);
    let out_b = run(&b);
    assert_eq!(out_a, out_b);
    assert!(out_a.starts_with("simulated "));
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());

    let doc = mc_core::parse_msc_document(std::str::from_utf8(&bytes_a).unwrap()).unwrap();
    assert_eq!(doc.name, "token_ring_walk");
    assert_eq!(doc.instances, vec!["n0", "n1", "n2"]);
}

/// A ring model big enough that exploration takes several seconds, for the
/// interrupt test.
fn slow_ring_model() -> String {
    let n = 5;
    let m = 12;
    let mut out = format!("system slow_ring;\n\nsignal token(Int 0..{m});\n");
    for i in 0..n {
        let next = (i + 1) % n;
        out.push_str(&format!(
            "\nprocess node{i} queue 2 {{\n  var sum: Int 0..15 := 0;\n  var fired: Int 0..1 := 0;\n\n  state relay {{\n    on spontaneous when fired = 0 {{ fired := 1; output token(0) to node{next}; }} -> relay;\n    on input token(t) when t < {m} {{ sum := (sum + t + 1) mod 16; output token(t + 1) to node{next}; }} -> relay;\n    on input token(t) when t >= {m} {{ sum := (sum + t + 1) mod 16; }} -> relay;\n  }}\n\n  initial relay;\n}}\n"
        ));
    }
    out
}

#[test]
fn sigint_terminates_promptly_with_a_partial_inconclusive_report() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("slow.sys");
    std::fs::write(&model, slow_ring_model()).unwrap();
    let prop = dir.path().join("quiet.obs");
    std::fs::write(&prop, "observer quiet;\n\nstate watch {\n  when node0.sum < 0 -> err;\n}\nstate err kind error;\n\ninitial watch;\n").unwrap();
    let report = dir.path().join("report.json");

    let child = Command::new(env!("CARGO_BIN_EXE_mc"))
        .args([
            "check".as_ref(),
            "--system".as_ref(),
            model.as_os_str(),
            "--property".as_ref(),
            prop.as_os_str(),
            "--max-states".as_ref(),
            "50000000".as_ref(),
            "--report".as_ref(),
            report.as_os_str(),
        ])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn mc");
    std::thread::sleep(std::time::Duration::from_millis(700));
    unsafe {
        libc::kill(child.id() as libc::pid_t, libc::SIGINT);
    }
    let start = std::time::Instant::now();
    let out = child.wait_with_output().expect("child exits");
    assert!(start.elapsed().as_secs() < 10, "termination was not prompt");
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("quiet: inconclusive"));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["properties"][0]["outcome"], "inconclusive");
    let limits = doc["properties"][0]["stats"]["limit_hit"].as_array().unwrap();
    assert!(limits.iter().any(|l| l == "interrupted"), "{limits:?}");
    assert!(doc["global"]["states_explored"].as_u64().unwrap() > 0);
}
