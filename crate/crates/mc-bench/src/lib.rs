//! Model text generators shared by the benchmarks.

/// A unidirectional token ring with `n` nodes. Every node injects one token;
/// tokens hop until their counter reaches `m`, and each hop folds the counter
/// into a per-node checksum so that interleavings stay distinguishable. The
/// state space grows steeply with `n` and `m`, which makes the family useful
/// for scaling measurements.
pub fn ring(n: usize, m: i64, queue: u32, fold: i64) -> String {
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

/// A producer/worker/collector chain with `n` workers, used to measure
/// parsing and validation on realistically shaped sources.
pub fn chain(n: usize, dom: i64) -> String {
    let mut out = format!("system chain{n};\n\nsignal job(Int 0..{dom});\nsignal done;\n");
    out.push_str("\nenv process feeder {\n  emits job;\n}\n");
    for i in 0..n {
        out.push_str(&format!(
            "\nprocess worker{i} queue 2 {{\n  var seen: Int 0..{dom} := 0;\n\n  state busy {{\n    on input job(x) when x > seen {{ seen := x; output done to collector; }} -> busy;\n    on input job(x) when x <= seen {{ }} -> busy;\n  }}\n\n  initial busy;\n}}\n"
        ));
    }
    out.push_str(&format!(
        "\nprocess collector {{\n  var count: Int 0..{cap} := 0;\n\n  state tally {{\n    on input done when count < {cap} {{ count := count + 1; }} -> tally;\n    on input done when count >= {cap} {{ }} -> tally;\n  }}\n\n  initial tally;\n}}\n",
        cap = n * 4
    ));
    out
}
