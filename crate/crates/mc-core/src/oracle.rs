//! Naive reference enumerator for cross-checking the explorer.
//!
//! This module intentionally shares nothing with the explorer's machinery:
//! no digests, no canonical byte encoding, no parent links, no freezing.
//! States are keyed by their `Debug` rendering, the worklist is a plain
//! queue, and every product state is expanded until exhaustion or the
//! `cap` safety bound. Tests compare the explorer's state counts, verdict
//! reachability, and shortest-violation depths against these results.

use std::collections::{HashMap, VecDeque};

use crate::observer::{
    initial_probe_event, observer_init, observer_step, ObserverConfig, ObserverDef, StateKind,
};
use crate::semantics::{
    enabled_moves_restricted, fire, initial_state, EnvRestrictions, FireError, GlobalState,
};

/// Everything the naive enumeration learns about a system–observer product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForce {
    /// Number of distinct reachable product states (cut successors excluded).
    pub states: usize,
    /// States with no enabled move at all.
    pub deadlocks: usize,
    /// Per observer: is a state with an error classification reachable?
    pub error_reachable: Vec<bool>,
    /// Per observer: is a state with a success classification reachable?
    pub success_reachable: Vec<bool>,
    /// Per observer: least depth (in moves) of an error classification.
    pub min_error_depth: Vec<Option<usize>>,
    /// Per observer: least depth (in moves) of a success classification.
    pub min_success_depth: Vec<Option<usize>>,
    /// Did any state have a move whose firing overflowed a queue?
    pub overflow_reachable: bool,
    /// True if the enumeration hit `cap` before exhausting the space.
    pub truncated: bool,
}

/// Breadth-first enumeration of the full product space.
///
/// Panics on evaluation errors (the models fed to the oracle keep
/// expressions total); queue overflows are recorded, their moves simply
/// produce no successor.
pub fn brute_force(
    sys: &crate::model::SystemDef,
    observers: &[ObserverDef],
    restrictions: &EnvRestrictions,
    cap: usize,
) -> BruteForce {
    let n = observers.len();
    let mut out = BruteForce {
        states: 0,
        deadlocks: 0,
        error_reachable: vec![false; n],
        success_reachable: vec![false; n],
        min_error_depth: vec![None; n],
        min_success_depth: vec![None; n],
        overflow_reachable: false,
        truncated: false,
    };

    // A product state classifies and possibly prunes at discovery time.
    let classify = |out: &mut BruteForce, cfgs_after: &[(ObserverConfig, StateKind, bool)], depth: usize| -> bool {
        if cfgs_after.iter().any(|(_, _, cut)| *cut) {
            return true;
        }
        for (i, (_, kind, _)) in cfgs_after.iter().enumerate() {
            match kind {
                StateKind::Error => {
                    out.error_reachable[i] = true;
                    if out.min_error_depth[i].is_none() {
                        out.min_error_depth[i] = Some(depth);
                    }
                }
                StateKind::Success => {
                    out.success_reachable[i] = true;
                    if out.min_success_depth[i].is_none() {
                        out.min_success_depth[i] = Some(depth);
                    }
                }
                StateKind::Regular => {}
            }
        }
        false
    };

    let g0 = initial_state(sys);
    let probe = initial_probe_event();
    let mut init_cfgs = Vec::new();
    for obs in observers {
        let cfg = observer_init(obs);
        let o = observer_step(obs, &cfg, &g0, &probe).expect("oracle observer step");
        init_cfgs.push((o.next, o.classification, o.cut));
    }
    if classify(&mut out, &init_cfgs, 0) {
        return out; // initial state pruned by a cut
    }
    let init_cfgs: Vec<ObserverConfig> = init_cfgs.into_iter().map(|(c, _, _)| c).collect();

    let mut seen: HashMap<String, ()> = HashMap::new();
    let mut work: VecDeque<(GlobalState, Vec<ObserverConfig>, usize)> = VecDeque::new();
    seen.insert(format!("{:?}{:?}", g0, init_cfgs), ());
    work.push_back((g0, init_cfgs, 0));
    out.states = 1;

    while let Some((g, cfgs, depth)) = work.pop_front() {
        let moves = enabled_moves_restricted(sys, &g, restrictions).expect("oracle moves");
        if moves.is_empty() {
            out.deadlocks += 1;
            continue;
        }
        for m in &moves {
            let (g2, ev) = match fire(sys, &g, m) {
                Ok(x) => x,
                Err(FireError::QueueOverflow { .. }) => {
                    out.overflow_reachable = true;
                    continue;
                }
                Err(e) => panic!("oracle fire: {e}"),
            };
            let mut stepped = Vec::new();
            for (obs, cfg) in observers.iter().zip(&cfgs) {
                let o = observer_step(obs, cfg, &g2, &ev).expect("oracle observer step");
                stepped.push((o.next, o.classification, o.cut));
            }
            if classify(&mut out, &stepped, depth + 1) {
                continue; // cut: successor discarded before anything else
            }
            let cfgs2: Vec<ObserverConfig> = stepped.into_iter().map(|(c, _, _)| c).collect();
            let key = format!("{:?}{:?}", g2, cfgs2);
            if seen.contains_key(&key) {
                continue;
            }
            seen.insert(key, ());
            out.states += 1;
            if out.states >= cap {
                out.truncated = true;
                return out;
            }
            work.push_back((g2, cfgs2, depth + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    /// One process walks a 3-location chain; 3 states, final is a deadlock.
    fn chain() -> SystemDef {
        let step = |from: usize, to: usize| {
            Transition::new(LocId(from), Trigger::Spontaneous, None, vec![], LocId(to))
        };
        SystemDef {
            name: "chain".into(),
            signals: vec![],
            processes: vec![ProcessDef {
                name: "p".into(),
                is_env: false,
                queue_capacity: None,
                vars: vec![],
                timers: vec![],
                locations: vec!["a".into(), "b".into(), "c".into()],
                initial: LocId(0),
                transitions: vec![step(0, 1), step(1, 2)],
                emits: vec![],
            }],
            default_queue_capacity: DEFAULT_QUEUE_CAPACITY,
        }
    }

    #[test]
    fn chain_counts_by_hand() {
        let sys = chain();
        let r = brute_force(&sys, &[], &EnvRestrictions::default(), 1000);
        assert_eq!(r.states, 3);
        assert_eq!(r.deadlocks, 1);
        assert!(!r.overflow_reachable);
        assert!(!r.truncated);
    }

    #[test]
    fn cap_truncates() {
        let sys = chain();
        let r = brute_force(&sys, &[], &EnvRestrictions::default(), 2);
        assert!(r.truncated);
        assert_eq!(r.states, 2);
    }
}
