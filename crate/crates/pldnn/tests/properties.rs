//! Randomized invariants, complementing the targeted unit tests.

use std::collections::BTreeSet;

use num_rational::Ratio;
use proptest::prelude::*;

use pldnn::learning::{observe_transition, train, Mode, Transition};
use pldnn::network::Network;
use pldnn::persist;
use pldnn::reasoning::{reason_step_deterministic, reason_step_probabilistic, Event};
use pldnn::rules;

const POOL: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Tri-state choice per pool label: positive, negative, or absent.
fn event_strategy() -> impl Strategy<Value = Event> {
    proptest::collection::vec(0..3u8, POOL.len()).prop_map(|choices| {
        let mut pos = BTreeSet::new();
        let mut neg = BTreeSet::new();
        for (label, choice) in POOL.iter().zip(choices) {
            match choice {
                0 => {
                    pos.insert(label.to_string());
                }
                1 => {
                    neg.insert(label.to_string());
                }
                _ => {}
            }
        }
        Event::new(pos, neg).unwrap()
    })
}

fn transitions_strategy() -> impl Strategy<Value = Vec<Transition>> {
    proptest::collection::vec(
        (event_strategy(), event_strategy()).prop_map(|(pre, post)| Transition::new(pre, post)),
        1..8,
    )
}

fn trained(transitions: &[Transition]) -> Network {
    let mut net = Network::new();
    train(&mut net, transitions, 5, Mode::Deterministic).unwrap();
    net
}

proptest! {
    #[test]
    fn weights_and_indexes_stay_valid(transitions in transitions_strategy()) {
        let mut net = Network::new();
        for t in &transitions {
            observe_transition(&mut net, t, Mode::Deterministic).unwrap();
            net.validate().unwrap();
            for el in net.els() {
                prop_assert!(el.weight() <= Ratio::from_integer(1));
                prop_assert!(el.counters.num_post() <= el.counters.num_pre());
            }
            for il in net.ils() {
                prop_assert!(il.weight() <= Ratio::from_integer(1));
            }
        }
    }

    #[test]
    fn theta_one_members_are_deterministic_members(
        transitions in transitions_strategy(),
        query in event_strategy(),
    ) {
        // At theta = 1 only weight-1 uninhibited links qualify, so the
        // probabilistic set can never exceed the deterministic one.
        let net = trained(&transitions);
        let (det, _) = reason_step_deterministic(&net, &query);
        let (prob, _) =
            reason_step_probabilistic(&net, &query, Ratio::from_integer(1)).unwrap();
        prop_assert!(prob.members().is_subset(det.members()));
    }

    #[test]
    fn raising_theta_shrinks_the_reasoning_set(
        transitions in transitions_strategy(),
        query in event_strategy(),
    ) {
        let net = trained(&transitions);
        let (low, _) = reason_step_probabilistic(&net, &query, Ratio::new(1, 4)).unwrap();
        let (high, _) = reason_step_probabilistic(&net, &query, Ratio::new(3, 4)).unwrap();
        prop_assert!(high.members().is_subset(low.members()));
    }

    #[test]
    fn persistence_is_canonical(transitions in transitions_strategy()) {
        let net = trained(&transitions);
        let first = persist::to_json(&net);
        let reloaded = persist::from_json(&first).unwrap();
        prop_assert_eq!(persist::to_json(&reloaded), first);
        prop_assert_eq!(reloaded.state_digest(), net.state_digest());
    }

    #[test]
    fn event_log_round_trips(transitions in transitions_strategy()) {
        let text = persist::write_event_log(&transitions);
        prop_assert_eq!(persist::parse_event_log(&text).unwrap(), transitions);
    }

    #[test]
    fn merge_is_order_independent(
        first in transitions_strategy(),
        second in transitions_strategy(),
    ) {
        let a = trained(&first);
        let b = trained(&second);
        let (ab, _) = persist::merge_networks(&a, &b, None, 1, Mode::Deterministic).unwrap();
        let (ba, _) = persist::merge_networks(&b, &a, None, 1, Mode::Deterministic).unwrap();
        prop_assert_eq!(ab.state_digest(), ba.state_digest());
    }

    #[test]
    fn rule_text_round_trips(choices in proptest::collection::vec(
        (proptest::collection::btree_set(0..6usize, 1..4),
         proptest::collection::btree_set(0..6usize, 1..3),
         any::<bool>()),
        1..5,
    )) {
        let mut lines = Vec::new();
        for (antecedent, consequent, negate_first) in &choices {
            let body: Vec<String> = antecedent
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    if i == 0 && *negate_first {
                        format!("NOT q{p}")
                    } else {
                        format!("q{p}")
                    }
                })
                .collect();
            let head: Vec<String> = consequent.iter().map(|p| format!("r{p}")).collect();
            lines.push(format!("IF {} THEN {}", body.join(" AND "), head.join(" AND ")));
        }
        lines.dedup();
        let text = lines.join("\n");
        if let Ok(library) = rules::parse_rules(&text) {
            let rendered = rules::render_rules(&library);
            prop_assert_eq!(rules::parse_rules(&rendered).unwrap(), library);
        }
    }
}
