//! Event-driven construction and adjustment: perceive an event, associate
//! (derive the reasoning set), perceive the next event, then learn by
//! comparing the reasoning set against the actual set. Misses grow
//! excitatory links from the observed literals; spurious predictions grow
//! inhibitory links whose pre-set is the determining context, and every
//! active link's counters advance so weights track conditional frequencies.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::network::{ElId, IlId, Literal, LinkRef, Network, NeuronId};
use crate::reasoning::{
    apply_event, deterministic_members, evaluate_links, link_is_active, ActivationState, Event,
    LinkEvaluation,
};

/// An observed ordered pair of events: `pre` happened, then `post`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub pre: Event,
    pub post: Event,
}

impl Transition {
    pub fn new(pre: Event, post: Event) -> Self {
        Transition { pre, post }
    }
}

/// How the network chooses the reasoning set while learning or querying.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Deterministic,
    Probabilistic { theta: Ratio<u64> },
}

impl Default for Mode {
    fn default() -> Self {
        Mode::Deterministic
    }
}

/// Consistency cases between the reasoning set and the actual set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Case {
    /// Not predicted, did not happen.
    CorrectAbsent,
    /// Not predicted but happened.
    Missed,
    /// Predicted but did not happen.
    Spurious,
    /// Predicted and happened.
    CorrectPresent,
}

/// One counter advance applied during weight update.
#[derive(Clone, Copy, Debug)]
pub struct CounterDelta {
    pub link: LinkRef,
    pub outcome_followed: bool,
}

/// Everything one learning step did: the pre-adjustment reasoning set, the
/// actual set, the per-neuron consistency cases, and the structure and
/// counter changes.
#[derive(Clone, Debug)]
pub struct AdjustmentReport {
    pub reasoning_set: BTreeSet<NeuronId>,
    pub actual_set: BTreeSet<NeuronId>,
    pub cases: BTreeMap<NeuronId, Case>,
    pub created_neurons: Vec<NeuronId>,
    pub created_els: Vec<ElId>,
    pub created_ils: Vec<IlId>,
    pub counter_deltas: Vec<CounterDelta>,
    /// Missed neurons whose existing excitatory links were active but
    /// inhibited; no structure was added and weights arbitrate.
    pub weight_arbitration: BTreeSet<NeuronId>,
}

impl AdjustmentReport {
    pub fn structural_changes(&self) -> usize {
        self.created_neurons.len() + self.created_els.len() + self.created_ils.len()
    }
}

/// Outcome of epoch training over a fixed transition list.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub epochs: usize,
    pub structural_changes_per_epoch: Vec<usize>,
    /// Fraction of transitions recalled exactly after the last epoch.
    pub recall: Ratio<u64>,
    pub converged: bool,
}

/// Exact-recall evaluation of a transition list against the network.
#[derive(Clone, Debug)]
pub struct RecallReport {
    pub total: usize,
    pub recalled: usize,
    /// (transition index, predicted labels, expected labels)
    pub failures: Vec<(usize, BTreeSet<String>, BTreeSet<String>)>,
}

impl RecallReport {
    pub fn fraction(&self) -> Ratio<u64> {
        if self.total == 0 {
            Ratio::from_integer(1)
        } else {
            Ratio::new(self.recalled as u64, self.total as u64)
        }
    }

    pub fn complete(&self) -> bool {
        self.recalled == self.total
    }
}

/// Assigns each neuron of the universe its consistency case. The four
/// cases partition the universe.
pub fn classify_consistency(
    reasoning_set: &BTreeSet<NeuronId>,
    actual_set: &BTreeSet<NeuronId>,
    universe: impl IntoIterator<Item = NeuronId>,
) -> BTreeMap<NeuronId, Case> {
    universe
        .into_iter()
        .map(|n| {
            let case = match (reasoning_set.contains(&n), actual_set.contains(&n)) {
                (false, false) => Case::CorrectAbsent,
                (false, true) => Case::Missed,
                (true, false) => Case::Spurious,
                (true, true) => Case::CorrectPresent,
            };
            (n, case)
        })
        .collect()
}

/// Grows simple excitatory links from every observed literal of the
/// triggering event to the missed neuron, deduplicated by signature. When
/// an active link to the missed neuron already exists but was inhibited,
/// nothing structural is added: the counters will arbitrate.
pub fn handle_missed(
    network: &mut Network,
    activation: &ActivationState,
    missed: NeuronId,
) -> Result<(Vec<ElId>, bool)> {
    let existing = network.els_targeting(missed);
    let inhibited_active = existing.iter().any(|el_id| {
        link_is_active(network.el(*el_id).pre(), activation)
            && network
                .ils_targeting(*el_id)
                .iter()
                .any(|il| link_is_active(network.il(*il).pre(), activation))
    });
    if inhibited_active {
        return Ok((Vec::new(), true));
    }
    let literals: Vec<Literal> = activation
        .observed_literals()
        .iter()
        .copied()
        .filter(|l| l.neuron != missed)
        .collect();
    let mut created = Vec::new();
    for literal in literals {
        let (id, fresh) = network.add_excitatory_link(&[literal], missed)?;
        if fresh {
            created.push(id);
        }
    }
    Ok((created, false))
}

/// For each active uninhibited excitatory link that produced the spurious
/// prediction, creates an inhibitory link whose pre-set is the determining
/// context: the observed literals outside the link's own pre-set. An empty
/// context creates nothing; the counter update alone weakens the link.
pub fn handle_spurious(
    network: &mut Network,
    activation: &ActivationState,
    spurious: NeuronId,
) -> Result<Vec<IlId>> {
    let candidates: Vec<ElId> = network
        .els_targeting(spurious)
        .iter()
        .copied()
        .filter(|el_id| {
            link_is_active(network.el(*el_id).pre(), activation)
                && !network
                    .ils_targeting(*el_id)
                    .iter()
                    .any(|il| link_is_active(network.il(*il).pre(), activation))
        })
        .collect();
    let mut created = Vec::new();
    for el_id in candidates {
        let determining: Vec<Literal> = {
            let pre = network.el(el_id).pre();
            activation
                .observed_literals()
                .iter()
                .copied()
                .filter(|l| !pre.iter().any(|p| p.neuron == l.neuron))
                .collect()
        };
        if determining.is_empty() {
            continue;
        }
        let (id, fresh) = network.add_inhibitory_link(&determining, el_id)?;
        if fresh {
            created.push(id);
        }
    }
    Ok(created)
}

fn apply_weight_updates(
    network: &mut Network,
    eval: &LinkEvaluation,
    actual_set: &BTreeSet<NeuronId>,
) -> Vec<CounterDelta> {
    let mut deltas = Vec::new();
    for (el_id, active_ils) in eval.active_els.iter().zip(&eval.active_ils) {
        let post = network.el(*el_id).post;
        let followed = actual_set.contains(&post);
        network.el_counters_mut(*el_id).record(followed);
        deltas.push(CounterDelta {
            link: LinkRef::Excitatory(*el_id),
            outcome_followed: followed,
        });
        // An inhibitory link only counts when its target was active too:
        // its outcome is the target's post-thing not happening.
        for il_id in active_ils {
            let suppressed = !actual_set.contains(&post);
            network.il_counters_mut(*il_id).record(suppressed);
            deltas.push(CounterDelta {
                link: LinkRef::Inhibitory(*il_id),
                outcome_followed: suppressed,
            });
        }
    }
    deltas
}

/// Advances counters for every active excitatory link (outcome: its post
/// thing happened) and every active inhibitory link on an active target
/// (outcome: the target's post thing did not happen).
pub fn update_weights(
    network: &mut Network,
    activation: &ActivationState,
    actual_set: &BTreeSet<NeuronId>,
) -> Vec<CounterDelta> {
    let eval = evaluate_links(network, activation);
    apply_weight_updates(network, &eval, actual_set)
}

fn members_for_mode(
    network: &Network,
    eval: &LinkEvaluation,
    mode: Mode,
) -> Result<BTreeSet<NeuronId>> {
    match mode {
        Mode::Deterministic => Ok(deterministic_members(network, eval)),
        Mode::Probabilistic { theta } => {
            if theta <= Ratio::from_integer(0) || theta > Ratio::from_integer(1) {
                return Err(Error::invalid(format!(
                    "theta must satisfy 0 < theta <= 1, got {theta}"
                )));
            }
            use num_bigint::BigInt;
            use num_rational::BigRational;
            use num_traits::{One, Zero};
            let big = |r: Ratio<u64>| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
            let mut scores: BTreeMap<NeuronId, BigRational> = BTreeMap::new();
            for (el_id, ils) in eval.active_els.iter().zip(&eval.active_ils) {
                let el = network.el(*el_id);
                let mut score = big(el.weight());
                for il in ils {
                    score *= BigRational::one() - big(network.il(*il).weight());
                }
                let entry = scores.entry(el.post).or_insert_with(BigRational::zero);
                if score > *entry {
                    *entry = score;
                }
            }
            let threshold = big(theta);
            Ok(scores
                .into_iter()
                .filter(|(_, s)| *s >= threshold)
                .map(|(n, _)| n)
                .collect())
        }
    }
}

/// One pass of the four-stage loop for a single transition. Weight updates
/// apply only to links that existed before this step's structural
/// adjustments; new links start at (1, 1).
pub fn observe_transition(
    network: &mut Network,
    transition: &Transition,
    mode: Mode,
) -> Result<AdjustmentReport> {
    let mut created_neurons = Vec::new();

    // Stage 1: perceive e_pre, creating neurons for unseen things.
    let before = network.neuron_count();
    for label in transition.pre.labels() {
        network.find_or_create_neuron(label)?;
    }
    let activation = apply_event(network, &transition.pre);

    // Stage 2: associate using the pre-adjustment structure.
    let eval = evaluate_links(network, &activation);
    let reasoning_set = members_for_mode(network, &eval, mode)?;

    // Stage 3: perceive e_post; the actual set is its positives.
    for label in transition.post.labels() {
        network.find_or_create_neuron(label)?;
    }
    created_neurons.extend(network.neurons().skip(before).map(|n| n.id));
    let actual_set: BTreeSet<NeuronId> = transition
        .post
        .positives()
        .iter()
        .filter_map(|label| network.find_neuron(label))
        .collect();

    // Stage 4a: counters advance on the pre-existing links.
    let counter_deltas = apply_weight_updates(network, &eval, &actual_set);

    // Stage 4b: structure adjustment per consistency case.
    let cases = classify_consistency(&reasoning_set, &actual_set, network.neuron_ids());
    let mut created_els = Vec::new();
    let mut created_ils = Vec::new();
    let mut weight_arbitration = BTreeSet::new();
    for (neuron, case) in &cases {
        match case {
            Case::Missed => {
                let (els, arbitrated) = handle_missed(network, &activation, *neuron)?;
                created_els.extend(els);
                if arbitrated {
                    weight_arbitration.insert(*neuron);
                }
            }
            Case::Spurious => {
                created_ils.extend(handle_spurious(network, &activation, *neuron)?);
            }
            _ => {}
        }
    }

    Ok(AdjustmentReport {
        reasoning_set,
        actual_set,
        cases,
        created_neurons,
        created_els,
        created_ils,
        counter_deltas,
        weight_arbitration,
    })
}

/// Exact one-step recall: a transition is recalled when the deterministic
/// reasoning set on its pre-event equals its post-event positives.
pub fn exact_recall(network: &Network, transitions: &[Transition]) -> RecallReport {
    let mut recalled = 0;
    let mut failures = Vec::new();
    for (idx, t) in transitions.iter().enumerate() {
        let (rs, _) = crate::reasoning::reason_step_deterministic(network, &t.pre);
        let predicted = rs.member_labels(network);
        if predicted == *t.post.positives() {
            recalled += 1;
        } else {
            failures.push((idx, predicted, t.post.positives().clone()));
        }
    }
    RecallReport {
        total: transitions.len(),
        recalled,
        failures,
    }
}

/// Full passes over the transition list, in order, until an epoch makes no
/// structural change and every transition is recalled exactly, or
/// `max_epochs` is reached.
pub fn train(
    network: &mut Network,
    transitions: &[Transition],
    max_epochs: usize,
    mode: Mode,
) -> Result<ConvergenceReport> {
    if max_epochs == 0 {
        return Err(Error::invalid("max_epochs must be at least 1"));
    }
    let mut changes_per_epoch = Vec::new();
    let mut converged = false;
    let mut recall = Ratio::from_integer(1);
    for _ in 0..max_epochs {
        let mut changes = 0;
        for t in transitions {
            changes += observe_transition(network, t, mode)?.structural_changes();
        }
        changes_per_epoch.push(changes);
        let report = exact_recall(network, transitions);
        recall = report.fraction();
        if changes == 0 && report.complete() {
            converged = true;
            break;
        }
    }
    Ok(ConvergenceReport {
        epochs: changes_per_epoch.len(),
        structural_changes_per_epoch: changes_per_epoch,
        recall,
        converged,
    })
}

/// The three production steps for sulfuric acid from pyrite; shared test
/// fixture.
#[cfg(test)]
pub(crate) fn h2so4_transitions() -> Vec<Transition> {
    let transition = |pre: &[&str], post: &[&str]| {
        Transition::new(
            Event::new(pre.iter().map(|s| s.to_string()), []).unwrap(),
            Event::new(post.iter().map(|s| s.to_string()), []).unwrap(),
        )
    };
    vec![
        transition(&["FeS2", "O2"], &["Fe2O3", "SO2"]),
        transition(&["SO2", "O2"], &["SO3"]),
        transition(&["SO3", "H2O"], &["H2SO4"]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reasoning::reason_step_deterministic;

    fn event(pos: &[&str], neg: &[&str]) -> Event {
        Event::new(
            pos.iter().map(|s| s.to_string()),
            neg.iter().map(|s| s.to_string()),
        )
        .unwrap()
    }

    fn transition(pre: &[&str], post: &[&str]) -> Transition {
        Transition::new(event(pre, &[]), event(post, &[]))
    }

    #[test]
    fn classification_partitions() {
        let mut net = Network::new();
        let b = net.find_or_create_neuron("B").unwrap();
        let c = net.find_or_create_neuron("C").unwrap();
        let rs: BTreeSet<_> = [b].into_iter().collect();
        let actual: BTreeSet<_> = [b].into_iter().collect();
        let cases = classify_consistency(&rs, &actual, net.neuron_ids());
        assert_eq!(cases[&b], Case::CorrectPresent);
        assert_eq!(cases[&c], Case::CorrectAbsent);

        let so2 = net.find_or_create_neuron("SO2").unwrap();
        let cases = classify_consistency(
            &BTreeSet::new(),
            &[so2].into_iter().collect(),
            net.neuron_ids(),
        );
        assert_eq!(cases[&so2], Case::Missed);

        let so3 = net.find_or_create_neuron("SO3").unwrap();
        let cases = classify_consistency(
            &[so3].into_iter().collect(),
            &BTreeSet::new(),
            net.neuron_ids(),
        );
        assert_eq!(cases[&so3], Case::Spurious);
        assert_eq!(cases.len(), net.neuron_count());
    }

    #[test]
    fn first_transition_builds_simple_links() {
        let mut net = Network::new();
        let report = observe_transition(
            &mut net,
            &h2so4_transitions()[0],
            Mode::Deterministic,
        )
        .unwrap();
        assert_eq!(net.neuron_count(), 4);
        assert_eq!(report.created_els.len(), 4);
        assert!(report.created_ils.is_empty());
        assert!(report.reasoning_set.is_empty());
        net.validate().unwrap();

        // Replaying the learned transition changes no structure.
        let report2 = observe_transition(
            &mut net,
            &h2so4_transitions()[0],
            Mode::Deterministic,
        )
        .unwrap();
        assert_eq!(report2.structural_changes(), 0);
        assert!(!report2.counter_deltas.is_empty());
    }

    #[test]
    fn spurious_prediction_gets_determining_factor_il() {
        let mut net = Network::new();
        let ts = h2so4_transitions();
        observe_transition(&mut net, &ts[0], Mode::Deterministic).unwrap();
        let report = observe_transition(&mut net, &ts[1], Mode::Deterministic).unwrap();
        // {SO2, O2}: the stale O2-driven predictions of Fe2O3 and SO2 get
        // inhibitory links whose determining factor is SO2.
        assert!(!report.created_ils.is_empty());
        let sigs: Vec<&str> = report
            .created_ils
            .iter()
            .map(|il| net.il(*il).signature())
            .collect();
        assert!(sigs.contains(&"[+SO2]=>([+O2]->Fe2O3)"));
        net.validate().unwrap();
    }

    #[test]
    fn h2so4_trains_to_exact_recall() {
        let mut net = Network::new();
        let ts = h2so4_transitions();
        let report = train(&mut net, &ts, 10, Mode::Deterministic).unwrap();
        assert!(report.converged, "no convergence: {report:?}");
        assert!(report.epochs <= 3);
        assert_eq!(report.recall, Ratio::from_integer(1));

        let (rs, _) = reason_step_deterministic(&net, &event(&["FeS2", "O2"], &[]));
        assert_eq!(
            rs.member_labels(&net).into_iter().collect::<Vec<_>>(),
            ["Fe2O3", "SO2"]
        );
        let (rs, _) = reason_step_deterministic(&net, &event(&["SO2", "O2"], &[]));
        assert_eq!(rs.member_labels(&net).into_iter().collect::<Vec<_>>(), ["SO3"]);
        let (rs, _) = reason_step_deterministic(&net, &event(&["SO3", "H2O"], &[]));
        assert_eq!(
            rs.member_labels(&net).into_iter().collect::<Vec<_>>(),
            ["H2SO4"]
        );
        net.validate().unwrap();
    }

    #[test]
    fn weight_update_counts_conditional_frequency() {
        let mut net = Network::new();
        let a = net.find_or_create_neuron("A").unwrap();
        let b = net.find_or_create_neuron("B").unwrap();
        let (el, _) = net
            .add_excitatory_link(&[Literal::positive(a)], b)
            .unwrap();

        let activation = apply_event(&net, &event(&["A"], &[]));
        let as_b: BTreeSet<_> = [b].into_iter().collect();
        update_weights(&mut net, &activation, &as_b);
        assert_eq!(net.el(el).counters.num_pre(), 2);
        assert_eq!(net.el(el).counters.num_post(), 2);

        let c = net.find_or_create_neuron("C").unwrap();
        let as_c: BTreeSet<_> = [c].into_iter().collect();
        let activation = apply_event(&net, &event(&["A"], &[]));
        update_weights(&mut net, &activation, &as_c);
        assert_eq!(net.el(el).weight(), Ratio::new(2, 3));
    }

    #[test]
    fn inhibitory_counters_track_non_happening() {
        let mut net = Network::new();
        let a = net.find_or_create_neuron("A").unwrap();
        let b = net.find_or_create_neuron("B").unwrap();
        let d = net.find_or_create_neuron("D").unwrap();
        let c = net.find_or_create_neuron("C").unwrap();
        let (el, _) = net
            .add_excitatory_link(&[Literal::positive(a)], b)
            .unwrap();
        let (il, _) = net
            .add_inhibitory_link(&[Literal::positive(d)], el)
            .unwrap();

        // {A, D} happened, then C: B did not happen, so the inhibitor's
        // both counters advance.
        let activation = apply_event(&net, &event(&["A", "D"], &[]));
        update_weights(&mut net, &activation, &[c].into_iter().collect());
        assert_eq!(net.il(il).counters.num_pre(), 2);
        assert_eq!(net.il(il).counters.num_post(), 2);

        // B happened: num_pre advances, num_post does not.
        let activation = apply_event(&net, &event(&["A", "D"], &[]));
        update_weights(&mut net, &activation, &[b].into_iter().collect());
        assert_eq!(net.il(il).counters.num_pre(), 3);
        assert_eq!(net.il(il).counters.num_post(), 2);

        // Inhibitor without an active target stays untouched.
        let activation = apply_event(&net, &event(&["D"], &[]));
        update_weights(&mut net, &activation, &BTreeSet::new());
        assert_eq!(net.il(il).counters.num_pre(), 3);
    }

    #[test]
    fn missed_with_inhibited_link_defers_to_weights() {
        let mut net = Network::new();
        let a = net.find_or_create_neuron("A").unwrap();
        let d = net.find_or_create_neuron("D").unwrap();
        let b = net.find_or_create_neuron("B").unwrap();
        let (el, _) = net
            .add_excitatory_link(&[Literal::positive(a)], b)
            .unwrap();
        net.add_inhibitory_link(&[Literal::positive(d)], el)
            .unwrap();

        // {A, D} -> {B}: the only link to B is active but inhibited, so no
        // structure is added and the report flags weight arbitration.
        let report = observe_transition(
            &mut net,
            &transition(&["A", "D"], &["B"]),
            Mode::Deterministic,
        )
        .unwrap();
        assert!(report.created_els.is_empty());
        assert!(report.weight_arbitration.contains(&b));
    }

    #[test]
    fn contradictory_data_reports_honest_failure() {
        let mut net = Network::new();
        let ts = vec![
            Transition::new(event(&["A"], &[]), event(&["B"], &[])),
            Transition::new(event(&["A"], &[]), event(&[], &["B"])),
        ];
        let report = train(&mut net, &ts, 5, Mode::Deterministic).unwrap();
        assert!(!report.converged);
        assert!(report.recall < Ratio::from_integer(1));
    }

    #[test]
    fn negative_pre_literals_create_negative_links() {
        let mut net = Network::new();
        let t = Transition::new(event(&["bird"], &["airborne"]), event(&["ostrich"], &[]));
        observe_transition(&mut net, &t, Mode::Deterministic).unwrap();
        let ostrich = net.find_neuron("ostrich").unwrap();
        let sigs: Vec<&str> = net
            .els_targeting(ostrich)
            .iter()
            .map(|el| net.el(*el).signature())
            .collect();
        assert!(sigs.contains(&"[-airborne]->ostrich"));
        assert!(sigs.contains(&"[+bird]->ostrich"));
    }
}
