//! Read-only inference: applying an observed event to the neurons, link
//! activation, single-step derivation of the reasoning set in deterministic
//! and probabilistic modes, chained closure, and explanation traces.
//!
//! A neuron is predicted deterministically when at least one of its
//! excitatory links is active and not suppressed by any active inhibitory
//! link. Probabilistic scores combine the link weights: per excitatory link
//! `w * prod(1 - w_inhibitor)` over its active inhibitors, then max across
//! links; multiple inhibitors multiply because weights act as
//! probabilities. Resting never satisfies a negative literal: absence of an
//! observation is not evidence of non-happening.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::network::{ElId, IlId, Literal, Network, NeuronId};

/// Things observed to happen and things observed not to happen at one time
/// step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Event {
    positives: BTreeSet<String>,
    negatives: BTreeSet<String>,
}

impl Event {
    pub fn new(
        positives: impl IntoIterator<Item = String>,
        negatives: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let positives: BTreeSet<String> = positives.into_iter().collect();
        let negatives: BTreeSet<String> = negatives.into_iter().collect();
        if let Some(clash) = positives.intersection(&negatives).next() {
            return Err(Error::invalid(format!(
                "'{clash}' appears as both positive and negative in one event"
            )));
        }
        Ok(Event {
            positives,
            negatives,
        })
    }

    pub fn empty() -> Self {
        Event::default()
    }

    /// Parses the `+label,-label` command-line form. A bare label counts
    /// as positive; `!label` is accepted as an alias for `-label`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut positives = BTreeSet::new();
        let mut negatives = BTreeSet::new();
        for raw in text.split(',') {
            let token = raw.trim();
            if token.is_empty() {
                continue;
            }
            let (label, positive) = match token.strip_prefix(['+']) {
                Some(rest) => (rest, true),
                None => match token.strip_prefix(['-', '!']) {
                    Some(rest) => (rest, false),
                    None => (token, true),
                },
            };
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::invalid(format!("empty label in event '{text}'")));
            }
            if positive {
                positives.insert(label.to_string());
            } else {
                negatives.insert(label.to_string());
            }
        }
        Event::new(positives, negatives)
    }

    pub fn positives(&self) -> &BTreeSet<String> {
        &self.positives
    }

    pub fn negatives(&self) -> &BTreeSet<String> {
        &self.negatives
    }

    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty()
    }

    /// All labels mentioned by the event, positive first.
    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.positives.iter().chain(self.negatives.iter())
    }

    /// Adds a positive observation, displacing an explicit negative on the
    /// same label (used by chained reasoning to feed inferences back in).
    pub fn add_positive(&mut self, label: &str) {
        self.negatives.remove(label);
        self.positives.insert(label.to_string());
    }

    /// Adds a negative observation; refuses to contradict an explicit
    /// positive.
    pub fn add_negative(&mut self, label: &str) -> Result<()> {
        if self.positives.contains(label) {
            return Err(Error::invalid(format!(
                "'{label}' already positive in this event"
            )));
        }
        self.negatives.insert(label.to_string());
        Ok(())
    }
}

/// Tri-state activation per neuron: +1 positively activated, -1 negatively
/// activated, 0 resting. Neurons absent from the observed event rest.
#[derive(Clone, Debug)]
pub struct ActivationState {
    states: Vec<i8>,
    observed: Vec<Literal>,
    unknown: Vec<String>,
}

impl ActivationState {
    pub fn state(&self, neuron: NeuronId) -> i8 {
        self.states.get(neuron.index()).copied().unwrap_or(0)
    }

    /// The non-resting neurons as literals, in activation order.
    pub fn observed_literals(&self) -> &[Literal] {
        &self.observed
    }

    /// Event labels that named no existing neuron. Reasoning is read-only,
    /// so these are reported rather than auto-created.
    pub fn unknown_labels(&self) -> &[String] {
        &self.unknown
    }
}

/// Marks event positives +1 and negatives -1; everything else rests.
pub fn apply_event(network: &Network, event: &Event) -> ActivationState {
    let mut states = vec![0i8; network.neuron_count()];
    let mut observed = Vec::new();
    let mut unknown = Vec::new();
    for label in event.positives() {
        match network.find_neuron(label) {
            Some(id) => {
                states[id.index()] = 1;
                observed.push(Literal::positive(id));
            }
            None => unknown.push(label.clone()),
        }
    }
    for label in event.negatives() {
        match network.find_neuron(label) {
            Some(id) => {
                states[id.index()] = -1;
                observed.push(Literal::negative(id));
            }
            None => unknown.push(label.clone()),
        }
    }
    ActivationState {
        states,
        observed,
        unknown,
    }
}

/// True iff every pre-literal matches the activation: a positive literal
/// needs +1 and a negative literal needs -1. The same conjunction rule
/// covers simple and composite links of both kinds.
pub fn link_is_active(pre: &[Literal], activation: &ActivationState) -> bool {
    pre.iter()
        .all(|l| activation.state(l.neuron) == l.polarity.required_state())
}

/// One active excitatory link with the active inhibitors suppressing it.
#[derive(Clone, Debug)]
pub struct ElTrace {
    pub el: ElId,
    pub active: bool,
    pub weight: Ratio<u64>,
    pub active_inhibitors: Vec<IlTrace>,
}

#[derive(Clone, Debug)]
pub struct IlTrace {
    pub il: IlId,
    pub weight: Ratio<u64>,
}

/// Per-neuron record of the links that contributed to (or were suppressed
/// from) a prediction.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub per_neuron: BTreeMap<NeuronId, Vec<ElTrace>>,
}

/// The predicted next event: a score per candidate neuron plus the
/// threshold used for membership.
#[derive(Clone, Debug)]
pub struct ReasoningSet {
    theta: Ratio<u64>,
    scores: BTreeMap<NeuronId, BigRational>,
    members: BTreeSet<NeuronId>,
}

impl ReasoningSet {
    pub fn theta(&self) -> Ratio<u64> {
        self.theta
    }

    pub fn members(&self) -> &BTreeSet<NeuronId> {
        &self.members
    }

    pub fn member_labels(&self, network: &Network) -> BTreeSet<String> {
        self.members
            .iter()
            .map(|id| network.label(*id).to_string())
            .collect()
    }

    pub fn score(&self, neuron: NeuronId) -> BigRational {
        self.scores.get(&neuron).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Scores for every neuron with at least one active excitatory link,
    /// whether or not it cleared the threshold.
    pub fn scores(&self) -> &BTreeMap<NeuronId, BigRational> {
        &self.scores
    }
}

/// Active excitatory links under one activation, each with its active
/// inhibitors. Shared by reasoning and learning.
pub(crate) struct LinkEvaluation {
    pub active_els: Vec<ElId>,
    /// Parallel to `active_els`.
    pub active_ils: Vec<Vec<IlId>>,
}

impl LinkEvaluation {
    pub fn uninhibited(&self) -> impl Iterator<Item = ElId> + '_ {
        self.active_els
            .iter()
            .zip(&self.active_ils)
            .filter(|(_, ils)| ils.is_empty())
            .map(|(el, _)| *el)
    }
}

pub(crate) fn evaluate_links(network: &Network, activation: &ActivationState) -> LinkEvaluation {
    let mut active_els = Vec::new();
    let mut active_ils = Vec::new();
    for el in network.els() {
        if !link_is_active(el.pre(), activation) {
            continue;
        }
        // Inhibitors are only consulted for links that are themselves
        // active; inactive targets transmit nothing to suppress.
        let ils: Vec<IlId> = network
            .ils_targeting(el.id)
            .iter()
            .copied()
            .filter(|il| link_is_active(network.il(*il).pre(), activation))
            .collect();
        active_els.push(el.id);
        active_ils.push(ils);
    }
    LinkEvaluation {
        active_els,
        active_ils,
    }
}

fn trace_of(network: &Network, eval: &LinkEvaluation) -> Trace {
    let mut trace = Trace::default();
    for (el_id, ils) in eval.active_els.iter().zip(&eval.active_ils) {
        let el = network.el(*el_id);
        trace
            .per_neuron
            .entry(el.post)
            .or_default()
            .push(ElTrace {
                el: *el_id,
                active: true,
                weight: el.weight(),
                active_inhibitors: ils
                    .iter()
                    .map(|il| IlTrace {
                        il: *il,
                        weight: network.il(*il).weight(),
                    })
                    .collect(),
            });
    }
    trace
}

pub(crate) fn deterministic_members(network: &Network, eval: &LinkEvaluation) -> BTreeSet<NeuronId> {
    eval.uninhibited().map(|el| network.el(el).post).collect()
}

/// A neuron is predicted iff some active excitatory link targets it with no
/// active inhibitory link on that excitatory link.
pub fn reason_step_deterministic(network: &Network, event: &Event) -> (ReasoningSet, Trace) {
    let activation = apply_event(network, event);
    let eval = evaluate_links(network, &activation);
    let members = deterministic_members(network, &eval);
    let mut scores = BTreeMap::new();
    for el in &eval.active_els {
        let post = network.el(*el).post;
        let score = if members.contains(&post) {
            BigRational::one()
        } else {
            BigRational::zero()
        };
        scores.insert(post, score);
    }
    let rs = ReasoningSet {
        theta: Ratio::from_integer(1),
        scores,
        members,
    };
    (rs, trace_of(network, &eval))
}

fn big(r: Ratio<u64>) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Scores every candidate as `max over active ELs of w_EL * prod(1 - w_IL)`
/// and admits those scoring at least `theta`.
pub fn reason_step_probabilistic(
    network: &Network,
    event: &Event,
    theta: Ratio<u64>,
) -> Result<(ReasoningSet, Trace)> {
    if theta <= Ratio::from_integer(0) || theta > Ratio::from_integer(1) {
        return Err(Error::invalid(format!(
            "theta must satisfy 0 < theta <= 1, got {theta}"
        )));
    }
    let activation = apply_event(network, event);
    let eval = evaluate_links(network, &activation);
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
    let members = scores
        .iter()
        .filter(|(_, s)| **s >= threshold)
        .map(|(n, _)| *n)
        .collect();
    let rs = ReasoningSet {
        theta,
        scores,
        members,
    };
    Ok((rs, trace_of(network, &eval)))
}

/// Iterates deterministic single steps, feeding each round's predictions
/// back as positive observations, until fixpoint or `max_depth` rounds.
/// Returns every thing inferred along the way.
pub fn reason_chain(
    network: &Network,
    event: &Event,
    max_depth: usize,
) -> Result<BTreeSet<String>> {
    if max_depth == 0 {
        return Err(Error::invalid("max_depth must be at least 1"));
    }
    let mut current = event.clone();
    let mut inferred: BTreeSet<String> = BTreeSet::new();
    for _ in 0..max_depth {
        let (rs, _) = reason_step_deterministic(network, &current);
        let mut grew = false;
        for label in rs.member_labels(network) {
            if inferred.insert(label.clone()) {
                grew = true;
            }
            if !current.positives().contains(&label) {
                current.add_positive(&label);
            }
        }
        if !grew {
            break;
        }
    }
    Ok(inferred)
}

/// Every excitatory link targeting `thing`, with activity status, weight,
/// and active inhibitors under the given event.
pub fn explain(network: &Network, event: &Event, thing: &str) -> Result<Vec<ElTrace>> {
    let neuron = network
        .find_neuron(thing)
        .ok_or_else(|| Error::not_found(format!("unknown thing '{thing}'")))?;
    let activation = apply_event(network, event);
    let mut out = Vec::new();
    for el_id in network.els_targeting(neuron) {
        let el = network.el(*el_id);
        let active = link_is_active(el.pre(), &activation);
        let active_inhibitors = if active {
            network
                .ils_targeting(*el_id)
                .iter()
                .filter(|il| link_is_active(network.il(**il).pre(), &activation))
                .map(|il| IlTrace {
                    il: *il,
                    weight: network.il(*il).weight(),
                })
                .collect()
        } else {
            Vec::new()
        };
        out.push(ElTrace {
            el: *el_id,
            active,
            weight: el.weight(),
            active_inhibitors,
        });
    }
    Ok(out)
}
