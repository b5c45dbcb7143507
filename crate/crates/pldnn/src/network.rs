//! The network data model: thing-neurons, excitatory links (neuron set ->
//! neuron), inhibitory links (neuron set -> excitatory link), occurrence
//! counters, and the mutation primitives with signature-based deduplication.
//!
//! Link weights are exact rationals `num_post / num_pre`. Simple and
//! composite links are one type distinguished by the size of their
//! pre-literal set; positive/negative trigger behavior is encoded in the
//! literal polarity rather than as distinct link kinds.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_rational::Ratio;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NeuronId(u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ElId(u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct IlId(u32);

impl NeuronId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ElId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl IlId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Activation state a neuron must hold for this polarity to match.
    pub fn required_state(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn prefix(self) -> char {
        match self {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        }
    }
}

/// A (thing, polarity) pair; the unit of link pre-conditions.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Literal {
    pub neuron: NeuronId,
    pub polarity: Polarity,
}

impl Literal {
    pub fn positive(neuron: NeuronId) -> Self {
        Literal {
            neuron,
            polarity: Polarity::Positive,
        }
    }

    pub fn negative(neuron: NeuronId) -> Self {
        Literal {
            neuron,
            polarity: Polarity::Negative,
        }
    }
}

/// Occurrence counters backing the frequency-derived weight of a link.
///
/// `num_pre` counts how often the link's pre-condition held; `num_post`
/// counts how often the linked outcome followed. Both only ever grow and
/// `num_post <= num_pre` at all times, so the weight stays in `[0, 1]`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Counters {
    num_pre: u64,
    num_post: u64,
}

impl Counters {
    pub fn new(num_pre: u64, num_post: u64) -> Result<Self> {
        if num_post > num_pre {
            return Err(Error::invalid(format!(
                "num_post ({num_post}) exceeds num_pre ({num_pre})"
            )));
        }
        Ok(Counters { num_pre, num_post })
    }

    /// Fresh links start at (1, 1): the creating event is the first
    /// witnessed occurrence of both the condition and the outcome.
    pub fn fresh() -> Self {
        Counters {
            num_pre: 1,
            num_post: 1,
        }
    }

    pub fn num_pre(&self) -> u64 {
        self.num_pre
    }

    pub fn num_post(&self) -> u64 {
        self.num_post
    }

    /// One observation of the pre-condition; `outcome_followed` says
    /// whether the linked outcome held as well.
    pub fn record(&mut self, outcome_followed: bool) {
        self.num_pre += 1;
        if outcome_followed {
            self.num_post += 1;
        }
    }

    pub fn weight(&self) -> Ratio<u64> {
        link_weight(self)
    }

    fn merged(self, other: Counters) -> Counters {
        Counters {
            num_pre: self.num_pre + other.num_pre,
            num_post: self.num_post + other.num_post,
        }
    }
}

/// `num_post / num_pre` as an exact rational; 0 when `num_pre` is 0.
pub fn link_weight(counters: &Counters) -> Ratio<u64> {
    if counters.num_pre == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(counters.num_post, counters.num_pre)
    }
}

#[derive(Clone, Debug)]
pub struct Neuron {
    pub id: NeuronId,
    pub label: String,
}

/// A link from a conjunction of pre-literals to a post-neuron. Simple when
/// `|pre| == 1`, composite otherwise.
#[derive(Clone, Debug)]
pub struct ExcitatoryLink {
    pub id: ElId,
    pre: Vec<Literal>,
    pub post: NeuronId,
    pub counters: Counters,
    signature: String,
}

impl ExcitatoryLink {
    pub fn pre(&self) -> &[Literal] {
        &self.pre
    }

    pub fn is_composite(&self) -> bool {
        self.pre.len() > 1
    }

    pub fn weight(&self) -> Ratio<u64> {
        self.counters.weight()
    }

    pub fn signature(&self) -> &str {
        &self.signature
    }
}

/// A link from a conjunction of pre-literals to an excitatory link (not a
/// neuron); when active it suppresses its target.
#[derive(Clone, Debug)]
pub struct InhibitoryLink {
    pub id: IlId,
    pre: Vec<Literal>,
    pub target: ElId,
    pub counters: Counters,
    signature: String,
}

impl InhibitoryLink {
    pub fn pre(&self) -> &[Literal] {
        &self.pre
    }

    pub fn is_composite(&self) -> bool {
        self.pre.len() > 1
    }

    pub fn weight(&self) -> Ratio<u64> {
        self.counters.weight()
    }

    pub fn signature(&self) -> &str {
        &self.signature
    }
}

/// A reference to either kind of link.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum LinkRef {
    Excitatory(ElId),
    Inhibitory(IlId),
}

#[derive(Clone, Debug, Default)]
pub struct Network {
    neurons: Vec<Neuron>,
    labels: HashMap<String, NeuronId>,
    els: Vec<ExcitatoryLink>,
    ils: Vec<InhibitoryLink>,
    el_signatures: HashMap<String, ElId>,
    il_signatures: HashMap<String, IlId>,
    els_by_post: HashMap<NeuronId, Vec<ElId>>,
    ils_by_target: HashMap<ElId, Vec<IlId>>,
    els_by_pre: HashMap<NeuronId, Vec<ElId>>,
    ils_by_pre: HashMap<NeuronId, Vec<IlId>>,
}

impl Network {
    pub fn new() -> Self {
        Network::default()
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn neurons(&self) -> impl Iterator<Item = &Neuron> {
        self.neurons.iter()
    }

    pub fn neuron_ids(&self) -> impl Iterator<Item = NeuronId> {
        (0..self.neurons.len() as u32).map(NeuronId)
    }

    pub fn neuron(&self, id: NeuronId) -> &Neuron {
        &self.neurons[id.index()]
    }

    pub fn label(&self, id: NeuronId) -> &str {
        &self.neurons[id.index()].label
    }

    pub fn find_neuron(&self, label: &str) -> Option<NeuronId> {
        self.labels.get(label).copied()
    }

    /// Returns the neuron named `label`, creating a resting one if unknown.
    pub fn find_or_create_neuron(&mut self, label: &str) -> Result<NeuronId> {
        if label.is_empty() {
            return Err(Error::invalid("neuron label must be non-empty"));
        }
        if let Some(id) = self.labels.get(label) {
            return Ok(*id);
        }
        let id = NeuronId(self.neurons.len() as u32);
        self.neurons.push(Neuron {
            id,
            label: label.to_string(),
        });
        self.labels.insert(label.to_string(), id);
        Ok(id)
    }

    pub fn els(&self) -> impl Iterator<Item = &ExcitatoryLink> {
        self.els.iter()
    }

    pub fn ils(&self) -> impl Iterator<Item = &InhibitoryLink> {
        self.ils.iter()
    }

    pub fn el_count(&self) -> usize {
        self.els.len()
    }

    pub fn il_count(&self) -> usize {
        self.ils.len()
    }

    pub fn el(&self, id: ElId) -> &ExcitatoryLink {
        &self.els[id.index()]
    }

    pub fn il(&self, id: IlId) -> &InhibitoryLink {
        &self.ils[id.index()]
    }

    pub(crate) fn el_counters_mut(&mut self, id: ElId) -> &mut Counters {
        &mut self.els[id.index()].counters
    }

    pub(crate) fn il_counters_mut(&mut self, id: IlId) -> &mut Counters {
        &mut self.ils[id.index()].counters
    }

    pub(crate) fn merge_el_counters(&mut self, id: ElId, other: Counters) {
        let c = &mut self.els[id.index()].counters;
        *c = c.merged(other);
    }

    pub(crate) fn merge_il_counters(&mut self, id: IlId, other: Counters) {
        let c = &mut self.ils[id.index()].counters;
        *c = c.merged(other);
    }

    pub(crate) fn set_el_counters(&mut self, id: ElId, counters: Counters) {
        self.els[id.index()].counters = counters;
    }

    pub(crate) fn set_il_counters(&mut self, id: IlId, counters: Counters) {
        self.ils[id.index()].counters = counters;
    }

    pub fn els_targeting(&self, post: NeuronId) -> &[ElId] {
        self.els_by_post.get(&post).map_or(&[], Vec::as_slice)
    }

    pub fn ils_targeting(&self, el: ElId) -> &[IlId] {
        self.ils_by_target.get(&el).map_or(&[], Vec::as_slice)
    }

    pub fn els_from(&self, neuron: NeuronId) -> &[ElId] {
        self.els_by_pre.get(&neuron).map_or(&[], Vec::as_slice)
    }

    pub fn ils_from(&self, neuron: NeuronId) -> &[IlId] {
        self.ils_by_pre.get(&neuron).map_or(&[], Vec::as_slice)
    }

    pub fn find_el(&self, signature: &str) -> Option<ElId> {
        self.el_signatures.get(signature).copied()
    }

    pub fn render_literal(&self, literal: Literal) -> String {
        format!("{}{}", literal.polarity.prefix(), self.label(literal.neuron))
    }

    fn render_literals(&self, literals: &[Literal]) -> String {
        let parts: Vec<String> = literals.iter().map(|l| self.render_literal(*l)).collect();
        parts.join(",")
    }

    /// Canonical structural signature of an excitatory link: literals
    /// sorted by label then polarity, followed by the post label. Equal
    /// structure yields an equal signature.
    pub fn el_signature_of(&self, pre: &[Literal], post: NeuronId) -> String {
        format!("[{}]->{}", self.render_literals(pre), self.label(post))
    }

    /// Canonical structural signature of an inhibitory link; embeds the
    /// target link's signature.
    pub fn il_signature_of(&self, pre: &[Literal], target: ElId) -> String {
        format!(
            "[{}]=>({})",
            self.render_literals(pre),
            self.el(target).signature()
        )
    }

    /// Sorts literals by (label, polarity), drops exact duplicates, and
    /// rejects empty sets, unknown neurons, and polarity conflicts.
    fn canonicalize_literals(&self, literals: &[Literal]) -> Result<Vec<Literal>> {
        if literals.is_empty() {
            return Err(Error::invalid("literal set must be non-empty"));
        }
        for l in literals {
            if l.neuron.index() >= self.neurons.len() {
                return Err(Error::not_found(format!(
                    "neuron id {:?} does not exist",
                    l.neuron
                )));
            }
        }
        let mut out: Vec<Literal> = literals.to_vec();
        out.sort_by(|a, b| {
            self.label(a.neuron)
                .cmp(self.label(b.neuron))
                .then(a.polarity.cmp(&b.polarity))
        });
        out.dedup();
        for pair in out.windows(2) {
            if pair[0].neuron == pair[1].neuron {
                return Err(Error::invalid(format!(
                    "literal set contains both polarities of '{}'",
                    self.label(pair[0].neuron)
                )));
            }
        }
        Ok(out)
    }

    /// Adds an excitatory link, or returns the existing one with the same
    /// structural signature. The `bool` is true when a link was created.
    pub fn add_excitatory_link(&mut self, pre: &[Literal], post: NeuronId) -> Result<(ElId, bool)> {
        if post.index() >= self.neurons.len() {
            return Err(Error::not_found(format!(
                "post neuron id {post:?} does not exist"
            )));
        }
        let pre = self.canonicalize_literals(pre)?;
        if pre.iter().any(|l| l.neuron == post) {
            return Err(Error::invalid(format!(
                "self-loop: post neuron '{}' appears among the pre-literals",
                self.label(post)
            )));
        }
        let signature = self.el_signature_of(&pre, post);
        if let Some(id) = self.el_signatures.get(&signature) {
            return Ok((*id, false));
        }
        let id = ElId(self.els.len() as u32);
        for l in &pre {
            self.els_by_pre.entry(l.neuron).or_default().push(id);
        }
        self.els_by_post.entry(post).or_default().push(id);
        self.el_signatures.insert(signature.clone(), id);
        self.els.push(ExcitatoryLink {
            id,
            pre,
            post,
            counters: Counters::fresh(),
            signature,
        });
        Ok((id, true))
    }

    /// Adds an inhibitory link targeting `target`, deduplicated by
    /// signature. The pre-set must be disjoint (by neuron) from the target
    /// link's pre-set.
    pub fn add_inhibitory_link(&mut self, pre: &[Literal], target: ElId) -> Result<(IlId, bool)> {
        if target.index() >= self.els.len() {
            return Err(Error::not_found(format!(
                "target excitatory link {target:?} does not exist"
            )));
        }
        let pre = self.canonicalize_literals(pre)?;
        {
            let target_el = self.el(target);
            for l in &pre {
                if target_el.pre.iter().any(|t| t.neuron == l.neuron) {
                    return Err(Error::invalid(format!(
                        "inhibitory pre-literal '{}' overlaps the target link's pre-set",
                        self.render_literal(*l)
                    )));
                }
            }
        }
        let signature = self.il_signature_of(&pre, target);
        if let Some(id) = self.il_signatures.get(&signature) {
            return Ok((*id, false));
        }
        let id = IlId(self.ils.len() as u32);
        for l in &pre {
            self.ils_by_pre.entry(l.neuron).or_default().push(id);
        }
        self.ils_by_target.entry(target).or_default().push(id);
        self.il_signatures.insert(signature.clone(), id);
        self.ils.push(InhibitoryLink {
            id,
            pre,
            target,
            counters: Counters::fresh(),
            signature,
        });
        Ok((id, true))
    }

    /// Hash of the full structural and counter state, independent of
    /// insertion order; used to check that read paths leave the network
    /// untouched and that serialized copies are equivalent.
    pub fn state_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        let mut labels: Vec<&str> = self.neurons.iter().map(|n| n.label.as_str()).collect();
        labels.sort_unstable();
        labels.hash(&mut h);
        let mut els: Vec<(&str, u64, u64)> = self
            .els
            .iter()
            .map(|el| {
                (
                    el.signature.as_str(),
                    el.counters.num_pre,
                    el.counters.num_post,
                )
            })
            .collect();
        els.sort_unstable();
        els.hash(&mut h);
        let mut ils: Vec<(&str, u64, u64)> = self
            .ils
            .iter()
            .map(|il| {
                (
                    il.signature.as_str(),
                    il.counters.num_pre,
                    il.counters.num_post,
                )
            })
            .collect();
        ils.sort_unstable();
        ils.hash(&mut h);
        h.finish()
    }

    /// Full consistency check: label uniqueness, signature maps, index
    /// agreement with the primary collections, counter bounds, and
    /// referential integrity. Intended for tests.
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.neurons.len() {
            return Err(Error::invalid("label index out of sync"));
        }
        for n in &self.neurons {
            if self.labels.get(&n.label) != Some(&n.id) {
                return Err(Error::invalid(format!("label index wrong for '{}'", n.label)));
            }
        }
        let mut els_by_post: HashMap<NeuronId, Vec<ElId>> = HashMap::new();
        let mut els_by_pre: HashMap<NeuronId, Vec<ElId>> = HashMap::new();
        for el in &self.els {
            if el.counters.num_post > el.counters.num_pre {
                return Err(Error::invalid(format!(
                    "counter bound violated on {}",
                    el.signature
                )));
            }
            if el.post.index() >= self.neurons.len() {
                return Err(Error::invalid("dangling post neuron"));
            }
            if self.el_signatures.get(&el.signature) != Some(&el.id) {
                return Err(Error::invalid("EL signature map out of sync"));
            }
            if self.el_signature_of(&el.pre, el.post) != el.signature {
                return Err(Error::invalid("EL signature not canonical"));
            }
            els_by_post.entry(el.post).or_default().push(el.id);
            for l in &el.pre {
                els_by_pre.entry(l.neuron).or_default().push(el.id);
            }
        }
        let mut ils_by_target: HashMap<ElId, Vec<IlId>> = HashMap::new();
        let mut ils_by_pre: HashMap<NeuronId, Vec<IlId>> = HashMap::new();
        for il in &self.ils {
            if il.counters.num_post > il.counters.num_pre {
                return Err(Error::invalid(format!(
                    "counter bound violated on {}",
                    il.signature
                )));
            }
            if il.target.index() >= self.els.len() {
                return Err(Error::invalid("dangling IL target"));
            }
            if self.il_signatures.get(&il.signature) != Some(&il.id) {
                return Err(Error::invalid("IL signature map out of sync"));
            }
            let target_el = self.el(il.target);
            for l in &il.pre {
                if target_el.pre.iter().any(|t| t.neuron == l.neuron) {
                    return Err(Error::invalid("IL pre overlaps target EL pre"));
                }
                ils_by_pre.entry(l.neuron).or_default().push(il.id);
            }
            ils_by_target.entry(il.target).or_default().push(il.id);
        }
        if els_by_post != self.els_by_post
            || els_by_pre != self.els_by_pre
            || ils_by_target != self.ils_by_target
            || ils_by_pre != self.ils_by_pre
        {
            return Err(Error::invalid("incremental indexes disagree with rebuild"));
        }
        Ok(())
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "network: {} neurons, {} ELs, {} ILs",
            self.neurons.len(),
            self.els.len(),
            self.ils.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(net: &mut Network, label: &str, positive: bool) -> Literal {
        let id = net.find_or_create_neuron(label).unwrap();
        if positive {
            Literal::positive(id)
        } else {
            Literal::negative(id)
        }
    }

    #[test]
    fn find_or_create_is_idempotent() {
        let mut net = Network::new();
        let a = net.find_or_create_neuron("FeS2").unwrap();
        let b = net.find_or_create_neuron("FeS2").unwrap();
        assert_eq!(a, b);
        assert_eq!(net.neuron_count(), 1);
    }

    #[test]
    fn empty_label_rejected() {
        let mut net = Network::new();
        assert!(matches!(
            net.find_or_create_neuron(""),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn labels_are_case_sensitive() {
        let mut net = Network::new();
        let a = net.find_or_create_neuron("o2").unwrap();
        let b = net.find_or_create_neuron("O2").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn el_creation_and_dedup() {
        let mut net = Network::new();
        let fes2 = lit(&mut net, "FeS2", true);
        let so2 = net.find_or_create_neuron("SO2").unwrap();
        let (id, created) = net.add_excitatory_link(&[fes2], so2).unwrap();
        assert!(created);
        assert_eq!(net.el(id).weight(), Ratio::new(1, 1));
        let (id2, created2) = net.add_excitatory_link(&[fes2], so2).unwrap();
        assert!(!created2);
        assert_eq!(id, id2);
        assert_eq!(net.el(id).counters.num_pre(), 1);
        net.validate().unwrap();
    }

    #[test]
    fn self_loop_rejected() {
        let mut net = Network::new();
        let a = lit(&mut net, "A", true);
        let a_id = net.find_neuron("A").unwrap();
        assert!(matches!(
            net.add_excitatory_link(&[a], a_id),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unknown_post_neuron_rejected() {
        let mut net = Network::new();
        let a = lit(&mut net, "A", true);
        let mut other = Network::new();
        other.find_or_create_neuron("x").unwrap();
        other.find_or_create_neuron("y").unwrap();
        let foreign = other.find_neuron("y").unwrap();
        assert!(matches!(
            net.add_excitatory_link(&[a], foreign),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn il_requires_disjoint_pre() {
        let mut net = Network::new();
        let o2 = lit(&mut net, "O2", true);
        let so3 = net.find_or_create_neuron("SO3").unwrap();
        let (el, _) = net.add_excitatory_link(&[o2], so3).unwrap();
        assert!(matches!(
            net.add_inhibitory_link(&[o2], el),
            Err(Error::InvalidArgument(_))
        ));
        let fes2 = lit(&mut net, "FeS2", true);
        let (il, created) = net.add_inhibitory_link(&[fes2], el).unwrap();
        assert!(created);
        let (_, created2) = net.add_inhibitory_link(&[fes2], el).unwrap();
        assert!(!created2);
        assert_eq!(net.il(il).weight(), Ratio::new(1, 1));
        net.validate().unwrap();
    }

    #[test]
    fn signature_is_order_independent_and_polarity_sensitive() {
        let mut net = Network::new();
        let a = lit(&mut net, "a", true);
        let b = lit(&mut net, "b", true);
        let m = net.find_or_create_neuron("m").unwrap();
        let s1 = net.el_signature_of(&net.canonicalize_literals(&[b, a]).unwrap(), m);
        let s2 = net.el_signature_of(&net.canonicalize_literals(&[a, b]).unwrap(), m);
        assert_eq!(s1, s2);

        let not_a = lit(&mut net, "a", false);
        let bn = net.find_neuron("b").unwrap();
        let (p, _) = net.add_excitatory_link(&[a], bn).unwrap();
        let (n, _) = net.add_excitatory_link(&[not_a], bn).unwrap();
        assert_ne!(net.el(p).signature(), net.el(n).signature());
    }

    #[test]
    fn il_signature_contains_target_signature() {
        let mut net = Network::new();
        let a = lit(&mut net, "a", true);
        let b = net.find_or_create_neuron("b").unwrap();
        let (el, _) = net.add_excitatory_link(&[a], b).unwrap();
        let d = lit(&mut net, "d", true);
        let (il, _) = net.add_inhibitory_link(&[d], el).unwrap();
        assert!(net.il(il).signature().contains(net.el(el).signature()));
    }

    #[test]
    fn polarity_conflict_in_literal_set_rejected() {
        let mut net = Network::new();
        let a = lit(&mut net, "a", true);
        let not_a = lit(&mut net, "a", false);
        let b = net.find_or_create_neuron("b").unwrap();
        assert!(net.add_excitatory_link(&[a, not_a], b).is_err());
    }

    #[test]
    fn weight_formula() {
        assert_eq!(
            link_weight(&Counters::new(10, 7).unwrap()),
            Ratio::new(7, 10)
        );
        assert_eq!(link_weight(&Counters::fresh()), Ratio::from_integer(1));
        assert_eq!(
            link_weight(&Counters::new(0, 0).unwrap()),
            Ratio::from_integer(0)
        );
    }

    #[test]
    fn counters_reject_post_above_pre() {
        assert!(Counters::new(3, 4).is_err());
    }
}
