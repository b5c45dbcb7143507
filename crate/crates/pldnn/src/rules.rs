//! Propositional if-then rule front-end: a small one-rule-per-line DSL,
//! compilation of rules into training transitions (optionally with
//! closed-world sibling negatives), and extraction of human-readable rules
//! back out of a learned network.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::learning::{self, Mode, Transition};
use crate::network::{Network, Polarity};
use crate::reasoning::{reason_step_deterministic, Event};

/// An if-then rule over (label, polarity) literals. Both sides are kept as
/// label -> is-positive maps, so a label cannot carry both polarities on
/// one side and ordering is canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub antecedent: BTreeMap<String, bool>,
    pub consequent: BTreeMap<String, bool>,
}

impl Rule {
    pub fn new(
        antecedent: impl IntoIterator<Item = (String, bool)>,
        consequent: impl IntoIterator<Item = (String, bool)>,
    ) -> Result<Self> {
        let rule = Rule {
            antecedent: antecedent.into_iter().collect(),
            consequent: consequent.into_iter().collect(),
        };
        if rule.antecedent.is_empty() || rule.consequent.is_empty() {
            return Err(Error::invalid("rule sides must be non-empty"));
        }
        Ok(rule)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RuleLibrary {
    rules: Vec<Rule>,
    /// 1-based source line of each rule, parallel to `rules`.
    lines: Vec<usize>,
}

impl RuleLibrary {
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn source_line(&self, idx: usize) -> usize {
        self.lines[idx]
    }

    /// Every label mentioned by any rule, on either side.
    pub fn universe(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            out.extend(rule.antecedent.keys().cloned());
            out.extend(rule.consequent.keys().cloned());
        }
        out
    }
}

impl PartialEq for RuleLibrary {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

fn is_identifier(token: &str) -> bool {
    !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const KEYWORDS: [&str; 4] = ["IF", "AND", "THEN", "NOT"];

struct LineParser<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
    line_no: usize,
    line_len: usize,
}

impl<'a> LineParser<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        let mut tokens = Vec::new();
        let mut col = 0;
        for part in line.split_whitespace() {
            let offset = line[col..].find(part).unwrap() + col;
            tokens.push((offset, part));
            col = offset + part.len();
        }
        LineParser {
            tokens,
            pos: 0,
            line_no,
            line_len: line.len(),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let column = self
            .tokens
            .get(self.pos)
            .map(|(c, _)| c + 1)
            .unwrap_or(self.line_len + 1);
        Error::Parse {
            line: self.line_no,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.pos).map(|(_, t)| *t)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(t) if t == kw => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected '{kw}', found '{t}'"))),
            None => Err(self.error(format!("expected '{kw}'"))),
        }
    }

    fn literal(&mut self) -> Result<(String, bool)> {
        let mut positive = true;
        if self.peek() == Some("NOT") {
            positive = false;
            self.pos += 1;
        }
        match self.peek() {
            Some(t) if is_identifier(t) && !KEYWORDS.contains(&t) => {
                self.pos += 1;
                Ok((t.to_string(), positive))
            }
            Some(t) => Err(self.error(format!("expected identifier, found '{t}'"))),
            None => Err(self.error("expected identifier")),
        }
    }

    /// `lit (AND lit)*` up to `stop` or end of line.
    fn literal_list(&mut self, stop: Option<&str>) -> Result<Vec<(String, bool)>> {
        let mut out = vec![self.literal()?];
        loop {
            match self.peek() {
                Some(t) if Some(t) == stop => break,
                Some("AND") => {
                    self.pos += 1;
                    out.push(self.literal()?);
                }
                Some(t) => return Err(self.error(format!("expected 'AND', found '{t}'"))),
                None => break,
            }
        }
        Ok(out)
    }
}

/// Parses the rule DSL: one `IF lit (AND lit)* THEN lit (AND lit)*` per
/// line, `lit := [NOT] identifier`, `#` comments, blank lines ignored.
pub fn parse_rules(text: &str) -> Result<RuleLibrary> {
    let mut library = RuleLibrary::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut p = LineParser::new(line, line_no);
        p.expect_keyword("IF")?;
        let antecedent = p.literal_list(Some("THEN"))?;
        p.expect_keyword("THEN")?;
        let consequent = p.literal_list(None)?;

        let mut rule = Rule {
            antecedent: BTreeMap::new(),
            consequent: BTreeMap::new(),
        };
        for (side, literals) in [
            (&mut rule.antecedent, antecedent),
            (&mut rule.consequent, consequent),
        ] {
            for (label, positive) in literals {
                if let Some(prev) = side.insert(label.clone(), positive) {
                    if prev != positive {
                        return Err(Error::Semantic {
                            line: line_no,
                            message: format!("'{label}' appears with both polarities"),
                        });
                    }
                }
            }
        }
        if library.rules.contains(&rule) {
            return Err(Error::Semantic {
                line: line_no,
                message: "duplicate rule".into(),
            });
        }
        library.lines.push(line_no);
        library.rules.push(rule);
    }
    Ok(library)
}

fn render_side(side: &BTreeMap<String, bool>) -> String {
    side.iter()
        .map(|(label, positive)| {
            if *positive {
                label.clone()
            } else {
                format!("NOT {label}")
            }
        })
        .collect::<Vec<_>>()
        .join(" AND ")
}

/// Canonical textual form; `parse_rules(render_rules(lib)) == lib`.
pub fn render_rules(library: &RuleLibrary) -> String {
    let mut out = String::new();
    for rule in &library.rules {
        out.push_str(&format!(
            "IF {} THEN {}\n",
            render_side(&rule.antecedent),
            render_side(&rule.consequent)
        ));
    }
    out
}

/// Compiles each rule into one training transition. When closed-world
/// groups are given, a positive antecedent label within a group implies
/// explicit negatives for its group siblings in the pre-event.
pub fn rules_to_transitions(
    library: &RuleLibrary,
    closed_world_groups: Option<&[BTreeSet<String>]>,
) -> Result<Vec<Transition>> {
    let mut out = Vec::with_capacity(library.rules.len());
    for rule in &library.rules {
        let positives: BTreeSet<String> = rule
            .antecedent
            .iter()
            .filter(|(_, pos)| **pos)
            .map(|(l, _)| l.clone())
            .collect();
        let mut negatives: BTreeSet<String> = rule
            .antecedent
            .iter()
            .filter(|(_, pos)| !**pos)
            .map(|(l, _)| l.clone())
            .collect();
        if let Some(groups) = closed_world_groups {
            for group in groups {
                let present: Vec<&String> = group.intersection(&positives).collect();
                if present.is_empty() {
                    continue;
                }
                for sibling in group {
                    if !positives.contains(sibling) {
                        negatives.insert(sibling.clone());
                    }
                }
            }
        }
        let pre = Event::new(positives, negatives)?;
        let post = Event::new(
            rule.consequent
                .iter()
                .filter(|(_, pos)| **pos)
                .map(|(l, _)| l.clone()),
            rule.consequent
                .iter()
                .filter(|(_, pos)| !**pos)
                .map(|(l, _)| l.clone()),
        )?;
        out.push(Transition::new(pre, post));
    }
    Ok(out)
}

/// A single closed-world group spanning the whole label universe of the
/// library: any positive observation implies every unmentioned thing did
/// not happen.
pub fn universe_group(library: &RuleLibrary) -> Vec<BTreeSet<String>> {
    vec![library.universe()]
}

/// One inhibitory link rendered as an exception: the rule is blocked when
/// this whole literal conjunction holds.
#[derive(Clone, Debug)]
pub struct Exception {
    pub literals: Vec<(String, bool)>,
    pub weight: Ratio<u64>,
}

/// A rule read off one excitatory link, with the inhibitors on that link
/// as exceptions.
#[derive(Clone, Debug)]
pub struct ExtractedRule {
    pub conditions: Vec<(String, bool)>,
    pub exceptions: Vec<Exception>,
    pub consequent: String,
    pub weight: Ratio<u64>,
}

/// Everything read out of a network: the per-link rules with exceptions
/// plus the explicit negated-consequent rules contributed by inhibitory
/// links.
#[derive(Clone, Debug, Default)]
pub struct ExtractedRules {
    pub rules: Vec<ExtractedRule>,
    /// `IF pre(IL) AND pre(EL) THEN NOT post(EL)` per qualifying inhibitor.
    pub negated: Vec<Rule>,
}

impl ExtractedRules {
    /// Flattens into the plain DSL library: exceptions become `AND NOT`
    /// literals on the host rule (exact for simple inhibitors), and each
    /// negated-consequent rule is emitted as an explicit rule.
    pub fn to_library(&self) -> RuleLibrary {
        let mut library = RuleLibrary::default();
        for rule in &self.rules {
            let mut antecedent: BTreeMap<String, bool> =
                rule.conditions.iter().cloned().collect();
            for exception in &rule.exceptions {
                for (label, positive) in &exception.literals {
                    let negated = !positive;
                    match antecedent.get(label) {
                        Some(existing) if *existing != negated => continue,
                        _ => {
                            antecedent.insert(label.clone(), negated);
                        }
                    }
                }
            }
            let candidate = Rule {
                antecedent,
                consequent: [(rule.consequent.clone(), true)].into_iter().collect(),
            };
            if !library.rules.contains(&candidate) {
                library.lines.push(library.rules.len() + 1);
                library.rules.push(candidate);
            }
        }
        for rule in &self.negated {
            if !library.rules.contains(rule) {
                library.lines.push(library.rules.len() + 1);
                library.rules.push(rule.clone());
            }
        }
        library
    }

    /// Evaluates the extracted rules on an event with the same semantics
    /// the network uses: conditions must match explicitly, and a rule is
    /// blocked when some exception conjunction matches in full. Returns
    /// the one-step positive consequences.
    pub fn evaluate(&self, event: &Event) -> BTreeSet<String> {
        let holds = |label: &str, positive: bool| {
            if positive {
                event.positives().contains(label)
            } else {
                event.negatives().contains(label)
            }
        };
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            if !rule.conditions.iter().all(|(l, p)| holds(l, *p)) {
                continue;
            }
            let blocked = rule
                .exceptions
                .iter()
                .any(|e| e.literals.iter().all(|(l, p)| holds(l, *p)));
            if !blocked {
                out.insert(rule.consequent.clone());
            }
        }
        out
    }
}

/// Reads rules back out of a learned network: every excitatory link with
/// weight at least `min_weight` becomes a rule, its inhibitors (at the
/// same weight floor) become exceptions and explicit negated-consequent
/// rules.
pub fn extract_rules(network: &Network, min_weight: Ratio<u64>) -> Result<ExtractedRules> {
    if min_weight > Ratio::from_integer(1) {
        return Err(Error::invalid("min_weight must be within [0, 1]"));
    }
    let literal_pairs = |pre: &[crate::network::Literal]| -> Vec<(String, bool)> {
        pre.iter()
            .map(|l| {
                (
                    network.label(l.neuron).to_string(),
                    l.polarity == Polarity::Positive,
                )
            })
            .collect()
    };
    let mut out = ExtractedRules::default();
    for el in network.els() {
        let el_qualifies = el.weight() >= min_weight;
        let conditions = literal_pairs(el.pre());
        let mut exceptions = Vec::new();
        for il_id in network.ils_targeting(el.id) {
            let il = network.il(*il_id);
            if il.weight() < min_weight {
                continue;
            }
            let trigger = literal_pairs(il.pre());
            if el_qualifies {
                exceptions.push(Exception {
                    literals: trigger.clone(),
                    weight: il.weight(),
                });
            }
            let mut antecedent: BTreeMap<String, bool> = trigger.into_iter().collect();
            antecedent.extend(conditions.iter().cloned());
            out.negated.push(Rule {
                antecedent,
                consequent: [(network.label(el.post).to_string(), false)]
                    .into_iter()
                    .collect(),
            });
        }
        if el_qualifies {
            out.rules.push(ExtractedRule {
                conditions,
                exceptions,
                consequent: network.label(el.post).to_string(),
                weight: el.weight(),
            });
        }
    }
    Ok(out)
}

/// One antecedent whose consequences disagree between the source rules,
/// the trained network, and the extracted rules.
#[derive(Clone, Debug)]
pub struct RoundTripMismatch {
    pub rule_index: usize,
    pub expected: BTreeSet<String>,
    pub network: BTreeSet<String>,
    pub extracted: BTreeSet<String>,
}

#[derive(Clone, Debug)]
pub struct RoundTripReport {
    pub converged: bool,
    pub mismatches: Vec<RoundTripMismatch>,
}

impl RoundTripReport {
    pub fn clean(&self) -> bool {
        self.converged && self.mismatches.is_empty()
    }
}

/// Compile -> train -> extract -> evaluate: for every rule antecedent the
/// network's one-step reasoning and the extracted rules' evaluation must
/// both equal the original consequent. Mismatches are reported, never
/// dropped.
pub fn round_trip_check(library: &RuleLibrary, max_epochs: usize) -> Result<RoundTripReport> {
    let groups = universe_group(library);
    let transitions = rules_to_transitions(library, Some(&groups))?;
    let mut network = Network::new();
    let convergence = learning::train(&mut network, &transitions, max_epochs, Mode::Deterministic)?;
    let extracted = extract_rules(&network, Ratio::new(1, 2))?;

    let mut mismatches = Vec::new();
    for (idx, (rule, transition)) in library.rules.iter().zip(&transitions).enumerate() {
        let expected: BTreeSet<String> = rule
            .consequent
            .iter()
            .filter(|(_, pos)| **pos)
            .map(|(l, _)| l.clone())
            .collect();
        let (rs, _) = reason_step_deterministic(&network, &transition.pre);
        let from_network = rs.member_labels(&network);
        let from_extracted = extracted.evaluate(&transition.pre);
        if from_network != expected || from_extracted != expected {
            mismatches.push(RoundTripMismatch {
                rule_index: idx,
                expected,
                network: from_network,
                extracted: from_extracted,
            });
        }
    }
    Ok(RoundTripReport {
        converged: convergence.converged,
        mismatches,
    })
}
