//! Durable forms of a network: a canonical JSON document, plain-text event
//! logs, Graphviz export, and merging of independently trained networks.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::{self, ConvergenceReport, Mode, Transition};
use crate::network::{Counters, Literal, Network};
use crate::reasoning::Event;

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElDoc {
    pre: Vec<String>,
    post: String,
    num_pre: u64,
    num_post: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IlDoc {
    pre: Vec<String>,
    /// Signature of the target excitatory link, e.g. `[+O2]->SO3`.
    target: String,
    num_pre: u64,
    num_post: u64,
}

/// On-disk network form. Neurons are sorted by label and links by
/// signature, so serializing the same network always yields the same
/// bytes.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    version: u32,
    neurons: Vec<String>,
    excitatory: Vec<ElDoc>,
    inhibitory: Vec<IlDoc>,
}

fn to_document(network: &Network) -> NetworkDocument {
    let mut neurons: Vec<String> = network.neurons().map(|n| n.label.clone()).collect();
    neurons.sort();
    let mut excitatory: Vec<(String, ElDoc)> = network
        .els()
        .map(|el| {
            (
                el.signature().to_string(),
                ElDoc {
                    pre: el
                        .pre()
                        .iter()
                        .map(|l| network.render_literal(*l))
                        .collect(),
                    post: network.label(el.post).to_string(),
                    num_pre: el.counters.num_pre(),
                    num_post: el.counters.num_post(),
                },
            )
        })
        .collect();
    excitatory.sort_by(|a, b| a.0.cmp(&b.0));
    let mut inhibitory: Vec<(String, IlDoc)> = network
        .ils()
        .map(|il| {
            (
                il.signature().to_string(),
                IlDoc {
                    pre: il
                        .pre()
                        .iter()
                        .map(|l| network.render_literal(*l))
                        .collect(),
                    target: network.el(il.target).signature().to_string(),
                    num_pre: il.counters.num_pre(),
                    num_post: il.counters.num_post(),
                },
            )
        })
        .collect();
    inhibitory.sort_by(|a, b| a.0.cmp(&b.0));
    NetworkDocument {
        version: DOCUMENT_VERSION,
        neurons,
        excitatory: excitatory.into_iter().map(|(_, d)| d).collect(),
        inhibitory: inhibitory.into_iter().map(|(_, d)| d).collect(),
    }
}

fn parse_doc_literal(network: &Network, token: &str) -> Result<Literal> {
    let (label, positive) = match token.strip_prefix('+') {
        Some(rest) => (rest, true),
        None => match token.strip_prefix('-') {
            Some(rest) => (rest, false),
            None => {
                return Err(Error::Document(format!(
                    "literal '{token}' lacks a +/- prefix"
                )))
            }
        },
    };
    let neuron = network
        .find_neuron(label)
        .ok_or_else(|| Error::Document(format!("literal '{token}' names no neuron")))?;
    Ok(if positive {
        Literal::positive(neuron)
    } else {
        Literal::negative(neuron)
    })
}

fn from_document(doc: &NetworkDocument) -> Result<Network> {
    if doc.version != DOCUMENT_VERSION {
        return Err(Error::Document(format!(
            "unsupported document version {}",
            doc.version
        )));
    }
    let mut network = Network::new();
    for label in &doc.neurons {
        network
            .find_or_create_neuron(label)
            .map_err(|e| Error::Document(e.to_string()))?;
    }
    let mut el_by_signature = HashMap::new();
    for el in &doc.excitatory {
        let pre: Vec<Literal> = el
            .pre
            .iter()
            .map(|t| parse_doc_literal(&network, t))
            .collect::<Result<_>>()?;
        let post = network
            .find_neuron(&el.post)
            .ok_or_else(|| Error::Document(format!("'{}' names no neuron", el.post)))?;
        let (id, created) = network
            .add_excitatory_link(&pre, post)
            .map_err(|e| Error::Document(e.to_string()))?;
        if !created {
            return Err(Error::Document(format!(
                "duplicate excitatory link '{}'",
                network.el(id).signature()
            )));
        }
        let counters = Counters::new(el.num_pre, el.num_post)
            .map_err(|e| Error::Document(e.to_string()))?;
        network.set_el_counters(id, counters);
        el_by_signature.insert(network.el(id).signature().to_string(), id);
    }
    for il in &doc.inhibitory {
        let pre: Vec<Literal> = il
            .pre
            .iter()
            .map(|t| parse_doc_literal(&network, t))
            .collect::<Result<_>>()?;
        let target = *el_by_signature.get(&il.target).ok_or_else(|| {
            Error::Document(format!(
                "inhibitory link targets unknown excitatory link '{}'",
                il.target
            ))
        })?;
        let (id, created) = network
            .add_inhibitory_link(&pre, target)
            .map_err(|e| Error::Document(e.to_string()))?;
        if !created {
            return Err(Error::Document(format!(
                "duplicate inhibitory link '{}'",
                network.il(id).signature()
            )));
        }
        let counters = Counters::new(il.num_pre, il.num_post)
            .map_err(|e| Error::Document(e.to_string()))?;
        network.set_il_counters(id, counters);
    }
    Ok(network)
}

pub fn to_json(network: &Network) -> String {
    let mut out = serde_json::to_string_pretty(&to_document(network)).expect("document is plain data");
    out.push('\n');
    out
}

pub fn from_json(text: &str) -> Result<Network> {
    let doc: NetworkDocument =
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    from_document(&doc)
}

pub fn save_network(network: &Network, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_json(network))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    from_json(&fs::read_to_string(path)?)
}

/// Parses an event-log text: one `pre -> post` transition per line, each
/// side in the `a,b,!c` event syntax, `#` comments and blank lines
/// ignored. An empty side is the empty event.
pub fn parse_event_log(text: &str) -> Result<Vec<Transition>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let Some((pre, post)) = line.split_once("->") else {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: "expected 'pre -> post'".into(),
            });
        };
        if post.contains("->") {
            return Err(Error::Parse {
                line: line_no,
                column: 1,
                message: "more than one '->' on a line".into(),
            });
        }
        let parse_side = |side: &str| {
            Event::parse(side).map_err(|e| Error::Parse {
                line: line_no,
                column: 1,
                message: e.to_string(),
            })
        };
        out.push(Transition::new(parse_side(pre)?, parse_side(post)?));
    }
    Ok(out)
}

fn write_event(event: &Event) -> String {
    event
        .positives()
        .iter()
        .cloned()
        .chain(event.negatives().iter().map(|l| format!("!{l}")))
        .collect::<Vec<_>>()
        .join(",")
}

/// Renders transitions in the format `parse_event_log` accepts.
pub fn write_event_log(transitions: &[Transition]) -> String {
    let mut out = String::new();
    for t in transitions {
        let _ = writeln!(out, "{} -> {}", write_event(&t.pre), write_event(&t.post));
    }
    out
}

/// Graphviz dot form. Every excitatory link gets a point-shaped junction
/// node so its conjunction and its inhibitors have somewhere to attach:
/// pre-literals feed the junction, the junction feeds the post neuron with
/// the weight as edge label, and inhibitory links run dashed from their
/// own junction to the target's junction. Output order is sorted by
/// label/signature so the same network always renders the same bytes.
pub fn export_dot(network: &Network) -> String {
    let mut out = String::from("digraph pldnn {\n  rankdir=LR;\n");
    let mut labels: Vec<&str> = network.neurons().map(|n| n.label.as_str()).collect();
    labels.sort();
    for label in &labels {
        let _ = writeln!(out, "  \"{label}\" [shape=ellipse];");
    }

    let mut els: Vec<_> = network.els().collect();
    els.sort_by(|a, b| a.signature().cmp(b.signature()));
    let el_junction: HashMap<&str, String> = els
        .iter()
        .enumerate()
        .map(|(i, el)| (el.signature(), format!("el{i}")))
        .collect();
    for el in &els {
        let junction = &el_junction[el.signature()];
        let _ = writeln!(
            out,
            "  \"{junction}\" [shape=point, xlabel=\"{}\"];",
            el.weight()
        );
        for literal in el.pre() {
            let style = match literal.polarity {
                crate::network::Polarity::Positive => "solid",
                crate::network::Polarity::Negative => "dotted",
            };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{junction}\" [style={style}, arrowhead=none];",
                network.label(literal.neuron)
            );
        }
        let _ = writeln!(
            out,
            "  \"{junction}\" -> \"{}\" [label=\"{}\"];",
            network.label(el.post),
            el.weight()
        );
    }

    let mut ils: Vec<_> = network.ils().collect();
    ils.sort_by(|a, b| a.signature().cmp(b.signature()));
    for (i, il) in ils.iter().enumerate() {
        let junction = format!("il{i}");
        let _ = writeln!(out, "  \"{junction}\" [shape=point];");
        for literal in il.pre() {
            let style = match literal.polarity {
                crate::network::Polarity::Positive => "solid",
                crate::network::Polarity::Negative => "dotted",
            };
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{junction}\" [style={style}, arrowhead=none];",
                network.label(literal.neuron)
            );
        }
        let target = &el_junction[network.el(il.target).signature()];
        let _ = writeln!(
            out,
            "  \"{junction}\" -> \"{target}\" [style=dashed, label=\"{}\"];",
            il.weight()
        );
    }
    out.push_str("}\n");
    out
}

fn remap_literals(source: &Network, merged: &Network, pre: &[Literal]) -> Vec<Literal> {
    pre.iter()
        .map(|l| {
            let neuron = merged
                .find_neuron(source.label(l.neuron))
                .expect("all labels copied before links");
            Literal { neuron, ..*l }
        })
        .collect()
}

fn copy_into(source: &Network, merged: &mut Network) -> Result<()> {
    for neuron in source.neurons() {
        merged.find_or_create_neuron(&neuron.label)?;
    }
    let mut el_map = HashMap::new();
    for el in source.els() {
        let pre = remap_literals(source, merged, el.pre());
        let post = merged
            .find_neuron(source.label(el.post))
            .expect("all labels copied before links");
        let (id, created) = merged.add_excitatory_link(&pre, post)?;
        if created {
            merged.set_el_counters(id, el.counters);
        } else {
            merged.merge_el_counters(id, el.counters);
        }
        el_map.insert(el.id, id);
    }
    for il in source.ils() {
        let pre = remap_literals(source, merged, il.pre());
        let target = el_map[&il.target];
        let (id, created) = merged.add_inhibitory_link(&pre, target)?;
        if created {
            merged.set_il_counters(id, il.counters);
        } else {
            merged.merge_il_counters(id, il.counters);
        }
    }
    Ok(())
}

/// Unions two networks: neurons by label, links by signature, counters of
/// colliding links summed. When replay transitions are given the merged
/// network is trained on them afterwards so the combination can grow any
/// links neither source could have learned alone.
pub fn merge_networks(
    a: &Network,
    b: &Network,
    replay: Option<&[Transition]>,
    max_epochs: usize,
    mode: Mode,
) -> Result<(Network, Option<ConvergenceReport>)> {
    let mut merged = Network::new();
    copy_into(a, &mut merged)?;
    copy_into(b, &mut merged)?;
    let report = match replay {
        Some(transitions) => Some(learning::train(&mut merged, transitions, max_epochs, mode)?),
        None => None,
    };
    Ok((merged, report))
}
