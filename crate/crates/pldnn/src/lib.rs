//! Probabilistic logical dynamical neural networks: graphs of thing-neurons
//! wired by excitatory and inhibitory conjunction links, grown and weighted
//! automatically from observed event transitions, and queried for "what
//! happens next" deterministically or probabilistically.
//!
//! - [`network`] — the graph itself: neurons, links, counters, signatures.
//! - [`reasoning`] — read-only inference over observed events.
//! - [`learning`] — structure growth and weight updates from transitions.
//! - [`rules`] — the if-then rule DSL and rule extraction.
//! - [`ingest`] — CSV datasets with a TOML column schema.
//! - [`persist`] — JSON persistence, event logs, dot export, merging.

pub mod error;
pub mod ingest;
pub mod learning;
pub mod network;
pub mod persist;
pub mod reasoning;
pub mod rules;

pub use error::{Error, Result};
pub use learning::{observe_transition, train, Mode, Transition};
pub use network::{Literal, Network};
pub use reasoning::{
    reason_chain, reason_step_deterministic, reason_step_probabilistic, Event, ReasoningSet,
};
