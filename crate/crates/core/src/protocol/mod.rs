//! The election protocol: labels, stage schedules, histories, the agent state machine, label
//! updates, leader choice and the phase-level executor.

pub mod history;
pub mod label;
pub mod leader;
pub mod machine;
pub mod semantic;
pub mod triples;

pub use history::HistoryOracle;
pub use label::{initial_label, label_order, Label};
pub use leader::{choose_leader, LeaderChoice};
pub use machine::{Decision, Protocol};
pub use semantic::{run_semantic, run_semantic_detailed, SemanticOutcome};
pub use triples::{build_triple_sequence, Triple, TripleSequence};
