//! Leader election for anonymous mobile agents in port-labeled graphs.
//!
//! The crate has four layers:
//!
//! * [`graph`] and [`trail`]: configurations, routes, trails, enumeration.
//! * [`view`]: truncated views, their integer codes, view extension, transitions and
//!   ground-truth markings.
//! * [`eligibility`]: a brute-force checker for the eligibility condition.
//! * [`protocol`] and [`sim`]: the agent algorithm (labels, stage schedule, histories,
//!   confirmation, label updates, leader choice), a semantic executor, and a half-step
//!   simulator with pluggable schedulers.

pub mod compressed;
pub mod corpus;
pub mod eligibility;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod memory;
pub mod protocol;
pub mod sim;
pub mod trail;
pub mod view;

pub use error::{Error, Result};
pub use graph::{enumerate_trails, Configuration, Feasibility, GraphDocument, Route, Step};
pub use trail::Trail;

/// Parses and validates a graph document.
pub fn load_configuration(document: &str) -> Result<Configuration> {
    let doc: GraphDocument =
        serde_json::from_str(document).map_err(|e| Error::Malformed(e.to_string()))?;
    Configuration::from_document(&doc)
}

/// The trail of a route: exit and entry port of every step.
pub fn trail_of_route(route: &Route) -> Trail {
    Trail(route.steps.iter().flat_map(|s| [s.exit, s.entry]).collect())
}
