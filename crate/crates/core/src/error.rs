use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("port labeling not 0..d-1 at node {node}")]
    PortLabeling { node: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("bound_n {bound} is smaller than the number of nodes {nodes}")]
    BoundTooSmall { bound: usize, nodes: usize },
    #[error("port {port} out of range at node {node} of degree {degree}")]
    PortOutOfRange { node: usize, port: u32, degree: usize },
    #[error("trail of odd length {0}")]
    OddTrail(usize),
    #[error("enumeration would produce at least {count} items, cap is {cap}")]
    EnumerationCap { count: u128, cap: u128 },
    #[error("view depth {have} is below the required {need}")]
    InsufficientDepth { have: usize, need: usize },
    #[error("trail of {edges} edges exceeds view depth {depth}")]
    TrailTooLong { edges: usize, depth: usize },
    #[error("no consistent transition: {0}")]
    NoTransition(String),
    #[error("node {0} is not occupied")]
    NotOccupied(usize),
    #[error("invalid view code: {0}")]
    InvalidCode(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("memory state not produced by the protocol: {0}")]
    InvalidMemory(String),
    #[error("protocol invariant violated: {0}")]
    Protocol(String),
}
