//! Error types, one enum per subsystem.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("duplicate link ({0}, {1})")]
    DuplicateLink(String, String),
    #[error("self-loop ({0}, {0}) not allowed in a base network")]
    SelfLoop(String),
    #[error("link capacity must be >= 1 (got {0})")]
    BadCapacity(u64),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("packet type has identical source and destination `{0}`")]
    SourceIsDestination(String),
    #[error("route-schedule enumeration exceeded cap of {cap}")]
    EnumerationOverflow { cap: usize },
}

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("dependency degree is undefined for trace-backed processes")]
    UnknownDegree,
    #[error("trace parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("trace contains no usable rows")]
    EmptyTrace,
    #[error("invalid process parameter: {0}")]
    BadProcess(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("shrink factor must be in (0, 1] (got {0})")]
    InvalidEta(f64),
    #[error("horizon too short: need T > {need} (got {got})")]
    HorizonTooShort { need: usize, got: usize },
    #[error("frame rewards must cover exactly two cycles of {expected} mini-frames (got {got})")]
    BadCycleShape { expected: usize, got: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Error)]
pub enum ForwardingError {
    #[error("flow conservation violated during decomposition (residual {residual} on link {link} age {age})")]
    ConservationViolated { link: usize, age: u32, residual: f64 },
    #[error("node {node} is not on the forwarding support at age {age}")]
    NotOnSupport { node: usize, age: u32 },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),
    #[error("upper bound must be positive (got {0})")]
    NonpositiveBound(f64),
    #[error(transparent)]
    Net(#[from] NetError),
}
