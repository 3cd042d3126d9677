use alloc::string::String;

/// Usage and construction errors. Constraint violations of a topology are
/// not errors; they are reported through [`crate::Verdict`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node id {id} out of range for {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },
    #[error("pair ({0}, {0}) is not an edge")]
    SelfPair(usize),
    #[error("topologies support at most {max} nodes, got {n}")]
    TooManyNodes { n: usize, max: usize },
    #[error("toggle matrix is not symmetric with zero diagonal at ({i}, {j})")]
    AsymmetricAction { i: usize, j: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid node record {id}: {msg}")]
    InvalidNode { id: usize, msg: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("action index {index} out of range (size {size})")]
    ActionOutOfRange { index: u128, size: u128 },
    #[error("action space too large: {0}")]
    SpaceTooLarge(String),
    #[error("search refused: {size} actions exceed the cap of {cap}")]
    Refused { size: u128, cap: u128 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
