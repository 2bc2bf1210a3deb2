use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid code distance {0}: must be odd and at least 3")]
    InvalidDistance(usize),
    #[error("Pauli channel of arity {arity} expects {expected} probabilities, got {got}")]
    ChannelArity { arity: usize, expected: usize, got: usize },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("CNOT control and target are both logical qubit {0}")]
    SelfCnot(usize),
    #[error("invalid logical circuit: {0}")]
    InvalidCircuit(String),
    #[error("invalid mirror circuit request: {0}")]
    InvalidMirror(String),
    #[error("circuit parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("shot record and detector map disagree: {0}")]
    InconsistentCircuit(String),
    #[error("file format error: {0}")]
    Format(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("enumeration of {0} fault subsets exceeds the guard")]
    InstanceTooLarge(u128),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
