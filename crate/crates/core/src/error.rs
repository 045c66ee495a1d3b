use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("face id {0} out of range 0..6")]
    InvalidFace(usize),
    #[error("local angles ({xi}, {eta}) outside the face")]
    OutOfFace { xi: f64, eta: f64 },
    #[error("point outside cell: reference coordinates ({u}, {v})")]
    OutOfCell { u: f64, v: f64 },
    #[error("kernel is singular for coincident points")]
    Singular,
    #[error("dilogarithm argument {0} exceeds 1")]
    DilogDomain(f64),
    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot build a tree from an empty particle set")]
    EmptyTree,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("reference field is identically zero")]
    DegenerateReference,
    #[error("input format: {0}")]
    InputFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
