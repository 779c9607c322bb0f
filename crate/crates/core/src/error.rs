use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("no valid holding records")]
    Empty,
    #[error("line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("edge ({stock}, {investor}) has invalid weight {weight}")]
    InvalidWeight {
        stock: usize,
        investor: usize,
        weight: f64,
    },
    #[error("duplicate edge ({stock}, {investor})")]
    DuplicateEdge { stock: usize, investor: usize },
    #[error("edge references {kind} index {index} out of range")]
    IndexOutOfRange { kind: &'static str, index: usize },
    #[error("{kind} {id:?} has no edges")]
    Isolated { kind: &'static str, id: String },
    #[error("unknown stock {0:?}")]
    UnknownStock(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum CascadeError {
    #[error("initial shock set is empty")]
    EmptyShock,
    #[error("shocked stock index {0} is not in the network")]
    UnknownShock(usize),
    #[error("market confidence {0} outside [0, 1]")]
    Alpha(f64),
    #[error("price limit {0} outside (0, 1)")]
    PriceLimit(f64),
    #[error("max_steps must be positive")]
    MaxSteps,
}

#[derive(Debug, Error, PartialEq)]
pub enum CriticalError {
    #[error("stocks {shock} and {target} share no investor")]
    NoCommonInvestor { shock: usize, target: usize },
    #[error("target and shock are the same stock ({0})")]
    SameStock(usize),
    #[error("collapse threshold {0} outside (0, 1]")]
    Threshold(f64),
    #[error("bisection tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
}

#[derive(Debug, Error)]
pub enum RewireError {
    #[error("fraction p = {0} outside [0, 1]")]
    Fraction(f64),
    #[error("cannot place {needed} new edges: only {free} free stock-investor pairs")]
    TooDense { needed: usize, free: usize },
    #[error("no rewiring without isolated nodes found after {0} attempts")]
    Isolated(usize),
    #[error("trials must be at least 1")]
    Trials,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Critical(#[from] CriticalError),
}

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("line {line}: {reason}")]
    BadEvent { line: usize, reason: String },
    #[error("invalid session {0:?}")]
    Session(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
