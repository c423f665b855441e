use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero span: all input vectors are numerically zero")]
    ZeroSpan,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis is not orthonormal: max deviation {deviation:e}")]
    NotOrthonormal { deviation: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid Friedrichs matrix: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidMatrix(Vec<crate::fmatrix::Violation>),
    #[error("realization requires entries < 1; 1-entries need an infinite-dimensional pair (out of scope) (entry ({row},{col}))")]
    UnitEntry { row: usize, col: usize },
    #[error("not a permutation of 1..={n}: {detail}")]
    NotPermutation { n: usize, detail: String },
    #[error("greedy branch budget of {budget} partial paths exceeded")]
    BranchBudgetExceeded { budget: usize },
    #[error("N = {n} exceeds the cap of {cap} for exact search")]
    TooLarge { n: usize, cap: usize },
    #[error("operation needs at least {min} subspaces, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("bound violation: {0}")]
    BoundViolation(String),
    #[error("product bound hypotheses not met: subspaces {0} and {1} are not quasi-disjoint")]
    NotQuasiDisjoint(usize, usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
