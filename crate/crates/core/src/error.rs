//! Error type shared across the workbench.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("coefficient levels differ: {0} vs {1}")]
    LevelMismatch(u32, u32),
    #[error("coefficient primes differ: {0} vs {1}")]
    EllMismatch(u64, u64),
    #[error("level {got} out of range: {why}")]
    LevelRange { got: u32, why: &'static str },
    #[error("modulus {0}^{1} does not fit in 64 bits")]
    ModulusOverflow(u64, u32),
    #[error("cancellation precondition violated: {0}")]
    CancellationPrecondition(String),
    #[error("characteristics differ: {0} vs {1}")]
    CharMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("degree {0} does not divide {1}")]
    NotASubfield(u32, u32),
    #[error("zero polynomial has no root multiset")]
    ZeroPolynomial,
    #[error("element is zero where a nonzero value is required")]
    ZeroElement,
    #[error("no compatible embedding root for F_{{p^{0}}} into F_{{p^{1}}}")]
    EmbeddingConflict(u32, u32),
    #[error("root finding over characteristic 2 is not supported")]
    CharTwoUnsupported,
    #[error("polynomial parse error at byte {at}: {msg}")]
    PolyParse { at: usize, msg: String },
    #[error("curve rejected: {0}")]
    BadCurve(String),
    #[error("flag rejected: {0}")]
    BadFlag(String),
    #[error("element has nonzero order {0} along the carrier curve")]
    NotAUnitOnCurve(i64),
    #[error("valuation is trivial where a nontrivial one is required")]
    TrivialValuation,
    #[error("convex index {0} out of range for rank {1}")]
    ConvexIndexRange(u32, u32),
    #[error("rank {rank} flag violates the Abhyankar bound for trdeg {trdeg}")]
    AbhyankarViolation { rank: u32, trdeg: u32 },
    #[error("functional term refers to unregistered flag {0}")]
    UnknownFlag(usize),
    #[error("coordinate {coord} exceeds rank {rank} of flag {flag}")]
    CoordOutOfRange { flag: usize, coord: u32, rank: u32 },
    #[error("residue functional requires a rank-1 line carrier")]
    ResidueCarrier,
    #[error("functional has terms incomparable to the given valuation")]
    IncomparableTerms,
    #[error("no registered flag is structurally inertial for the whole set")]
    NotValuativeInRegistry,
    #[error("configuration rejected: {0}")]
    BadConfig(String),
    #[error("scenario parse error at line {line}: {msg}")]
    ScenarioParse { line: usize, msg: String },
    #[error("scenario reference `{0}` does not resolve")]
    UnresolvedReference(String),
    #[error("universe invalid: {0}")]
    BadUniverse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
