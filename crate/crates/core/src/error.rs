use thiserror::Error;

/// Errors raised by the exact-arithmetic kernels.
///
/// `ResourceCap` variants are recoverable budget failures (the CLI maps them
/// to a dedicated exit code); everything else indicates invalid input.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("division by zero polynomial")]
    DivisionByZero,

    #[error("leading coefficient is not a unit")]
    NonUnitLeading,

    #[error("series inverse requires a unit leading coefficient")]
    NonUnitSeriesLead,

    #[error("precision underflow: result would carry no known digits")]
    PrecisionUnderflow,

    #[error("constant coefficient must be 1 for a (q-1)-th root, found a non-root")]
    ConstantTermNotOne,

    #[error("root iteration failed to converge")]
    RootFailure,

    #[error("no modulus table entry for p={p}, e={e}; supply one explicitly")]
    NoDefaultModulus { p: u64, e: usize },

    #[error("modulus is not irreducible")]
    ReducibleModulus,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("extension degree cap {cap} exceeded; largest kernel found has {found} points")]
    MaxDegreeExceeded { cap: usize, found: usize },

    #[error("inseparable operand: constant coefficient is zero")]
    Inseparable,

    #[error("precision budget exceeded: requested {requested}, cap {cap}")]
    ResourceCap { requested: i64, cap: i64 },

    #[error("unsupported base ring for this operation")]
    UnsupportedBase,

    #[error("operands belong to different rings")]
    RingMismatch,

    #[error("moduli do not match")]
    MismatchedModuli,

    #[error("point is not killed by the modulus")]
    NotTorsion,

    #[error("invalid h-structure: H^(q-1) != -alpha_2 or H not a unit")]
    InvalidHStructure,

    #[error("level map is not injective")]
    NonInjectiveLevel,

    #[error("n(theta) = 0: torsion is not etale over this base")]
    ThetaNotEtale,

    #[error("rank {0} is not supported (only 1 and 2)")]
    UnsupportedRank(usize),

    #[error("invalid drinfeld module data: {0}")]
    InvalidModule(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
