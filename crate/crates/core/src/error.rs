use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid pseudo-basis: {0}")]
    InvalidBasis(String),

    #[error("basis enumeration needs {needed} pseudo-bases, above the cap of {cap}")]
    EnumerationCap { needed: u128, cap: usize },

    #[error("linear program is unbounded (improving ray found)")]
    UnboundedLp,

    #[error("duality gap {gap:e} exceeds tolerance (primal {primal}, dual {dual})")]
    DualityGap { primal: f64, dual: f64, gap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid arm index {arm} (instance has {arms} arms)")]
    InvalidArm { arm: usize, arms: usize },

    #[error("arm {0} has not been pulled yet")]
    UnpulledArm(usize),

    #[error("initialization did not observe a nonzero cost for arm {arm} after {rounds} pulls")]
    InitNonterminating { arm: usize, rounds: u64 },

    #[error("singular basis matrix in the load balancer")]
    SingularBasis,
}

pub type Result<T> = core::result::Result<T, Error>;
