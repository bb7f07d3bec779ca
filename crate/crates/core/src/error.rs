use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside the valid range {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("density matrices have mismatched dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("unsupported photon count {0} (expected 1 or 2)")]
    UnsupportedPhotonCount(u32),

    #[error(
        "no fair point for K = {pulses}, mu = {mu}: Bob's bound at a = 1 is {bob_at_one}, below Alice's 0.75"
    )]
    NoFairPoint { pulses: u32, mu: f64, bob_at_one: f64 },

    #[error("honest abort target {target} is unreachable; achievable range is [{min}, {max}]")]
    TargetUnreachable { target: f64, min: f64, max: f64 },

    #[error("no pulse count up to {k_max} admits a fair point at honest abort {target}")]
    NoFeasiblePulseCount { k_max: u32, target: f64 },

    #[error("{check} failed at a = {a}: value {value}")]
    OracleViolation {
        check: &'static str,
        a: f64,
        value: f64,
    },

    #[error("bisection for {what} stalled with residual {residual}")]
    NoConvergence { what: &'static str, residual: f64 },
}
