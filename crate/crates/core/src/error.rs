use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of {func} at {re}{im:+}i")]
    Pole { func: &'static str, re: f64, im: f64 },

    #[error("{what} did not converge within {cap} iterations")]
    NonConvergence { what: &'static str, cap: usize },

    #[error("ill-conditioned system in {what}: condition number {cond:.3e}")]
    IllConditioned { what: &'static str, cond: f64 },

    #[error("invalid parameter `{key}`: {msg}")]
    InvalidParams { key: &'static str, msg: String },

    #[error("resonance in Harish-Chandra recursion at k = {k}: |k+1-i*lambda| = {gap:.3e}")]
    Resonance { k: usize, gap: f64 },

    #[error("{what}: residual {residual:.3e} exceeds {limit:.1e}")]
    ResidualTooLarge { what: &'static str, residual: f64, limit: f64 },

    #[error("{what}: grid under-resolved ({have:.2} nodes per period, need {need})")]
    UnderResolved { what: &'static str, have: f64, need: f64 },

    #[error("{what}: {value} outside [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("degenerate parameters in {what}: {msg}")]
    Degenerate { what: &'static str, msg: String },

    #[error("non-finite value produced by {what}")]
    NonFinite { what: &'static str },

    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
