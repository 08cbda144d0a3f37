//! Arbitrary-base low-precision logarithmic number systems.
//!
//! A value is stored as a triplet (zero flag, sign, fixed-point exponent code):
//! `X = (-1)^s * scale * b^(code * 2^-f)`. The crate covers format/rounding
//! semantics ([`format`]), Φ-table add/sub arithmetic ([`arith`]), error sweeps
//! over bases ([`sweep`]), ROM cost modeling and BLIF export ([`synth`]), and a
//! direct-form FIR comparison harness ([`fir`]).

pub mod arith;
pub mod fir;
pub mod format;
pub mod minifloat;
pub mod sweep;
pub mod synth;

pub use format::{ExponentConvention, LnsFormat, LnsValue, Rounded, RoundingDomain};

/// Unified error type for the whole crate.
#[derive(Debug, thiserror::Error)]
pub enum LnsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("divide by zero")]
    DivideByZero,
    #[error("unknown decoder size: {0} address bits")]
    UnknownDecoder(u32),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LnsError>;
