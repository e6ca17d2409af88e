//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A product of two integer-window letters left the window.
    /// The caller should retry with a larger bound.
    #[error("integer window overflow in factor {factor}: merged letter {value} exceeds bound {bound}")]
    WindowOverflow { factor: usize, value: i64, bound: i64 },

    /// A word references a factor or element that does not exist in the
    /// family it is being used with.
    #[error("word is not valid over this factor family: {0}")]
    FactorMismatch(String),

    #[error("cutoff n = {n} is too small: {reason}")]
    CutoffTooSmall { n: usize, reason: String },

    #[error("cutoff n = {n} exceeds the window size N = {max}")]
    CutoffTooLarge { n: usize, max: usize },

    /// The (len g, len hg) pair falls outside every coefficient case region;
    /// the truncation parameter must be raised relative to len h.
    #[error("length pair ({len_g}, {len_hg}) is outside every case region at n = {n}; raise n")]
    OutOfRegime { n: usize, len_g: usize, len_hg: usize },

    #[error("power iteration did not stabilise after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("operator dimension {dim} exceeds the dense-decomposition limit {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("position p = {p} outside 1..={n}")]
    InvalidPosition { p: usize, n: usize },

    #[error("operator bases do not match: expected {expected}, got {got}")]
    BasisMismatch { expected: String, got: String },

    #[error("invalid factor specification: {0}")]
    InvalidSpec(String),

    #[error("cannot parse word literal {literal:?}: {reason}")]
    BadWordLiteral { literal: String, reason: String },

    /// A decomposition term references a side-basis vector that the chosen
    /// length bound excludes.  Surfaced so the narrow-bound variant fails
    /// visibly instead of silently.
    #[error("left side vector of length {len} is outside L({p}, {iota}) under the narrow bound")]
    SideVectorOutsideBasis { p: usize, iota: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
