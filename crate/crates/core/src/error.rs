use thiserror::Error;

use crate::scalar::NumberParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}[{index}] = {value} is negative")]
    Negative {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{what}[{index}] = {value} exceeds 1")]
    AboveOne {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{what} sums to {sum}, expected 1")]
    BadSum { what: &'static str, sum: f64 },
    #[error("gamma setting column {setting} sums to {sum}, expected 1")]
    BadColumn { setting: usize, sum: f64 },
    #[error("detector probability delta[{index}] = {value} is not strictly inside (0, 1)")]
    DetectorRange { index: usize, value: f64 },
    #[error("{what}[{index}] = {value} lies outside [-1, 1]")]
    OutOfRange {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("{0} is not a finite number")]
    NonFinite(&'static str),
    #[error("theta1 = {theta1_deg} deg does not equal theta2 + theta3 + theta4 = {sum_deg} deg")]
    AngleConstraint { theta1_deg: f64, sum_deg: f64 },
    #[error("one-sided probabilities {which}: {first} + {second} != 1")]
    OneSided {
        which: &'static str,
        first: f64,
        second: f64,
    },
    #[error("deterministic selection slot {slot} = {value} is not one of {allowed:?}")]
    BadSelection {
        slot: usize,
        value: usize,
        allowed: [usize; 4],
    },
    #[error("correlation vector violates CHSH: s{index} = {value}")]
    Infeasible { index: usize, value: f64 },
    #[error("setting pair {pair} was observed {count} times, need at least 2")]
    MissingSettingPair { pair: &'static str, count: u64 },
    #[error("invalid conditional query: {0}")]
    InvalidQuery(&'static str),
    #[error(transparent)]
    Number(#[from] NumberParseError),
    #[error("instance file: {0}")]
    Instance(String),
    #[error("trial record line {line}: {message}")]
    TrialRecord { line: u64, message: String },
}
