//! Run configuration and its validity rules.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("population size N = {0} must be at least 2")]
    NodeCount(usize),
    #[error("mean degree k = {k} must satisfy 2 <= k < N = {n}")]
    DegreeRange { k: usize, n: usize },
    #[error("N * k = {0} must be even (edges come in pairs of stubs)")]
    OddStubTotal(usize),
    #[error("selection intensity beta = {0} must be positive")]
    NonPositiveBeta(f64),
    #[error("relative rate W = {0} must be >= 0 (may be infinite)")]
    NegativeW(f64),
    #[error("time limit must be positive")]
    ZeroTimeLimit,
    #[error("initial cooperator fraction {0} outside [0, 1]")]
    CoopInitRange(f64),
}

/// Serialize non-finite rate ratios as the string `"inf"`; accept either a
/// number or that string on input. JSON has no literal for infinity.
pub mod rate_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => super::parse_rate(&s)
                .map_err(|_| de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

/// Parses a rate ratio from text, accepting `inf`/`infinity` (any case).
pub fn parse_rate(s: &str) -> Result<f64, std::num::ParseFloatError> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
}

/// Parameters of a single-run environment.
///
/// `w` is the rate of structural (rewiring) events relative to strategy
/// events: a step is structural with probability `w / (1 + w)`. Zero freezes
/// the topology; infinity freezes the strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    #[serde(with = "rate_serde")]
    pub w: f64,
    pub time_limit: u64,
    pub seed: u64,
    /// Probability that a node starts as a cooperator.
    pub coop_init: f64,
}

impl SimConfig {
    pub fn new(n: usize, k: usize, beta: f64, w: f64, time_limit: u64, seed: u64) -> Result<Self, ConfigError> {
        let cfg = SimConfig {
            n,
            k,
            beta,
            w,
            time_limit,
            seed,
            coop_init: 0.5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::NodeCount(self.n));
        }
        if self.k < 2 || self.k >= self.n {
            return Err(ConfigError::DegreeRange { k: self.k, n: self.n });
        }
        if !(self.n * self.k).is_multiple_of(2) {
            return Err(ConfigError::OddStubTotal(self.n * self.k));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(ConfigError::NonPositiveBeta(self.beta));
        }
        if self.w.is_nan() || self.w < 0.0 {
            return Err(ConfigError::NegativeW(self.w));
        }
        if self.time_limit == 0 {
            return Err(ConfigError::ZeroTimeLimit);
        }
        if !(0.0..=1.0).contains(&self.coop_init) {
            return Err(ConfigError::CoopInitRange(self.coop_init));
        }
        Ok(())
    }

    /// Number of edges implied by `n` and `k`.
    pub fn edge_target(&self) -> usize {
        self.n * self.k / 2
    }
}

/// Tuned defaults per population size: mean degree, selection intensity,
/// and event budget scale together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvDefaults {
    pub k: usize,
    pub beta: f64,
    pub time_limit: u64,
}

/// Built-in defaults for the population sizes used throughout the
/// experiments. Other sizes require explicit `k`/`beta`/`time_limit`.
pub fn env_defaults(n: usize) -> Option<EnvDefaults> {
    let (k, beta, time_limit) = match n {
        10 => (4, 0.1, 1_000),
        30 => (8, 0.05, 3_000),
        100 => (28, 0.005, 10_000),
        500 => (30, 0.005, 30_000),
        1000 => (30, 0.005, 100_000),
        _ => return None,
    };
    Some(EnvDefaults { k, beta, time_limit })
}

/// Selection intensity for mediator (recommender) imitation in competition
/// runs.
pub const DEFAULT_BETA_MED: f64 = 0.05;
