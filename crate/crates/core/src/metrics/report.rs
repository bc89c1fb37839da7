use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

/// A metric value with its numerical error and how it was obtained.
///
/// For Monte Carlo estimates `abs_error` is the binomial standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport<T> {
    pub name: String,
    pub value: T,
    pub abs_error: T,
    pub method: Method,
    pub n_reps: Option<u64>,
    pub seed: Option<u64>,
}

impl<T> MetricReport<T> {
    pub fn quadrature(name: impl Into<String>, value: T, abs_error: T) -> Self {
        Self {
            name: name.into(),
            value,
            abs_error,
            method: Method::Quadrature,
            n_reps: None,
            seed: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Joint probabilities of (truth, decision).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionTable<T> {
    /// Null or harmful effect and a successful trial.
    pub p_fp: T,
    /// Beneficial effect and a successful trial.
    pub p_tp: T,
    /// Null or harmful effect and a failed trial.
    pub p_tn: T,
    /// Beneficial effect and a failed trial.
    pub p_fn: T,
}

impl<T: num_traits::Float> DecisionTable<T> {
    pub fn total(&self) -> T {
        self.p_fp + self.p_tp + self.p_tn + self.p_fn
    }

    pub fn correct(&self) -> T {
        self.p_tp + self.p_tn
    }

    /// Marginal probability of a successful trial.
    pub fn success(&self) -> T {
        self.p_tp + self.p_fp
    }
}
