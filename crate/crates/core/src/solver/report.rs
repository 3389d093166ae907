use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Damped fixed-point iteration `v + h^2 / N0 H_h[v]`.
    Jacobi,
    /// Lexicographic nonlinear Gauss–Seidel with exact local solves.
    GaussSeidel,
    /// Howard's policy iteration with SOR inner solves.
    Policy,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Jacobi, Method::GaussSeidel, Method::Policy];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Jacobi => "jacobi",
            Method::GaussSeidel => "gauss-seidel",
            Method::Policy => "policy",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jacobi" => Ok(Method::Jacobi),
            "gauss-seidel" | "gauss_seidel" | "gs" => Ok(Method::GaussSeidel),
            "policy" | "howard" => Ok(Method::Policy),
            _ => Err(format!("unknown method `{s}`; expected jacobi, gauss-seidel or policy")),
        }
    }
}

/// Outcome of a solve. Wall time is kept out of the serialized form so that
/// reports are reproducible byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub h: f64,
    pub n_interior: usize,
    pub n_controls: usize,
    pub tol: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `sup |H_h[v]|` over the interior at the returned iterate.
    pub residual: f64,
    pub final_sup_change: f64,
    pub n0: f64,
    /// `1 - c_min h^2 / N0`.
    pub contraction_bound: f64,
    pub c_min: f64,
    /// Largest ratio of successive Jacobi changes.
    pub max_contraction_ratio: Option<f64>,
    pub policy_steps: usize,
    pub linear_sweeps: usize,
    pub fallbacks: usize,
    pub relaxation: Option<f64>,
    pub sup_change_history: Vec<f64>,
    pub residual_history: Vec<f64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    /// Ratios `d_{n+1} / d_n` of successive sup changes (Jacobi only).
    pub fn contraction_ratios(&self) -> Vec<f64> {
        if self.method != Method::Jacobi {
            return Vec::new();
        }
        self.sup_change_history.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}
