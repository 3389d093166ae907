use std::path::{Path, PathBuf};

use hjb_core::problem::ProblemConfig;
use hjb_core::solver::{Method, SolveOptions};
use hjb_core::study::suites::SUITES;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Solve,
    Study,
    Check,
    Decompose,
    ListProblems,
}

/// Where study errors are measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Closed form when the problem has one and `use_exact` is set, else fine grid.
    #[default]
    Auto,
    Exact,
    FineGrid,
}

/// A complete run description. Every field has a default, so `{}` is a valid
/// configuration: a policy-iteration solve of `linear-manufactured-disk` at
/// `h = 0.05` writing into `out/`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemConfig,
    /// Grid step for `solve`.
    pub h: f64,
    /// Steps for `study`, strictly decreasing.
    pub h_list: Vec<f64>,
    pub reference: ReferenceKind,
    /// Fine-grid reference step; defaults to half the smallest study step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_ref: Option<f64>,
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Seed for every randomized step: check suites, monitor sampling.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Emit `rate.svg` from `study`.
    pub plot: bool,
    pub monitor_pairs: usize,
    /// Suites run by `check`.
    pub suites: Vec<String>,
    /// Grid step for the solver-based check suites.
    pub check_h: f64,
    /// Matrix for `decompose`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Directions for `decompose`; the canonical set of the matrix dimension when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Vec<i32>>>,
    pub floor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Solve,
            problem: ProblemConfig::named("linear-manufactured-disk"),
            h: 0.05,
            h_list: vec![0.1, 0.05, 0.025, 0.0125],
            reference: ReferenceKind::Auto,
            h_ref: None,
            method: Method::Policy,
            tol: 1e-9,
            max_iter: 2_000_000,
            linear_tol: None,
            relaxation: None,
            threads: None,
            seed: 42,
            output_dir: PathBuf::from("out"),
            plot: false,
            monitor_pairs: 1000,
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            check_h: 0.1,
            matrix: None,
            directions: None,
            floor: 0.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn solve_options(&self) -> SolveOptions<f64> {
        SolveOptions {
            method: self.method,
            tol: self.tol,
            max_iter: self.max_iter,
            linear_tol: self.linear_tol,
            relaxation: self.relaxation,
            threads: self.threads,
            ..SolveOptions::default()
        }
    }

    /// Checks the fields the selected command reads.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        match self.command {
            Command::Solve | Command::Study => {
                self.problem.check().map_err(|e| CliError::Config(e.to_string()))?;
                self.solve_options().validate().map_err(CliError::Config)?;
            }
            _ => {}
        }
        match self.command {
            Command::Solve if !positive(self.h) => bad(format!("h must be positive, got {}", self.h)),
            Command::Study => {
                if self.h_list.is_empty() || !self.h_list.iter().all(|&h| positive(h)) {
                    return bad("h_list must be a nonempty list of positive steps".into());
                }
                if self.h_list.windows(2).any(|w| w[1] >= w[0]) {
                    return bad(format!("h_list must be strictly decreasing, got {:?}", self.h_list));
                }
                if let Some(h) = self.h_ref.filter(|&h| !positive(h)) {
                    return bad(format!("h_ref must be positive, got {h}"));
                }
                if self.monitor_pairs == 0 {
                    return bad("monitor_pairs must be at least 1".into());
                }
                Ok(())
            }
            Command::Check => {
                if let Some(s) = self.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
                    return bad(format!("unknown suite `{s}`; available: {}", SUITES.join(", ")));
                }
                if !positive(self.check_h) {
                    return bad(format!("check_h must be positive, got {}", self.check_h));
                }
                if !positive(self.tol) {
                    return bad(format!("tol must be positive, got {}", self.tol));
                }
                Ok(())
            }
            Command::Decompose => {
                if self.matrix.is_none() {
                    return bad("decompose needs a matrix".into());
                }
                if !(self.floor >= 0.0 && self.floor.is_finite()) {
                    return bad(format!("floor must be nonnegative, got {}", self.floor));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
