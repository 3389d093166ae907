use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::builtin::{builtin_linear_manufactured, builtin_monge_ampere, builtin_two_control, Manufactured};
use super::{BellmanProblem, ProblemError};
use crate::lattice::{field, Domain};
use crate::scalar::Scalar;
use crate::stencil::SymMatrix;

pub const LINEAR_MANUFACTURED: &str = "linear-manufactured-disk";
pub const TWO_CONTROL: &str = "two-control";
pub const MONGE_AMPERE: &str = "monge-ampere";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Ball { dim: usize, radius: f64 },
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Disk { radius: 1.0 }
    }
}

impl DomainConfig {
    pub fn build<T: Scalar>(&self) -> Result<Domain<T>, ProblemError> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(T::lit(v))
            } else {
                Err(ProblemError::InvalidParameter(format!("domain {what} must be positive, got {v}")))
            }
        };
        Ok(match *self {
            DomainConfig::Disk { radius } => Domain::disk(positive(radius, "radius")?),
            DomainConfig::Ellipse { a, b } => Domain::ellipse(positive(a, "a")?, positive(b, "b")?),
            DomainConfig::Ball { dim, radius } => {
                if !(2..=3).contains(&dim) {
                    return Err(ProblemError::InvalidParameter(format!("ball dimension must be 2 or 3, got {dim}")));
                }
                Domain::ball(dim, positive(radius, "radius")?)
            }
        })
    }
}

/// Problem selection as it appears in run configurations. Parameters left
/// out take the defaults listed by [`list_problems`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Manufactured>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_controls: Option<usize>,
    /// Scale of the Monge–Ampère source `1 + x1^2 / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_scale: Option<f64>,
    #[serde(default)]
    pub allow_outside_theory: bool,
    /// Use the closed-form solution as the study reference when one exists.
    #[serde(default = "yes")]
    pub use_exact: bool,
}

fn yes() -> bool {
    true
}

impl ProblemConfig {
    pub fn named(name: impl Into<String>) -> Self {
        ProblemConfig {
            name: name.into(),
            domain: DomainConfig::default(),
            solution: None,
            a_matrix: None,
            c0: None,
            gamma: None,
            n_controls: None,
            f_scale: None,
            allow_outside_theory: false,
            use_exact: true,
        }
    }

    fn supplied(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.solution.is_some() {
            out.push("solution");
        }
        if self.a_matrix.is_some() {
            out.push("a_matrix");
        }
        if self.c0.is_some() {
            out.push("c0");
        }
        if self.gamma.is_some() {
            out.push("gamma");
        }
        if self.n_controls.is_some() {
            out.push("n_controls");
        }
        if self.f_scale.is_some() {
            out.push("f_scale");
        }
        out
    }

    fn entry(&self) -> Result<CatalogueEntry, ProblemError> {
        list_problems().into_iter().find(|e| e.name == self.name).ok_or_else(|| ProblemError::UnknownProblem {
            name: self.name.clone(),
            known: list_problems().into_iter().map(|e| e.name).collect(),
        })
    }

    /// Checks the name and that every supplied parameter is used by the problem.
    pub fn check(&self) -> Result<(), ProblemError> {
        let entry = self.entry()?;
        for p in self.supplied() {
            if !entry.params.iter().any(|s| s.name == p) {
                return Err(ProblemError::UnusedParameter { problem: self.name.clone(), param: p.into() });
            }
        }
        Ok(())
    }

    pub fn build<T: Scalar>(&self) -> Result<BellmanProblem<T>, ProblemError> {
        self.check()?;
        let domain = self.domain.build::<T>()?;
        let p = match self.name.as_str() {
            LINEAR_MANUFACTURED => {
                let dim = domain.dim();
                let rows = self.a_matrix.clone().unwrap_or_else(|| default_matrix(dim));
                let rows: Vec<Vec<T>> = rows.iter().map(|r| r.iter().map(|&v| T::lit(v)).collect()).collect();
                let a = SymMatrix::from_rows(&rows)?;
                let c0 = self.c0.unwrap_or(1.0);
                let p = builtin_linear_manufactured(domain, self.solution.unwrap_or_default(), &a, T::lit(c0))?;
                if self.use_exact {
                    p
                } else {
                    p.without_exact()
                }
            }
            TWO_CONTROL => builtin_two_control(domain)?,
            MONGE_AMPERE => {
                let scale = T::lit(self.f_scale.unwrap_or(1.0));
                let f = field(move |x: &[T]| scale * (T::one() + T::lit(0.5) * x[0] * x[0]));
                builtin_monge_ampere(
                    domain,
                    T::lit(self.gamma.unwrap_or(0.5)),
                    f,
                    self.n_controls.unwrap_or(16),
                    T::lit(self.c0.unwrap_or(0.1)),
                    self.allow_outside_theory,
                )?
            }
            _ => unreachable!("checked against the catalogue"),
        };
        Ok(p)
    }
}

fn default_matrix(dim: usize) -> Vec<Vec<f64>> {
    (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.25 }).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamSchema {
    pub name: String,
    pub kind: String,
    pub default: Value,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogueEntry {
    pub name: String,
    pub description: String,
    pub has_exact_solution: bool,
    pub params: Vec<ParamSchema>,
}

impl CatalogueEntry {
    /// A configuration with every parameter set to its default.
    pub fn default_config(&self) -> ProblemConfig {
        let mut obj = serde_json::Map::new();
        obj.insert("name".into(), json!(self.name));
        for p in &self.params {
            obj.insert(p.name.clone(), p.default.clone());
        }
        serde_json::from_value(Value::Object(obj)).expect("catalogue defaults parse")
    }
}

fn param(name: &str, kind: &str, default: Value, description: &str) -> ParamSchema {
    ParamSchema { name: name.into(), kind: kind.into(), default, description: description.into() }
}

/// Registered problems and their parameters.
pub fn list_problems() -> Vec<CatalogueEntry> {
    let domain = param("domain", "domain", json!({"kind": "disk", "radius": 1.0}), "disk, ellipse or ball");
    vec![
        CatalogueEntry {
            name: LINEAR_MANUFACTURED.into(),
            description: "single linear operator with a closed-form solution; g is the solution".into(),
            has_exact_solution: true,
            params: vec![
                domain.clone(),
                param(
                    "solution",
                    "manufactured",
                    json!({"kind": "sine-product", "freq": std::f64::consts::PI}),
                    "zero, paraboloid or sine-product",
                ),
                param(
                    "a_matrix",
                    "matrix",
                    json!(default_matrix(2)),
                    "constant diffusion matrix, decomposed over the canonical directions",
                ),
                param("c0", "number", json!(1.0), "zeroth-order coefficient, positive"),
                param("use_exact", "bool", json!(true), "use the closed form as study reference"),
            ],
        },
        CatalogueEntry {
            name: TWO_CONTROL.into(),
            description: "max of two linear operators with diffusions I and [[2,1],[1,2]], c = 1, g = 0".into(),
            has_exact_solution: false,
            params: vec![domain.clone()],
        },
        CatalogueEntry {
            name: MONGE_AMPERE.into(),
            description: "regularized Monge–Ampère equation over sampled trace-one matrices, g = 0".into(),
            has_exact_solution: false,
            params: vec![
                domain,
                param("gamma", "number", json!(0.5), "regularization; gamma^2 is added to every matrix"),
                param("n_controls", "integer", json!(16), "number of sampled matrices, at least 4"),
                param("c0", "number", json!(0.1), "zeroth-order coefficient; 0 needs allow_outside_theory"),
                param("f_scale", "number", json!(1.0), "source is f_scale * (1 + x1^2 / 2)"),
                param("allow_outside_theory", "bool", json!(false), "admit c0 = 0"),
            ],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_names() {
        let names: Vec<String> = list_problems().into_iter().map(|e| e.name).collect();
        assert!(names.contains(&"linear-manufactured-disk".to_string()));
        assert!(names.contains(&"monge-ampere".to_string()));
    }

    #[test]
    fn default_configs_round_trip_and_build() {
        for entry in list_problems() {
            let cfg = entry.default_config();
            let text = serde_json::to_string(&cfg).unwrap();
            let back: ProblemConfig = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
            let p = back.build::<f64>().unwrap();
            assert_eq!(p.name(), entry.name);
            assert_eq!(p.exact().is_some(), entry.has_exact_solution);
        }
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg: ProblemConfig = serde_json::from_str(r#"{"name": "monge-ampere"}"#).unwrap();
        let p = cfg.build::<f64>().unwrap();
        assert_eq!(p.n_controls(), 16);
    }

    #[test]
    fn unknown_name_lists_catalogue() {
        let err = ProblemConfig::named("heat").build::<f64>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("two-control") && msg.contains("monge-ampere"), "{msg}");
    }

    #[test]
    fn foreign_parameters_are_rejected() {
        let mut cfg = ProblemConfig::named("two-control");
        cfg.gamma = Some(0.5);
        assert!(matches!(cfg.build::<f64>(), Err(ProblemError::UnusedParameter { .. })));
        assert!(serde_json::from_str::<ProblemConfig>(r#"{"name": "two-control", "gama": 1}"#).is_err());
    }

    #[test]
    fn domain_validation() {
        assert!(DomainConfig::Disk { radius: -1.0 }.build::<f64>().is_err());
        assert!(DomainConfig::Ball { dim: 4, radius: 1.0 }.build::<f64>().is_err());
        let mut cfg = ProblemConfig::named("linear-manufactured-disk");
        cfg.domain = DomainConfig::Ball { dim: 3, radius: 1.0 };
        assert_eq!(cfg.build::<f64>().unwrap().directions().d1(), 9);
    }

    #[test]
    fn exact_toggle() {
        let mut cfg = ProblemConfig::named("linear-manufactured-disk");
        cfg.use_exact = false;
        assert!(cfg.build::<f64>().unwrap().exact().is_none());
    }
}
