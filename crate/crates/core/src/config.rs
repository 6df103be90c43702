//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "problem": {"kind": "korobov_family",
//!               "weights": {"kind": "power", "rho": 3.0},
//!               "smoothness": {"kind": "constant", "r": 1.0}},
//!   "epsilons": [0.5, 0.1],
//!   "dims": [1, 2, 4],
//!   "budgets": {"n_max": 10000000},
//!   "bounds": [{"name": "chebyshev", "tau": 0.9, "z": 1.0}, {"name": "curse"}],
//!   "output": {"format": "csv", "path": "out.csv"}
//! }
//! ```
//!
//! Unknown fields are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::family::{Homogeneous, KorobovFamily, ProblemFamily, TensorFamily};
use crate::fixtures::{MDeltaFixture, StrangeOrdering};
use crate::korobov::{validate_family, SmoothnessFamily, WeightFamily};
use crate::spectrum::Spectrum;
use crate::tensor::{Budget, ProductProblem};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumSpec {
    Korobov { g: f64, r: f64 },
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        tail: f64,
    },
}

impl SpectrumSpec {
    pub fn build(&self) -> crate::Result<Spectrum> {
        match self {
            SpectrumSpec::Korobov { g, r } => Spectrum::korobov(*g, *r),
            SpectrumSpec::Explicit { values, tail } => Spectrum::explicit(values.clone(), *tail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    KorobovFamily { weights: WeightFamily, smoothness: SmoothnessFamily },
    Product { coordinates: Vec<SpectrumSpec> },
    Homogeneous { spectrum: SpectrumSpec },
    MDelta { m: f64, delta: f64 },
    StrangeOrdering,
}

/// A validated problem family ready for evaluation.
pub enum BuiltFamily {
    Korobov(KorobovFamily),
    Product(ProductProblem),
    Homogeneous(Homogeneous),
    MDelta(MDeltaFixture),
    Strange(StrangeOrdering),
}

impl BuiltFamily {
    pub fn problems(&self) -> &dyn ProblemFamily {
        match self {
            BuiltFamily::Korobov(f) => f,
            BuiltFamily::Product(f) => f,
            BuiltFamily::Homogeneous(f) => f,
            BuiltFamily::MDelta(f) => f,
            BuiltFamily::Strange(f) => f,
        }
    }

    /// The coordinate-wise view, unavailable for the M-delta fixture.
    pub fn tensor(&self) -> Option<&dyn TensorFamily> {
        match self {
            BuiltFamily::Korobov(f) => Some(f),
            BuiltFamily::Product(f) => Some(f),
            BuiltFamily::Homogeneous(f) => Some(f),
            BuiltFamily::MDelta(_) => None,
            BuiltFamily::Strange(f) => Some(f),
        }
    }

    pub fn problem(&self, d: usize) -> crate::Result<ProductProblem> {
        self.problems().problem(d)
    }
}

impl ProblemSpec {
    pub fn build(&self, horizon: usize) -> Result<BuiltFamily, ConfigError> {
        Ok(match self {
            ProblemSpec::KorobovFamily { weights, smoothness } => {
                validate_family(weights, smoothness, horizon).map_err(|e| invalid("problem", e))?;
                BuiltFamily::Korobov(KorobovFamily::new(weights.clone(), smoothness.clone()))
            }
            ProblemSpec::Product { coordinates } => {
                if coordinates.is_empty() {
                    return Err(invalid("problem.coordinates", "must not be empty"));
                }
                let coords = coordinates
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build().map_err(|e| invalid(format!("problem.coordinates[{i}]"), e)))
                    .collect::<Result<Vec<_>, _>>()?;
                BuiltFamily::Product(ProductProblem::new(coords).map_err(|e| invalid("problem", e))?)
            }
            ProblemSpec::Homogeneous { spectrum } => BuiltFamily::Homogeneous(Homogeneous {
                spectrum: spectrum.build().map_err(|e| invalid("problem.spectrum", e))?,
            }),
            ProblemSpec::MDelta { m, delta } => {
                BuiltFamily::MDelta(MDeltaFixture::new(*m, *delta).map_err(|e| invalid("problem", e))?)
            }
            ProblemSpec::StrangeOrdering => BuiltFamily::Strange(StrangeOrdering),
        })
    }
}

fn default_tau() -> f64 {
    0.9
}

fn default_z() -> f64 {
    1.0
}

fn default_tau_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 / 20.0).collect()
}

/// A named bound. Point bounds are evaluated at every `(eps, d)`; family
/// criteria once, over the horizon `max(dims)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    Chebyshev {
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_z")]
        z: f64,
    },
    Poltract2 {
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        q: f64,
    },
    Curse,
    Jensen { gamma: f64 },
    JensenLhs { gamma: f64 },
    Entropy,
    PolyTractRatio {
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        q: f64,
    },
    QptProduct { delta: f64 },
    WeakTheta {
        #[serde(default = "default_tau")]
        tau: f64,
    },
    PolyTractConstant {
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default)]
        q: f64,
    },
    QptCriterion { delta: f64 },
    QptSufficient { delta: f64 },
    PtLog {
        #[serde(default = "default_tau")]
        tau: f64,
    },
    SptExponent {
        #[serde(default = "default_tau_grid")]
        tau_grid: Vec<f64>,
        #[serde(default)]
        k_max: Option<usize>,
    },
}

impl BoundSpec {
    /// Family criteria are reported once per run rather than per grid point.
    pub fn is_family_level(&self) -> bool {
        matches!(
            self,
            BoundSpec::PolyTractConstant { .. }
                | BoundSpec::QptCriterion { .. }
                | BoundSpec::QptSufficient { .. }
                | BoundSpec::PtLog { .. }
                | BoundSpec::SptExponent { .. }
        )
    }

    /// Column label, stable across runs.
    pub fn label(&self) -> String {
        use crate::format::fmt_f64 as f;
        match self {
            BoundSpec::Chebyshev { tau, z } => format!("chebyshev(tau={},z={})", f(*tau), f(*z)),
            BoundSpec::Poltract2 { tau, q } => format!("poltract2(tau={},q={})", f(*tau), f(*q)),
            BoundSpec::Curse => "curse".into(),
            BoundSpec::Jensen { gamma } => format!("jensen(gamma={})", f(*gamma)),
            BoundSpec::JensenLhs { gamma } => format!("jensen_lhs(gamma={})", f(*gamma)),
            BoundSpec::Entropy => "entropy".into(),
            BoundSpec::PolyTractRatio { tau, q } => format!("poly_tract_ratio(tau={},q={})", f(*tau), f(*q)),
            BoundSpec::QptProduct { delta } => format!("qpt_product(delta={})", f(*delta)),
            BoundSpec::WeakTheta { tau } => format!("weak_theta(tau={})", f(*tau)),
            BoundSpec::PolyTractConstant { tau, q } => format!("poly_tract_constant(tau={},q={})", f(*tau), f(*q)),
            BoundSpec::QptCriterion { delta } => format!("qpt_criterion(delta={})", f(*delta)),
            BoundSpec::QptSufficient { delta } => format!("qpt_sufficient(delta={})", f(*delta)),
            BoundSpec::PtLog { tau } => format!("pt_log(tau={})", f(*tau)),
            BoundSpec::SptExponent { .. } => "spt_exponent".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default)]
    pub n_max: Option<u64>,
    #[serde(default)]
    pub memory_bytes: Option<u64>,
    #[serde(default)]
    pub tol_rel: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Random instances in the oracle batch.
    #[serde(default)]
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub budgets: BudgetSpec,
    #[serde(default)]
    pub bounds: Vec<BoundSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Coordinates inspected by the classifier and by family validation.
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub verify: VerifySpec,
}

pub const DEFAULT_HORIZON: usize = 1000;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    /// Checks the `(eps, d)` grid; commands that sweep it call this.
    pub fn validate_grid(&self) -> Result<(), ConfigError> {
        if self.epsilons.is_empty() {
            return Err(invalid("epsilons", "must not be empty"));
        }
        if self.dims.is_empty() {
            return Err(invalid("dims", "must not be empty"));
        }
        for (i, e) in self.epsilons.iter().enumerate() {
            if !(*e > 0.0 && *e <= 1.0) {
                return Err(invalid(format!("epsilons[{i}]"), format!("{e} is outside (0, 1]")));
            }
        }
        for (i, d) in self.dims.iter().enumerate() {
            if *d == 0 {
                return Err(invalid(format!("dims[{i}]"), "dimension must be at least 1"));
            }
        }
        Ok(())
    }

    /// Heap budget; `TRACTLAB_BUDGET_NMAX`, when given, overrides the pop limit.
    pub fn budget(&self, env_n_max: Option<&str>) -> Result<Budget, ConfigError> {
        let mut b = Budget::default();
        if let Some(n) = self.budgets.n_max {
            b.n_max = n;
        }
        if let Some(m) = self.budgets.memory_bytes {
            b.memory_bytes = m;
        }
        if let Some(t) = self.budgets.tol_rel {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid("budgets.tol_rel", format!("{t} is outside (0, 1)")));
            }
            b.tol_rel = Some(t);
        }
        if let Some(s) = env_n_max {
            b.n_max = s
                .trim()
                .parse()
                .map_err(|_| invalid("TRACTLAB_BUDGET_NMAX", format!("`{s}` is not a non-negative integer")))?;
        }
        Ok(b)
    }

    pub fn bounds_or_default(&self) -> Vec<BoundSpec> {
        if self.bounds.is_empty() {
            vec![BoundSpec::Curse, BoundSpec::Chebyshev { tau: 0.9, z: 1.0 }]
        } else {
            self.bounds.clone()
        }
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        invalid("problem", e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let c = ExperimentConfig::from_json(
            r#"{
              "problem": {"kind": "korobov_family",
                          "weights": {"kind": "power", "rho": 3.0},
                          "smoothness": {"kind": "constant", "r": 1.0}},
              "epsilons": [0.5],
              "dims": [1, 2],
              "budgets": {"n_max": 1000},
              "bounds": [{"name": "chebyshev", "tau": 0.8}, {"name": "curse"}, {"name": "spt_exponent"}],
              "output": {"format": "json"}
            }"#,
        )
        .unwrap();
        c.validate_grid().unwrap();
        assert_eq!(c.budget(None).unwrap().n_max, 1000);
        assert_eq!(c.budget(Some("77")).unwrap().n_max, 77);
        assert!(c.budget(Some("x")).is_err());
        assert_eq!(c.bounds[0], BoundSpec::Chebyshev { tau: 0.8, z: 1.0 });
        assert!(c.bounds[2].is_family_level());
        assert_eq!(c.output.format, Some(Format::Json));
        let f = c.problem.build(c.horizon()).unwrap();
        assert_eq!(f.problem(2).unwrap().d(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected_with_position() {
        let e = ExperimentConfig::from_json("{\n  \"problem\": {\"kind\": \"strange_ordering\"},\n  \"epsilon\": [0.5]\n}")
            .unwrap_err();
        match e {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("epsilon"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn grid_errors_name_the_field() {
        let mut c = ExperimentConfig::from_json(r#"{"problem": {"kind": "strange_ordering"}, "epsilons": [0.5, 1.5], "dims": [1]}"#).unwrap();
        assert!(c.validate_grid().unwrap_err().to_string().contains("epsilons[1]"));
        c.epsilons = vec![0.5];
        c.dims = vec![3, 0];
        assert!(c.validate_grid().unwrap_err().to_string().contains("dims[1]"));
        c.dims.clear();
        assert!(c.validate_grid().is_err());
    }

    #[test]
    fn broken_spectrum_is_reported_by_position() {
        let c = ExperimentConfig::from_json(
            r#"{"problem": {"kind": "product", "coordinates": [
                 {"kind": "korobov", "g": 0.5, "r": 1.0},
                 {"kind": "explicit", "values": [1.0, 0.2, 0.5]}]}}"#,
        )
        .unwrap();
        let msg = c.problem.build(10).err().unwrap().to_string();
        assert!(msg.contains("problem.coordinates[1]"), "{msg}");
    }
}
