//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssc_fw::solver::{StepsizeRule, Wrapper, DEFAULT_BUDGET, DEFAULT_TOL};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKindSpec {
    Simplex,
    Hypercube,
    L1Ball,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub kind: RegionKindSpec,
    #[serde(default)]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// CSV file with one atom per row, for `generic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms_csv: Option<PathBuf>,
    /// CSV file with rows `normal..., offset` describing `⟨normal, x⟩ <= offset`, for `generic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspaces_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    StronglyConvex,
    Indefinite,
    Distance,
}

impl Family {
    pub fn is_convex(self) -> bool {
        !matches!(self, Family::Indefinite)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::StronglyConvex => "sc",
            Family::Indefinite => "indef",
            Family::Distance => "dist",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub family: Family,
    /// Strong convexity modulus; ignored by the indefinite and distance families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub l: f64,
    /// Instance seed; derived from the global seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPolicy {
    #[default]
    Vertex,
    Barycenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(t) => vec![t.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub x0: StartPolicy,
    #[serde(default)]
    pub stepsize: StepsizeRule,
    pub methods: Vec<String>,
    #[serde(default = "default_wrappers")]
    pub wrappers: Vec<Wrapper>,
    /// Independent objective instances per (region, objective) pair.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Samples for the width estimate on regions without a closed form.
    #[serde(default = "default_width_samples")]
    pub width_samples: usize,
    /// Largest `k` checked by the square-root rate; all iterations when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sqrt_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub region: OneOrMany<RegionSpec>,
    pub objective: OneOrMany<ObjectiveSpec>,
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_wrappers() -> Vec<Wrapper> {
    vec![Wrapper::Plain, Wrapper::Ssc]
}
fn default_replicates() -> usize {
    1
}
fn default_width_samples() -> usize {
    2000
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: BenchConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // atom files are relative to the config file
        if let Some(dir) = path.parent() {
            let fix = |r: &mut RegionSpec| {
                for p in [&mut r.atoms_csv, &mut r.halfspaces_csv].into_iter().flatten() {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            };
            match &mut cfg.region {
                OneOrMany::One(r) => fix(r),
                OneOrMany::Many(v) => v.iter_mut().for_each(fix),
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.methods.is_empty() {
            return invalid("methods list is empty".into());
        }
        let registry = ssc_fw::MethodRegistry::default();
        for m in &self.methods {
            if registry.get(m).is_err() {
                return invalid(format!("unknown method {m:?}"));
            }
        }
        if self.wrappers.is_empty() {
            return invalid("wrappers list is empty".into());
        }
        if self.budget < 1 {
            return invalid("budget must be at least 1".into());
        }
        if !(self.tol >= 0.0) {
            return invalid("tol must be nonnegative".into());
        }
        if self.replicates < 1 {
            return invalid("replicates must be at least 1".into());
        }
        for r in self.region.to_vec() {
            match r.kind {
                RegionKindSpec::Generic => {
                    if r.atoms_csv.is_none() || r.halfspaces_csv.is_none() {
                        return invalid("generic region needs atoms_csv and halfspaces_csv".into());
                    }
                }
                RegionKindSpec::Simplex if r.n < 2 => return invalid("simplex needs n >= 2".into()),
                _ if r.n < 1 => return invalid(format!("{:?} needs n >= 1", r.kind)),
                _ => {}
            }
            if r.radius.is_some_and(|v| !(v > 0.0)) {
                return invalid("radius must be positive".into());
            }
        }
        let objectives = self.objective.to_vec();
        if objectives.is_empty() || self.region.to_vec().is_empty() {
            return invalid("need at least one region and one objective".into());
        }
        for o in objectives {
            if !(o.l > 0.0) {
                return invalid("L must be positive".into());
            }
            if o.family == Family::StronglyConvex {
                match o.mu {
                    Some(mu) if mu > 0.0 && mu <= o.l => {}
                    _ => return invalid("strongly convex objective needs 0 < mu <= L".into()),
                }
            }
        }
        Ok(())
    }
}
