//! Experiment configuration: a flat TOML document whose keys can all be
//! overridden from the command line.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lcr_fista::lasso::{Family, LassoSpec};
use lcr_fista::Scheme;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Restart scheme selector; `opt` gets its `f*` from the per-trial oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    None,
    Func,
    Grad,
    Opt,
    Lcr,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [Self::Lcr, Self::None, Self::Func, Self::Grad, Self::Opt];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Func => "func",
            Self::Grad => "grad",
            Self::Opt => "opt",
            Self::Lcr => "lcr",
        }
    }

    pub fn to_scheme(self, f_star: Option<f64>) -> Option<Scheme> {
        Some(match self {
            Self::None => Scheme::NoRestart,
            Self::Func => Scheme::Function,
            Self::Grad => Scheme::Gradient,
            Self::Opt => Scheme::OptimalValue { f_star: f_star? },
            Self::Lcr => Scheme::Lcr,
        })
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme '{s}' (expected none, func, grad, opt or lcr)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Lasso,
    LeastSquares,
}

impl From<FamilyKind> for Family {
    fn from(k: FamilyKind) -> Self {
        match k {
            FamilyKind::Lasso => Family::Lasso,
            FamilyKind::LeastSquares => Family::LeastSquares,
        }
    }
}

impl FromStr for FamilyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lasso" => Ok(Self::Lasso),
            "least-squares" => Ok(Self::LeastSquares),
            _ => Err(format!("unknown family '{s}' (expected lasso or least-squares)")),
        }
    }
}

/// Everything `run` needs. Missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyKind,
    pub rows: usize,
    pub cols: usize,
    pub alpha: f64,
    pub sparsity: f64,
    pub trials: usize,
    pub schemes: Vec<SchemeKind>,
    pub epsilon: f64,
    pub oracle_epsilon: f64,
    pub out: PathBuf,
    pub jobs: usize,
    /// Trial `i` uses seed `seed + i`.
    pub seed: u64,
    pub strict_exit: bool,
    /// `k_min` for the func, grad and opt schemes.
    pub k_min: usize,
    /// Composite gradient budget per solve.
    pub budget: u64,
    /// Write per-trial iteration traces.
    pub traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::Lasso,
            rows: 600,
            cols: 800,
            alpha: 0.01,
            sparsity: LassoSpec::DEFAULT_SPARSITY,
            trials: 100,
            schemes: SchemeKind::ALL.to_vec(),
            epsilon: 1e-11,
            oracle_epsilon: 1e-12,
            out: PathBuf::from("results"),
            jobs: 1,
            seed: 0,
            strict_exit: false,
            k_min: 0,
            budget: lcr_fista::fista::DEFAULT_BUDGET,
            traces: true,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn spec_for_trial(&self, trial: usize) -> LassoSpec {
        LassoSpec {
            rows: self.rows,
            cols: self.cols,
            alpha: self.alpha,
            sparsity: self.sparsity,
            seed: self.seed.wrapping_add(trial as u64),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.oracle_epsilon > 0.0 && self.oracle_epsilon < self.epsilon) {
            return invalid(format!(
                "oracle_epsilon must be positive and below epsilon ({} vs {})",
                self.oracle_epsilon, self.epsilon
            ));
        }
        if self.schemes.is_empty() {
            return invalid("at least one scheme is required".into());
        }
        if self.budget == 0 {
            return invalid("budget must be at least 1".into());
        }
        self.spec_for_trial(0)
            .validate(self.family.into())
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Selected schemes in canonical order, without duplicates.
    pub fn scheme_order(&self) -> Vec<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .filter(|k| self.schemes.contains(k))
            .collect()
    }
}
