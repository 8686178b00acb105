//! Experiment configuration: a JSON file with every parameter optional,
//! overridden field by field by command-line flags.

use std::path::{Path, PathBuf};

use gwrk_core::{FellerParams, RateParams, RenormParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    SamplePath,
    SampleTree,
    Population,
    Feller,
    ToTree,
    ToPath,
    VerifyRkDiscrete,
    VerifyLaw,
    VerifyChop,
    VerifyMartingale,
    VerifyRkLimit,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Self::SamplePath => "sample-path",
            Self::SampleTree => "sample-tree",
            Self::Population => "population",
            Self::Feller => "feller",
            Self::ToTree => "to-tree",
            Self::ToPath => "to-path",
            Self::VerifyRkDiscrete => "verify-rk-discrete",
            Self::VerifyLaw => "verify-law",
            Self::VerifyChop => "verify-chop",
            Self::VerifyMartingale => "verify-martingale",
            Self::VerifyRkLimit => "verify-rk-limit",
        }
    }

    pub fn is_report(self) -> bool {
        matches!(
            self,
            Self::VerifyRkDiscrete
                | Self::VerifyLaw
                | Self::VerifyChop
                | Self::VerifyMartingale
                | Self::VerifyRkLimit
        )
    }
}

/// All parameters of every verb. Defaults:
///
/// | field | default |
/// |---|---|
/// | `lambda`, `mu` | 1.2, 1 (subcritical, so unbounded trees stay small) |
/// | `alpha`, `beta` | 0, 0 |
/// | `sigma` | 2 |
/// | `ceiling` | none (infinite) |
/// | `ancestors` | 1 |
/// | `x` | 1 |
/// | `big_n` | 100 |
/// | `horizon` | 1 |
/// | `dt` | 0.001 |
/// | `slope` | 2 |
/// | `replicas` | 1000 |
/// | `seed` | 0 |
/// | `excise_at` | half the ceiling |
/// | `levels` | 0.25, 0.5, 1 |
/// | `times` | horizon / 2, horizon |
/// | `threads` | available cores |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub verb: Option<Verb>,
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Absent means no ceiling.
    pub ceiling: Option<f64>,
    pub ancestors: usize,
    pub x: f64,
    pub big_n: u64,
    pub horizon: f64,
    pub dt: f64,
    pub slope: f64,
    pub replicas: u64,
    pub seed: u64,
    pub excise_at: Option<f64>,
    pub levels: Vec<f64>,
    pub times: Vec<f64>,
    pub threads: Option<usize>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub assert: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            verb: None,
            lambda: 1.2,
            mu: 1.0,
            alpha: 0.0,
            beta: 0.0,
            sigma: 2.0,
            ceiling: None,
            ancestors: 1,
            x: 1.0,
            big_n: 100,
            horizon: 1.0,
            dt: 1e-3,
            slope: 2.0,
            replicas: 1000,
            seed: 0,
            excise_at: None,
            levels: vec![0.25, 0.5, 1.0],
            times: Vec::new(),
            threads: None,
            input: None,
            out: None,
            assert: false,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn ceiling(&self) -> f64 {
        self.ceiling.unwrap_or(f64::INFINITY)
    }

    pub fn rates(&self) -> CliResult<RateParams> {
        Ok(RateParams::new(self.lambda, self.mu, self.ceiling(), self.ancestors)?)
    }

    pub fn renorm(&self) -> CliResult<RenormParams> {
        Ok(RenormParams::new(
            self.sigma,
            self.alpha,
            self.beta,
            self.big_n,
            self.x,
            self.ceiling(),
        )?)
    }

    pub fn feller(&self) -> CliResult<FellerParams> {
        let p = FellerParams {
            x: self.x,
            alpha: self.alpha,
            beta: self.beta,
            sigma: self.sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn eval_times(&self) -> Vec<f64> {
        if self.times.is_empty() {
            vec![0.5 * self.horizon, self.horizon]
        } else {
            self.times.clone()
        }
    }

    pub fn excision_level(&self) -> CliResult<f64> {
        match (self.excise_at, self.ceiling) {
            (Some(a), _) => Ok(a),
            (None, Some(b)) => Ok(0.5 * b),
            (None, None) => Err(CliError::Invalid(
                "verify-chop needs a finite --ceiling or an explicit --excise-at".into(),
            )),
        }
    }
}
