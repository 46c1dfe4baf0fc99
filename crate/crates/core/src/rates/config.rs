use serde::{Deserialize, Serialize};

use super::{
    check_membership, make_test_function, run_experiment, sharpness_envelope, ExperimentOptions, GridChoice,
    HybridSpace, RateReport, RateSpec, SharpnessOptions, SharpnessReport, TestFamily,
};
use crate::error::{invalid, Result};
use crate::kernels::{builtin_scheme, QuasiInterpScheme, Verdict};

/// Inclusive level range `start..=end` with unit steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelRange {
    pub start: u32,
    pub end: u32,
}

impl LevelRange {
    pub fn levels(self) -> Vec<u32> {
        (self.start..=self.end).collect()
    }
}

/// Switches an experiment from the rate fit to the sharpness envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessSettings {
    pub trials: usize,
    #[serde(default = "default_n0")]
    pub n0: u32,
}

fn default_n0() -> u32 {
    1
}

fn default_tolerance() -> f64 {
    0.3
}

fn default_budget_ratio() -> f64 {
    1e-3
}

/// One experiment as read from a JSON file.
///
/// ```json
/// {
///   "scheme": "lagrange",
///   "spec": {"p": 2, "q": 2, "alpha": 2, "beta": 0, "gamma": 0, "T": 0,
///            "target": "isotropic", "dim": 2},
///   "grid": {"kind": "anisotropic"},
///   "family": {"family": "block_lacunary", "rho": 1.1, "terms": 4},
///   "levels": {"start": 3, "end": 9},
///   "seed": 7
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Builtin scheme name, e.g. `lagrange` or `kantorovich(2)`.
    pub scheme: String,
    pub spec: RateSpec,
    #[serde(default)]
    pub grid: GridChoice,
    pub family: TestFamily,
    pub levels: LevelRange,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Uncertainty allowed per level as a fraction of the measured error.
    #[serde(default = "default_budget_ratio")]
    pub budget_ratio: f64,
    /// Initial box for rule-based families; chosen from the levels when absent.
    #[serde(default)]
    pub cutoff: Option<i64>,
    #[serde(default)]
    pub sharpness: Option<SharpnessSettings>,
    #[serde(default)]
    pub out: Option<String>,
}

/// Result of running a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Rate(RateReport),
    Sharpness(SharpnessReport),
}

impl Report {
    pub fn verdict(&self) -> Verdict {
        match self {
            Report::Rate(r) => r.verdict,
            Report::Sharpness(r) => r.verdict,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn space(&self) -> HybridSpace {
        HybridSpace { p: self.spec.p, alpha: self.spec.alpha, beta: self.spec.beta }
    }

    /// Checks every precondition that can be decided without computing, and
    /// returns the scheme.
    pub fn validate(&self) -> Result<QuasiInterpScheme> {
        let scheme = builtin_scheme(&self.scheme)?;
        let spec = RateSpec { scheme_s: scheme.declared_s(), ..self.spec };
        spec.validate()?;
        super::check_scheme(&scheme, &spec)?;
        if self.levels.start > self.levels.end {
            return Err(invalid("levels.start must not exceed levels.end"));
        }
        if !(self.tolerance > 0.0) || !(self.budget_ratio > 0.0) {
            return Err(invalid("tolerance and budget_ratio must be positive"));
        }
        if self.sharpness.is_some() && self.grid != GridChoice::Anisotropic {
            return Err(invalid("the sharpness envelope runs on Δ(n, T) grids"));
        }
        if self.sharpness.is_none() {
            check_membership(&self.family, &self.space(), self.spec.dim)?;
        }
        Ok(scheme)
    }

    /// Initial per-axis cutoff: a few dyadic blocks past the finest level.
    fn initial_cutoff(&self) -> i64 {
        self.cutoff.unwrap_or_else(|| {
            let top = self.levels.end.min(30) + 4;
            (1i64 << top) - 1
        })
    }

    pub fn run(&self) -> Result<Report> {
        let scheme = self.validate()?;
        let levels = self.levels.levels();
        if let Some(sh) = self.sharpness {
            let options = SharpnessOptions { trials: sh.trials, n0: sh.n0, seed: self.seed, tolerance: self.tolerance };
            return Ok(Report::Sharpness(sharpness_envelope(&scheme, &self.spec, &levels, &options)?));
        }
        let f = make_test_function(&self.family, &self.space(), self.spec.dim, self.initial_cutoff(), self.seed)?;
        let options = ExperimentOptions {
            tolerance: self.tolerance,
            budget_ratio: self.budget_ratio,
            auto_refine: true,
        };
        let levels: Vec<f64> = levels.into_iter().map(f64::from).collect();
        Ok(Report::Rate(run_experiment(&f, &scheme, &self.spec, &self.grid, &levels, &options)?))
    }
}
