use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CoefficientRule, FreqIndex, SpectralFunction, Truncation, WeightSpec};
use crate::error::{invalid, Result};
use crate::params::Exponent;

/// Wire format: `{"dim", "coeffs": [[k_1, …, k_d, re, im], …], "rule", "cutoff", "tail"}`.
///
/// A file may give only `dim`, `rule` and `cutoff`; the coefficients and the
/// tail bound are then derived from the rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunctionJson {
    pub dim: usize,
    #[serde(default)]
    pub coeffs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<CoefficientRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<f64>,
}

fn exact_int(x: f64) -> Option<i64> {
    (x.fract() == 0.0 && x.abs() < 9.0e15).then_some(x as i64)
}

impl SpectralFunction {
    pub fn to_json(&self) -> SpectralFunctionJson {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let mut row: Vec<f64> = k.iter().map(|&m| m as f64).collect();
                row.push(c.re);
                row.push(c.im);
                row
            })
            .collect();
        SpectralFunctionJson {
            dim: self.dim,
            coeffs,
            rule: self.truncation.as_ref().map(|t| t.rule.clone()),
            cutoff: self.truncation.as_ref().map(|t| t.cutoff),
            tail: self.truncation.as_ref().map(|t| t.tail),
        }
    }

    /// Rebuilds a function, re-checking stored coefficients against the rule
    /// and recertifying the tail. A stated tail smaller than the certified one
    /// is rejected.
    pub fn from_json(j: &SpectralFunctionJson) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(j.coeffs.len());
        for row in &j.coeffs {
            if row.len() != j.dim + 2 {
                return Err(invalid(format!(
                    "coefficient row has {} entries, expected {}",
                    row.len(),
                    j.dim + 2
                )));
            }
            let k = row[..j.dim]
                .iter()
                .map(|&x| exact_int(x).ok_or_else(|| invalid(format!("non-integer frequency {x}"))))
                .collect::<Result<Vec<i64>>>()?;
            coeffs.push((FreqIndex::new(k), Complex64::new(row[j.dim], row[j.dim + 1])));
        }
        match (&j.rule, j.cutoff) {
            (None, _) => SpectralFunction::from_coeffs(j.dim, coeffs),
            (Some(_), None) => Err(invalid("a rule-based function needs a cutoff")),
            (Some(rule), Some(cutoff)) => {
                let f = SpectralFunction::from_rule(rule.clone(), j.dim, cutoff)?;
                if !coeffs.is_empty() {
                    let given = SpectralFunction::from_coeffs(j.dim, coeffs)?;
                    for (k, c) in f.coeffs.iter() {
                        let g = given.coeff(k);
                        if (g - c).norm() > 1e-12 * c.norm().max(1e-300) {
                            return Err(invalid(format!("stored coefficient at {k:?} disagrees with the rule")));
                        }
                    }
                    if given.len() != f.len() {
                        return Err(invalid("stored support differs from the rule inside the cutoff"));
                    }
                }
                if let Some(stated) = j.tail {
                    if stated < f.tail() * (1.0 - 1e-12) {
                        return Err(invalid(format!(
                            "stated tail {stated:e} is below the certified bound {:e}",
                            f.tail()
                        )));
                    }
                }
                Ok(f)
            }
        }
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_json())?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: SpectralFunctionJson = serde_json::from_str(s)?;
        SpectralFunction::from_json(&j)
    }
}

impl Truncation {
    /// Certified weighted `ℓ_q` tail of the rule outside the cutoff box.
    pub fn weighted(&self, dim: usize, weight: WeightSpec, q: Exponent) -> Result<f64> {
        self.rule.weighted_tail(dim, self.cutoff, weight, q)
    }
}
