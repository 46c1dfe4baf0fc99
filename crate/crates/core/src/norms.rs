//! Weighted Wiener norms, the dyadic-block norm, the characterization norm
//! built from `η_j`, and the Bernstein inequality check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, invalid, Result};
use crate::kernels::{amalgam_norm, QuasiInterpScheme};
use crate::params::Exponent;
use crate::quasi_interp::apply_eta;
use crate::spectral::{FreqIndex, Level, SpectralFunction, TrigPolynomial, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum NormVariant {
    /// Weight `(1+|k|_∞)^γ`.
    Isotropic { gamma: f64 },
    /// Weight `Π(1+|k_i|)^γ`.
    Mixed { gamma: f64 },
    /// Weight `Π(1+|k_i|)^α·(1+|k|_∞)^β`.
    Hybrid { alpha: f64, beta: f64 },
}

impl NormVariant {
    pub fn weight(self) -> WeightSpec {
        match self {
            NormVariant::Isotropic { gamma } => WeightSpec { mix: 0.0, iso: gamma },
            NormVariant::Mixed { gamma } => WeightSpec { mix: gamma, iso: 0.0 },
            NormVariant::Hybrid { alpha, beta } => WeightSpec { mix: alpha, iso: beta },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub q: Exponent,
    #[serde(flatten)]
    pub variant: NormVariant,
}

impl NormParams {
    pub fn isotropic(q: Exponent, gamma: f64) -> Self {
        NormParams { q, variant: NormVariant::Isotropic { gamma } }
    }

    pub fn mixed(q: Exponent, gamma: f64) -> Self {
        NormParams { q, variant: NormVariant::Mixed { gamma } }
    }

    pub fn hybrid(q: Exponent, alpha: f64, beta: f64) -> Self {
        NormParams { q, variant: NormVariant::Hybrid { alpha, beta } }
    }
}

/// A norm of the stored part and a bound on what the truncated tail adds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub norm: f64,
    pub tail_bound: f64,
}

/// `ℓ_q` accumulation (`q = ∞` is the maximum).
pub(crate) fn lq(values: impl Iterator<Item = f64>, q: Exponent) -> f64 {
    if q.is_infinite() {
        values.fold(0.0, f64::max)
    } else if q.value() == 1.0 {
        values.sum()
    } else {
        let qv = q.value();
        values.map(|v| v.powf(qv)).sum::<f64>().powf(1.0 / qv)
    }
}

fn weighted_lq<'a>(coeffs: impl Iterator<Item = (&'a FreqIndex, &'a Complex64)>, w: WeightSpec, q: Exponent) -> f64 {
    lq(coeffs.map(|(k, c)| w.eval(k) * c.norm()), q)
}

/// The weighted Wiener norm `(Σ_k (w(k)|f̂(k)|)^q)^{1/q}` over the stored
/// support, with the certified tail of a rule-based function.
pub fn wiener_norm(f: &SpectralFunction, params: NormParams) -> Result<NormValue> {
    let w = params.variant.weight();
    let norm = weighted_lq(f.iter(), w, params.q);
    let tail_bound = match f.truncation() {
        Some(t) => t.weighted(f.dim(), w, params.q)?,
        None => 0.0,
    };
    Ok(NormValue { norm, tail_bound })
}

/// `A_q` norm of a trigonometric polynomial.
pub fn a_q(t: &TrigPolynomial, q: Exponent) -> f64 {
    lq(t.coeffs().values().map(|c| c.norm()), q)
}

fn check_block_hypothesis(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0) || !(alpha + beta >= 0.0) {
        return Err(hypothesis(format!(
            "block norms need α ≥ 0 and α + β ≥ 0, got α = {alpha}, β = {beta}"
        )));
    }
    Ok(())
}

/// `(Σ_k 2^{q(α|k|_1+β|k|_∞)} ‖δ_k f‖_{A_q}^q)^{1/q}`.
pub fn block_norm(f: &SpectralFunction, alpha: f64, beta: f64, q: Exponent) -> Result<NormValue> {
    check_block_hypothesis(alpha, beta)?;
    let blocks = f.blocks();
    let norm = lq(
        blocks.iter().map(|(k, coeffs)| {
            let weight = (alpha * f64::from(k.l1()) + beta * f64::from(k.linf())).exp2();
            weight * lq(coeffs.iter().map(|(_, c)| c.norm()), q)
        }),
        q,
    );
    // 2^{k_i} ≤ 2(1+|m_i|) on P_{k_i}, and 2^{|k|_∞} ≥ 1+|m|_∞.
    let tail_bound = match f.truncation() {
        Some(t) => {
            let factor = (alpha * f.dim() as f64 + beta.max(0.0)).exp2();
            factor * t.weighted(f.dim(), WeightSpec { mix: alpha, iso: beta }, q)?
        }
        None => 0.0,
    };
    Ok(NormValue { norm, tail_bound })
}

/// Checks the hypotheses under which the characterization norm is
/// equivalent to the hybrid norm, naming the first violated inequality.
pub fn check_characterization(scheme: &QuasiInterpScheme, alpha: f64, beta: f64, q: Exponent) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(hypothesis(format!("α > 0 fails: α = {alpha}")));
    }
    if !(alpha + beta > 0.0) {
        return Err(hypothesis(format!("α + β > 0 fails: α + β = {}", alpha + beta)));
    }
    let top = (alpha + beta).max(alpha);
    if !scheme.declared_s().exceeds(top) {
        return Err(hypothesis(format!(
            "s > max(α+β, α) fails for {}: s = {}, max(α+β, α) = {top}",
            scheme.name(),
            scheme.declared_s().as_f64()
        )));
    }
    let n = scheme.declared_n();
    let qc = q.conjugate();
    let low = (alpha + beta).min(alpha);
    if low > n + qc.reciprocal() {
        return Ok(());
    }
    if n == 0.0 && amalgam_norm(scheme.phi_tilde(), qc, 4, 64).is_ok() {
        return Ok(());
    }
    Err(hypothesis(format!(
        "neither min(α+β, α) > N + 1/q′ ({low} ≤ {}) nor N = 0 with a finite ℓ_q′ amalgam norm holds for {}",
        n + qc.reciprocal(),
        scheme.name()
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationNorm {
    pub norm: f64,
    /// Contribution of the outermost shell `|j|_∞ = jmax`; a large value
    /// signals that `jmax` truncates a slowly converging series.
    pub outer_shell: f64,
}

/// `(Σ_{|j|_∞ ≤ jmax} 2^{q(α|j|_1+β|j|_∞)} ‖η_j f‖_{A_q}^q)^{1/q}`.
pub fn lp_char_norm(
    f: &SpectralFunction,
    scheme: &QuasiInterpScheme,
    alpha: f64,
    beta: f64,
    q: Exponent,
    jmax: u32,
) -> Result<CharacterizationNorm> {
    check_characterization(scheme, alpha, beta, q)?;
    let levels = crate::sparse_grid::SparseIndexSet::full_box(jmax, f.dim());
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for j in levels.members() {
        let eta = apply_eta(scheme, j, f)?;
        let v = (alpha * f64::from(j.l1()) + beta * f64::from(j.linf())).exp2() * a_q(&eta, q);
        if j.linf() == jmax {
            outer.push(v);
        }
        inner.push(v);
    }
    Ok(CharacterizationNorm {
        norm: lq(inner.into_iter(), q),
        outer_shell: lq(outer.into_iter(), q),
    })
}

/// `‖t‖_{A_q^{α,β}} / (2^{α|ℓ|_1+(β−γ)|ℓ|_∞}‖t‖_{A_q^γ})` for `t` of degrees `ℓ`.
pub fn bernstein_check(t: &TrigPolynomial, alpha: f64, beta: f64, gamma: f64, q: Exponent) -> Result<f64> {
    if !(alpha.min(alpha + beta - gamma) > 0.0) {
        return Err(hypothesis(format!(
            "Bernstein inequality needs min(α, α+β−γ) > 0, got α = {alpha}, α+β−γ = {}",
            alpha + beta - gamma
        )));
    }
    let l: &Level = t.degrees();
    let num = weighted_lq(t.coeffs().iter(), WeightSpec { mix: alpha, iso: beta }, q);
    let den = weighted_lq(t.coeffs().iter(), WeightSpec { mix: 0.0, iso: gamma }, q);
    if den == 0.0 {
        return Err(invalid("Bernstein ratio of the zero polynomial is undefined"));
    }
    let scale = (alpha * f64::from(l.l1()) + (beta - gamma) * f64::from(l.linf())).exp2();
    Ok(num / (scale * den))
}
