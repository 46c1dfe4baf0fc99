//! Theoretical convergence rates of `P_{n,T}`, test-function families,
//! error experiments with slope fits, and the sharpness envelope.

mod config;
mod experiment;
mod family;
mod sharpness;

use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, invalid, Error, Result};
use crate::kernels::{amalgam_norm, QuasiInterpScheme};
use crate::majorant::{lattice_tail, lattice_tail_sup};
use crate::params::{sigma, Anisotropy, Exponent, Smoothness};
use crate::sparse_grid::{box_levels, SparseIndexSet};

pub use config::{ExperimentConfig, LevelRange, Report, SharpnessSettings};
pub use experiment::{run_experiment, ExperimentOptions, GridChoice, LevelRow, RateReport};
pub use family::{check_membership, make_test_function, HybridSpace, TestFamily};
pub use sharpness::{sharpness_envelope, SharpnessOptions, SharpnessReport, SharpnessRow};

/// Norm in which the approximation error is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `A_q^γ` with weight `(1+|k|_∞)^γ`.
    Isotropic,
    /// `A_{q,mix}^γ` with weight `Π(1+|k_i|)^γ`.
    Mixed,
}

fn unbounded() -> Smoothness {
    Smoothness::Unbounded
}

/// Parameters of a rate statement: source space `A_p^{α,β}`, target norm of
/// order `γ` in `ℓ_q`, anisotropy `T` and dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub p: Exponent,
    pub q: Exponent,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub t: Anisotropy,
    pub target: Target,
    /// Compatibility order of the scheme in use; experiments replace it by
    /// the scheme's declared order.
    #[serde(default = "unbounded")]
    pub scheme_s: Smoothness,
    pub dim: usize,
}

/// Predicted decay `Ω(n) = 2^{−E n} n^L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub exponent: f64,
    pub log_power: f64,
    /// Whether `T` lies at or above the regime threshold.
    pub anisotropic_regime: bool,
}

impl Rate {
    pub fn omega(self, n: f64) -> f64 {
        (-self.exponent * n).exp2() * n.max(1.0).powf(self.log_power)
    }
}

impl RateSpec {
    pub fn sigma(&self) -> f64 {
        sigma(self.p, self.q)
    }

    /// Checks the hypotheses of the rate theorem for the chosen target.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        for (name, v) in [("α", self.alpha), ("β", self.beta), ("γ", self.gamma)] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if let Anisotropy::Finite(t) = self.t {
            Anisotropy::new(t)?;
        }
        let (a, b, g, s) = (self.alpha, self.beta, self.gamma, self.sigma());
        match self.target {
            Target::Isotropic => {
                if !(a > s) {
                    return Err(hypothesis(format!("α > σ fails: α = {a}, σ = {s}")));
                }
                if !(g >= 0.0) {
                    return Err(hypothesis(format!("γ ≥ 0 fails: γ = {g}")));
                }
                if !(g - b < a - s) {
                    return Err(hypothesis(format!("γ − β < α − σ fails: γ − β = {}, α − σ = {}", g - b, a - s)));
                }
            }
            Target::Mixed => {
                if !(g > 0.0) {
                    return Err(hypothesis(format!("γ > 0 fails: γ = {g}")));
                }
                if !(g - b + s < a) {
                    return Err(hypothesis(format!("γ − β + σ < α fails: γ − β + σ = {}, α = {a}", g - b + s)));
                }
                if !(g + s <= a) {
                    return Err(hypothesis(format!("γ + σ ≤ α fails: γ + σ = {}, α = {a}", g + s)));
                }
            }
        }
        let need = a.max(a + b);
        if !self.scheme_s.exceeds(need) {
            return Err(hypothesis(format!(
                "s > max(α+β, α) fails: s = {}, max(α+β, α) = {need}",
                self.scheme_s.as_f64()
            )));
        }
        Ok(())
    }

    /// `T` at which the rate switches to the anisotropic formula.
    pub fn threshold(&self) -> f64 {
        let (a, b, g, s) = (self.alpha, self.beta, self.gamma, self.sigma());
        match self.target {
            Target::Isotropic => (g - b) / (a - s),
            Target::Mixed => {
                let gap = a - g - s;
                if gap == 0.0 {
                    // Then β > 0 and −β/gap is −∞.
                    f64::NEG_INFINITY
                } else {
                    -b / gap
                }
            }
        }
    }
}

/// Decay exponent and log power of the error bound `Ω(n)`.
pub fn theoretical_rate(spec: &RateSpec) -> Result<Rate> {
    spec.validate()?;
    let (a, b, g, s) = (spec.alpha, spec.beta, spec.gamma, spec.sigma());
    let d = spec.dim as f64;
    let base = a + b - g - s;
    let threshold = spec.threshold();
    let (anisotropic_regime, t) = match spec.t {
        Anisotropy::Finite(t) => (t >= threshold, t),
        Anisotropy::NegInfinity => (threshold == f64::NEG_INFINITY, f64::NEG_INFINITY),
    };
    if !anisotropic_regime {
        return Ok(Rate { exponent: base, log_power: 0.0, anisotropic_regime });
    }
    let (shift, log_power) = match spec.target {
        Target::Isotropic => ((a - s) * t - (g - b), (d - 1.0) * (1.0 - spec.p.reciprocal())),
        Target::Mixed => ((a - g - s) * t + b, (d - 1.0) * s),
    };
    // At T = −∞ only the mixed case with α = γ + σ lands here, where the
    // shift stays bounded while d − T grows.
    let correction = if t.is_finite() { shift * (d - 1.0) / (d - t) } else { 0.0 };
    Ok(Rate {
        exponent: base - correction,
        log_power,
        anisotropic_regime,
    })
}

/// Checks the kernel-side hypotheses of the rate theorem for `scheme`:
/// the compatibility order and either the growth route or the amalgam route.
pub fn check_scheme(scheme: &QuasiInterpScheme, spec: &RateSpec) -> Result<()> {
    let need = spec.alpha.max(spec.alpha + spec.beta);
    if !scheme.declared_s().exceeds(need) {
        return Err(hypothesis(format!(
            "scheme {scheme} has compatibility order {} but the rate needs s > {need}",
            scheme.declared_s().as_f64()
        )));
    }
    let n = scheme.declared_n();
    let smooth = spec.alpha.min(spec.alpha + spec.beta);
    if smooth > n + spec.p.conjugate().reciprocal() {
        return Ok(());
    }
    if n == 0.0 {
        let qc = spec.q.conjugate();
        let finite = (0..=10).all(|j| amalgam_norm(scheme.phi_tilde(), qc, j, 4096).is_ok());
        if finite {
            return Ok(());
        }
    }
    Err(hypothesis(format!(
        "scheme {scheme}: min(α+β, α) = {smooth} ≤ N + 1/p′ = {} and the amalgam route is unavailable",
        n + spec.p.conjugate().reciprocal()
    )))
}

/// The bound `Ω_Γ` for a general index set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaBound {
    pub value: f64,
    /// Certified bound on what the levels beyond the enumeration box add
    /// to the inner sum (or supremum).
    pub remainder: f64,
}

/// How far past the largest member the complement is enumerated.
const GAMMA_MARGIN: u32 = 24;

/// `Ω_Γ`: the complement of `Γ` in `Z_+^d` summed against the rate weight.
///
/// Isotropic target: `(Σ_{j∉Γ} 2^{−p′((α−σ)|j|_1+(β−γ)|j|_∞)})^{1/p′}`.
/// Mixed target: `max_{j∉Γ} 2^{−((α−γ)|j|_1+β|j|_∞)}` for `p ≤ q`, and
/// `(Σ_{j∉Γ} 2^{−(qp/(p−q))((α−γ−σ)|j|_1+β|j|_∞)})^{1/q−1/p}` for `q < p`.
pub fn general_gamma_bound(gamma: &SparseIndexSet, spec: &RateSpec) -> Result<GammaBound> {
    spec.validate()?;
    if gamma.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, found: gamma.dim() });
    }
    if !gamma.is_downward_closed() {
        return Err(invalid("Ω_Γ needs a downward-closed set"));
    }
    let s = spec.sigma();
    // Weight 2^{−e(a|j|_1 + b|j|_∞)} and the outer power; `e = ∞` is a supremum.
    let (a, b, e, outer) = match spec.target {
        Target::Isotropic => {
            let pc = spec.p.conjugate();
            (spec.alpha - s, spec.beta - spec.gamma, pc.value(), pc.reciprocal())
        }
        Target::Mixed if spec.p.value() <= spec.q.value() => {
            (spec.alpha - spec.gamma, spec.beta, f64::INFINITY, 0.0)
        }
        Target::Mixed => {
            let (p, q) = (spec.p.value(), spec.q.value());
            let e = if p.is_infinite() { q } else { q * p / (p - q) };
            (spec.alpha - spec.gamma - s, spec.beta, e, spec.q.reciprocal() - spec.p.reciprocal())
        }
    };
    if !(a >= 0.0) || !(a + b > 0.0) {
        return Err(Error::Divergent(format!(
            "Ω_Γ needs a ≥ 0 and a + b > 0 in 2^{{−(a|j|_1+b|j|_∞)}}, got a = {a}, b = {b}"
        )));
    }
    let kmax = gamma.max_linf() + GAMMA_MARGIN;
    let exponent = |k: &crate::spectral::Level| a * f64::from(k.l1()) + b * f64::from(k.linf());
    let outside = box_levels(kmax, spec.dim).into_iter().filter(|k| !gamma.contains(k));
    if e.is_infinite() {
        let sup = outside.map(|k| (-exponent(&k)).exp2()).fold(0.0, f64::max);
        let remainder = lattice_tail_sup(a, b, kmax)?;
        return Ok(GammaBound { value: sup.max(remainder), remainder });
    }
    let sum: f64 = outside.map(|k| (-e * exponent(&k)).exp2()).sum();
    let remainder = lattice_tail(e * a, e * b, kmax, spec.dim)?;
    Ok(GammaBound { value: (sum + remainder).powf(outer), remainder })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::too_many_arguments)]
    fn spec(p: f64, q: f64, alpha: f64, beta: f64, gamma: f64, t: f64, target: Target, dim: usize) -> RateSpec {
        RateSpec {
            p: Exponent::new(p).unwrap(),
            q: Exponent::new(q).unwrap(),
            alpha,
            beta,
            gamma,
            t: Anisotropy::new(t).unwrap(),
            target,
            scheme_s: Smoothness::Unbounded,
            dim,
        }
    }

    #[test]
    fn smolyak_rate_values() {
        let r = theoretical_rate(&spec(2.0, 2.0, 2.0, 0.0, 0.0, 0.0, Target::Isotropic, 2)).unwrap();
        assert_eq!((r.exponent, r.log_power), (2.0, 0.5));
        // E = α − σ, L = (d−1)(1−1/p) at T = 0, β = γ.
        for (p, q) in [(1.0, 2.0), (2.0, 1.0), (4.0, 4.0), (f64::INFINITY, 1.0)] {
            for d in 1..=4 {
                let sp = spec(p, q, 3.0, 0.75, 0.75, 0.0, Target::Isotropic, d);
                let r = theoretical_rate(&sp).unwrap();
                assert!((r.exponent - (3.0 - sp.sigma())).abs() < 1e-15);
                let expect_l = (d as f64 - 1.0) * (1.0 - sp.p.reciprocal());
                assert!((r.log_power - expect_l).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mixed_rate_values() {
        // E = α − γ − σ, L = (d−1)σ at T = β = 0.
        for (p, q) in [(2.0, 2.0), (2.0, 1.0), (f64::INFINITY, 1.0), (1.0, 3.0)] {
            for d in 1..=4 {
                let sp = spec(p, q, 3.0, 0.0, 1.0, 0.0, Target::Mixed, d);
                let r = theoretical_rate(&sp).unwrap();
                assert!((r.exponent - (2.0 - sp.sigma())).abs() < 1e-15);
                assert!((r.log_power - (d as f64 - 1.0) * sp.sigma()).abs() < 1e-15);
            }
        }
        let r = theoretical_rate(&spec(2.0, 2.0, 2.0, 0.0, 1.0, 0.0, Target::Mixed, 2)).unwrap();
        assert_eq!((r.exponent, r.log_power), (1.0, 0.0));
    }

    #[test]
    fn isotropic_regimes() {
        // Below the threshold the exponent does not depend on d.
        for d in 1..=5 {
            let r = theoretical_rate(&spec(2.0, 2.0, 2.0, 0.0, 1.0, 0.25, Target::Isotropic, d)).unwrap();
            assert!(!r.anisotropic_regime);
            assert_eq!((r.exponent, r.log_power), (1.0, 0.0));
        }
        let r = theoretical_rate(&spec(2.0, 2.0, 2.0, 0.0, 0.0, 0.5, Target::Isotropic, 2)).unwrap();
        assert!((r.exponent - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_is_continuous_at_the_threshold() {
        for target in [Target::Isotropic, Target::Mixed] {
            for (alpha, beta, gamma) in [(3.0, -0.5, 0.5), (2.5, 0.25, 1.0), (4.0, -1.0, 1.5)] {
                let base = spec(2.0, 2.0, alpha, beta, gamma, 0.0, target, 3);
                let th = base.threshold();
                if !(th < 1.0) || !th.is_finite() {
                    continue;
                }
                let at = theoretical_rate(&RateSpec { t: Anisotropy::Finite(th), ..base }).unwrap();
                let below = theoretical_rate(&RateSpec { t: Anisotropy::Finite(th - 1e-12), ..base }).unwrap();
                assert!(at.anisotropic_regime && !below.anisotropic_regime);
                assert!((at.exponent - (alpha + beta - gamma)).abs() < 1e-12);
                assert!((at.exponent - below.exponent).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn hypotheses_are_named() {
        let bad = spec(2.0, 2.0, 1.0, 0.0, 1.5, 0.0, Target::Isotropic, 2);
        let msg = theoretical_rate(&bad).unwrap_err().to_string();
        assert!(msg.contains("γ − β < α − σ"), "{msg}");
        let bad = spec(2.0, 2.0, 2.0, 0.0, 0.0, 0.0, Target::Mixed, 2);
        assert!(theoretical_rate(&bad).unwrap_err().to_string().contains("γ > 0"));
        let bad = RateSpec { scheme_s: Smoothness::Finite(2.0), ..spec(2.0, 2.0, 2.0, 0.0, 0.0, 0.0, Target::Isotropic, 2) };
        assert!(theoretical_rate(&bad).unwrap_err().to_string().contains("s > max"));
    }

    #[test]
    fn gamma_bound_on_full_box_is_a_box_tail() {
        // β = γ: the summand factorizes and the complement of the box is
        // (Σ_{j≥0} x^j)^d − (Σ_{j≤n} x^j)^d with x = 2^{−p′(α−σ)}.
        let sp = spec(2.0, 2.0, 1.5, 0.5, 0.5, 0.0, Target::Isotropic, 2);
        for n in 0..6u32 {
            let g = general_gamma_bound(&SparseIndexSet::full_box(n, 2), &sp).unwrap();
            let x = (-2.0 * 1.5f64).exp2();
            let all = 1.0 / (1.0 - x);
            let head = (1.0 - x.powi(n as i32 + 1)) / (1.0 - x);
            let exact = (all * all - head * head).sqrt();
            assert!((g.value - exact).abs() <= 1e-9 * exact, "n={n}: {} vs {exact}", g.value);
        }
    }

    #[test]
    fn gamma_bound_on_empty_set_is_a_product() {
        let sp = spec(2.0, 2.0, 1.5, 0.5, 0.5, 0.0, Target::Isotropic, 3);
        let empty = SparseIndexSet::explicit(3, vec![]).unwrap();
        let g = general_gamma_bound(&empty, &sp).unwrap();
        let exact = (1.0 / (1.0 - (-3.0f64).exp2())).powi(3).sqrt();
        assert!((g.value - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn gamma_bound_tracks_omega_on_delta() {
        for (t, dim) in [(0.0, 2), (0.5, 2), (0.0, 3), (0.25, 3)] {
            let sp = spec(2.0, 2.0, 2.0, 0.0, 0.5, t, Target::Isotropic, dim);
            let rate = theoretical_rate(&sp).unwrap();
            let ratios: Vec<f64> = (2..=10)
                .map(|n| {
                    let set = SparseIndexSet::delta(f64::from(n), sp.t, dim).unwrap();
                    general_gamma_bound(&set, &sp).unwrap().value / rate.omega(f64::from(n))
                })
                .collect();
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(hi / lo < 8.0, "T={t} d={dim}: {ratios:?}");
        }
    }

    #[test]
    fn mixed_gamma_bound_forms() {
        let sp = spec(2.0, 2.0, 2.0, 0.0, 1.0, 0.0, Target::Mixed, 2);
        let g = general_gamma_bound(&SparseIndexSet::smolyak(4, 2), &sp).unwrap();
        assert!((g.value - (-5.0f64).exp2()).abs() < 1e-15);
        // q < p: sum form with exponent qp/(p−q) and outer power 1/q − 1/p.
        let sp = spec(f64::INFINITY, 1.0, 3.0, 0.0, 1.0, 0.0, Target::Mixed, 1);
        let g = general_gamma_bound(&SparseIndexSet::smolyak(3, 1), &sp).unwrap();
        let x = (-1.0f64).exp2();
        let exact = x.powi(4) / (1.0 - x);
        assert!((g.value - exact).abs() < 1e-9 * exact);
    }
}
