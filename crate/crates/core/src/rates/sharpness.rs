use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{theoretical_rate, RateSpec, Target};
use crate::error::{hypothesis, invalid, Result};
use crate::fit::{fit_log2, SlopeFit};
use crate::kernels::{QuasiInterpScheme, Verdict};
use crate::norms::{wiener_norm, NormParams};
use crate::params::Anisotropy;
use crate::quasi_interp::apply_p;
use crate::sparse_grid::SparseIndexSet;
use crate::spectral::{FreqIndex, SpectralFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessOptions {
    /// Random witnesses per level besides the single-frequency one.
    pub trials: usize,
    /// The operator at level `n` is `P_{n−n0,T}`.
    pub n0: u32,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SharpnessOptions {
    fn default() -> Self {
        SharpnessOptions { trials: 16, n0: 1, seed: 0, tolerance: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub n: u32,
    /// Error for `e^{i2^n x_1}` scaled to unit `A_p^{α,β}` norm.
    pub witness_error: f64,
    /// Largest error over all witnesses at this level.
    pub worst_error: f64,
    /// `log2 e(n−1) − log2 e(n)`.
    pub local_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub scheme: String,
    pub spec: RateSpec,
    pub n0: u32,
    pub trials: usize,
    pub rows: Vec<SharpnessRow>,
    /// Fit of the worst errors, a lower envelope for the class.
    pub fit: SlopeFit,
    /// `α + β − γ`.
    pub expected: f64,
    /// Exponent of the upper bound from the rate theorem.
    pub upper: f64,
    /// Smallest level from which every local slope stays within tolerance.
    pub stable_from: Option<u32>,
    pub envelopes_agree: bool,
    pub tolerance: f64,
    pub verdict: Verdict,
}

fn target_params(spec: &RateSpec) -> NormParams {
    match spec.target {
        Target::Isotropic => NormParams::isotropic(spec.q, spec.gamma),
        Target::Mixed => NormParams::mixed(spec.q, spec.gamma),
    }
}

/// The parameter window in which the class error is `≍ 2^{−(α+β−γ)n}`.
fn check_regime(spec: &RateSpec) -> Result<()> {
    let t = match spec.t {
        Anisotropy::Finite(t) => t,
        Anisotropy::NegInfinity => return Err(hypothesis("the sharpness window needs 0 < T, got T = −∞")),
    };
    let (a, b, g) = (spec.alpha, spec.beta, spec.gamma);
    let (upper, label) = match spec.target {
        Target::Isotropic => ((g - b) / a, "(γ−β)/α"),
        Target::Mixed => (-b / (a - g), "−β/(α−γ)"),
    };
    if !(t > 0.0 && t < upper) {
        return Err(hypothesis(format!("the sharpness window needs 0 < T < {label} = {upper}, got T = {t}")));
    }
    Ok(())
}

/// Weight of `e^{ikx_1}` in `A_p^{α,β}`.
fn source_weight(spec: &RateSpec, k: i64) -> f64 {
    (1.0 + k.unsigned_abs() as f64).powf(spec.alpha + spec.beta)
}

fn univariate(spec: &RateSpec, coeffs: &[(i64, Complex64)]) -> Result<SpectralFunction> {
    let d = spec.dim;
    let terms = coeffs.iter().map(|&(k, c)| {
        let mut idx = vec![0i64; d];
        idx[0] = k;
        (FreqIndex::new(idx), c)
    });
    SpectralFunction::from_coeffs(d, terms)
}

/// Random packet in `span{e^{ikx_1} : 2^{n−1} ≤ k ≤ 2^n}` with unit
/// `A_p^{α,β}` norm.
fn random_witness(spec: &RateSpec, n: u32, rng: &mut ChaCha8Rng) -> Result<SpectralFunction> {
    let top = 1i64 << n;
    let bottom = top / 2;
    let count = rng.gen_range(1..=8usize);
    let coeffs: Vec<(i64, Complex64)> = (0..count)
        .map(|_| {
            let k = rng.gen_range(bottom..=top);
            let c = Complex64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            (k, c)
        })
        .collect();
    let f = univariate(spec, &coeffs)?;
    let norm = wiener_norm(&f, NormParams::hybrid(spec.p, spec.alpha, spec.beta))?.norm;
    Ok(f.scale(Complex64::new(1.0 / norm, 0.0)))
}

fn error_of(scheme: &QuasiInterpScheme, spec: &RateSpec, set: &SparseIndexSet, f: &SpectralFunction) -> Result<f64> {
    let approx = apply_p(scheme, set, f)?;
    Ok(wiener_norm(&f.sub(&approx)?, target_params(spec))?.norm)
}

/// Error of `P_{n−n0,T}` on a single witness `c·e^{i2^n x_1}`.
pub fn witness_error(scheme: &QuasiInterpScheme, spec: &RateSpec, n: u32, n0: u32, c: Complex64) -> Result<f64> {
    if n < n0 {
        return Err(invalid(format!("level n = {n} is below n0 = {n0}")));
    }
    let set = SparseIndexSet::delta(f64::from(n - n0), spec.t, spec.dim)?;
    let k = 1i64 << n;
    let f = univariate(spec, &[(k, c / source_weight(spec, k))])?;
    error_of(scheme, spec, &set, &f)
}

/// Worst error over the witness family at each level, its fitted decay,
/// and the comparison with the upper rate.
pub fn sharpness_envelope(
    scheme: &QuasiInterpScheme,
    spec: &RateSpec,
    levels: &[u32],
    options: &SharpnessOptions,
) -> Result<SharpnessReport> {
    let spec = RateSpec {
        scheme_s: scheme.declared_s(),
        ..*spec
    };
    let upper = theoretical_rate(&spec)?.exponent;
    check_regime(&spec)?;
    if levels.len() < 2 || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("sharpness needs at least two strictly increasing levels"));
    }
    if levels[0] < options.n0 {
        return Err(invalid(format!("levels must start at or above n0 = {}", options.n0)));
    }
    if levels[levels.len() - 1] > 40 {
        return Err(invalid("witness frequencies above 2^40 are not supported"));
    }
    let one = Complex64::new(1.0, 0.0);
    let measured: Vec<(f64, f64)> = levels
        .par_iter()
        .map(|&n| {
            let witness = witness_error(scheme, &spec, n, options.n0, one)?;
            let set = SparseIndexSet::delta(f64::from(n - options.n0), spec.t, spec.dim)?;
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ (u64::from(n) << 32));
            let mut worst = witness;
            for _ in 0..options.trials {
                let f = random_witness(&spec, n, &mut rng)?;
                worst = worst.max(error_of(scheme, &spec, &set, &f)?);
            }
            Ok((witness, worst))
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SharpnessRow> = levels
        .iter()
        .enumerate()
        .map(|(i, &n)| SharpnessRow {
            n,
            witness_error: measured[i].0,
            worst_error: measured[i].1,
            local_slope: (i > 0).then(|| measured[i - 1].1.log2() - measured[i].1.log2()),
        })
        .collect();
    let expected = spec.alpha + spec.beta - spec.gamma;
    let ns: Vec<f64> = levels.iter().map(|&n| f64::from(n)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.worst_error.log2()).collect();
    let fit = fit_log2(&ns, &ys, false)?;
    let within = |s: f64| (s - expected).abs() <= options.tolerance;
    let stable_from = (1..rows.len())
        .find(|&i| rows[i..].iter().all(|r| r.local_slope.is_some_and(within)))
        .map(|i| rows[i].n);
    let envelopes_agree = within(fit.exponent) && (fit.exponent - upper).abs() <= options.tolerance;
    Ok(SharpnessReport {
        scheme: scheme.name().to_string(),
        spec,
        n0: options.n0,
        trials: options.trials,
        rows,
        fit,
        expected,
        upper,
        stable_from,
        envelopes_agree,
        tolerance: options.tolerance,
        verdict: if envelopes_agree { Verdict::Pass } else { Verdict::Fail },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::builtin_scheme;
    use crate::params::{Exponent, Smoothness};

    fn spec(dim: usize, t: f64) -> RateSpec {
        RateSpec {
            p: Exponent::TWO,
            q: Exponent::TWO,
            alpha: 2.0,
            beta: 0.0,
            gamma: 1.0,
            t: Anisotropy::new(t).unwrap(),
            target: Target::Isotropic,
            scheme_s: Smoothness::Unbounded,
            dim,
        }
    }

    #[test]
    fn univariate_witness_has_closed_form_error() {
        // Lagrange folds e^{i2^n x} onto the constant: the error keeps the
        // original coefficient and gains −c at frequency 0.
        let lag = builtin_scheme("lagrange").unwrap();
        let sp = spec(1, 0.25);
        for n in 1..12u32 {
            let k = (1u64 << n) as f64;
            let c = (1.0 + k).powf(-2.0);
            let expected = (c * c + (c * (1.0 + k)).powi(2)).sqrt();
            let e = witness_error(&lag, &sp, n, 1, Complex64::new(1.0, 0.0)).unwrap();
            assert!((e - expected).abs() <= 1e-12 * expected, "n={n}: {e} vs {expected}");
        }
    }

    #[test]
    fn witness_error_is_homogeneous() {
        let lag = builtin_scheme("lagrange").unwrap();
        let sp = spec(2, 0.25);
        let base = witness_error(&lag, &sp, 6, 1, Complex64::new(1.0, 0.0)).unwrap();
        for c in [Complex64::new(-3.0, 0.0), Complex64::new(0.0, 1e-4), Complex64::new(2.0, -5.0)] {
            let e = witness_error(&lag, &sp, 6, 1, c).unwrap();
            assert!((e - c.norm() * base).abs() <= 1e-12 * e);
        }
    }

    #[test]
    fn envelope_matches_expected_exponent() {
        let lag = builtin_scheme("lagrange").unwrap();
        let levels: Vec<u32> = (3..=10).collect();
        let r = sharpness_envelope(&lag, &spec(2, 0.25), &levels, &SharpnessOptions::default()).unwrap();
        assert!((r.fit.exponent - 1.0).abs() <= 0.2, "{:?}", r.fit);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.stable_from.is_some(), "{:?}", r.rows);
    }

    #[test]
    fn regime_is_enforced() {
        let lag = builtin_scheme("lagrange").unwrap();
        let err = sharpness_envelope(&lag, &spec(2, 0.5), &[3, 4], &SharpnessOptions::default()).unwrap_err();
        assert!(err.to_string().contains("0 < T <"), "{err}");
        assert!(sharpness_envelope(&lag, &spec(2, 0.0), &[3, 4], &SharpnessOptions::default()).is_err());
    }
}
