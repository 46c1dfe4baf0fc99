use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_scheme, theoretical_rate, Rate, RateSpec, Target};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_log2, fit_log2_pinned, SlopeFit};
use crate::kernels::{QuasiInterpScheme, Verdict};
use crate::norms::{wiener_norm, NormParams};
use crate::quasi_interp::apply_p;
use crate::sparse_grid::SparseIndexSet;
use crate::spectral::{SpectralFunction, WeightSpec};

/// Index sets swept by an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridChoice {
    /// `Δ(n, T)` with `T` from the `RateSpec`; levels are `n`.
    #[default]
    Anisotropic,
    /// Energy sets `Δ(ξ)`; levels are `ξ` and the predicted error is `2^{−ξ}`.
    Energy { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    /// Accepted `|E_fit − E|`.
    pub tolerance: f64,
    /// Largest admissible ratio of the certified uncertainty to the error.
    pub budget_ratio: f64,
    /// Rebuild rule-based inputs on a larger box until the budget holds.
    pub auto_refine: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        ExperimentOptions {
            tolerance: 0.3,
            budget_ratio: 1e-3,
            auto_refine: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: f64,
    pub error: f64,
    /// Certified bound on `|error − true error|` from truncating the input.
    pub uncertainty: f64,
    pub omega: f64,
    pub index_count: usize,
    /// Input reproduced to round-off.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub scheme: String,
    pub spec: RateSpec,
    pub grid: GridChoice,
    /// Box `[−M, M]^d` of the rule-based input after refinement.
    pub cutoff: Option<i64>,
    pub rows: Vec<LevelRow>,
    pub theory: Rate,
    /// Fit over the levels that are not reproduced exactly.
    pub fit: Option<SlopeFit>,
    /// Slope of `log2(e(n)/Ω(n))`; at most the tolerance when the ratio stays bounded.
    pub ratio_slope: Option<f64>,
    pub bounded: bool,
    /// `e(n)` non-increasing up to the certified uncertainty.
    pub monotone: bool,
    /// First level from which the input is reproduced exactly.
    pub exact_from: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Round-off threshold, relative to the input norm, below which an error
/// counts as exact reproduction.
const EXACT_RELATIVE: f64 = 1e-12;

/// Largest per-axis cutoff the refinement loop will try.
const MAX_CUTOFF: i64 = 1 << 40;

fn target_params(spec: &RateSpec) -> NormParams {
    match spec.target {
        Target::Isotropic => NormParams::isotropic(spec.q, spec.gamma),
        Target::Mixed => NormParams::mixed(spec.q, spec.gamma),
    }
}

fn build_set(spec: &RateSpec, grid: &GridChoice, n: f64) -> Result<SparseIndexSet> {
    match *grid {
        GridChoice::Anisotropic => SparseIndexSet::delta(n, spec.t, spec.dim),
        GridChoice::Energy { eps } => {
            SparseIndexSet::energy(n, spec.alpha, spec.beta, spec.gamma, eps, spec.sigma(), spec.dim)
        }
    }
}

/// Largest target weight on the output spectrum of `P_Γ`: the outer corner
/// `|ℓ_i| = 2^{j_i−1}` of each `D_j`.
fn output_weight(set: &SparseIndexSet, w: WeightSpec) -> f64 {
    set.members()
        .iter()
        .map(|j| {
            let corner: Vec<i64> = j.iter().map(|&ji| if ji == 0 { 0 } else { 1i64 << (ji - 1) }).collect();
            w.eval(&corner)
        })
        .fold(1.0, f64::max)
}

struct Measured {
    error: f64,
    uncertainty: f64,
    count: usize,
    exact: bool,
}

fn measure(
    f: &SpectralFunction,
    scheme: &QuasiInterpScheme,
    spec: &RateSpec,
    grid: &GridChoice,
    n: f64,
    f_norm: f64,
) -> Result<Measured> {
    let set = build_set(spec, grid, n)?;
    let params = target_params(spec);
    let approx = apply_p(scheme, &set, f)?;
    let diff = f.clone().into_finite().sub(&approx)?;
    let error = wiener_norm(&diff, params)?.norm;
    let tail = match f.truncation() {
        Some(t) => t.weighted(f.dim(), params.variant.weight(), params.q)?,
        None => 0.0,
    };
    let uncertainty = tail + output_weight(&set, params.variant.weight()) * approx.budget();
    let exact = f.truncation().is_none() && approx.budget() == 0.0 && error <= EXACT_RELATIVE * f_norm;
    Ok(Measured { error, uncertainty, count: set.len(), exact })
}

/// Next box for a rule-based input: one more dyadic block per axis.
fn refine(f: &SpectralFunction) -> Option<SpectralFunction> {
    let t = f.truncation()?;
    let next = 2 * t.cutoff + 1;
    if next > MAX_CUTOFF {
        return None;
    }
    SpectralFunction::from_rule(t.rule.clone(), f.dim(), next).ok()
}

/// Measures `e(n) = ‖f − P f‖` in the target norm over the levels and fits
/// the decay against the predicted rate.
pub fn run_experiment(
    f: &SpectralFunction,
    scheme: &QuasiInterpScheme,
    spec: &RateSpec,
    grid: &GridChoice,
    levels: &[f64],
    options: &ExperimentOptions,
) -> Result<RateReport> {
    let spec = RateSpec {
        scheme_s: scheme.declared_s(),
        ..*spec
    };
    let theory = match grid {
        GridChoice::Anisotropic => theoretical_rate(&spec)?,
        GridChoice::Energy { .. } => {
            if spec.target != Target::Isotropic {
                return Err(invalid("energy grids are defined for the isotropic target"));
            }
            spec.validate()?;
            Rate { exponent: 1.0, log_power: 0.0, anisotropic_regime: false }
        }
    };
    check_scheme(scheme, &spec)?;
    if f.dim() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, found: f.dim() });
    }
    if levels.is_empty() || levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("levels must be non-empty and strictly increasing"));
    }
    // Parameter errors of the index sets surface before any work starts.
    build_set(&spec, grid, levels[levels.len() - 1])?;

    let f_norm = wiener_norm(&f.clone().into_finite(), target_params(&spec))?.norm;
    let mut current = f.clone();
    let measured = loop {
        let measured: Vec<Measured> = levels
            .par_iter()
            .map(|&n| measure(&current, scheme, &spec, grid, n, f_norm))
            .collect::<Result<_>>()?;
        let worst = measured
            .iter()
            .filter(|m| !m.exact)
            .map(|m| (m.uncertainty, options.budget_ratio * m.error))
            .find(|(u, allowed)| u > allowed);
        match worst {
            None => break measured,
            Some((budget, tolerance)) => {
                let next = if options.auto_refine { refine(&current) } else { None };
                match next {
                    Some(g) => current = g,
                    None => return Err(Error::TruncationBudget { budget, tolerance }),
                }
            }
        }
    };

    let rows: Vec<LevelRow> = levels
        .iter()
        .zip(&measured)
        .map(|(&n, m)| LevelRow {
            n,
            error: m.error,
            uncertainty: m.uncertainty,
            omega: theory.omega(n),
            index_count: m.count,
            exact: m.exact,
        })
        .collect();
    for r in &rows {
        if !r.exact && !(r.error > 0.0) {
            return Err(Error::NonPositiveError { level: r.n, error: r.error });
        }
    }
    let first_exact = rows.iter().rposition(|r| !r.exact).map_or(0, |i| i + 1);
    let exact_from = rows.get(first_exact).map(|r| r.n);
    let fitted: Vec<&LevelRow> = rows.iter().filter(|r| !r.exact).collect();
    let ns: Vec<f64> = fitted.iter().map(|r| r.n).collect();
    let (fit, ratio_slope) = if fitted.len() >= 2 {
        let ys: Vec<f64> = fitted.iter().map(|r| r.error.log2()).collect();
        let ratios: Vec<f64> = fitted.iter().map(|r| (r.error / r.omega).log2()).collect();
        let ratio_fit = fit_log2(&ns, &ratios, false)?;
        (Some(fit_log2_pinned(&ns, &ys, theory.log_power)?), Some(-ratio_fit.exponent))
    } else {
        (None, None)
    };
    let bounded = ratio_slope.is_none_or(|s| s <= options.tolerance);
    let monotone = rows
        .windows(2)
        .all(|w| w[1].error <= w[0].error + w[0].uncertainty + w[1].uncertainty);
    let verdict = match fit {
        Some(fit) if (fit.exponent - theory.exponent).abs() <= options.tolerance && bounded => Verdict::Pass,
        None if exact_from.is_some() => Verdict::Pass,
        _ => Verdict::Fail,
    };
    Ok(RateReport {
        scheme: scheme.name().to_string(),
        spec,
        grid: *grid,
        cutoff: current.truncation().map(|t| t.cutoff),
        rows,
        theory,
        fit,
        ratio_slope,
        bounded,
        monotone,
        exact_from,
        tolerance: options.tolerance,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::builtin_scheme;
    use crate::params::{Anisotropy, Exponent, Smoothness};
    use crate::rates::{make_test_function, HybridSpace, TestFamily};
    use crate::spectral::Placement;

    fn spec(t: f64, gamma: f64, target: Target) -> RateSpec {
        RateSpec {
            p: Exponent::TWO,
            q: Exponent::TWO,
            alpha: 2.0,
            beta: 0.0,
            gamma,
            t: Anisotropy::new(t).unwrap(),
            target,
            scheme_s: Smoothness::Unbounded,
            dim: 2,
        }
    }

    #[test]
    fn polynomials_are_reproduced_exactly() {
        let sp = spec(0.0, 0.0, Target::Isotropic);
        let space = HybridSpace { p: sp.p, alpha: sp.alpha, beta: sp.beta };
        let f = make_test_function(&TestFamily::Polynomial { degree: 2, terms: 60 }, &space, 2, 0, 3).unwrap();
        let lag = builtin_scheme("lagrange").unwrap();
        let levels: Vec<f64> = (1..=6).map(f64::from).collect();
        let r = run_experiment(&f, &lag, &sp, &GridChoice::Anisotropic, &levels, &ExperimentOptions::default()).unwrap();
        // Δ(n, 0) contains (2, 2) from n = 4 on.
        assert_eq!(r.exact_from, Some(4.0));
        assert!(r.rows[..3].iter().all(|row| !row.exact && row.error > 0.0));
        assert!(r.rows[3..].iter().all(|row| row.exact));
    }

    #[test]
    fn experiments_are_reproducible() {
        let sp = spec(0.0, 0.0, Target::Isotropic);
        let space = HybridSpace { p: sp.p, alpha: sp.alpha, beta: sp.beta };
        let fam = TestFamily::BlockLacunary { rho: 1.1, terms: 2, placement: Placement::Random };
        let f = make_test_function(&fam, &space, 2, 255, 17).unwrap();
        let lag = builtin_scheme("lagrange").unwrap();
        let levels = [2.0, 3.0, 4.0];
        let a = run_experiment(&f, &lag, &sp, &GridChoice::Anisotropic, &levels, &ExperimentOptions::default()).unwrap();
        let b = run_experiment(&f, &lag, &sp, &GridChoice::Anisotropic, &levels, &ExperimentOptions::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.monotone);
        assert!(a.rows.iter().all(|r| r.uncertainty <= 1e-3 * r.error));
    }

    #[test]
    fn budget_failures_are_reported() {
        let sp = spec(0.0, 0.0, Target::Isotropic);
        let space = HybridSpace { p: sp.p, alpha: sp.alpha, beta: sp.beta };
        let fam = TestFamily::BlockLacunary { rho: 1.1, terms: 2, placement: Placement::Random };
        let f = make_test_function(&fam, &space, 2, 15, 17).unwrap();
        let lag = builtin_scheme("lagrange").unwrap();
        let opts = ExperimentOptions { auto_refine: false, ..Default::default() };
        let err = run_experiment(&f, &lag, &sp, &GridChoice::Anisotropic, &[3.0, 4.0, 5.0], &opts).unwrap_err();
        assert!(matches!(err, Error::TruncationBudget { .. }), "{err}");
    }

    #[test]
    fn scheme_order_is_checked() {
        let sp = spec(0.0, 0.0, Target::Isotropic);
        let space = HybridSpace { p: sp.p, alpha: sp.alpha, beta: sp.beta };
        let f = make_test_function(&TestFamily::Polynomial { degree: 2, terms: 3 }, &space, 2, 0, 3).unwrap();
        // The averaged scheme has s = 2, which does not exceed α = 2.
        let avg = builtin_scheme("averaged").unwrap();
        let err = run_experiment(&f, &avg, &sp, &GridChoice::Anisotropic, &[1.0, 2.0], &ExperimentOptions::default()).unwrap_err();
        assert!(err.to_string().contains("s > max"), "{err}");
    }
}
