//! Univariate operators `Q_j`, tensor differences `η_j` and combination
//! operators `P_Γ = Σ_{j∈Γ} η_j` acting on [`SpectralFunction`]s.
//!
//! The production path works in coefficient space through the aliasing
//! identity: the `ℓ`-th coefficient of `Q_j f` is
//! `φ̂_j(ℓ)·Σ_μ f̂(ℓ+2^jμ)·φ̃̂_j(ℓ+2^jμ)` for `ℓ ∈ D_j`. [`apply_q_direct`]
//! follows the sampling definition instead and serves as an oracle.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::kernels::QuasiInterpScheme;
use crate::params::Exponent;
use crate::sparse_grid::SparseIndexSet;
use crate::spectral::{
    alias, d_range, sample_fiber, unit_turn, FreqIndex, Level, SpectralFunction, TrigPolynomial, WeightSpec,
};

type Coeffs = BTreeMap<FreqIndex, Complex64>;

/// Per-axis factor of `Q_j`: the aliased frequency and `φ̂_j(ℓ)φ̃̂_j(m)`.
fn q_factor(scheme: &QuasiInterpScheme, j: u32, m: i64) -> Option<(i64, Complex64)> {
    let l = alias(m, j);
    let value = if l == m {
        scheme.product(j, l)
    } else {
        scheme.phi().symbol(j, l) * scheme.phi_tilde().symbol(j, m)
    };
    (value != Complex64::new(0.0, 0.0)).then_some((l, value))
}

/// Starting truncation budget for a tensor application: the `N`-weighted
/// `A_1` tail of the rule plus whatever the input already carries.
///
/// Each axis is processed at most once per tensor term, and an axis operator
/// multiplies the weighted mass of the untouched axes by at most
/// `C_φ̃·C_φ`, so the budget stays a valid `A_1` bound on the discarded part.
fn input_budget(scheme: &QuasiInterpScheme, f: &SpectralFunction) -> Result<f64> {
    let tail = match f.truncation() {
        Some(t) => t.weighted(f.dim(), WeightSpec { mix: scheme.declared_n(), iso: 0.0 }, Exponent::ONE)?,
        None => 0.0,
    };
    Ok(f.budget() + tail)
}

fn check_axis(f: &SpectralFunction, axis: usize) -> Result<()> {
    if axis >= f.dim() {
        Err(invalid(format!("axis {axis} out of range for dimension {}", f.dim())))
    } else {
        Ok(())
    }
}

/// `Q_j` along one axis; other axes are untouched.
pub fn apply_q(scheme: &QuasiInterpScheme, j: u32, axis: usize, f: &SpectralFunction) -> Result<SpectralFunction> {
    check_axis(f, axis)?;
    let budget = scheme.operator_constant() * input_budget(scheme, f)?;
    let mut out = Coeffs::new();
    for (k, c) in f.iter() {
        if let Some((l, w)) = q_factor(scheme, j, k[axis]) {
            *out.entry(k.with_component(axis, l)).or_default() += c * w;
        }
    }
    Ok(SpectralFunction::from_parts(f.dim(), out, budget))
}

/// [`apply_q`] with an explicit bound on the accumulated truncation budget.
pub fn apply_q_within(
    scheme: &QuasiInterpScheme,
    j: u32,
    axis: usize,
    f: &SpectralFunction,
    tolerance: f64,
) -> Result<SpectralFunction> {
    let g = apply_q(scheme, j, axis, f)?;
    if g.budget() > tolerance {
        return Err(Error::TruncationBudget { budget: g.budget(), tolerance });
    }
    Ok(g)
}

/// `Q_j` along one axis by the sampling definition
/// `2^{−j} Σ_{k∈D_j} (f∗φ̃_j)(x_k^j) φ_j(x − x_k^j)`.
pub fn apply_q_direct(
    scheme: &QuasiInterpScheme,
    j: u32,
    axis: usize,
    f: &SpectralFunction,
) -> Result<SpectralFunction> {
    check_axis(f, axis)?;
    let budget = scheme.operator_constant() * input_budget(scheme, f)?;
    // Group the spectrum into fibres along the axis.
    let mut fibres: BTreeMap<FreqIndex, Vec<(i64, Complex64)>> = BTreeMap::new();
    for (k, c) in f.iter() {
        fibres.entry(k.with_component(axis, 0)).or_default().push((k[axis], *c));
    }
    let scale = (-f64::from(j)).exp2();
    let mut out = Coeffs::new();
    for (rest, fibre) in fibres {
        let values = if f.dim() == 1 {
            SpectralFunction::from_coeffs(1, fibre.iter().map(|&(m, c)| (FreqIndex::new(vec![m]), c)))?
                .sample_convolution(scheme.phi_tilde(), j)?
        } else {
            let weighted: Vec<(i64, Complex64)> = fibre
                .iter()
                .map(|&(m, c)| (m, c * scheme.phi_tilde().symbol(j, m)))
                .collect();
            sample_fiber(&weighted, j)
        };
        for l in d_range(j) {
            let phi = scheme.phi().symbol(j, l);
            if phi == Complex64::new(0.0, 0.0) {
                continue;
            }
            let node_sum: Complex64 = d_range(j)
                .zip(&values)
                .map(|(k, v)| v * unit_turn(-i128::from(l) * i128::from(k), j))
                .sum();
            *out.entry(rest.with_component(axis, l)).or_default() += phi * node_sum * scale;
        }
    }
    Ok(SpectralFunction::from_parts(f.dim(), out, budget))
}

/// `Π_i Q_{levels_i}^i` in a single pass over the spectrum.
pub fn apply_tensor_q(scheme: &QuasiInterpScheme, levels: &Level, f: &SpectralFunction) -> Result<SpectralFunction> {
    crate::spectral::check_dim(f.dim(), levels.dim())?;
    let c = scheme.operator_constant();
    let budget = c.powi(f.dim() as i32) * input_budget(scheme, f)?;
    let mut out = Coeffs::new();
    'coeffs: for (k, v) in f.iter() {
        let mut target = Vec::with_capacity(k.dim());
        let mut w = *v;
        for (&m, &j) in k.iter().zip(levels.iter()) {
            match q_factor(scheme, j, m) {
                Some((l, x)) => {
                    target.push(l);
                    w *= x;
                }
                None => continue 'coeffs,
            }
        }
        *out.entry(FreqIndex::new(target)).or_default() += w;
    }
    Ok(SpectralFunction::from_parts(f.dim(), out, budget))
}

/// How `η_j` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaMethod {
    /// Every coefficient is pushed through the `2^d` signed tensor terms.
    SignedExpansion,
    /// `Q_{j_i} − Q_{j_i−1}` applied one axis after another.
    AxisSequential,
}

/// Budget factor of `η_j`: `(2C)` per axis with a subtraction, `C` otherwise.
fn eta_factor(scheme: &QuasiInterpScheme, j: &Level) -> f64 {
    let c = scheme.operator_constant();
    j.iter().map(|&ji| if ji == 0 { c } else { 2.0 * c }).product()
}

fn eta_signed(scheme: &QuasiInterpScheme, j: &Level, f: &SpectralFunction) -> Coeffs {
    let mut out = Coeffs::new();
    let mut terms: Vec<(Vec<i64>, Complex64)> = Vec::with_capacity(1 << j.dim());
    for (k, v) in f.iter() {
        terms.clear();
        terms.push((Vec::with_capacity(k.dim()), *v));
        for (&m, &ji) in k.iter().zip(j.iter()) {
            let mut next = Vec::with_capacity(terms.len() * 2);
            let upper = q_factor(scheme, ji, m);
            let lower = if ji == 0 { None } else { q_factor(scheme, ji - 1, m) };
            for (t, w) in &terms {
                if let Some((l, x)) = upper {
                    let mut t2 = t.clone();
                    t2.push(l);
                    next.push((t2, w * x));
                }
                if let Some((l, x)) = lower {
                    let mut t2 = t.clone();
                    t2.push(l);
                    next.push((t2, -w * x));
                }
            }
            terms = next;
            if terms.is_empty() {
                break;
            }
        }
        for (t, w) in terms.drain(..) {
            *out.entry(FreqIndex::new(t)).or_default() += w;
        }
    }
    out
}

fn eta_sequential(scheme: &QuasiInterpScheme, j: &Level, f: &SpectralFunction) -> Result<Coeffs> {
    let mut g = f.clone().into_finite().with_budget(0.0);
    for (axis, &ji) in j.iter().enumerate() {
        let upper = apply_q(scheme, ji, axis, &g)?;
        g = if ji == 0 {
            upper
        } else {
            upper.sub(&apply_q(scheme, ji - 1, axis, &g)?)?
        };
    }
    Ok(g.coeffs().clone())
}

/// `η_j f = Π_i (Q_{j_i}^i − Q_{j_i−1}^i) f` with `Q_{−1} = 0`.
pub fn apply_eta(scheme: &QuasiInterpScheme, j: &Level, f: &SpectralFunction) -> Result<TrigPolynomial> {
    apply_eta_with(scheme, j, f, EtaMethod::SignedExpansion)
}

pub fn apply_eta_with(
    scheme: &QuasiInterpScheme,
    j: &Level,
    f: &SpectralFunction,
    method: EtaMethod,
) -> Result<TrigPolynomial> {
    crate::spectral::check_dim(f.dim(), j.dim())?;
    let coeffs = match method {
        EtaMethod::SignedExpansion => eta_signed(scheme, j, f),
        EtaMethod::AxisSequential => eta_sequential(scheme, j, f)?,
    };
    TrigPolynomial::new(j.clone(), coeffs)
}

/// Truncation budget of `η_j f` in `A_1`.
pub fn eta_budget(scheme: &QuasiInterpScheme, j: &Level, f: &SpectralFunction) -> Result<f64> {
    Ok(eta_factor(scheme, j) * input_budget(scheme, f)?)
}

fn merge(mut a: Coeffs, b: Coeffs) -> Coeffs {
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

/// Pairwise tree reduction; the shape depends only on the number of parts.
fn tree_sum(mut parts: Vec<Coeffs>) -> Coeffs {
    if parts.is_empty() {
        return Coeffs::new();
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => merge(a, b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// `P_Γ f = Σ_{j∈Γ} η_j f`.
pub fn apply_p(scheme: &QuasiInterpScheme, gamma: &SparseIndexSet, f: &SpectralFunction) -> Result<SpectralFunction> {
    apply_p_levels(scheme, gamma.members(), f)
}

pub fn apply_p_levels(scheme: &QuasiInterpScheme, levels: &[Level], f: &SpectralFunction) -> Result<SpectralFunction> {
    for j in levels {
        crate::spectral::check_dim(f.dim(), j.dim())?;
    }
    let base = input_budget(scheme, f)?;
    let parts: Vec<Coeffs> = levels.par_iter().map(|j| eta_signed(scheme, j, f)).collect();
    let budget: f64 = levels.iter().map(|j| eta_factor(scheme, j)).sum::<f64>() * base;
    Ok(SpectralFunction::from_parts(f.dim(), tree_sum(parts), budget))
}
