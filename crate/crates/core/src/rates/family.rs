use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, invalid, Result};
use crate::params::Exponent;
use crate::spectral::{d_range, CoefficientRule, FreqIndex, Placement, SpectralFunction};

/// The source space `A_p^{α,β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridSpace {
    pub p: Exponent,
    pub alpha: f64,
    pub beta: f64,
}

/// Families of test functions for rate experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFamily {
    /// `f̂(k) = Π(1+|k_i|)^{−a}(1+|k|_∞)^{−b}` with seeded unimodular phases.
    Korobov { a: f64, b: f64 },
    /// Unit-norm packets in every dyadic block, damped by
    /// `2^{−(α|k|_1+β|k|_∞)}(1+|k|_1)^{−ρ}` with the space's `α, β, p`.
    BlockLacunary {
        rho: f64,
        terms: usize,
        #[serde(default)]
        placement: Placement,
    },
    /// Random coefficients on the box `D_m^d`; reproduced exactly once the
    /// index set resolves level `m` on every axis.
    Polynomial { degree: u32, terms: usize },
    Empty,
}

/// Checks that the family has finite `A_p^{α,β}` norm in dimension `d`.
///
/// Korobov, with `A = p(a−α)` and `B = p(b−β)`: grouping frequencies by
/// `m = |k|_∞`, the shell sum behaves like `m^{−A−B}` times
/// `(Σ_{u≤m} u^{−A})^{d−1}`. The series converges iff `A+B > 1` when
/// `A > 1`, and iff `dA + B > d` when `A ≤ 1`. For `p = ∞` the supremum is
/// finite iff `a ≥ α` and `a+b ≥ α+β`.
///
/// Block-lacunary: the norm is comparable to `(Σ_k (1+|k|_1)^{−ρp})^{1/p}`,
/// and there are about `m^{d−1}` blocks with `|k|_1 = m`, so `ρp > d` is
/// needed (`ρ ≥ 0` for `p = ∞`).
pub fn check_membership(family: &TestFamily, space: &HybridSpace, d: usize) -> Result<()> {
    let dd = d as f64;
    match *family {
        TestFamily::Korobov { a, b } => {
            if space.p.is_infinite() {
                let (a1, b1) = (a - space.alpha, b - space.beta);
                if a1 >= 0.0 && a1 + b1 >= 0.0 {
                    return Ok(());
                }
                return Err(hypothesis(format!(
                    "Korobov coefficients are unbounded in A_∞^{{α,β}}: a − α = {a1}, a + b − α − β = {}",
                    a1 + b1
                )));
            }
            let p = space.p.value();
            let (big_a, big_b) = (p * (a - space.alpha), p * (b - space.beta));
            let ok = if big_a > 1.0 { big_a + big_b > 1.0 } else { dd * big_a + big_b > dd };
            if ok {
                Ok(())
            } else {
                Err(hypothesis(format!(
                    "Korobov norm diverges: A = p(a−α) = {big_a}, B = p(b−β) = {big_b}, d = {d} \
                     (need A+B > 1 when A > 1, else dA+B > d)"
                )))
            }
        }
        TestFamily::BlockLacunary { rho, terms, .. } => {
            if terms == 0 {
                return Err(invalid("block packets need at least one term"));
            }
            let ok = if space.p.is_infinite() { rho >= 0.0 } else { rho * space.p.value() > dd };
            if ok {
                Ok(())
            } else {
                Err(hypothesis(format!(
                    "block-lacunary norm diverges: ρp = {} must exceed d = {d}",
                    rho * space.p.value()
                )))
            }
        }
        TestFamily::Polynomial { terms, .. } => {
            if terms == 0 {
                return Err(invalid("polynomial family needs at least one term"));
            }
            Ok(())
        }
        TestFamily::Empty => Ok(()),
    }
}

/// Builds a member of `family` with certified membership in `space`.
/// Rule-based families are materialized on `[−cutoff, cutoff]^d`.
pub fn make_test_function(
    family: &TestFamily,
    space: &HybridSpace,
    d: usize,
    cutoff: i64,
    seed: u64,
) -> Result<SpectralFunction> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    check_membership(family, space, d)?;
    match *family {
        TestFamily::Korobov { a, b } => {
            SpectralFunction::from_rule(CoefficientRule::Korobov { a, b, seed: Some(seed) }, d, cutoff)
        }
        TestFamily::BlockLacunary { rho, terms, placement } => SpectralFunction::from_rule(
            CoefficientRule::BlockLacunary {
                alpha: space.alpha,
                beta: space.beta,
                rho,
                p: space.p,
                terms,
                seed,
                placement,
            },
            d,
            cutoff,
        ),
        TestFamily::Polynomial { degree, terms } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let range = d_range(degree);
            let coeffs: Vec<(FreqIndex, Complex64)> = (0..terms)
                .map(|_| {
                    let k = (0..d).map(|_| rng.gen_range(range.clone())).collect();
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    (FreqIndex::new(k), c)
                })
                .collect();
            SpectralFunction::from_coeffs(d, coeffs)
        }
        TestFamily::Empty => Ok(SpectralFunction::zero(d)),
    }
}
