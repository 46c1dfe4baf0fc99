//! Index sets `Δ(n, T)`, energy sets `Δ(ξ)`, user-supplied `Γ`, their
//! frequency counts, sparse node grids and lattice tail sums.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{hypothesis, invalid, Error, Result};
use crate::fit::{fit_log2, SlopeFit};
use crate::majorant::{lattice_tail, lattice_tail_sup};
use crate::params::Anisotropy;
use crate::spectral::{tensor_grid, Level, Turn};

/// Slack for floating-point boundary cases of the membership predicates.
const MEMBERSHIP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    /// `Δ(n, T)`; `T = −∞` is the full box `|k|_∞ ≤ n`.
    Anisotropic { n: f64, t: Anisotropy },
    /// `{k : (α−σ−ε)|k|_1 − (γ−β−ε)|k|_∞ ≤ ξ}`.
    Energy {
        xi: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        eps: f64,
        sigma: f64,
    },
    Explicit,
}

/// A finite downward-closed subset of `Z_+^d`, members in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseIndexSet {
    dim: usize,
    members: Vec<Level>,
    descriptor: SetDescriptor,
}

fn in_delta(k: &Level, n: f64, t: Anisotropy) -> bool {
    match t {
        Anisotropy::NegInfinity => f64::from(k.linf()) <= n + MEMBERSHIP_SLACK,
        Anisotropy::Finite(t) => {
            let lhs = f64::from(k.l1()) - t * f64::from(k.linf());
            let rhs = (1.0 - t) * n;
            lhs <= rhs + MEMBERSHIP_SLACK * rhs.abs().max(1.0)
        }
    }
}

/// Every vector of `{0, …, m}^d`.
pub(crate) fn box_levels(m: u32, d: usize) -> Vec<Level> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * (m as usize + 1));
        for c in &out {
            for j in 0..=m {
                let mut v: Vec<u32> = c.clone();
                v.push(j);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(Level::new).collect()
}

fn check_level(n: f64) -> Result<u32> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(invalid(format!("level n must be a finite non-negative number, got {n}")));
    }
    if n > 1e6 {
        return Err(invalid(format!("level n = {n} is too large to enumerate")));
    }
    Ok((n + MEMBERSHIP_SLACK).floor() as u32)
}

impl SparseIndexSet {
    /// `Δ(n, T) = {k : |k|_1 − T|k|_∞ ≤ (1−T)n}`.
    pub fn delta(n: f64, t: Anisotropy, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if let Anisotropy::Finite(tv) = t {
            Anisotropy::new(tv)?;
        }
        // |k|_1 − T|k|_∞ ≥ (1−T)|k|_∞ for every T < 1.
        let m = check_level(n)?;
        let members = box_levels(m, d).into_iter().filter(|k| in_delta(k, n, t)).collect();
        Ok(SparseIndexSet {
            dim: d,
            members,
            descriptor: SetDescriptor::Anisotropic { n, t },
        })
    }

    /// The Smolyak set `|k|_1 ≤ n`.
    pub fn smolyak(n: u32, d: usize) -> Self {
        SparseIndexSet::delta(f64::from(n), Anisotropy::Finite(0.0), d).expect("Smolyak parameters are valid")
    }

    pub fn full_box(n: u32, d: usize) -> Self {
        SparseIndexSet::delta(f64::from(n), Anisotropy::NegInfinity, d).expect("box parameters are valid")
    }

    /// `Δ(ξ)` under `0 < ε < γ−β < α−σ`.
    pub fn energy(xi: f64, alpha: f64, beta: f64, gamma: f64, eps: f64, sigma: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !(0.0 < eps && eps < gamma - beta && gamma - beta < alpha - sigma) {
            return Err(hypothesis(format!(
                "energy sets need 0 < ε < γ−β < α−σ, got ε = {eps}, γ−β = {}, α−σ = {}",
                gamma - beta,
                alpha - sigma
            )));
        }
        if !(xi >= 0.0) {
            return Err(invalid(format!("ξ must be non-negative, got {xi}")));
        }
        let (n, _) = energy_equivalent(xi, alpha, beta, gamma, eps, sigma);
        let m = check_level(n)?;
        let a = alpha - sigma - eps;
        let b = gamma - beta - eps;
        let members = box_levels(m, d)
            .into_iter()
            .filter(|k| a * f64::from(k.l1()) - b * f64::from(k.linf()) <= xi + MEMBERSHIP_SLACK * xi.max(1.0))
            .collect();
        Ok(SparseIndexSet {
            dim: d,
            members,
            descriptor: SetDescriptor::Energy { xi, alpha, beta, gamma, eps, sigma },
        })
    }

    /// A user-supplied set; it must be downward closed.
    pub fn explicit(d: usize, members: Vec<Level>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let set: BTreeSet<Level> = members.into_iter().collect();
        for k in &set {
            crate::spectral::check_dim(d, k.dim())?;
            for i in 0..d {
                if k[i] > 0 {
                    let mut below = k.to_vec();
                    below[i] -= 1;
                    if !set.contains(&Level::new(below.clone())) {
                        return Err(invalid(format!("set is not downward closed: {k:?} present, {below:?} missing")));
                    }
                }
            }
        }
        Ok(SparseIndexSet {
            dim: d,
            members: set.into_iter().collect(),
            descriptor: SetDescriptor::Explicit,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[Level] {
        &self.members
    }

    pub fn descriptor(&self) -> &SetDescriptor {
        &self.descriptor
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: &Level) -> bool {
        self.members.binary_search(k).is_ok()
    }

    pub fn is_downward_closed(&self) -> bool {
        self.members.iter().all(|k| {
            (0..self.dim).all(|i| {
                k[i] == 0 || {
                    let mut below = k.to_vec();
                    below[i] -= 1;
                    self.contains(&Level::new(below))
                }
            })
        })
    }

    /// Largest `|k|_∞` over the members.
    pub fn max_linf(&self) -> u32 {
        self.members.iter().map(Level::linf).max().unwrap_or(0)
    }

    /// `Σ_{k∈Γ} 2^{|k|_1}`, the number of frequencies spanned by the dyadic boxes.
    pub fn frequency_count(&self) -> Result<u128> {
        self.members.iter().try_fold(0u128, |acc, k| {
            1u128
                .checked_shl(k.l1())
                .filter(|_| k.l1() < 127)
                .and_then(|x| acc.checked_add(x))
                .ok_or(Error::Overflow("counting frequencies"))
        })
    }

    /// The sparse grid `Γ = ⋃_{j∈Γ} I_{j_1}×…×I_{j_d}` with exact deduplication.
    pub fn grid_points(&self) -> Vec<Vec<Turn>> {
        let mut points = BTreeSet::new();
        for j in &self.members {
            for p in tensor_grid(j) {
                points.insert(p.into_iter().map(canonical_turn).collect::<Vec<_>>());
            }
        }
        points.into_iter().collect()
    }
}

/// Reduces `num/2^level` of a turn to `[0, 1)` in lowest terms.
pub fn canonical_turn(t: Turn) -> Turn {
    let modulus = 1i64 << t.level;
    let mut num = t.num.rem_euclid(modulus);
    let mut level = t.level;
    while level > 0 && num % 2 == 0 {
        num /= 2;
        level -= 1;
    }
    if num == 0 {
        level = 0;
    }
    Turn::new(num, level)
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, 1u64 << self.level)
    }
}

/// `(n, T)` of the anisotropic set that coincides with `Δ(ξ)`.
pub fn energy_equivalent(xi: f64, alpha: f64, beta: f64, gamma: f64, eps: f64, sigma: f64) -> (f64, f64) {
    let t = (gamma - beta - eps) / (alpha - sigma - eps);
    let n = xi / (alpha - sigma - gamma + beta);
    (n, t)
}

/// Which of the four growth regimes of the frequency count applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountRegime {
    /// `0 < T < 1`: `2^n`.
    Positive,
    /// `T = 0`: `2^n n^{d−1}`.
    Smolyak,
    /// `T < 0`: `2^{(1−T)n/(1−T/d)}`.
    Negative,
    /// `T = −∞`: `2^{dn}`.
    FullBox,
}

impl CountRegime {
    pub fn of(t: Anisotropy) -> Self {
        match t {
            Anisotropy::NegInfinity => CountRegime::FullBox,
            Anisotropy::Finite(t) if t > 0.0 => CountRegime::Positive,
            Anisotropy::Finite(0.0) => CountRegime::Smolyak,
            Anisotropy::Finite(_) => CountRegime::Negative,
        }
    }

    /// Expected growth exponent and log power of the count.
    pub fn expected(self, t: Anisotropy, d: usize) -> (f64, f64) {
        let dd = d as f64;
        match self {
            CountRegime::Positive => (1.0, 0.0),
            CountRegime::Smolyak => (1.0, dd - 1.0),
            CountRegime::Negative => {
                let t = t.as_f64();
                ((1.0 - t) / (1.0 - t / dd), 0.0)
            }
            CountRegime::FullBox => (dd, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardinalityProfile {
    pub t: Anisotropy,
    pub dim: usize,
    pub regime: CountRegime,
    /// `(n, |Δ|, Σ 2^{|k|_1})` per level.
    pub rows: Vec<(u32, usize, u128)>,
    /// Fitted growth of `log2(count)` per level; the Smolyak regime includes
    /// a `log2 n` regressor.
    pub fit: SlopeFit,
    pub expected_exponent: f64,
    pub expected_log_power: f64,
}

pub fn cardinality_profile(t: Anisotropy, d: usize, levels: &[u32]) -> Result<CardinalityProfile> {
    let regime = CountRegime::of(t);
    let mut rows = Vec::with_capacity(levels.len());
    for &n in levels {
        let set = SparseIndexSet::delta(f64::from(n), t, d)?;
        rows.push((n, set.len(), set.frequency_count()?));
    }
    let ns: Vec<f64> = rows.iter().map(|r| f64::from(r.0)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.2 as f64).log2()).collect();
    let fit = fit_log2(&ns, &ys, regime == CountRegime::Smolyak)?;
    // `fit_log2` reports decay; a count grows, so only the slope flips.
    let fit = SlopeFit {
        exponent: -fit.exponent,
        ..fit
    };
    let (expected_exponent, expected_log_power) = regime.expected(t, d);
    Ok(CardinalityProfile {
        t,
        dim: d,
        regime,
        rows,
        fit,
        expected_exponent,
        expected_log_power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    /// `Σ_{k∉Δ(n,T)} 2^{−t|k|_1 + r|k|_∞}` over `|k|_∞ ≤ kmax`.
    pub sum: f64,
    /// Certified bound on the part with `|k|_∞ > kmax`.
    pub remainder: f64,
    /// Supremum of the same terms (including the certified remainder sup).
    pub sup: f64,
    /// Closed-form bound for the sum in the applicable regime.
    pub bound: f64,
    /// Closed-form bound for the supremum.
    pub bound_sup: f64,
    /// Whether `T ≥ r/t`.
    pub anisotropic_regime: bool,
}

/// Closed-form decay exponent of the tail sums.
pub fn tail_exponent(t_aniso: f64, t: f64, r: f64, d: usize) -> f64 {
    let dd = d as f64;
    if t_aniso >= r / t {
        t - r - (t * t_aniso - r) * (dd - 1.0) / (dd - t_aniso)
    } else {
        t - r
    }
}

/// Tail sum and supremum over the complement of `Δ(n, T)` with their bounds.
pub fn tail_sum(n: u32, t_aniso: f64, t: f64, r: f64, d: usize, kmax: u32) -> Result<TailSum> {
    if !(t > 0.0) || !(r < t) {
        return Err(Error::Divergent(format!("tail sums need t > 0 and r < t, got t = {t}, r = {r}")));
    }
    let aniso = Anisotropy::new(t_aniso)?;
    if kmax < n {
        return Err(invalid("kmax must be at least n"));
    }
    let nf = f64::from(n);
    let mut sum = 0.0;
    let mut sup = 0.0f64;
    for k in box_levels(kmax, d) {
        if in_delta(&k, nf, aniso) {
            continue;
        }
        let v = (-t * f64::from(k.l1()) + r * f64::from(k.linf())).exp2();
        sum += v;
        sup = sup.max(v);
    }
    let remainder = lattice_tail(t, -r, kmax, d)?;
    sup = sup.max(lattice_tail_sup(t, -r, kmax)?);
    let anisotropic_regime = t_aniso >= r / t;
    let e = tail_exponent(t_aniso, t, r, d);
    let bound_sup = (-e * nf).exp2();
    let bound = if anisotropic_regime {
        bound_sup * nf.powi(d as i32 - 1)
    } else {
        bound_sup
    };
    Ok(TailSum {
        sum,
        remainder,
        sup,
        bound,
        bound_sup,
        anisotropic_regime,
    })
}

/// `ψ(k) ≤ ψ(k′) − ε|k′−k|_1` for `ψ(k) = α|k|_1 + β|k|_∞`,
/// `ε = min(α, α+β)`, checked in exact rational arithmetic.
pub fn monotone_gap_holds(alpha: Ratio<i64>, beta: Ratio<i64>, k: &[u32], k2: &[u32]) -> Result<bool> {
    if k.len() != k2.len() {
        return Err(Error::DimensionMismatch { expected: k.len(), found: k2.len() });
    }
    if k.iter().zip(k2).any(|(a, b)| a > b) {
        return Err(invalid("pairs must be ordered componentwise"));
    }
    let eps = alpha.min(alpha + beta);
    if eps <= Ratio::from_integer(0) {
        return Err(hypothesis("the monotone gap needs min(α, α+β) > 0"));
    }
    let psi = |v: &[u32]| {
        let l1: i64 = v.iter().map(|&x| i64::from(x)).sum();
        let linf = v.iter().map(|&x| i64::from(x)).max().unwrap_or(0);
        alpha * l1 + beta * linf
    };
    let gap: i64 = k.iter().zip(k2).map(|(&a, &b)| i64::from(b) - i64::from(a)).sum();
    Ok(psi(k) <= psi(k2) - eps * gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn levels(v: &[&[u32]]) -> Vec<Level> {
        v.iter().map(|x| Level::new(x.to_vec())).collect()
    }

    #[test]
    fn delta_examples() {
        let s = SparseIndexSet::delta(2.0, Anisotropy::Finite(0.0), 2).unwrap();
        let mut expected = levels(&[&[0, 0], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]);
        expected.sort();
        assert_eq!(s.members(), expected.as_slice());
        let s = SparseIndexSet::delta(2.0, Anisotropy::Finite(0.5), 2).unwrap();
        let mut expected = levels(&[&[0, 0], &[1, 0], &[0, 1], &[2, 0], &[0, 2]]);
        expected.sort();
        assert_eq!(s.members(), expected.as_slice());
        for t in [-2.0, 0.0, 0.7] {
            let s = SparseIndexSet::delta(5.0, Anisotropy::Finite(t), 1).unwrap();
            assert_eq!(s.len(), 6);
        }
        assert!(SparseIndexSet::delta(2.0, Anisotropy::Finite(1.0), 2).is_err());
    }

    #[test]
    fn energy_examples() {
        let e = SparseIndexSet::energy(3.0, 2.0, 0.0, 1.0, 0.5, 0.0, 2).unwrap();
        for k in box_levels(6, 2) {
            let inside = 1.5 * f64::from(k.l1()) - 0.5 * f64::from(k.linf()) <= 3.0;
            assert_eq!(e.contains(&k), inside, "{k:?}");
        }
        let (n, t) = energy_equivalent(3.0, 2.0, 0.0, 1.0, 0.5, 0.0);
        assert!((t - 1.0 / 3.0).abs() < 1e-15 && (n - 3.0).abs() < 1e-15);
        let d = SparseIndexSet::delta(n, Anisotropy::Finite(t), 2).unwrap();
        assert_eq!(d.members(), e.members());

        let zero = SparseIndexSet::energy(0.0, 2.0, 0.0, 1.0, 0.5, 0.0, 3).unwrap();
        assert_eq!(zero.members(), &[Level::zero(3)]);
        let one = SparseIndexSet::energy(3.7, 2.0, 0.0, 1.0, 0.5, 0.0, 1).unwrap();
        assert_eq!(one.len(), 4);
        assert!(matches!(
            SparseIndexSet::energy(3.0, 2.0, 0.0, 1.0, 1.5, 0.0, 2),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn energy_sets_match_anisotropic_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let alpha = rng.gen_range(1.0..4.0);
            let sigma = rng.gen_range(0.0..0.5);
            let gb = rng.gen_range(0.1..(alpha - sigma));
            let beta = rng.gen_range(-1.0..1.0);
            let gamma = gb + beta;
            let eps = rng.gen_range(0.01..gb);
            let xi = rng.gen_range(0.0..8.0);
            let d = rng.gen_range(1..=3);
            let e = SparseIndexSet::energy(xi, alpha, beta, gamma, eps, sigma, d).unwrap();
            let (n, t) = energy_equivalent(xi, alpha, beta, gamma, eps, sigma);
            let a = SparseIndexSet::delta(n, Anisotropy::Finite(t), d).unwrap();
            assert_eq!(e.members(), a.members());
        }
    }

    #[test]
    fn count_examples() {
        let s = SparseIndexSet::delta(2.0, Anisotropy::Finite(0.0), 2).unwrap();
        assert_eq!(s.frequency_count().unwrap(), 17);
        let s = SparseIndexSet::explicit(3, vec![Level::zero(3)]).unwrap();
        assert_eq!(s.frequency_count().unwrap(), 1);
    }

    #[test]
    fn positive_t_counts_grow_like_2n() {
        let p = cardinality_profile(Anisotropy::Finite(0.5), 2, &(4..=12).collect::<Vec<_>>()).unwrap();
        assert!((p.fit.exponent - 1.0).abs() < 0.2, "{:?}", p.fit);
    }

    #[test]
    fn explicit_sets_must_be_downward_closed() {
        assert!(SparseIndexSet::explicit(2, levels(&[&[0, 0], &[1, 1]])).is_err());
        let s = SparseIndexSet::explicit(2, levels(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]])).unwrap();
        assert!(s.is_downward_closed());
    }

    #[test]
    fn grid_examples() {
        let g = SparseIndexSet::delta(0.0, Anisotropy::Finite(0.0), 1).unwrap().grid_points();
        assert_eq!(g, vec![vec![Turn::new(0, 0)]]);
        // Δ(1, 0) in d = 2 is {(0,0), (1,0), (0,1)}; I_1 = {0, 1/2}.
        let g = SparseIndexSet::delta(1.0, Anisotropy::Finite(0.0), 2).unwrap().grid_points();
        assert_eq!(g.len(), 3);
        let labels: Vec<String> = g.iter().map(|p| format!("{} {}", p[0], p[1])).collect();
        assert_eq!(labels, ["0/1 0/1", "0/1 1/2", "1/2 0/1"]);
    }

    #[test]
    fn grids_are_nested_and_counted() {
        for t in [Anisotropy::Finite(0.0), Anisotropy::Finite(0.5), Anisotropy::Finite(-1.0), Anisotropy::NegInfinity] {
            let mut prev: Option<BTreeSet<Vec<Turn>>> = None;
            for n in 0..=5 {
                let s = SparseIndexSet::delta(f64::from(n), t, 2).unwrap();
                let g: BTreeSet<Vec<Turn>> = s.grid_points().into_iter().collect();
                assert!(s.frequency_count().unwrap() >= g.len() as u128);
                assert!(g.len() >= s.len());
                if let Some(p) = &prev {
                    assert!(p.is_subset(&g));
                }
                prev = Some(g);
            }
        }
    }

    #[test]
    fn sets_are_monotone() {
        for d in 1..=3 {
            for n in 0..6 {
                let nf = f64::from(n);
                for t in [-1.0, 0.0, 0.25, 0.5, 0.9] {
                    let a = SparseIndexSet::delta(nf, Anisotropy::Finite(t), d).unwrap();
                    let b = SparseIndexSet::delta(nf + 1.0, Anisotropy::Finite(t), d).unwrap();
                    assert!(a.is_downward_closed());
                    assert!(a.members().iter().all(|k| b.contains(k)));
                }
                let ts = [0.0, 0.25, 0.5, 0.75, 0.95];
                for w in ts.windows(2) {
                    let lo = SparseIndexSet::delta(nf, Anisotropy::Finite(w[0]), d).unwrap();
                    let hi = SparseIndexSet::delta(nf, Anisotropy::Finite(w[1]), d).unwrap();
                    assert!(hi.members().iter().all(|k| lo.contains(k)));
                }
            }
        }
    }

    #[test]
    fn one_dimensional_tail_is_geometric() {
        let (t, r, n) = (2.0, 0.5, 4u32);
        let ts = tail_sum(n, 0.0, t, r, 1, 60).unwrap();
        let exact = (-(t - r) * f64::from(n + 1)).exp2() / (1.0 - (-(t - r)).exp2());
        assert!(((ts.sum + ts.remainder) / exact - 1.0).abs() < 1e-12);
        assert!(ts.remainder < 1e-20);
    }

    #[test]
    fn tail_ratios_stay_in_band() {
        for &(t_aniso, expected_regime) in &[(0.0, false), (0.5, true)] {
            let mut ratios = Vec::new();
            for n in 2..=10 {
                let ts = tail_sum(n, t_aniso, 2.0, 0.5, 2, 60).unwrap();
                assert_eq!(ts.anisotropic_regime, expected_regime);
                ratios.push((ts.sum + ts.remainder) / ts.bound);
            }
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            assert!(hi / lo <= 50.0, "T = {t_aniso}: {ratios:?}");
        }
        assert!(tail_sum(3, 0.0, 1.0, 1.0, 2, 10).is_err());
    }

    #[test]
    fn monotone_gap_examples() {
        let r = |n: i64, d: i64| Ratio::new(n, d);
        assert!(monotone_gap_holds(r(1, 1), r(-1, 2), &[0, 1], &[3, 1]).unwrap());
        assert!(monotone_gap_holds(r(2, 1), r(0, 1), &[0, 0], &[0, 0]).unwrap());
        assert!(monotone_gap_holds(r(1, 1), r(-1, 1), &[0], &[1]).is_err());
        assert!(monotone_gap_holds(r(1, 1), r(0, 1), &[2], &[1]).is_err());
    }
}
