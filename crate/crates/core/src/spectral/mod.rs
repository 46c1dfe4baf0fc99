//! Frequency-lattice representation of periodic functions on `T^d`.
//!
//! A [`SpectralFunction`] stores a finite map from integer frequency vectors to
//! complex Fourier coefficients. Functions with infinite spectra carry an
//! analytic [`CoefficientRule`] together with a cutoff box `[−M, M]^d` and a
//! certified bound `τ` on the `A_1` mass outside that box. Dense coefficient
//! boxes are never materialized by the operators; only the stored support is.
//!
//! Dyadic conventions used throughout the crate:
//!
//! * `D_j = [−2^{j−1}, 2^{j−1}) ∩ Z` for `j ≥ 1` and `D_0 = {0}`,
//! * `P_j = {ℓ : 2^{j−1} ≤ |ℓ| < 2^j}` for `j ≥ 1` and `P_0 = {0}`,
//! * nodes `x_k^j = πk/2^{j−1}`, i.e. `k/2^j` of a full turn.

mod json;
mod rule;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use json::SpectralFunctionJson;
pub use rule::{CoefficientRule, Placement, WeightSpec};

use crate::error::{Error, Result};
use crate::kernels::KernelFamily;

/// An integer frequency vector `k ∈ Z^d`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FreqIndex(Vec<i64>);

impl FreqIndex {
    pub fn new(k: Vec<i64>) -> Self {
        FreqIndex(k)
    }

    pub fn zero(d: usize) -> Self {
        FreqIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|k| k.abs()).sum()
    }

    pub fn linf(&self) -> i64 {
        self.0.iter().map(|k| k.abs()).max().unwrap_or(0)
    }

    /// Index of the dyadic block `P_{k_1}×…×P_{k_d}` containing this frequency.
    pub fn block(&self) -> Level {
        Level(self.0.iter().map(|&m| block_of(m)).collect())
    }

    pub fn with_component(&self, axis: usize, value: i64) -> Self {
        let mut k = self.0.clone();
        k[axis] = value;
        FreqIndex(k)
    }

    pub fn into_inner(self) -> Vec<i64> {
        self.0
    }
}

impl Deref for FreqIndex {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for FreqIndex {
    fn from(k: Vec<i64>) -> Self {
        FreqIndex(k)
    }
}

impl fmt::Debug for FreqIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// A level vector `j ∈ Z_+^d` (tensor level, block index, or index-set member).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Level(Vec<u32>);

impl Level {
    pub fn new(j: Vec<u32>) -> Self {
        Level(j)
    }

    pub fn zero(d: usize) -> Self {
        Level(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn linf(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Level) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl Deref for Level {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for Level {
    fn from(j: Vec<u32>) -> Self {
        Level(j)
    }
}

impl fmt::Debug for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// `2^{j−1}` for `j ≥ 1`.
fn half_width(j: u32) -> i64 {
    1i64 << (j - 1)
}

/// `ℓ ∈ D_j`.
pub fn in_d(j: u32, l: i64) -> bool {
    if j == 0 {
        l == 0
    } else {
        let h = half_width(j);
        -h <= l && l < h
    }
}

/// The representative of `m` modulo `2^j` in `D_j`.
pub fn alias(m: i64, j: u32) -> i64 {
    if j == 0 {
        return 0;
    }
    let h = half_width(j);
    (m + h).rem_euclid(2 * h) - h
}

/// Index of the block `P_j` containing `m`.
pub fn block_of(m: i64) -> u32 {
    if m == 0 {
        0
    } else {
        64 - m.unsigned_abs().leading_zeros()
    }
}

/// Smallest and largest magnitude in `P_j`.
pub fn block_range(j: u32) -> (i64, i64) {
    if j == 0 {
        (0, 0)
    } else {
        (1i64 << (j - 1), (1i64 << j) - 1)
    }
}

/// Frequencies of `D_j` in increasing order.
pub fn d_range(j: u32) -> std::ops::Range<i64> {
    if j == 0 {
        0..1
    } else {
        let h = half_width(j);
        -h..h
    }
}

/// `e^{2πi·num/2^level}` with exact reduction of the numerator.
pub(crate) fn unit_turn(num: i128, level: u32) -> Complex64 {
    if level == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let modulus = 1i128 << level;
    let r = num.rem_euclid(modulus);
    let angle = TAU * (r as f64) / (modulus as f64);
    Complex64::from_polar(1.0, angle)
}

/// A point on the torus in exact dyadic form: `x_i = 2π·num_i/2^{level_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Turn {
    pub num: i64,
    pub level: u32,
}

impl Turn {
    pub fn new(num: i64, level: u32) -> Self {
        Turn { num, level }
    }

    pub fn radians(self) -> f64 {
        TAU * (self.num as f64) / (1u64 << self.level) as f64
    }
}

/// The value of a function at a point together with the truncation bound that
/// applies to rule-based functions (`|f(x) − value| ≤ tail_bound`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Truncation data attached to rule-based functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub rule: CoefficientRule,
    /// Per-axis cutoff `M`: the stored support is the rule restricted to `[−M, M]^d`.
    pub cutoff: i64,
    /// Certified bound on `Σ_{k ∉ [−M, M]^d} |f̂(k)|`.
    pub tail: f64,
}

/// A periodic function given by Fourier coefficients on `Z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    dim: usize,
    coeffs: BTreeMap<FreqIndex, Complex64>,
    truncation: Option<Truncation>,
    budget: f64,
}

impl SpectralFunction {
    pub fn zero(dim: usize) -> Self {
        SpectralFunction {
            dim,
            coeffs: BTreeMap::new(),
            truncation: None,
            budget: 0.0,
        }
    }

    /// Builds a finitely supported function; repeated frequencies are summed
    /// and exact zeros dropped.
    pub fn from_coeffs<I>(dim: usize, coeffs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (FreqIndex, Complex64)>,
    {
        if dim == 0 {
            return Err(crate::error::invalid("dimension must be positive"));
        }
        let mut map = BTreeMap::new();
        for (k, c) in coeffs {
            check_dim(dim, k.dim())?;
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(SpectralFunction {
            dim,
            coeffs: map,
            truncation: None,
            budget: 0.0,
        })
    }

    /// Single exponential `c·e^{i(k,x)}`.
    pub fn monomial(k: Vec<i64>, c: Complex64) -> Self {
        let dim = k.len();
        Self::from_coeffs(dim, [(FreqIndex(k), c)]).expect("monomial has positive dimension")
    }

    /// Materializes `rule` on the box `[−cutoff, cutoff]^d` and certifies the tail.
    pub fn from_rule(rule: CoefficientRule, dim: usize, cutoff: i64) -> Result<Self> {
        if dim == 0 {
            return Err(crate::error::invalid("dimension must be positive"));
        }
        if cutoff < 0 {
            return Err(crate::error::invalid("cutoff must be non-negative"));
        }
        let tail = rule.weighted_tail(dim, cutoff, WeightSpec::NONE, crate::params::Exponent::ONE)?;
        let coeffs = rule.materialize(dim, cutoff)?;
        let mut f = SpectralFunction::from_coeffs(dim, coeffs)?;
        f.truncation = Some(Truncation { rule, cutoff, tail });
        Ok(f)
    }

    pub(crate) fn from_parts(
        dim: usize,
        coeffs: BTreeMap<FreqIndex, Complex64>,
        budget: f64,
    ) -> Self {
        let mut coeffs = coeffs;
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        SpectralFunction {
            dim,
            coeffs,
            truncation: None,
            budget,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &BTreeMap<FreqIndex, Complex64> {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FreqIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.coeffs
            .get(&FreqIndex(k.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    /// `A_1` tail of the rule outside the cutoff (zero for finite functions).
    pub fn tail(&self) -> f64 {
        self.truncation.as_ref().map_or(0.0, |t| t.tail)
    }

    /// Accumulated truncation error carried through operator applications.
    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    /// Forgets the rule, keeping only the stored coefficients.
    pub fn into_finite(mut self) -> Self {
        self.truncation = None;
        self
    }

    pub fn a1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|(k, c)| (k.clone(), c * a)).collect();
        SpectralFunction::from_parts(self.dim, coeffs, self.budget * a.norm())
    }

    /// `a·self + b·other` over the stored supports.
    pub fn combine(&self, a: Complex64, other: &SpectralFunction, b: Complex64) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut out = BTreeMap::new();
        for (k, c) in &self.coeffs {
            out.insert(k.clone(), c * a);
        }
        for (k, c) in &other.coeffs {
            *out.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0)) += c * b;
        }
        let budget = self.budget * a.norm() + other.budget * b.norm();
        Ok(SpectralFunction::from_parts(self.dim, out, budget))
    }

    pub fn add(&self, other: &SpectralFunction) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &SpectralFunction) -> Result<Self> {
        self.combine(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// `Σ_k f̂(k) e^{i(k,x)}` over the stored support.
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluated> {
        check_dim(self.dim, x.len())?;
        let value = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum();
        Ok(Evaluated {
            value,
            tail_bound: self.tail() + self.budget,
        })
    }

    /// Evaluation at an exact dyadic point; phases are reduced in integer
    /// arithmetic before conversion to floating point.
    pub fn evaluate_at(&self, x: &[Turn]) -> Result<Evaluated> {
        check_dim(self.dim, x.len())?;
        let level = x.iter().map(|t| t.level).max().unwrap_or(0);
        let value = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let num: i128 = k
                    .iter()
                    .zip(x)
                    .map(|(&ki, t)| ((ki as i128) * (t.num as i128)) << (level - t.level))
                    .sum();
                c * unit_turn(num, level)
            })
            .sum();
        Ok(Evaluated {
            value,
            tail_bound: self.tail() + self.budget,
        })
    }

    /// The dyadic block `δ_k(f)`: coefficients restricted to `P_{k_1}×…×P_{k_d}`.
    pub fn dyadic_block(&self, block: &Level) -> Result<TrigPolynomial> {
        check_dim(self.dim, block.dim())?;
        if let Some(t) = &self.truncation {
            let needed = block.iter().map(|&j| block_range(j).1).max().unwrap_or(0);
            if needed > t.cutoff {
                return Err(Error::OutsideCutoff {
                    block: block.to_vec(),
                    cutoff: t.cutoff,
                });
            }
        }
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| k.iter().zip(block.iter()).all(|(&m, &j)| block_of(m) == j))
            .map(|(k, c)| (k.clone(), *c))
            .collect();
        let degrees = Level(block.iter().map(|&j| if j == 0 { 0 } else { j + 1 }).collect());
        TrigPolynomial::new(degrees, coeffs)
    }

    /// Groups the stored coefficients by dyadic block.
    pub fn blocks(&self) -> BTreeMap<Level, Vec<(FreqIndex, Complex64)>> {
        let mut out: BTreeMap<Level, Vec<(FreqIndex, Complex64)>> = BTreeMap::new();
        for (k, c) in &self.coeffs {
            out.entry(k.block()).or_default().push((k.clone(), *c));
        }
        out
    }

    /// Values of `f ∗ g_j` at the nodes `x_k^j`, `k ∈ D_j` in increasing order,
    /// for a univariate `f`. The convolution is taken spectrally,
    /// `(f ∗ g)^(ℓ) = f̂(ℓ)·ĝ_j(ℓ)`, and summed directly over the stored support.
    pub fn sample_convolution(&self, family: &KernelFamily, j: u32) -> Result<Vec<Complex64>> {
        check_dim(1, self.dim)?;
        let weighted: Vec<(i64, Complex64)> = self
            .coeffs
            .iter()
            .map(|(k, c)| (k[0], c * family.symbol(j, k[0])))
            .collect();
        Ok(sample_fiber(&weighted, j))
    }
}

/// `Σ_m w_m e^{i m x_k^j}` at every node of level `j`.
pub(crate) fn sample_fiber(weighted: &[(i64, Complex64)], j: u32) -> Vec<Complex64> {
    d_range(j)
        .map(|k| {
            weighted
                .iter()
                .map(|&(m, w)| w * unit_turn(i128::from(m) * i128::from(k), j))
                .sum()
        })
        .collect()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// A trigonometric polynomial in `T_j^d = span{e^{i(k,x)} : k ∈ D_{j_1}×…×D_{j_d}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    degrees: Level,
    coeffs: BTreeMap<FreqIndex, Complex64>,
}

impl TrigPolynomial {
    pub fn new(degrees: Level, coeffs: BTreeMap<FreqIndex, Complex64>) -> Result<Self> {
        for k in coeffs.keys() {
            check_dim(degrees.dim(), k.dim())?;
            if !k.iter().zip(degrees.iter()).all(|(&m, &j)| in_d(j, m)) {
                return Err(crate::error::invalid(format!(
                    "frequency {k:?} outside D_j for degrees {degrees:?}"
                )));
            }
        }
        let mut coeffs = coeffs;
        coeffs.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Ok(TrigPolynomial { degrees, coeffs })
    }

    pub fn zero(degrees: Level) -> Self {
        TrigPolynomial {
            degrees,
            coeffs: BTreeMap::new(),
        }
    }

    /// Restricts a function whose support already lies in the `D_j` box.
    pub fn from_function(degrees: Level, f: &SpectralFunction) -> Result<Self> {
        check_dim(degrees.dim(), f.dim())?;
        TrigPolynomial::new(degrees, f.coeffs.clone())
    }

    pub fn degrees(&self) -> &Level {
        &self.degrees
    }

    pub fn dim(&self) -> usize {
        self.degrees.dim()
    }

    pub fn coeffs(&self) -> &BTreeMap<FreqIndex, Complex64> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn into_function(self) -> SpectralFunction {
        SpectralFunction::from_parts(self.degrees.dim(), self.coeffs, 0.0)
    }

    pub fn to_function(&self) -> SpectralFunction {
        SpectralFunction::from_parts(self.degrees.dim(), self.coeffs.clone(), 0.0)
    }

    /// Values on the tensor node grid, row-major with the last axis fastest and
    /// every axis running through `D_{j_i}` in increasing order.
    pub fn grid_values(&self) -> Vec<Complex64> {
        let grid = tensor_grid(&self.degrees);
        let f = self.to_function();
        grid.iter()
            .map(|p| f.evaluate_at(p).expect("grid matches dimension").value)
            .collect()
    }

    /// Inverse of [`grid_values`](Self::grid_values) by the discrete Fourier transform.
    pub fn from_grid_values(degrees: Level, values: &[Complex64]) -> Result<Self> {
        let grid = tensor_grid(&degrees);
        if grid.len() != values.len() {
            return Err(crate::error::invalid(format!(
                "expected {} grid values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let level: u32 = degrees.iter().copied().max().unwrap_or(0);
        let scale = 1.0 / grid.len() as f64;
        let mut coeffs = BTreeMap::new();
        for k in tensor_frequencies(&degrees) {
            let c: Complex64 = grid
                .iter()
                .zip(values)
                .map(|(p, v)| {
                    let num: i128 = k
                        .iter()
                        .zip(p)
                        .map(|(&ki, t)| ((ki as i128) * (t.num as i128)) << (level - t.level))
                        .sum();
                    v * unit_turn(-num, level)
                })
                .sum();
            coeffs.insert(FreqIndex(k), c * scale);
        }
        TrigPolynomial::new(degrees, coeffs)
    }
}

/// Node `x_k^j` as an exact turn fraction.
pub fn node(j: u32, k: i64) -> Turn {
    Turn::new(k, j)
}

/// All points of `I_{j_1}×…×I_{j_d}` restricted to one period, in the order of
/// [`TrigPolynomial::grid_values`].
pub fn tensor_grid(degrees: &Level) -> Vec<Vec<Turn>> {
    let mut out = vec![Vec::new()];
    for &j in degrees.iter() {
        let mut next = Vec::with_capacity(out.len() << j);
        for p in &out {
            for k in d_range(j) {
                let mut q = p.clone();
                q.push(node(j, k));
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn tensor_frequencies(degrees: &Level) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &j in degrees.iter() {
        let mut next = Vec::new();
        for p in &out {
            for k in d_range(j) {
                let mut q = p.clone();
                q.push(k);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_function(rng: &mut ChaCha8Rng, d: usize, terms: usize, width: i64) -> SpectralFunction {
        let coeffs = (0..terms).map(|_| {
            let k: Vec<i64> = (0..d).map(|_| rng.gen_range(-width..=width)).collect();
            (FreqIndex(k), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        });
        SpectralFunction::from_coeffs(d, coeffs).unwrap()
    }

    #[test]
    fn dyadic_sets() {
        assert!(in_d(0, 0) && !in_d(0, -1));
        assert!(in_d(5, -16) && !in_d(5, 16));
        assert_eq!(alias(5, 2), 1);
        assert_eq!(alias(2, 2), -2);
        assert_eq!(alias(-3, 2), 1);
        assert_eq!(alias(17, 0), 0);
        assert_eq!(block_of(1), 1);
        assert_eq!(block_of(-3), 2);
        assert_eq!(block_of(4), 3);
        assert_eq!(block_range(3), (4, 7));
    }

    #[test]
    fn block_of_first_level() {
        let f = SpectralFunction::from_coeffs(
            1,
            [
                (FreqIndex::new(vec![0]), c(1.0, 0.0)),
                (FreqIndex::new(vec![1]), c(2.0, 0.0)),
                (FreqIndex::new(vec![2]), c(3.0, 0.0)),
            ],
        )
        .unwrap();
        let b = f.dyadic_block(&Level::new(vec![1])).unwrap();
        assert_eq!(b.coeffs().len(), 1);
        assert_eq!(b.coeffs()[&FreqIndex::new(vec![1])], c(2.0, 0.0));
        let b0 = f.dyadic_block(&Level::new(vec![0])).unwrap();
        assert_eq!(b0.coeffs().len(), 1);
        assert_eq!(b0.coeffs()[&FreqIndex::new(vec![0])], c(1.0, 0.0));
    }

    #[test]
    fn block_mass_by_enumeration() {
        // f̂(k) = Π(1+|k_i|)^{−2} on [−8, 8]^2, block (2, 1) = {±2, ±3} × {±1}.
        let rule = CoefficientRule::Korobov { a: 2.0, b: 0.0, seed: None };
        let f = SpectralFunction::from_rule(rule, 2, 8).unwrap();
        let b = f.dyadic_block(&Level::new(vec![2, 1])).unwrap();
        let mut expected = 0.0;
        for k1 in [-3i64, -2, 2, 3] {
            for k2 in [-1i64, 1] {
                expected += (1.0 + k1.abs() as f64).powi(-2) * (1.0 + k2.abs() as f64).powi(-2);
            }
        }
        let got: f64 = b.coeffs().values().map(|c| c.norm()).sum();
        assert!((got - expected).abs() < 1e-14);
        assert_eq!(b.coeffs().len(), 8);
        assert!(f.dyadic_block(&Level::new(vec![4, 0])).is_err());
    }

    #[test]
    fn blocks_partition_the_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_function(&mut rng, 2, 60, 20);
        let mut sum = SpectralFunction::zero(2);
        for block in f.blocks().keys() {
            sum = sum.add(&f.dyadic_block(block).unwrap().into_function()).unwrap();
        }
        assert_eq!(sum, f);
    }

    #[test]
    fn block_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_function(&mut rng, 2, 40, 9);
        let g = random_function(&mut rng, 2, 40, 9);
        let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
        let h = f.combine(a, &g, b).unwrap();
        let block = Level::new(vec![3, 2]);
        let lhs = h.dyadic_block(&block).unwrap().into_function();
        let rhs = f
            .dyadic_block(&block)
            .unwrap()
            .into_function()
            .combine(a, &g.dyadic_block(&block).unwrap().into_function(), b)
            .unwrap();
        for (k, v) in lhs.iter() {
            assert!((v - rhs.coeff(k)).norm() <= 1e-12 * v.norm().max(1.0));
        }
        assert_eq!(lhs.len(), rhs.len());
    }

    #[test]
    fn evaluation_examples() {
        let f = SpectralFunction::monomial(vec![1, 0], c(1.0, 0.0));
        let v = f.evaluate(&[PI, 0.0]).unwrap().value;
        assert!((v - c(-1.0, 0.0)).norm() < 1e-15);

        let konst = SpectralFunction::monomial(vec![0, 0, 0], c(2.5, -1.0));
        assert_eq!(konst.evaluate(&[0.3, 1.0, 5.0]).unwrap().value, c(2.5, -1.0));

        let cos = SpectralFunction::from_coeffs(
            1,
            [(FreqIndex::new(vec![1]), c(0.5, 0.0)), (FreqIndex::new(vec![-1]), c(0.5, 0.0))],
        )
        .unwrap();
        assert!((cos.evaluate(&[PI / 3.0]).unwrap().value.re - 0.5).abs() < 1e-15);
        assert!(cos.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn exact_turns_agree_with_radians() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_function(&mut rng, 2, 30, 40);
        let p = [Turn::new(3, 3), Turn::new(5, 4)];
        let a = f.evaluate_at(&p).unwrap().value;
        let b = f.evaluate(&[p[0].radians(), p[1].radians()]).unwrap().value;
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn grid_values_invert_by_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let degrees = Level::new(vec![3, 2]);
        let coeffs = tensor_frequencies(&degrees)
            .into_iter()
            .map(|k| (FreqIndex(k), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let t = TrigPolynomial::new(degrees.clone(), coeffs).unwrap();
        let values = t.grid_values();
        let back = TrigPolynomial::from_grid_values(degrees, &values).unwrap();
        for (k, v) in t.coeffs() {
            let w = back.coeffs().get(k).copied().unwrap_or_default();
            assert!((v - w).norm() <= 1e-10 * v.norm().max(1e-300));
        }
    }

    #[test]
    fn trig_polynomial_rejects_out_of_range() {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(FreqIndex::new(vec![2]), c(1.0, 0.0));
        assert!(TrigPolynomial::new(Level::new(vec![2]), coeffs.clone()).is_err());
        assert!(TrigPolynomial::new(Level::new(vec![3]), coeffs).is_ok());
    }
}
