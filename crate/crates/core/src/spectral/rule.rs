//! Analytic coefficient rules for functions with infinite spectra.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{block_of, block_range, FreqIndex, Level};
use crate::error::{invalid, Error, Result};
use crate::majorant::{lattice_tail, lattice_tail_sup, power_tail};
use crate::params::Exponent;

/// Largest coefficient box a Korobov rule may materialize.
const MAX_DENSE: usize = 4_000_000;

/// How the frequencies of a block-lacunary packet are chosen inside a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Distinct frequencies drawn uniformly from the block.
    #[default]
    Random,
    /// Frequencies at the inner corners `m_i = ±2^{k_i−1}`.
    Edge,
}

/// A coefficient rule `k ↦ f̂(k)` defined on all of `Z^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `f̂(k) = Π(1+|k_i|)^{−a}·(1+|k|_∞)^{−b}·u(k)` with `|u(k)| = 1`; the
    /// phases are pseudo-random when a seed is given and `1` otherwise.
    Korobov {
        a: f64,
        b: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// `f = Σ_k 2^{−(α|k|_1+β|k|_∞)}(1+|k|_1)^{−ρ} u_k` where each `u_k` is a
    /// packet of `terms` unimodular-phase exponentials inside the block `k`,
    /// scaled to unit `A_p` norm.
    BlockLacunary {
        alpha: f64,
        beta: f64,
        rho: f64,
        p: Exponent,
        terms: usize,
        seed: u64,
        #[serde(default)]
        placement: Placement,
    },
}

/// Weight `Π(1+|k_i|)^{mix}·(1+|k|_∞)^{iso}`; covers the isotropic, mixed and
/// hybrid weights of the norms module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub mix: f64,
    pub iso: f64,
}

impl WeightSpec {
    pub const NONE: WeightSpec = WeightSpec { mix: 0.0, iso: 0.0 };

    pub fn eval(self, k: &[i64]) -> f64 {
        let mut w = 1.0;
        if self.mix != 0.0 {
            for &m in k {
                w *= (1.0 + m.unsigned_abs() as f64).powf(self.mix);
            }
        }
        if self.iso != 0.0 {
            let inf = k.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0);
            w *= (1.0 + inf as f64).powf(self.iso);
        }
        w
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key for a lattice point so that every point draws its own phases
/// independently of enumeration order.
fn key(seed: u64, tag: u64, parts: impl IntoIterator<Item = i64>) -> u64 {
    let mut h = splitmix(seed ^ tag.rotate_left(17));
    for p in parts {
        h = splitmix(h ^ p as u64);
    }
    h
}

fn phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// `K` with `2^K − 1 ≤ M < 2^{K+1} − 1`: blocks up to `K` lie inside `[−M, M]`.
fn full_blocks(cutoff: i64) -> u32 {
    let mut k = 0u32;
    while k < 62 && (1i64 << (k + 1)) - 1 <= cutoff {
        k += 1;
    }
    k
}

impl CoefficientRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CoefficientRule::Korobov { a, b, .. } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(invalid("korobov exponents must be finite"));
                }
                Ok(())
            }
            CoefficientRule::BlockLacunary { alpha, beta, rho, terms, .. } => {
                if !(alpha >= 0.0) || !(alpha + beta > 0.0) {
                    return Err(invalid(format!(
                        "block-lacunary rule needs α ≥ 0 and α + β > 0, got α = {alpha}, β = {beta}"
                    )));
                }
                if !(rho >= 0.0) {
                    return Err(invalid(format!("block-lacunary rule needs ρ ≥ 0, got {rho}")));
                }
                if terms == 0 {
                    return Err(invalid("block-lacunary rule needs at least one term per block"));
                }
                Ok(())
            }
        }
    }

    /// `f̂(k)` for any lattice point.
    pub fn value(&self, k: &[i64]) -> Complex64 {
        match *self {
            CoefficientRule::Korobov { a, b, seed } => korobov_value(a, b, seed, k),
            CoefficientRule::BlockLacunary { .. } => {
                let block = Level::new(k.iter().map(|&m| block_of(m)).collect());
                self.block_packet(&block)
                    .into_iter()
                    .find(|(m, _)| m.as_slice() == k)
                    .map_or(Complex64::new(0.0, 0.0), |(_, c)| c)
            }
        }
    }

    /// Every nonzero coefficient inside `[−M, M]^d`.
    pub fn materialize(&self, dim: usize, cutoff: i64) -> Result<Vec<(FreqIndex, Complex64)>> {
        self.validate()?;
        match *self {
            CoefficientRule::Korobov { a, b, seed } => {
                let side = usize::try_from(2 * cutoff + 1).map_err(|_| Error::Overflow("sizing the box"))?;
                let total = side
                    .checked_pow(dim as u32)
                    .filter(|&n| n <= MAX_DENSE)
                    .ok_or_else(|| invalid(format!("korobov box [−{cutoff}, {cutoff}]^{dim} is too large to materialize")))?;
                let mut out = Vec::with_capacity(total);
                let mut k = vec![-cutoff; dim];
                loop {
                    out.push((FreqIndex::new(k.clone()), korobov_value(a, b, seed, &k)));
                    let mut i = dim;
                    loop {
                        if i == 0 {
                            return Ok(out);
                        }
                        i -= 1;
                        if k[i] < cutoff {
                            k[i] += 1;
                            break;
                        }
                        k[i] = -cutoff;
                    }
                }
            }
            CoefficientRule::BlockLacunary { .. } => {
                let kmax = full_blocks(cutoff) + 1;
                let mut out = Vec::new();
                for block in block_box(dim, kmax) {
                    for (m, c) in self.block_packet(&block) {
                        if m.iter().all(|x| x.abs() <= cutoff) {
                            out.push((FreqIndex::new(m), c));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Coefficients of the packet in one block (block-lacunary only).
    fn block_packet(&self, block: &Level) -> Vec<(Vec<i64>, Complex64)> {
        let CoefficientRule::BlockLacunary { alpha, beta, rho, p, terms, seed, placement } = *self else {
            return Vec::new();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(key(seed, 0xB10C, block.iter().map(|&j| i64::from(j))));
        let l1 = f64::from(block.l1());
        let linf = f64::from(block.linf());
        let amplitude = (-(alpha * l1 + beta * linf)).exp2() * (1.0 + l1).powf(-rho);
        let freqs = match placement {
            Placement::Random => random_packet(&mut rng, block, terms),
            Placement::Edge => edge_packet(&mut rng, block, terms),
        };
        let scale = amplitude * (freqs.len() as f64).powf(-p.reciprocal());
        freqs.into_iter().map(|m| (m, phase(&mut rng) * scale)).collect()
    }

    /// Bound on `(Σ_{k ∉ [−M, M]^d} (w(k)|f̂(k)|)^q)^{1/q}` (a supremum for `q = ∞`).
    pub fn weighted_tail(&self, dim: usize, cutoff: i64, weight: WeightSpec, q: Exponent) -> Result<f64> {
        self.validate()?;
        let divergent = |what: String| Error::Divergent(what);
        match *self {
            CoefficientRule::Korobov { a, b, .. } => {
                let a1 = a - weight.mix;
                let b1 = b - weight.iso;
                if q.is_infinite() {
                    if !(a1 >= 0.0) || !(a1 + b1 >= 0.0) {
                        return Err(divergent(format!(
                            "weighted korobov coefficients are unbounded (a − w = {a1}, b − w = {b1})"
                        )));
                    }
                    return Ok(((cutoff + 2) as f64).powf(-(a1 + b1)));
                }
                let qv = q.value();
                let e = qv * a1 + (qv * b1).min(0.0);
                if !(e > 1.0) {
                    return Err(divergent(format!(
                        "korobov majorant Σ(1+|m|)^(−{e}) does not converge"
                    )));
                }
                let head: f64 = 1.0 + 2.0 * (1..=cutoff).map(|m| (1.0 + m as f64).powf(-e)).sum::<f64>();
                let t = 2.0 * power_tail(e, cutoff);
                let d = dim as i32;
                let s = (head + t).powi(d) - head.powi(d);
                Ok(s.max(0.0).powf(1.0 / qv))
            }
            CoefficientRule::BlockLacunary { alpha, beta, rho, p, terms, .. } => {
                let k = full_blocks(cutoff);
                // (1+|m_i|) ∈ [2^{k_i−1}+1, 2^{k_i}] inside block k.
                let slack = (weight.mix.min(0.0).abs() * dim as f64 + weight.iso.min(0.0).abs()).exp2();
                let a1 = alpha - weight.mix;
                let b1 = beta - weight.iso;
                // Outside the box |k|_1 ≥ |k|_∞ ≥ K+1, so the ρ-factor is at most (K+2)^{−ρ}.
                let damping = ((k + 2) as f64).powf(-rho.max(0.0));
                // With a1 ≥ 0 and a1 + b1 ≥ 0 the dyadic factor is at most 1 and
                // only the ρ-factor decays.
                let flat = a1 >= 0.0 && a1 + b1 >= 0.0;
                if q.is_infinite() {
                    return match lattice_tail_sup(a1, b1, k) {
                        Ok(sup) => Ok(slack * sup * damping),
                        Err(_) if flat && rho >= 0.0 => Ok(slack * damping),
                        Err(_) => Err(divergent(format!(
                            "weighted block amplitudes do not decay (α − w = {a1}, β − w = {b1})"
                        ))),
                    };
                }
                let qv = q.value();
                let packets = (terms as f64).powf((1.0 - qv * p.reciprocal()).max(0.0));
                let geometric = lattice_tail(qv * a1, qv * b1, k, dim).ok().map(|t| t * damping.powf(qv));
                // At most (m+1)^{d−1} blocks have |k|_1 = m, and m > K outside the box.
                let e = rho * qv - (dim as f64 - 1.0);
                let counted = (flat && e > 1.0).then(|| power_tail(e, i64::from(k)));
                let sum = match (geometric, counted) {
                    (Some(g), Some(c)) => g.min(c),
                    (Some(g), None) => g,
                    (None, Some(c)) => c,
                    (None, None) => {
                        return Err(divergent(format!(
                            "weighted block amplitudes are not summable (α − w = {a1}, β − w = {b1}, ρq = {})",
                            rho * qv
                        )))
                    }
                };
                Ok(slack * (packets * sum).powf(1.0 / qv))
            }
        }
    }
}

fn korobov_value(a: f64, b: f64, seed: Option<u64>, k: &[i64]) -> Complex64 {
    let mut mag = 1.0;
    let mut inf = 0u64;
    for &m in k {
        let am = m.unsigned_abs();
        mag *= (1.0 + am as f64).powf(-a);
        inf = inf.max(am);
    }
    mag *= (1.0 + inf as f64).powf(-b);
    match seed {
        None => Complex64::new(mag, 0.0),
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(key(s, 0x0C0B, k.iter().copied()));
            phase(&mut rng) * mag
        }
    }
}

fn random_packet(rng: &mut ChaCha8Rng, block: &Level, terms: usize) -> Vec<Vec<i64>> {
    let size: Option<usize> = block
        .iter()
        .try_fold(1usize, |acc, &j| acc.checked_mul(if j == 0 { 1 } else { 1usize << j }));
    let draw = |rng: &mut ChaCha8Rng| -> Vec<i64> {
        block
            .iter()
            .map(|&j| {
                if j == 0 {
                    0
                } else {
                    let (lo, hi) = block_range(j);
                    let m = rng.gen_range(lo..=hi);
                    if rng.gen::<bool>() {
                        m
                    } else {
                        -m
                    }
                }
            })
            .collect()
    };
    match size {
        Some(n) if n <= terms => enumerate_block(block),
        _ => {
            let mut chosen = BTreeSet::new();
            while chosen.len() < terms {
                chosen.insert(draw(rng));
            }
            chosen.into_iter().collect()
        }
    }
}

fn edge_packet(rng: &mut ChaCha8Rng, block: &Level, terms: usize) -> Vec<Vec<i64>> {
    let corners: Vec<Vec<i64>> = {
        let mut out = vec![Vec::new()];
        for &j in block.iter() {
            let mut next = Vec::new();
            for c in &out {
                let options: &[i64] = if j == 0 { &[0] } else { &[-1, 1] };
                for &s in options {
                    let mut v = c.clone();
                    v.push(if j == 0 { 0 } else { s * block_range(j).0 });
                    next.push(v);
                }
            }
            out = next;
        }
        out
    };
    if corners.len() <= terms {
        return corners;
    }
    let mut picked = BTreeMap::new();
    while picked.len() < terms {
        let i = rng.gen_range(0..corners.len());
        picked.insert(i, ());
    }
    picked.keys().map(|&i| corners[i].clone()).collect()
}

fn enumerate_block(block: &Level) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for &j in block.iter() {
        let values: Vec<i64> = if j == 0 {
            vec![0]
        } else {
            let (lo, hi) = block_range(j);
            (-hi..=-lo).chain(lo..=hi).collect()
        };
        let mut next = Vec::with_capacity(out.len() * values.len());
        for c in &out {
            for &v in &values {
                let mut w = c.clone();
                w.push(v);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// All block indices with `|k|_∞ ≤ kmax`.
pub(crate) fn block_box(dim: usize, kmax: u32) -> Vec<Level> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        let mut next = Vec::new();
        for c in &out {
            for j in 0..=kmax {
                let mut v: Vec<u32> = c.clone();
                v.push(j);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(Level::new).collect()
}
