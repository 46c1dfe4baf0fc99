//! Fourier symbols of the kernel families used by the quasi-interpolation
//! operators, and numerical certificates for the growth, uniform boundedness
//! and compatibility conditions.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{Exponent, Smoothness};
use crate::spectral::{d_range, in_d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// A trigonometric polynomial whose symbol vanishes outside `D_j`.
    Polynomial,
    /// A distribution; the symbol may be supported on all of `Z`.
    Distribution,
}

#[derive(Debug, Clone, PartialEq)]
enum Symbol {
    One,
    Dirichlet,
    CosSquared,
    Derivative { a: f64, b: f64 },
    Sinc { sigma: f64 },
    /// `1/base` on `D_j`, zero elsewhere.
    Reciprocal(Box<Symbol>),
}

/// `sin x / x` with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `x / sin x`, accurate near the origin.
fn inv_sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 + x2 / 6.0 + 7.0 * x2 * x2 / 360.0
    } else {
        x / x.sin()
    }
}

/// `2^{−j}` as an exact power of two.
fn dyadic(j: u32) -> f64 {
    (-f64::from(j)).exp2()
}

impl Symbol {
    fn eval(&self, j: u32, l: i64) -> Complex64 {
        let lf = l as f64;
        match self {
            Symbol::One => Complex64::new(1.0, 0.0),
            Symbol::Dirichlet => Complex64::new(if in_d(j, l) { 1.0 } else { 0.0 }, 0.0),
            Symbol::CosSquared => {
                let c = (PI * lf * dyadic(j + 1)).cos();
                Complex64::new(c * c, 0.0)
            }
            Symbol::Derivative { a, b } => {
                let u = lf * dyadic(j);
                Complex64::new(1.0 - b * u * u, a * u)
            }
            Symbol::Sinc { sigma } => {
                let x = PI * lf * (-(f64::from(j) + sigma)).exp2();
                Complex64::new(sinc(x), 0.0)
            }
            Symbol::Reciprocal(base) => {
                if !in_d(j, l) {
                    return Complex64::new(0.0, 0.0);
                }
                match **base {
                    Symbol::Sinc { sigma } => {
                        let x = PI * lf * (-(f64::from(j) + sigma)).exp2();
                        Complex64::new(inv_sinc(x), 0.0)
                    }
                    ref other => other.eval(j, l).inv(),
                }
            }
        }
    }
}

/// A level-indexed Fourier symbol `(j, ℓ) ↦ ĥ_j(ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    name: String,
    kind: KernelKind,
    symbol: Symbol,
    growth_order: f64,
    growth_constant: f64,
    decay: f64,
    decay_constant: f64,
}

impl KernelFamily {
    fn new(name: &str, kind: KernelKind, symbol: Symbol) -> Self {
        // Declared growth |ĥ_j(ℓ)| ≤ C(1+|2^{−j}ℓ|)^N and decay
        // |ĥ_j(ℓ)| ≤ K|2^{−j}ℓ|^{−r} for |2^{−j}ℓ| ≥ 1/2.
        let (n, c, r, k) = match &symbol {
            Symbol::One | Symbol::Dirichlet | Symbol::CosSquared => (0.0, 1.0, 0.0, 1.0),
            Symbol::Derivative { a, b } => {
                let n = if *b != 0.0 {
                    2.0
                } else if *a != 0.0 {
                    1.0
                } else {
                    0.0
                };
                let c = 1.0 + a.abs() + b.abs();
                (n, c, -n, c * 3f64.powf(n))
            }
            Symbol::Sinc { sigma } => (0.0, 1.0, 1.0, sigma.exp2() / PI),
            Symbol::Reciprocal(base) => {
                let c = match **base {
                    Symbol::Sinc { sigma } => inv_sinc(PI * (-(1.0 + sigma)).exp2()),
                    // 1/cos² peaks at the left endpoint of D_j.
                    _ => 2.0,
                };
                (0.0, c, 0.0, c)
            }
        };
        KernelFamily {
            name: name.to_string(),
            kind,
            symbol,
            growth_order: n,
            growth_constant: c,
            decay: r,
            decay_constant: k,
        }
    }

    /// The Dirichlet kernel: `φ̂_j = 1` on `D_j`.
    pub fn dirichlet() -> Self {
        KernelFamily::new("dirichlet", KernelKind::Polynomial, Symbol::Dirichlet)
    }

    /// The Dirac delta: symbol `≡ 1`.
    pub fn dirac() -> Self {
        KernelFamily::new("dirac", KernelKind::Distribution, Symbol::One)
    }

    /// `cos²(πℓ/2^{j+1})`, the symbol of the two-point average.
    pub fn averaged() -> Self {
        KernelFamily::new("averaged", KernelKind::Distribution, Symbol::CosSquared)
    }

    pub fn derivative(a: f64, b: f64) -> Self {
        KernelFamily::new("derivative", KernelKind::Distribution, Symbol::Derivative { a, b })
    }

    /// Normalized characteristic function of `[−π2^{−j−σ}, π2^{−j−σ}]`.
    pub fn kantorovich(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(KernelFamily::new("kantorovich", KernelKind::Distribution, Symbol::Sinc { sigma }))
    }

    /// The polynomial with symbol `1/ĝ_j` on `D_j`.
    pub fn corrected(base: &KernelFamily) -> Self {
        KernelFamily::new(
            &format!("{}_corrected", base.name),
            KernelKind::Polynomial,
            Symbol::Reciprocal(Box::new(base.symbol.clone())),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn symbol(&self, j: u32, l: i64) -> Complex64 {
        self.symbol.eval(j, l)
    }

    /// Declared order `N` of polynomial growth.
    pub fn growth_order(&self) -> f64 {
        self.growth_order
    }

    /// Constant `C` with `|ĥ_j(ℓ)| ≤ C(1+|2^{−j}ℓ|)^N` for all `j, ℓ`.
    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    /// Declared decay order `r` (negative for growing symbols).
    pub fn decay_order(&self) -> f64 {
        self.decay
    }

    fn is_reciprocal_of(&self, other: &KernelFamily) -> bool {
        matches!(&self.symbol, Symbol::Reciprocal(b) if **b == other.symbol)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 1.0) || !sigma.is_finite() {
        return Err(invalid(format!("kantorovich averaging exponent σ must be ≥ 1, got {sigma}")));
    }
    Ok(())
}

/// A pair `(φ, φ̃)` with declared condition orders.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiInterpScheme {
    name: String,
    phi: KernelFamily,
    phi_tilde: KernelFamily,
    declared_n: f64,
    declared_s: Smoothness,
}

impl QuasiInterpScheme {
    pub fn new(
        name: impl Into<String>,
        phi: KernelFamily,
        phi_tilde: KernelFamily,
        declared_n: f64,
        declared_s: Smoothness,
    ) -> Result<Self> {
        if phi.kind != KernelKind::Polynomial {
            return Err(invalid("φ must be a polynomial kernel"));
        }
        if phi_tilde.kind != KernelKind::Distribution {
            return Err(invalid("φ̃ must be a distribution kernel"));
        }
        Ok(QuasiInterpScheme {
            name: name.into(),
            phi,
            phi_tilde,
            declared_n,
            declared_s,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phi(&self) -> &KernelFamily {
        &self.phi
    }

    pub fn phi_tilde(&self) -> &KernelFamily {
        &self.phi_tilde
    }

    pub fn declared_n(&self) -> f64 {
        self.declared_n
    }

    pub fn declared_s(&self) -> Smoothness {
        self.declared_s
    }

    /// `φ̂_j(ℓ)·φ̃̂_j(ℓ)`; exactly `1` on `D_j` for corrected kernels.
    pub fn product(&self, j: u32, l: i64) -> Complex64 {
        if self.phi.is_reciprocal_of(&self.phi_tilde) {
            return Complex64::new(if in_d(j, l) { 1.0 } else { 0.0 }, 0.0);
        }
        self.phi.symbol(j, l) * self.phi_tilde.symbol(j, l)
    }

    /// `C_φ̃·C_φ`: bounds the `A_1 → A_1` norm of `Q_j` on inputs weighted by `(1+|ℓ|)^N`.
    pub fn operator_constant(&self) -> f64 {
        self.phi.growth_constant * self.phi_tilde.growth_constant
    }
}

impl fmt::Display for QuasiInterpScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn parse_args(args: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("scheme argument `{a}` is not a number")))
        })
        .collect()
}

/// Looks up a builtin scheme by name, e.g. `lagrange`, `kantorovich(2)`,
/// `derivative(1,0.5)`. A bare `kantorovich` uses `σ = 1`.
pub fn builtin_scheme(name: &str) -> Result<QuasiInterpScheme> {
    let name = name.trim();
    let (head, args) = match name.find('(') {
        Some(i) if name.ends_with(')') => (&name[..i], parse_args(&name[i + 1..name.len() - 1])?),
        Some(_) => return Err(Error::UnknownScheme(name.to_string())),
        None => (name, Vec::new()),
    };
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(invalid(format!("scheme `{head}` takes {n} argument(s), got {}", args.len())))
        }
    };
    let sigma = || -> Result<f64> {
        match args.len() {
            0 => Ok(1.0),
            1 => Ok(args[0]),
            n => Err(invalid(format!("scheme `{head}` takes at most one argument, got {n}"))),
        }
    };
    match head {
        "lagrange" => {
            arity(0)?;
            QuasiInterpScheme::new(name, KernelFamily::dirichlet(), KernelFamily::dirac(), 0.0, Smoothness::Unbounded)
        }
        "averaged" => {
            arity(0)?;
            QuasiInterpScheme::new(name, KernelFamily::dirichlet(), KernelFamily::averaged(), 0.0, Smoothness::Finite(2.0))
        }
        "averaged_corrected" => {
            arity(0)?;
            let tilde = KernelFamily::averaged();
            QuasiInterpScheme::new(name, KernelFamily::corrected(&tilde), tilde, 0.0, Smoothness::Unbounded)
        }
        "derivative" => {
            arity(2)?;
            let (a, b) = (args[0], args[1]);
            if !a.is_finite() || !b.is_finite() {
                return Err(invalid("derivative weights must be finite"));
            }
            let tilde = KernelFamily::derivative(a, b);
            let s = if a != 0.0 {
                Smoothness::Finite(1.0)
            } else if b != 0.0 {
                Smoothness::Finite(2.0)
            } else {
                Smoothness::Unbounded
            };
            let n = tilde.growth_order();
            QuasiInterpScheme::new(name, KernelFamily::dirichlet(), tilde, n, s)
        }
        "kantorovich" => {
            let tilde = KernelFamily::kantorovich(sigma()?)?;
            QuasiInterpScheme::new(name, KernelFamily::dirichlet(), tilde, 0.0, Smoothness::Finite(2.0))
        }
        "kantorovich_corrected" => {
            let tilde = KernelFamily::kantorovich(sigma()?)?;
            QuasiInterpScheme::new(name, KernelFamily::corrected(&tilde), tilde, 0.0, Smoothness::Unbounded)
        }
        _ => Err(Error::UnknownScheme(name.to_string())),
    }
}

/// The six builtin schemes with representative parameters.
pub fn builtin_schemes() -> Vec<QuasiInterpScheme> {
    [
        "lagrange",
        "averaged",
        "averaged_corrected",
        "derivative(1,0.5)",
        "kantorovich(1)",
        "kantorovich_corrected(1)",
    ]
    .iter()
    .map(|n| builtin_scheme(n).expect("builtin names parse"))
    .collect()
}

/// `max_{j ≤ jmax, |ℓ| ≤ 2^{jmax+4}} |ĥ_j(ℓ)| / (1+|2^{−j}ℓ|)^N`.
pub fn check_growth(fam: &KernelFamily, jmax: u32, n: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(invalid(format!("growth order must be non-negative, got {n}")));
    }
    let probe = 1i64 << (jmax + 4);
    Ok((0..=jmax)
        .into_par_iter()
        .map(|j| {
            (-probe..=probe)
                .map(|l| fam.symbol(j, l).norm() / (1.0 + (l as f64 * dyadic(j)).abs()).powf(n))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// `max_{j ≤ jmax, ℓ ∈ D_j} |φ̂_j(ℓ)|`.
pub fn check_uniform(fam: &KernelFamily, jmax: u32) -> Result<f64> {
    if fam.kind != KernelKind::Polynomial {
        return Err(invalid("uniform boundedness is checked on polynomial kernels"));
    }
    Ok((0..=jmax)
        .into_par_iter()
        .map(|j| d_range(j).map(|l| fam.symbol(j, l).norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max))
}

/// Residual tolerance for `1 − φ̂_j(0)φ̃̂_j(0)`.
pub const ORIGIN_TOLERANCE: f64 = 1e-12;

/// `max_{1 ≤ j ≤ jmax, ℓ ∈ D_j∖{0}} |1 − φ̂_j(ℓ)φ̃̂_j(ℓ)| / |2^{−j}ℓ|^s`.
pub fn check_compatibility(scheme: &QuasiInterpScheme, jmax: u32, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(invalid(format!("compatibility order must be positive, got {s}")));
    }
    for j in 0..=jmax {
        let residual = (Complex64::new(1.0, 0.0) - scheme.product(j, 0)).norm();
        if residual > ORIGIN_TOLERANCE {
            return Err(Error::OriginResidual { level: j, residual });
        }
    }
    Ok((1..=jmax)
        .into_par_iter()
        .map(|j| {
            d_range(j)
                .filter(|&l| l != 0)
                .map(|l| {
                    let r = (Complex64::new(1.0, 0.0) - scheme.product(j, l)).norm();
                    r / (l as f64 * dyadic(j)).abs().powf(s)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Result of an amalgam-norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amalgam {
    pub value: f64,
    /// Bound on the contribution of `|μ| > muMax`, from the declared decay.
    pub tail: f64,
}

/// `sup_{ℓ ∈ D_j} (Σ_{|μ| ≤ muMax} |ψ̂_j(ℓ + 2^jμ)|^p)^{1/p}`; for `p = ∞` the
/// supremum over every probed frequency.
pub fn amalgam_norm(fam: &KernelFamily, p: Exponent, j: u32, mu_max: i64) -> Result<Amalgam> {
    if mu_max < 1 {
        return Err(invalid("muMax must be at least 1"));
    }
    let period = 1i64 << j;
    if p.is_infinite() {
        let value = d_range(j)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&l| {
                (-mu_max..=mu_max)
                    .map(|mu| fam.symbol(j, l + period * mu).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        let tail = if fam.decay >= 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if tail.is_infinite() {
            return Err(Error::Divergent(format!("{} symbol is unbounded", fam.name)));
        }
        return Ok(Amalgam { value, tail });
    }
    let pv = p.value();
    if fam.kind == KernelKind::Distribution && pv * fam.decay <= 1.0 {
        return Err(Error::Divergent(format!(
            "aliasing sums of the {} symbol diverge in ℓ_{pv} (decay order {})",
            fam.name, fam.decay
        )));
    }
    let value = d_range(j)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&l| {
            (-mu_max..=mu_max)
                .map(|mu| fam.symbol(j, l + period * mu).norm().powf(pv))
                .sum::<f64>()
                .powf(1.0 / pv)
        })
        .reduce(|| 0.0, f64::max);
    let tail = if fam.kind == KernelKind::Polynomial {
        0.0
    } else {
        // |ℓ + 2^jμ| ≥ 2^j(|μ| − 1/2) for ℓ ∈ D_j.
        let e = pv * fam.decay;
        let m = mu_max as f64 + 0.5;
        (2.0 * fam.decay_constant.powf(pv) * m.powf(1.0 - e) / (e - 1.0)).powf(1.0 / pv)
    };
    Ok(Amalgam { value, tail })
}

/// Machine-readable summary of the condition checks for one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub scheme: String,
    #[serde(rename = "N")]
    pub n: f64,
    pub s: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    pub amalgam: Vec<AmalgamEntry>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmalgamEntry {
    pub p: Exponent,
    pub value: Option<f64>,
    pub tail: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Ratio threshold separating a bounded certificate from a growing one.
pub const BOUNDED_RATIO: f64 = 1.05;

/// Whether the compatibility estimate at order `s` stays bounded as the
/// level range grows from `jmax − 4` to `jmax`.
pub fn compatibility_bounded(scheme: &QuasiInterpScheme, jmax: u32, s: f64) -> Result<bool> {
    let hi = check_compatibility(scheme, jmax, s)?;
    if hi <= ORIGIN_TOLERANCE {
        return Ok(true);
    }
    let lo = check_compatibility(scheme, jmax.saturating_sub(4).max(1), s)?;
    Ok(hi <= BOUNDED_RATIO * lo)
}

pub fn certify(scheme: &QuasiInterpScheme, jmax: u32, s: f64) -> Result<Certificate> {
    let n = scheme.declared_n;
    let c1 = check_growth(&scheme.phi_tilde, jmax, n)?;
    let c2 = check_uniform(&scheme.phi, jmax)?;
    let (c3, origin_ok) = match check_compatibility(scheme, jmax, s) {
        Ok(c) => (c, true),
        Err(Error::OriginResidual { residual, .. }) => (residual, false),
        Err(e) => return Err(e),
    };
    let bounded = origin_ok && compatibility_bounded(scheme, jmax, s)?;
    let amalgam = [Exponent::ONE, Exponent::TWO, Exponent::INFINITY]
        .into_iter()
        .map(|p| match amalgam_norm(&scheme.phi_tilde, p, jmax, 4096) {
            Ok(a) => AmalgamEntry { p, value: Some(a.value), tail: Some(a.tail) },
            Err(_) => AmalgamEntry { p, value: None, tail: None },
        })
        .collect();
    let verdict = if bounded && c1.is_finite() && c2.is_finite() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(Certificate {
        scheme: scheme.name.clone(),
        n,
        s,
        c1,
        c2,
        c3,
        amalgam,
        verdict,
    })
}
