//! Closed-form geometric majorants for lattice sums over `Z_+^d`.

use crate::error::{invalid, Result};

/// Upper bound for `Σ_{k ∈ Z_+^d, |k|_∞ > K} 2^{−a|k|_1 − b|k|_∞}`.
///
/// Requires `a ≥ 0` and `a + b > 0`. The bound is obtained from products of
/// one-dimensional geometric series, one axis carrying the `> K` constraint.
pub fn lattice_tail(a: f64, b: f64, cutoff: u32, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(invalid("dimension must be positive"));
    }
    if !(a >= 0.0) || !(a + b > 0.0) {
        return Err(invalid(format!(
            "lattice tail needs a ≥ 0 and a + b > 0, got a = {a}, b = {b}"
        )));
    }
    let k1 = f64::from(cutoff) + 1.0;
    let dd = d as f64;
    if b >= 0.0 {
        if a > 0.0 {
            // 2^{−b|k|_∞} ≤ 2^{−b k_i} on the axis that exceeds K.
            let axis = (-(a + b) * k1).exp2() / (1.0 - (-(a + b)).exp2());
            let rest = 1.0 / (1.0 - (-a).exp2());
            Ok(dd * axis * rest.powi(d as i32 - 1))
        } else {
            // a = 0: split 2^{−b|k|_∞} = 2^{−b|k|_∞/2}·2^{−b|k|_∞/2} ≤ 2^{−b(K+1)/2}·2^{−b|k|_1/(2d)}.
            let head = (-b * k1 / 2.0).exp2();
            let c = b / (2.0 * dd);
            Ok(head * (1.0 / (1.0 - (-c).exp2())).powi(d as i32))
        }
    } else {
        // −b|k|_∞ ≤ −b|k|_1 for b < 0, so the weight is at most 2^{−(a+b)|k|_1}.
        let c = a + b;
        let axis = (-c * k1).exp2() / (1.0 - (-c).exp2());
        let rest = 1.0 / (1.0 - (-c).exp2());
        Ok(dd * axis * rest.powi(d as i32 - 1))
    }
}

/// Upper bound for `sup_{|k|_∞ > K} 2^{−a|k|_1 − b|k|_∞}` under `a ≥ 0`, `a + b > 0`.
pub fn lattice_tail_sup(a: f64, b: f64, cutoff: u32) -> Result<f64> {
    if !(a >= 0.0) || !(a + b > 0.0) {
        return Err(invalid(format!(
            "lattice sup needs a ≥ 0 and a + b > 0, got a = {a}, b = {b}"
        )));
    }
    // a|k|_1 + b|k|_∞ ≥ (a + b)|k|_∞ when b ≥ 0, and ≥ (a + b)|k|_1 ≥ (a + b)|k|_∞ when b < 0.
    Ok((-(a + b) * (f64::from(cutoff) + 1.0)).exp2())
}

/// Bound for `Σ_{m > M} (1 + m)^{−e}` with `e > 1` via the integral test.
pub fn power_tail(e: f64, cutoff: i64) -> f64 {
    let base = (cutoff + 1) as f64;
    base.powf(1.0 - e) / (e - 1.0)
}
