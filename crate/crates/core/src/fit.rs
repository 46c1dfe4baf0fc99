//! Least-squares fits of `log2 y = −E·n + L·log2 n + c`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Decay exponent `E` (the negated coefficient of `n`).
    pub exponent: f64,
    /// Coefficient of `log2 n`; zero when the log regressor is not used.
    pub log_power: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log2` units.
    pub residual: f64,
}

/// Fits `log2 y_i = −E·n_i + L·log2 n_i + c`; with `with_log = false` the
/// `log2 n` column is dropped and `L = 0`.
pub fn fit_log2(levels: &[f64], log2_values: &[f64], with_log: bool) -> Result<SlopeFit> {
    if levels.len() != log2_values.len() {
        return Err(invalid("fit needs as many values as levels"));
    }
    let cols = if with_log { 3 } else { 2 };
    if levels.len() < cols {
        return Err(invalid(format!("fit needs at least {cols} levels, got {}", levels.len())));
    }
    if with_log && levels.iter().any(|&n| !(n > 0.0)) {
        return Err(invalid("the log2(n) regressor needs positive levels"));
    }
    if log2_values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("fit values must be finite"));
    }
    let rows = levels.len();
    let x = DMatrix::from_fn(rows, cols, |i, c| match c {
        0 => levels[i],
        1 if with_log => levels[i].log2(),
        _ => 1.0,
    });
    let y = DVector::from_column_slice(log2_values);
    let svd = x.clone().svd(true, true);
    let beta = svd
        .solve(&y, 1e-12)
        .map_err(|e| invalid(format!("least squares failed: {e}")))?;
    let resid = &y - &x * &beta;
    Ok(SlopeFit {
        exponent: -beta[0],
        log_power: if with_log { beta[1] } else { 0.0 },
        intercept: beta[cols - 1],
        residual: (resid.norm_squared() / rows as f64).sqrt(),
    })
}

/// Fits `log2 y_i = −E·n_i + L·log2 n_i + c` with `L` held fixed.
///
/// A free `log2 n` column is nearly collinear with `n` over a handful of
/// levels, so lattice staircases in `y` can swing both coefficients far
/// from their values; pinning `L` keeps the exponent stable.
pub fn fit_log2_pinned(levels: &[f64], log2_values: &[f64], log_power: f64) -> Result<SlopeFit> {
    if log_power != 0.0 && levels.iter().any(|&n| !(n > 0.0)) {
        return Err(invalid("the log2(n) term needs positive levels"));
    }
    let shifted: Vec<f64> = levels
        .iter()
        .zip(log2_values)
        .map(|(&n, &y)| if log_power == 0.0 { y } else { y - log_power * n.log2() })
        .collect();
    let fit = fit_log2(levels, &shifted, false)?;
    Ok(SlopeFit { log_power, ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_model() {
        let n: Vec<f64> = (3..=9).map(f64::from).collect();
        let y: Vec<f64> = n.iter().map(|&n| -2.0 * n + 0.5 * n.log2() + 1.25).collect();
        let f = fit_log2(&n, &y, true).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-10);
        assert!((f.log_power - 0.5).abs() < 1e-10);
        assert!((f.intercept - 1.25).abs() < 1e-10);
        let y: Vec<f64> = n.iter().map(|&n| -1.5 * n + 3.0).collect();
        let f = fit_log2(&n, &y, false).unwrap();
        assert!((f.exponent - 1.5).abs() < 1e-10);
        assert_eq!(f.log_power, 0.0);
    }

    #[test]
    fn pinned_fit_keeps_log_power() {
        let n: Vec<f64> = (3..=9).map(f64::from).collect();
        let y: Vec<f64> = n.iter().map(|&n| -1.25 * n + 0.5 * n.log2() - 2.0).collect();
        let f = fit_log2_pinned(&n, &y, 0.5).unwrap();
        assert!((f.exponent - 1.25).abs() < 1e-10);
        assert_eq!(f.log_power, 0.5);
        assert!(f.residual < 1e-10);
    }

    #[test]
    fn rejects_short_input() {
        assert!(fit_log2(&[1.0, 2.0], &[0.0, 1.0], true).is_err());
        assert!(fit_log2(&[1.0], &[0.0], false).is_err());
    }
}
