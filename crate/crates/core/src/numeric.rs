//! Numerically careful scalar kernels shared across modules.

use crate::error::{Error, Result};

/// acosh with a log1p-based form that keeps precision for arguments near 1,
/// where the naive `ln(x + sqrt(x^2 - 1))` cancels.
pub(crate) fn stable_acosh(x: f64) -> f64 {
    debug_assert!(x >= 1.0);
    let e = x - 1.0;
    (e + (e * (2.0 + e)).sqrt()).ln_1p()
}

/// Clamp an acosh argument to `[1, inf)`. Arguments below `1 - tol` are a
/// domain error; within tolerance they are rounding noise and clamp to 1.
pub(crate) fn acosh_arg(x: f64, tol: f64) -> Result<f64> {
    if x >= 1.0 {
        Ok(x)
    } else if x >= 1.0 - tol {
        Ok(1.0)
    } else {
        Err(Error::NumericDomain(format!(
            "acosh argument {x} below 1 beyond tolerance {tol:e}"
        )))
    }
}

/// Clamp an acos argument to `[-1, 1]` with the same tolerance policy.
pub(crate) fn acos_arg(x: f64, tol: f64) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + tol {
        Ok(x.clamp(-1.0, 1.0))
    } else {
        Err(Error::NumericDomain(format!(
            "acos argument {x} outside [-1, 1] beyond tolerance {tol:e}"
        )))
    }
}

/// ln(sinh(x)) for x > 0 without overflow for large x.
pub(crate) fn ln_sinh(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// log(sum(exp(v))) with max subtraction.
pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    debug_assert!(!v.is_empty());
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let sum: f64 = v.iter().map(|x| (x - m).exp()).sum();
    m + sum.ln()
}

/// Softmax with max subtraction; entries sum to 1.
pub(crate) fn softmax(v: &[f64]) -> Vec<f64> {
    debug_assert!(!v.is_empty());
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|x| x / sum).collect()
}
