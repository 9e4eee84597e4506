use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided significance level.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    /// Upper `1 − α/2` quantile of Student's t at `df`.
    pub critical: f64,
    pub significant: bool,
}

/// `1 − α/2` quantile of Student's t distribution with `df` degrees of
/// freedom.
pub fn t_critical(df: usize, alpha: f64) -> Result<f64> {
    let dist = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| Error::InvalidInput(format!("t distribution: {e}")))?;
    Ok(dist.inverse_cdf(1.0 - alpha / 2.0))
}

/// `t = (x̄1 − x̄2) / sqrt(s1²/n1 + s2²/n2)` with `df = min(n1, n2) − 1`.
/// Equal means with zero spread give `t = 0`.
pub fn t_test(mean1: f64, s1: f64, n1: usize, mean2: f64, s2: f64, n2: usize) -> Result<TTestResult> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidInput(format!(
            "t-test needs at least 2 samples per group (got {n1} and {n2})"
        )));
    }
    if !(s1 >= 0.0 && s2 >= 0.0) || !mean1.is_finite() || !mean2.is_finite() {
        return Err(Error::InvalidInput(
            "means must be finite and spreads nonnegative".into(),
        ));
    }
    let df = n1.min(n2) - 1;
    let critical = t_critical(df, ALPHA)?;
    let diff = mean1 - mean2;
    let denom = (s1 * s1 / n1 as f64 + s2 * s2 / n2 as f64).sqrt();
    let t = if diff == 0.0 {
        0.0
    } else if denom == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / denom
    };
    Ok(TTestResult {
        t,
        df,
        critical,
        significant: t.abs() > critical,
    })
}

/// Mean and sample standard deviation (`n − 1` denominator).
pub fn mean_and_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// [`t_test`] on raw samples.
pub fn t_test_from_samples(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "t-test needs at least 2 samples per group (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (m1, s1) = mean_and_sd(a);
    let (m2, s2) = mean_and_sd(b);
    t_test(m1, s1, a.len(), m2, s2, b.len())
}
