//! Least-squares line fits used by the scaling analyses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fitted values.
    pub rms_residual: f64,
    /// Coefficient of determination.
    pub r_squared: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y ≈ a + b x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("a line fit needs at least 2 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        rms_residual: (ss_res / nf).sqrt(),
        r_squared,
        points: n,
    })
}

/// Fit of `ln y` against `ln x`; the slope is the power-law exponent.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Power law `y = c xᵉ` fitted in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Largest `|y − c xᵉ| / y` over the data.
    pub max_relative_residual: f64,
}

pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    let f = log_log_fit(x, y)?;
    let prefactor = f.intercept.exp();
    let max_relative_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| ((b - prefactor * a.powf(f.slope)) / b).abs())
        .fold(0.0, f64::max);
    Ok(PowerLawFit { exponent: f.slope, prefactor, max_relative_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15 && (f.intercept - 2.0).abs() < 1e-15);
        assert!(f.rms_residual < 1e-15 && (f.r_squared - 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_recovered() {
        let x = [125.0, 250.0, 500.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-1.0)).collect();
        let f = power_law_fit(&x, &y).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!(f.max_relative_residual < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(log_log_fit(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0, 2.0], &[1.0]).is_err());
    }
}
