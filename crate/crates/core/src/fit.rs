//! Ordinary least squares on straight lines.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

/// Fits `y = intercept + slope·x`. The slope standard error uses the
/// unbiased residual variance and is zero for two points.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(LineFit { slope, intercept, slope_stderr, rms_residual: (ssr / nf).sqrt() })
}

/// Power-law exponent from a least-squares line through `(ln x, ln y)`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() < 3 || y.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: x.len().min(y.len()) });
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    fit_line(&lx, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15);
        assert!((f.intercept - 2.0).abs() < 1e-15);
        assert!(f.slope_stderr < 1e-15);
    }

    #[test]
    fn known_stderr() {
        // residuals ±1 alternating around y = x
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 0.0, 3.0, 2.0];
        let f = fit_line(&x, &y).unwrap();
        // slope = Sxy/Sxx = 3/5
        assert!((f.slope - 0.6).abs() < 1e-14);
        let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - f.intercept - f.slope * a).powi(2)).sum();
        assert!((f.slope_stderr - (ssr / 2.0 / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn log_log_rejects_bad_input() {
        assert!(fit_log_log(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_log_log(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
        assert!(fit_line(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }
}
