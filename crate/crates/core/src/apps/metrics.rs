//! Area-weighted error norms and convergence-rate fits.

use crate::error::{Error, Result};

/// `( Σ (φ1 − φ2)² A / Σ φ_ex² A )^{1/2}`.
pub fn relative_l2_error(phi1: &[f64], phi2: &[f64], exact: &[f64], areas: &[f64]) -> Result<f64> {
    let n = areas.len();
    for len in [phi1.len(), phi2.len(), exact.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, got: len });
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        num += (phi1[i] - phi2[i]).powi(2) * areas[i];
        den += exact[i].powi(2) * areas[i];
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((num / den).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`, e.g. an error or runtime
/// exponent in `N`. Needs two or more positive samples.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::Config("a slope needs at least two samples".into()));
    }
    if x.iter().chain(y).any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::Config("log-log fit needs positive samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().map(|v| v.ln()).sum::<f64>() / n;
    let my = y.iter().map(|v| v.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a.ln() - mx, b.ln() - my);
        sxy += dx * dy;
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        return Err(Error::Config("log-log fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}
