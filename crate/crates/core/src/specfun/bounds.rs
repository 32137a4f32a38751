//! Analytic tail bounds: the Gaussian sandwich for spherical cap measures and
//! the Bernstein bound for the pairwise inner-product sum.

use serde::Serialize;

use super::gauss::gauss_tail;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SodinBounds {
    pub lower: f64,
    pub upper: f64,
    /// `exp(-d t^2 / 2) / (sqrt(d) t)`; undefined at `t = 0`.
    pub asymptotic: Option<f64>,
}

/// Gaussian sandwich `Φ̄(√d t) e^{-C1 d t^4} <= Λ_d(t) <= Φ̄(√d t) e^{-C2 d t^4}`
/// with caller-supplied constants, valid for `t` in `[0, validity_cap]`.
pub fn sodin_bounds(t: f64, d: u32, c1: f64, c2: f64, validity_cap: f64) -> Result<SodinBounds> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("sandwich needs t >= 0, got {t}")));
    }
    if t > validity_cap {
        return Err(Error::domain(format!("t = {t} exceeds the validity cap {validity_cap}")));
    }
    let df = d as f64;
    let base = gauss_tail(df.sqrt() * t);
    let quartic = df * t.powi(4);
    let asymptotic = if t > 0.0 {
        Some((-0.5 * df * t * t).exp() / (df.sqrt() * t))
    } else {
        None
    };
    Ok(SodinBounds {
        lower: base * (-c1 * quartic).exp(),
        upper: base * (-c2 * quartic).exp(),
        asymptotic,
    })
}

/// `min(1, 2 exp(-c2 min(t^2 / (n^2 d), t / n)))`.
pub fn bernstein_tail_bound(t: f64, n: u32, d: u32, c2: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("tail bound needs t >= 0, got {t}")));
    }
    if !(c2 > 0.0) {
        return Err(Error::param(format!("c2 must be positive, got {c2}")));
    }
    if n == 0 || d == 0 {
        return Err(Error::param("n and d must be positive"));
    }
    let (nf, df) = (n as f64, d as f64);
    let rate = (t * t / (nf * nf * df)).min(t / nf);
    Ok((2.0 * (-c2 * rate).exp()).min(1.0))
}
