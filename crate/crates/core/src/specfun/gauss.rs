//! Standard normal tails and the Gaussian inner-product threshold.

use std::f64::consts::{LN_2, PI, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

use super::quad::{integrate_with_breaks, QuadOptions};
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

pub fn gauss_density(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Φ̄(x) = P(N(0,1) >= x).
pub fn gauss_tail(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// ln Φ̄(x), finite for every finite `x`.
pub fn ln_gauss_tail(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -38.0 {
        return 0.0;
    }
    if x < 35.0 {
        return (0.5 * erfc(x / SQRT_2)).ln();
    }
    // Mills-ratio expansion; four terms are exact to double precision here.
    let r = 1.0 / (x * x);
    let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
    -0.5 * x * x - x.ln() - LN_SQRT_2PI + series.ln()
}

/// Φ̄^{-1}(p) for `p` in `(0, 1)`.
pub fn gauss_tail_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("gaussian tail inverse needs p in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = SQRT_2 * erfc_inv(2.0 * p);
    // One Newton step on the side where Φ̄ is represented accurately.
    if x >= 0.0 {
        x += (gauss_tail(x) - p) / gauss_density(x);
    } else {
        x -= (gauss_tail(-x) - (1.0 - p)) / gauss_density(x);
    }
    Ok(x)
}

/// Φ̄^{-1}(exp(ln_p)), usable for probabilities far below `f64::MIN_POSITIVE`.
pub fn gauss_tail_inverse_ln(ln_p: f64) -> Result<f64> {
    if !(ln_p < 0.0) {
        return Err(Error::domain(format!("log probability must be negative, got {ln_p}")));
    }
    if ln_p > -600.0 {
        return gauss_tail_inverse(ln_p.exp());
    }
    let q = -2.0 * ln_p;
    let mut x = (q - (q * 2.0 * PI).ln()).sqrt();
    for _ in 0..50 {
        let g = ln_gauss_tail(x) - ln_p;
        // d/dx ln Φ̄(x) = -φ(x)/Φ̄(x)
        let slope = -(-0.5 * x * x - LN_SQRT_2PI - ln_gauss_tail(x)).exp();
        let step = g / slope;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    Ok(x)
}

/// Distribution of `R = |Z|`, `Z ~ N(0, I_d)`, used to integrate over the
/// norm of one endpoint of a Gaussian inner product.
#[derive(Debug, Clone, Copy)]
struct ChiLaw {
    d: f64,
    ln_norm: f64,
}

impl ChiLaw {
    fn new(d: u32) -> Self {
        let d = d as f64;
        ChiLaw {
            d,
            ln_norm: -(0.5 * d - 1.0) * LN_2 - ln_gamma(0.5 * d),
        }
    }

    fn ln_density(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_norm + (self.d - 1.0) * r.ln() - 0.5 * r * r
    }

    fn breaks(&self, shift: f64) -> Vec<f64> {
        let mode = (self.d - 1.0).max(0.0).sqrt();
        let lo = (mode - 12.0).max(0.0);
        let hi = mode + 12.0 + 2.0 * shift.abs();
        let mut b = vec![lo, hi];
        for k in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
            let x = mode + k;
            if x > lo && x < hi {
                b.push(x);
            }
        }
        b.sort_by(f64::total_cmp);
        b
    }
}

/// P(<Z_1, Z_2> >= s) for independent `Z_i ~ N(0, I_d)`, computed as
/// `E[Φ̄(s / R)]` with `R ~ chi(d)`: given `Z_1`, the inner product is
/// centered normal with standard deviation `|Z_1|`.
pub fn gauss_inner_tail(s: f64, d: u32) -> Result<f64> {
    if d < 1 {
        return Err(Error::param("dimension must be positive"));
    }
    if s == 0.0 {
        return Ok(0.5);
    }
    let chi = ChiLaw::new(d);
    let shift = s / (d as f64).sqrt();
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    let f = |r: f64| {
        let ld = chi.ln_density(r);
        if ld == f64::NEG_INFINITY {
            0.0
        } else {
            (ld + ln_gauss_tail(s / r)).exp()
        }
    };
    Ok(integrate_with_breaks(f, &chi.breaks(shift), &opts)?.value)
}

/// d/ds of [`gauss_inner_tail`], `-E[φ(s/R)/R]`.
fn gauss_inner_tail_slope(s: f64, d: u32) -> Result<f64> {
    let chi = ChiLaw::new(d);
    let shift = s / (d as f64).sqrt();
    let f = |r: f64| {
        let ld = chi.ln_density(r);
        if ld == f64::NEG_INFINITY {
            0.0
        } else {
            (ld - 0.5 * (s / r).powi(2) - LN_SQRT_2PI - r.ln()).exp()
        }
    };
    let v = integrate_with_breaks(f, &chi.breaks(shift), &QuadOptions::default())?.value;
    Ok(-v)
}

/// Threshold `s_{p,d}` with `P(<Z_1, Z_2> >= s) = p`.
///
/// Accepts any `p` in `(0, 1)`: bias levels need thresholds for connection
/// probabilities above one half, where `s` is negative.
pub fn gauss_inner_threshold(p: f64, d: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("edge probability must lie in (0, 1), got {p}")));
    }
    if d < 2 {
        return Err(Error::param(format!("dimension must be at least 2, got {d}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let sd = (d as f64).sqrt();
    let guess = sd * gauss_tail_inverse(p)?;
    let excess = |s: f64| gauss_inner_tail(s, d).map(|v| v - p);
    // Bracket: excess is decreasing in s.
    let step = 0.25 * sd + 1.0;
    let (mut lo, mut hi) = (guess - step, guess + step);
    let mut tries = 0;
    while excess(lo)? < 0.0 {
        lo -= step * (1 << tries.min(20)) as f64;
        tries += 1;
        if tries > 60 {
            return Err(Error::Numeric {
                message: "could not bracket gaussian threshold".into(),
                achieved: f64::NAN,
            });
        }
    }
    tries = 0;
    while excess(hi)? > 0.0 {
        hi += step * (1 << tries.min(20)) as f64;
        tries += 1;
        if tries > 60 {
            return Err(Error::Numeric {
                message: "could not bracket gaussian threshold".into(),
                achieved: f64::NAN,
            });
        }
    }
    while hi - lo > 1e-13 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let slope = gauss_inner_tail_slope(mid, d)?;
    let refined = mid - excess(mid)? / slope;
    Ok(if refined >= lo && refined <= hi { refined } else { mid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_examples() {
        assert_eq!(gauss_tail(0.0), 0.5);
        assert!((gauss_tail(1.959_963_984_540_054) / 0.025 - 1.0).abs() < 1e-13);
        let x = gauss_tail_inverse(0.3).unwrap();
        assert!((gauss_tail(x) - 0.3).abs() < 1e-14);
        assert!(gauss_tail_inverse(0.0).is_err());
        assert!(gauss_tail_inverse(1.0).is_err());
    }

    #[test]
    fn tail_relative_accuracy_against_log_form() {
        // erfc and the Mills expansion meet at x = 35; check continuity and
        // the closed-form value at a few points.
        let a = ln_gauss_tail(35.0 - 1e-12);
        let b = ln_gauss_tail(35.0);
        assert!((a - b).abs() < 1e-9);
        // Φ̄(8) = 6.22096057427178e-16
        assert!((gauss_tail(8.0) / 6.220_960_574_271_784e-16 - 1.0).abs() < 1e-12);
        assert!((gauss_tail(-8.0) - (1.0 - 6.220_960_574_271_784e-16)).abs() < 1e-16);
    }

    #[test]
    fn inverse_round_trip() {
        for k in 1..100 {
            let p = k as f64 / 100.0;
            let x = gauss_tail_inverse(p).unwrap();
            assert!((gauss_tail(x) - p).abs() < 1e-15 * p.max(1e-3) * 10.0, "p = {p}");
        }
        for ln_p in [-700.0, -1500.0, -20000.0] {
            let x = gauss_tail_inverse_ln(ln_p).unwrap();
            assert!((ln_gauss_tail(x) - ln_p).abs() < 1e-9 * -ln_p);
        }
    }

    #[test]
    fn inner_threshold_examples() {
        assert_eq!(gauss_inner_threshold(0.5, 40).unwrap(), 0.0);
        let s = gauss_inner_threshold(0.3, 10_000).unwrap();
        assert!((s - 52.440).abs() < 0.5, "{s}");
        let s = gauss_inner_threshold(0.2, 25).unwrap();
        assert!((gauss_inner_tail(s, 25).unwrap() - 0.2).abs() < 1e-12);
        let s = gauss_inner_threshold(0.8, 25).unwrap();
        assert!(s < 0.0);
        assert!((gauss_inner_tail(s, 25).unwrap() - 0.8).abs() < 1e-12);
        assert!(gauss_inner_threshold(1.0, 25).is_err());
    }

    #[test]
    fn inner_tail_in_dimension_one_is_product_law() {
        // d = 1: P(Z1 Z2 >= 0) = 1/2 and the law is symmetric.
        let a = gauss_inner_tail(0.7, 1).unwrap();
        let b = gauss_inner_tail(-0.7, 1).unwrap();
        assert!((a + b - 1.0).abs() < 1e-10);
    }
}
