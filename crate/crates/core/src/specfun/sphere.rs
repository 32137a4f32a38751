//! One- and two-dimensional marginals of the uniform measure on `S^{d-1}`,
//! cap measures and their inverses, and two-cap intersection measures.

use std::f64::consts::{LN_2, PI};

use super::beta::{ln_beta, ln_beta_reg_pair};
use super::gauss::gauss_tail_inverse_ln;
use super::quad::{integrate_with_breaks, QuadOptions};
use crate::error::{Error, Result};

/// Default absolute tolerance for two-cap intersection measures.
pub const CAP_INTERSECTION_TOL: f64 = 1e-9;

fn check_dim(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::param(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

/// First-coordinate marginal of the uniform measure on `S^{d-1}`, with its
/// normalizing constant cached.
#[derive(Debug, Clone, Copy)]
pub struct SphereMarginal {
    d: u32,
    shape: f64,
    ln_beta: f64,
}

impl SphereMarginal {
    pub fn new(d: u32) -> Result<Self> {
        check_dim(d)?;
        let shape = 0.5 * (d as f64 - 1.0);
        Ok(SphereMarginal {
            d,
            shape,
            ln_beta: ln_beta(shape, 0.5),
        })
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    /// Log density at `x`, `|x| < 1`. Returns `-inf` outside `(-1, 1)` for
    /// `d > 3`.
    pub fn ln_density(&self, x: f64) -> f64 {
        let one_minus_sq = (-x).ln_1p() + x.ln_1p();
        let expo = 0.5 * (self.d as f64 - 3.0);
        if expo == 0.0 {
            return -self.ln_beta;
        }
        -self.ln_beta + expo * one_minus_sq
    }

    pub fn density(&self, x: f64) -> f64 {
        if self.d == 3 {
            return 0.5;
        }
        self.ln_density(x).exp()
    }

    /// `(ln Λ(u), ln(1 - Λ(u)))` for `u` in `[-1, 1]`.
    pub fn ln_tail_pair(&self, u: f64) -> (f64, f64) {
        if u >= 1.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if u <= -1.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        match self.d {
            2 => {
                let t = u.acos() / PI;
                (t.ln(), (-t).ln_1p())
            }
            3 => {
                let t = 0.5 * (1.0 - u);
                (t.ln(), (0.5 * (1.0 + u)).ln())
            }
            _ => {
                let v = u.abs();
                let x = (1.0 - v) * (1.0 + v);
                let y = v * v;
                let (ln_i, _) = ln_beta_reg_pair(self.shape, 0.5, x, y, self.ln_beta);
                // Λ(v) = I/2 for v >= 0 and 1 - I/2 on the far side.
                let near = ln_i - LN_2;
                let far = (-0.5 * ln_i.exp()).ln_1p();
                if u >= 0.0 {
                    (near, far)
                } else {
                    (far, near)
                }
            }
        }
    }

    pub fn ln_tail(&self, u: f64) -> f64 {
        self.ln_tail_pair(u).0
    }

    /// Λ_d(u): measure of the cap `{x : x_1 >= u}`.
    pub fn tail(&self, u: f64) -> f64 {
        self.ln_tail(u).exp()
    }

    /// Altitude `h` with `Λ_d(h) = a`.
    pub fn tail_inverse(&self, a: f64) -> f64 {
        if a <= 0.0 {
            return 1.0;
        }
        if a >= 1.0 {
            return -1.0;
        }
        if a == 0.5 {
            return 0.0;
        }
        match self.d {
            2 => (PI * a).cos(),
            3 => 1.0 - 2.0 * a,
            _ if a > 0.5 => -self.upper_inverse_ln((1.0 - a).ln()),
            _ => self.upper_inverse_ln(a.ln()),
        }
    }

    /// Altitude `h` with `ln Λ_d(h) = ln_a`; valid for any `ln_a <= 0`,
    /// including caps far below the smallest positive double.
    pub fn tail_inverse_ln(&self, ln_a: f64) -> f64 {
        if ln_a > -LN_2 {
            return self.tail_inverse(ln_a.exp());
        }
        match self.d {
            2 => (PI * ln_a.exp()).cos(),
            3 => 1.0 - 2.0 * ln_a.exp(),
            _ => self.upper_inverse_ln(ln_a),
        }
    }

    /// Solves `ln Λ(u) = ln_a` on `[0, 1)` for `ln_a <= ln(1/2)`, by Newton
    /// steps on `ln Λ` safeguarded with a bisection bracket.
    fn upper_inverse_ln(&self, ln_a: f64) -> f64 {
        if ln_a == f64::NEG_INFINITY {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let z = gauss_tail_inverse_ln(ln_a).unwrap_or(0.0).max(0.0);
        let mut u = (z / (self.d as f64).sqrt()).clamp(1e-300, 1.0 - 1e-16);
        for _ in 0..200 {
            let g = self.ln_tail(u) - ln_a;
            if g == 0.0 {
                return u;
            }
            if g > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            if hi - lo <= 1e-13 * hi.max(1e-300) {
                break;
            }
            // d/du ln Λ = -f(u) / Λ(u)
            let slope = -(self.ln_density(u) - self.ln_tail(u)).exp();
            let mut next = u - g / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 2.0 * f64::EPSILON * u.abs() {
                return next;
            }
            u = next;
        }
        // Final derivative refinement from the bracket midpoint.
        let mid = 0.5 * (lo + hi);
        let g = self.ln_tail(mid) - ln_a;
        let slope = -(self.ln_density(mid) - self.ln_tail(mid)).exp();
        let refined = mid - g / slope;
        if refined >= lo && refined <= hi {
            refined
        } else {
            mid
        }
    }
}

/// Density of the first coordinate of a uniform point on `S^{d-1}`.
pub fn marginal_density(x: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    if x.is_nan() || x.abs() > 1.0 {
        return Err(Error::domain(format!("marginal density needs |x| < 1, got {x}")));
    }
    if x.abs() == 1.0 {
        return match d {
            2 => Err(Error::domain("marginal density is unbounded at |x| = 1 for d = 2")),
            3 => Ok(0.5),
            _ => Ok(0.0),
        };
    }
    Ok(SphereMarginal::new(d)?.density(x))
}

/// Λ_d(u), the measure of the cap `{x : x_1 >= u}`.
pub fn sphere_tail(u: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("cap altitude must lie in [-1, 1], got {u}")));
    }
    Ok(SphereMarginal::new(d)?.tail(u))
}

/// Natural log of Λ_d(u).
pub fn ln_sphere_tail(u: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("cap altitude must lie in [-1, 1], got {u}")));
    }
    Ok(SphereMarginal::new(d)?.ln_tail(u))
}

/// Altitude `h(a) = Λ_d^{-1}(a)` of a cap of measure `a`.
pub fn sphere_tail_inverse(a: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("cap measure must lie in [0, 1], got {a}")));
    }
    Ok(SphereMarginal::new(d)?.tail_inverse(a))
}

/// Density of the first two coordinates of a uniform point on `S^{d-1}`.
/// `d = 3` is accepted; its density has an integrable singularity on the
/// unit circle.
pub fn joint_density_2d(x: f64, y: f64, d: u32) -> Result<f64> {
    if d < 3 {
        return Err(Error::param(format!("two-dimensional marginal needs d >= 3, got {d}")));
    }
    let r2 = x * x + y * y;
    if r2.is_nan() || r2 >= 1.0 {
        return Err(Error::domain(format!("joint density needs x^2 + y^2 < 1, got {r2}")));
    }
    let df = d as f64;
    let expo = 0.5 * (df - 4.0);
    let ln_base = ((df - 2.0) / (2.0 * PI)).ln();
    if expo == 0.0 {
        return Ok(ln_base.exp());
    }
    Ok((ln_base + expo * (-r2).ln_1p()).exp())
}

/// Cap geometry in a fixed dimension: the marginal of `S^{d-1}` and of the
/// slice sphere `S^{d-2}` used for conditional cap measures.
#[derive(Debug, Clone, Copy)]
pub struct CapGeometry {
    pub marginal: SphereMarginal,
    slice: Option<SphereMarginal>,
}

impl CapGeometry {
    pub fn new(d: u32) -> Result<Self> {
        let marginal = SphereMarginal::new(d)?;
        let slice = if d >= 3 { Some(SphereMarginal::new(d - 1)?) } else { None };
        Ok(CapGeometry { marginal, slice })
    }

    pub fn dim(&self) -> u32 {
        self.marginal.dim()
    }

    pub fn altitude(&self, a: f64) -> f64 {
        self.marginal.tail_inverse(a)
    }

    /// μ(C_e^a ∩ C_v^b) with `<e, v> = u`.
    pub fn intersection(&self, a: f64, b: f64, u: f64, tol: f64) -> Result<f64> {
        self.intersection_with_altitudes(a, self.altitude(a), b, self.altitude(b), u, tol)
    }

    /// Same as [`CapGeometry::intersection`] with altitudes already known.
    pub fn intersection_with_altitudes(&self, a: f64, ha: f64, b: f64, hb: f64, u: f64, tol: f64) -> Result<f64> {
        let floor = (a + b - 1.0).max(0.0);
        let ceil = a.min(b);
        if a <= 0.0 || b <= 0.0 {
            return Ok(0.0);
        }
        if a >= 1.0 {
            return Ok(b);
        }
        if b >= 1.0 {
            return Ok(a);
        }
        if u >= 1.0 {
            return Ok(ceil);
        }
        if u <= -1.0 {
            return Ok(floor);
        }
        let value = match self.slice {
            None => arc_intersection(a, b, u),
            Some(slice) => {
                let su = ((1.0 - u) * (1.0 + u)).sqrt();
                let sb = ((1.0 - hb) * (1.0 + hb)).max(0.0).sqrt();
                let integrand = |x: f64| {
                    let sx = ((1.0 - x) * (1.0 + x)).max(0.0).sqrt();
                    if sx == 0.0 {
                        return 0.0;
                    }
                    let z = (hb - u * x) / (su * sx);
                    if z >= 1.0 {
                        return 0.0;
                    }
                    let ln_cond = if z <= -1.0 { 0.0 } else { slice.ln_tail(z) };
                    (self.marginal.ln_density(x) + ln_cond).exp()
                };
                let mut breaks = vec![ha, 1.0];
                // The slice condition switches between empty and full where z = +-1.
                breaks.push(u * hb - su * sb);
                breaks.push(u * hb + su * sb);
                // Resolve the bulk of the marginal, which has width ~ 1/sqrt(d).
                let w = 1.0 / (self.dim() as f64).sqrt();
                for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
                    breaks.push(ha + k * w);
                    breaks.push(k * w);
                    breaks.push(-k * w);
                }
                breaks.retain(|x| *x >= ha && *x <= 1.0);
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let opts = QuadOptions {
                    abs_tol: tol,
                    rel_tol: 1e-10,
                    max_intervals: 4000,
                };
                integrate_with_breaks(integrand, &breaks, &opts)?.value
            }
        };
        Ok(value.clamp(floor, ceil))
    }
}

/// Overlap of two arcs on the circle (d = 2), normalized by 2π.
fn arc_intersection(a: f64, b: f64, u: f64) -> f64 {
    let theta = u.clamp(-1.0, 1.0).acos();
    let (ra, rb) = (PI * a, PI * b);
    let overlap = |lo1: f64, hi1: f64, lo2: f64, hi2: f64| (hi1.min(hi2) - lo1.max(lo2)).max(0.0);
    let mut total = 0.0;
    for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
        total += overlap(-ra, ra, theta - rb + shift, theta + rb + shift);
    }
    total / (2.0 * PI)
}

/// μ(C_e^a ∩ C_v^b) for caps of measures `a` and `b` whose centers have inner
/// product `u`.
pub fn cap_intersection_measure(a: f64, b: f64, u: f64, d: u32) -> Result<f64> {
    cap_intersection_measure_tol(a, b, u, d, CAP_INTERSECTION_TOL)
}

pub fn cap_intersection_measure_tol(a: f64, b: f64, u: f64, d: u32, tol: f64) -> Result<f64> {
    check_dim(d)?;
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(Error::domain(format!("cap measures must lie in [0, 1], got {a}, {b}")));
    }
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::domain(format!("center inner product must lie in [-1, 1], got {u}")));
    }
    CapGeometry::new(d)?.intersection(a, b, u, tol)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quad::integrate;

    #[test]
    fn density_examples() {
        assert!((marginal_density(0.3, 3).unwrap() - 0.5).abs() < 1e-15);
        assert!((marginal_density(0.0, 2).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert_eq!(marginal_density(1.0, 3).unwrap(), 0.5);
        assert_eq!(marginal_density(-1.0, 7).unwrap(), 0.0);
        assert!(marginal_density(1.0, 2).is_err());
        assert!(marginal_density(1.2, 5).is_err());
        assert!(marginal_density(0.0, 1).is_err());
    }

    #[test]
    fn density_normalizes() {
        for d in [2u32, 5, 50] {
            let m = SphereMarginal::new(d).unwrap();
            let r = integrate(|x| m.density(x), -1.0, 1.0, &QuadOptions::abs(1e-11));
            let total = match r {
                Ok(r) => r.value,
                // The arcsine law has inverse square-root endpoints; use the
                // substitution x = sin(t) instead.
                Err(_) => integrate(|t: f64| m.density(t.sin()) * t.cos(), -PI / 2.0, PI / 2.0, &QuadOptions::abs(1e-11))
                    .unwrap()
                    .value,
            };
            assert!((total - 1.0).abs() < 1e-9, "d = {d}: {total}");
        }
    }

    #[test]
    fn tail_examples() {
        assert!((sphere_tail(0.0, 17).unwrap() - 0.5).abs() < 1e-15);
        assert!((sphere_tail(0.2, 3).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(sphere_tail(1.0, 9).unwrap(), 0.0);
        assert_eq!(sphere_tail(-1.0, 9).unwrap(), 1.0);
        assert!(sphere_tail(1.01, 9).is_err());
    }

    #[test]
    fn tail_matches_direct_quadrature() {
        for d in [4u32, 7, 30, 200, 10_000] {
            let m = SphereMarginal::new(d).unwrap();
            for &u in &[-0.6, -0.05, 0.0, 0.01, 0.1, 0.35, 0.8] {
                let direct = integrate(|x| m.density(x), u, 1.0, &QuadOptions::abs(1e-13)).unwrap().value;
                let beta = m.tail(u);
                assert!((direct - beta).abs() < 1e-11, "d = {d}, u = {u}: {direct} vs {beta}");
            }
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(sphere_tail_inverse(0.5, 100).unwrap(), 0.0);
        assert!((sphere_tail_inverse(0.3, 3).unwrap() - 0.4).abs() < 1e-15);
        assert!(sphere_tail_inverse(-0.1, 5).is_err());
        for d in [2u32, 3, 4, 10, 77, 1000, 10_000] {
            let m = SphereMarginal::new(d).unwrap();
            for k in 0..=40 {
                let a = k as f64 / 40.0;
                let h = m.tail_inverse(a);
                assert!((m.tail(h) - a).abs() < 1e-12, "d = {d}, a = {a}");
            }
        }
    }

    #[test]
    fn log_inverse_reaches_below_double_range() {
        let m = SphereMarginal::new(2000).unwrap();
        let ln_a = -900.0;
        let h = m.tail_inverse_ln(ln_a);
        assert!(h > 0.5 && h < 1.0);
        assert!((m.ln_tail(h) - ln_a).abs() < 1e-9);
    }

    #[test]
    fn joint_density_examples() {
        assert!((joint_density_2d(0.0, 0.0, 4).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(joint_density_2d(0.8, 0.6, 6).is_err());
        assert!(joint_density_2d(0.1, 0.1, 2).is_err());
    }

    #[test]
    fn intersection_trivial_configurations() {
        assert!((cap_intersection_measure(0.3, 0.2, 1.0, 20).unwrap() - 0.2).abs() < 1e-15);
        assert!((cap_intersection_measure(0.7, 0.6, -1.0, 20).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(cap_intersection_measure(0.0, 0.6, 0.3, 20).unwrap(), 0.0);
        assert!((cap_intersection_measure(1.0, 0.6, 0.3, 20).unwrap() - 0.6).abs() < 1e-15);
        assert!(cap_intersection_measure(0.3, 1.2, 0.3, 20).is_err());
        assert!(cap_intersection_measure(0.3, 0.2, 1.5, 20).is_err());
    }

    #[test]
    fn intersection_on_the_circle() {
        // Half-widths 0.3π and 0.2π with centers π/2 apart just touch.
        let v = cap_intersection_measure(0.3, 0.2, 0.0, 2).unwrap();
        assert!(v.abs() < 1e-15);
        // Half-widths 0.4π each: overlap 0.3π out of 2π.
        let v = cap_intersection_measure(0.4, 0.4, 0.0, 2).unwrap();
        assert!((v - 0.15).abs() < 1e-12, "{v}");
    }

    #[test]
    fn intersection_is_symmetric_and_monotone() {
        for d in [3u32, 8, 40, 500] {
            let g = CapGeometry::new(d).unwrap();
            let mut prev = 0.0;
            for k in 0..=20 {
                let u = -1.0 + k as f64 / 10.0;
                let ab = g.intersection(0.35, 0.2, u, 1e-10).unwrap();
                let ba = g.intersection(0.2, 0.35, u, 1e-10).unwrap();
                assert!((ab - ba).abs() < 1e-9, "d = {d}, u = {u}: {ab} vs {ba}");
                assert!(ab >= prev - 1e-10, "d = {d}, u = {u}");
                assert!(ab <= 0.2 + 1e-15);
                prev = ab;
            }
        }
    }
}
