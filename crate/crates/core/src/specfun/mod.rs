//! Special functions for spherical and Gaussian marginals.
//!
//! Cap measures go through the regularized incomplete beta function,
//! `Λ_d(u) = I_{1-u^2}((d-1)/2, 1/2) / 2` for `u >= 0`, evaluated in log form
//! so that caps far below `f64::MIN_POSITIVE` stay representable. Direct
//! quadrature of the marginal density is kept as a cross-check in tests.

mod beta;
mod bounds;
mod gauss;
pub mod quad;
mod sphere;

pub use beta::{ln_beta, ln_beta_reg_pair, ln_one_minus_exp};
pub use bounds::{bernstein_tail_bound, sodin_bounds, SodinBounds};
pub use gauss::{
    gauss_density, gauss_inner_tail, gauss_inner_threshold, gauss_tail, gauss_tail_inverse, gauss_tail_inverse_ln,
    ln_gauss_tail,
};
pub use sphere::{
    cap_intersection_measure, cap_intersection_measure_tol, joint_density_2d, ln_sphere_tail, marginal_density,
    sphere_tail, sphere_tail_inverse, CapGeometry, SphereMarginal, CAP_INTERSECTION_TOL,
};

/// `ln(sum(exp(xs)))` without overflow; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
