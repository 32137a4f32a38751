//! Closed-form bounds and the constants behind the edge-deviation upper bound.

use serde::Serialize;

use super::mc::BiasSchedule;
use super::LogEstimate;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::specfun::quad::{integrate_to_infinity, QuadOptions};
use crate::specfun::{ln_gauss_tail, sphere_tail_inverse};

/// `ln p^{n(n-1)/2}`.
pub fn clique_lower_bound_er(params: &ModelParams) -> LogEstimate {
    LogEstimate::closed_form(params.pairs() as f64 * params.p.ln())
}

/// `n d ln Φ̄((s_p / d)^{1/2})`: every coordinate of every point at least
/// `(s_p / d)^{1/2}` forces a clique in the Gaussian model.
pub fn clique_all_coord_bound(params: &ModelParams) -> Result<LogEstimate> {
    let schedule = BiasSchedule::all_coord(params)?;
    let nd = params.n as f64 * params.d as f64;
    Ok(LogEstimate::closed_form(nd * ln_gauss_tail(schedule.level)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeDevBounds {
    /// Planting a clique on `ceil(αn + 1)` vertices, `α = (pε/(1-p))^{1/2}`.
    pub er_type: LogEstimate,
    /// Biasing all first coordinates above `level`.
    pub bias_type: LogEstimate,
    pub alpha: f64,
    pub clique_size: u64,
    pub level: Option<f64>,
}

/// The two lower bounds on `P(|E| >= (1+ε) p n(n-1)/2)`. A bound whose
/// construction is not available at this `(n, p, ε)` is `-inf`, flagged.
pub fn edge_dev_lower_bounds(params: &ModelParams) -> Result<EdgeDevBounds> {
    let eps = params.epsilon_or_err()?;
    let (n, p) = (params.n as f64, params.p);
    let ln_n2 = 2.0 * n.ln();
    let alpha = (p * eps / (1.0 - p)).sqrt();
    let m = (alpha * n + 1.0).ceil() as u64;
    let er_type = if m > params.n as u64 {
        LogEstimate::closed_form(f64::NEG_INFINITY).with_flag("clique_exceeds_n")
    } else {
        let pairs_m = (m * (m - 1) / 2) as f64;
        let est = LogEstimate::closed_form(pairs_m * p.ln() - ln_n2);
        // The construction needs E[|E| | planted clique] >= (1+ε) p C(n,2) + 1.
        let total = params.pairs() as f64;
        if pairs_m + p * (total - pairs_m) < (1.0 + eps) * p * total + 1.0 {
            est.with_flag("premise_fails")
        } else {
            est
        }
    };
    let schedule = BiasSchedule::edge_dev(params, eps)?;
    let bias_type = match schedule {
        None => LogEstimate::closed_form(f64::NEG_INFINITY).with_flag("shifted_probability_reaches_one"),
        Some(s) => LogEstimate::closed_form(n * ln_gauss_tail(s.level) - ln_n2),
    };
    Ok(EdgeDevBounds {
        er_type,
        bias_type,
        alpha,
        clique_size: m,
        level: schedule.map(|s| s.level),
    })
}

/// `ln[(1/(a-b)) ∫_b^∞ tail(t) dt]`, the bound
/// `P(A) <= E(ξ - b)^+ / (a - b)` for `a = E[ξ | A]`, with the caller's tail
/// bound `tail(t) >= P(ξ >= t)`.
pub fn markov_event_bound<F: FnMut(f64) -> f64>(a: f64, b: f64, tail: F) -> Result<f64> {
    if !(b < a) {
        return Err(Error::domain(format!("need b < a, got a = {a}, b = {b}")));
    }
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let r = integrate_to_infinity(tail, b, &opts).map_err(|e| Error::Numeric {
        message: format!("tail is not integrable from {b}: {e}"),
        achieved: f64::NAN,
    })?;
    if !r.value.is_finite() {
        return Err(Error::Numeric {
            message: "tail integral diverges".into(),
            achieved: r.value,
        });
    }
    Ok(r.value.ln() - (a - b).ln())
}

/// `(δ/2) ln P(Y' >= δ/2) + ln 2`, bounding `ln P(Y >= δ)` when the MGF of
/// `Y` is dominated by that of `Y'`.
pub fn exp_dominance_bound(log_p_half: f64, delta: f64) -> Result<f64> {
    if !(log_p_half <= 0.0) {
        return Err(Error::domain(format!("log probability must be <= 0, got {log_p_half}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("delta must be nonnegative, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(std::f64::consts::LN_2);
    }
    Ok(0.5 * delta * log_p_half + std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsChoice {
    /// `λ = ε/100`, `c₀ = √p ε/100`.
    Explicit,
    /// Largest `λ` with `ln(1 - q + q e^λ)/λ <= p + pε/16`, `c₀ = √(pελ)/10`.
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationConstants {
    pub q: f64,
    pub a: f64,
    pub lambda: f64,
    pub c0: f64,
    pub h: f64,
    /// Whether `ln(1 - q + q e^λ)/λ <= p + pε/16` holds for the chosen `λ`.
    pub lambda_ok: bool,
}

fn lambda_ratio(q: f64, lambda: f64) -> f64 {
    // ln(1 + q (e^λ - 1)) / λ, with the λ -> 0 limit q.
    if lambda == 0.0 {
        q
    } else {
        (q * lambda.exp_m1()).ln_1p() / lambda
    }
}

/// Grid step for the restriction constant `a`.
const A_STEP: f64 = 1e-3;

/// Constants of the edge-deviation upper bound at `(p, ε, d, n)`.
pub fn choose_deviation_constants(p: f64, eps: f64, d: u32, n: u32, choice: ConstantsChoice) -> Result<DeviationConstants> {
    if !(p > 0.0 && p < 1.0) || !(eps > 0.0) || (1.0 + eps) * p >= 1.0 {
        return Err(Error::param(format!("need (1 + ε) p < 1 with ε > 0, got p = {p}, ε = {eps}")));
    }
    if d < 3 {
        return Err(Error::param("the restriction on a needs d >= 3"));
    }
    let q = p + p * eps / 32.0;
    let t_p = sphere_tail_inverse(p, d)?;
    let t_q = sphere_tail_inverse(q, d - 1)?;
    let sd = (d as f64).sqrt();
    let feasible = |a: f64| {
        let s = a * a / sd;
        t_p - s > t_q.max((1.0 - s) * t_q)
    };
    // The condition is monotone in a; walk the grid up to a^2 / sqrt(d) = 1.
    let a_max = sd.sqrt();
    let steps = (a_max / A_STEP).floor() as u64;
    let mut lo = 0u64;
    let mut hi = steps + 1;
    // Largest k with feasible(k * step); feasible(0) is t_p > t_q.
    if !feasible(A_STEP) {
        return Err(Error::Infeasible(format!(
            "no a > 0 satisfies the restriction at d = {d} (t_p = {t_p}, t_q = {t_q})"
        )));
    }
    lo = lo.max(1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(mid as f64 * A_STEP) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = lo as f64 * A_STEP;
    let target = p + p * eps / 16.0;
    let (lambda, c0) = match choice {
        ConstantsChoice::Explicit => (eps / 100.0, p.sqrt() * eps / 100.0),
        ConstantsChoice::Solved => {
            // The ratio increases from q (< target) to 1; bisect the crossing.
            let (mut l, mut r) = (0.0_f64, 1.0_f64);
            while lambda_ratio(q, r) <= target {
                r *= 2.0;
                if r > 1e6 {
                    break;
                }
            }
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                if lambda_ratio(q, m) <= target {
                    l = m;
                } else {
                    r = m;
                }
            }
            (l, (p * eps * l).sqrt() / 10.0)
        }
    };
    let h = (c0 * (n as f64).sqrt() / (d as f64).powf(0.25)).min(a / 2.0);
    Ok(DeviationConstants {
        q,
        a,
        lambda,
        c0,
        h,
        lambda_ok: lambda_ratio(q, lambda) <= target,
    })
}

/// `-min(κ₁ p² ε⁴ n², κ₂ p ε³ / sqrt(ln(1/p)) n sqrt(d))`, an order-of-magnitude
/// envelope with caller-chosen constants.
pub fn explicit_edge_dev_upper_bound(p: f64, eps: f64, n: u32, d: u32, kappa1: f64, kappa2: f64) -> f64 {
    let (n, d) = (n as f64, d as f64);
    let dense = kappa1 * p * p * eps.powi(4) * n * n;
    let sparse = kappa2 * p * eps.powi(3) / (1.0 / p).ln().sqrt() * n * d.sqrt();
    -dense.min(sparse)
}
