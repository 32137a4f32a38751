//! Browser bindings: normalized threshold curves, cap-process paths and the
//! profile of a rearranged sum of caps. Every export returns a flat
//! `Float64Array`; the layouts are documented per function.

use rgg_core::rearrange::{simulate_cap_process_with, StepFunctionBuilder};
use rgg_core::sampler::first_coordinates;
use rgg_core::specfun::{gauss_tail_inverse, CapGeometry, SphereMarginal};
use rgg_core::{RngStream, Threshold};
use wasm_bindgen::prelude::*;

const MAX_PATHS: u32 = 2_000;
const MAX_POINTS: u32 = 4_000;

fn check(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

/// Rows `(d, √d·t_{p,d}, s_{p,d}/√d, Φ̄^{-1}(p))` for `points` log-spaced
/// dimensions in `[d_min, d_max]`.
pub fn threshold_rows(p: f64, d_min: u32, d_max: u32, points: u32) -> Result<Vec<f64>, String> {
    check(d_min >= 2 && d_max >= d_min, "need 2 <= d_min <= d_max")?;
    check((2..=MAX_POINTS).contains(&points), "points must be in 2..=4000")?;
    let limit = gauss_tail_inverse(p).map_err(|e| e.to_string())?;
    let (lo, hi) = ((d_min as f64).ln(), (d_max as f64).ln());
    let mut out = Vec::with_capacity(4 * points as usize);
    let mut last = 0;
    for k in 0..points {
        let d = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp().round() as u32;
        if d == last {
            continue;
        }
        last = d;
        let t = Threshold::solve(p, d).map_err(|e| e.to_string())?;
        let sd = (d as f64).sqrt();
        out.extend([d as f64, sd * t.t_sphere, t.s_gauss / sd, limit]);
    }
    Ok(out)
}

/// `paths` cap-process paths, each `η_0, ..., η_n` (length `n + 1`).
pub fn cap_paths(n: u32, d: u32, p: f64, paths: u32, seed: u64) -> Result<Vec<f64>, String> {
    check((1..=MAX_PATHS).contains(&paths), "paths must be in 1..=2000")?;
    check((2..=64).contains(&n), "n must be in 2..=64")?;
    let geom = CapGeometry::new(d).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity((paths * (n + 1)) as usize);
    for i in 0..paths {
        let path = simulate_cap_process_with(&geom, n, p, n, RngStream::new(seed, i as u64)).map_err(|e| e.to_string())?;
        out.extend(path.etas);
    }
    Ok(out)
}

/// The step function `(1_{C(X_1)} + ... + 1_{C(X_k)})*` for `k` uniform
/// centers, sampled at `points` first coordinates in `[-1, 1]`: rows
/// `(x_1, g(x_1))`, followed by the `k` level measures.
pub fn profile_rows(k: u32, d: u32, p: f64, points: u32, seed: u64) -> Result<Vec<f64>, String> {
    check((1..=256).contains(&k), "k must be in 1..=256")?;
    check((2..=MAX_POINTS).contains(&points), "points must be in 2..=4000")?;
    let centers = first_coordinates(d, k as usize, RngStream::new(seed, 0)).map_err(|e| e.to_string())?;
    let mut builder = StepFunctionBuilder::new(d, p).map_err(|e| e.to_string())?;
    for u in centers {
        builder.add(u).map_err(|e| e.to_string())?;
    }
    let g = builder.current();
    let marginal = SphereMarginal::new(d).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(2 * points as usize + g.len());
    for i in 0..points {
        let x = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        out.extend([x, g.evaluate(x, &marginal) as f64]);
    }
    out.extend_from_slice(g.levels());
    Ok(out)
}

#[wasm_bindgen]
pub fn threshold_curve(p: f64, d_min: u32, d_max: u32, points: u32) -> Result<Vec<f64>, JsError> {
    threshold_rows(p, d_min, d_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cap_process_paths(n: u32, d: u32, p: f64, paths: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    cap_paths(n, d, p, paths, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rearranged_profile(k: u32, d: u32, p: f64, points: u32, seed: u64) -> Result<Vec<f64>, JsError> {
    profile_rows(k, d, p, points, seed).map_err(|e| JsError::new(&e))
}
