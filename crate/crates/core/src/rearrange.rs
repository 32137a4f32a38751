//! Symmetric rearrangements on the sphere.
//!
//! A symmetric nonincreasing step function `g` around the pole `e` is stored
//! by the measures `a_1 >= a_2 >= ... >= a_K` of its level sets `{g >= j}`,
//! each of which is a cap centered at `e`. Rearranging a set is then a
//! reinterpretation of its measure, so integrals are preserved by
//! construction. Everything here depends on a cap center only through its
//! first coordinate.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{ModelParams, Threshold};
use crate::rng::RngStream;
use crate::sampler::{dot, sample_first_coordinate, sample_points};
use crate::specfun::{log_sum_exp, CapGeometry, SphereMarginal};
use crate::Model;

/// Relative quadrature tolerance for intersections inside process loops.
pub const PROCESS_TOL: f64 = 1e-10;

/// Steps between integral audits in [`StepFunctionBuilder`].
pub const AUDIT_INTERVAL: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricStepFunction {
    d: u32,
    levels: Vec<f64>,
}

impl SymmetricStepFunction {
    pub fn zero(d: u32) -> Self {
        SymmetricStepFunction { d, levels: Vec::new() }
    }

    pub fn from_levels(d: u32, levels: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::param(format!("dimension must be at least 2, got {d}")));
        }
        if levels.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::domain("level measures must lie in [0, 1]"));
        }
        if levels.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("level measures must be nonincreasing"));
        }
        Ok(SymmetricStepFunction { d, levels })
    }

    /// Indicator of the cap of measure `a` around the pole.
    pub fn indicator(d: u32, a: f64) -> Result<Self> {
        Self::from_levels(d, vec![a])
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `∫ g dμ = Σ a_j`.
    pub fn integral(&self) -> f64 {
        self.levels.iter().sum()
    }

    /// `g` at a point with first coordinate `x1`, given `Λ_d(x1)`.
    pub fn evaluate_tail(&self, tail: f64) -> u32 {
        self.levels.partition_point(|&a| a >= tail) as u32
    }

    pub fn evaluate(&self, x1: f64, marginal: &SphereMarginal) -> u32 {
        self.evaluate_tail(marginal.tail(x1.clamp(-1.0, 1.0)))
    }
}

/// The cap with the same measure as a set of measure `a`.
pub fn rearrange_set(a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::domain(format!("set measure must lie in [0, 1], got {a}")));
    }
    Ok(a)
}

/// `(g + 1_C)*` where `C` is the cap of measure `p` whose center has first
/// coordinate `u`; the `K + 1` new levels are
/// `b_j = a_j + μ(L_{j-1} ∩ C) - μ(L_j ∩ C)` with `L_0` the whole sphere.
pub fn add_cap_and_rearrange(
    g: &SymmetricStepFunction,
    u: f64,
    p: f64,
    geom: &CapGeometry,
    tol: f64,
) -> Result<SymmetricStepFunction> {
    if geom.dim() != g.d {
        return Err(Error::param("cap geometry and step function disagree on dimension"));
    }
    if !(-1.0..=1.0).contains(&u) || !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("need u in [-1, 1] and p in (0, 1], got {u}, {p}")));
    }
    let hp = geom.altitude(p);
    let k = g.levels.len();
    let mut inter = Vec::with_capacity(k + 1);
    inter.push(p);
    let mut prev_level = f64::NAN;
    for &a in &g.levels {
        let last = *inter.last().unwrap();
        let value = if a == prev_level {
            last
        } else {
            let raw = geom
                .intersection_with_altitudes(a, geom.altitude(a), p, hp, u, tol * a.min(p).max(f64::MIN_POSITIVE))
                .map_err(|e| Error::Numeric {
                    message: format!("level intersection at a = {a}, u = {u}: {e}"),
                    achieved: f64::NAN,
                })?;
            // Nested level sets give nested intersections.
            raw.min(last)
        };
        inter.push(value);
        prev_level = a;
    }
    let mut levels: Vec<f64> = (0..k)
        .map(|j| (g.levels[j] + inter[j] - inter[j + 1]).clamp(0.0, 1.0))
        .collect();
    levels.push(inter[k]);
    let worst = levels.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if worst > 1e3 * tol.max(1e-12) {
        return Err(Error::Numeric {
            message: format!("rearranged levels lost nesting by {worst:e}"),
            achieved: worst,
        });
    }
    // Reordering roundoff-level inversions keeps the sum unchanged.
    levels.sort_by(|a, b| b.total_cmp(a));
    Ok(SymmetricStepFunction { d: g.d, levels })
}

/// Repeated [`add_cap_and_rearrange`] with an integral audit: after every
/// [`AUDIT_INTERVAL`] caps the sum of levels is recomputed from scratch and
/// compared with `caps * p`.
#[derive(Debug, Clone)]
pub struct StepFunctionBuilder {
    g: SymmetricStepFunction,
    geom: CapGeometry,
    p: f64,
    caps: usize,
    tol: f64,
}

impl StepFunctionBuilder {
    pub fn new(d: u32, p: f64) -> Result<Self> {
        Ok(StepFunctionBuilder {
            g: SymmetricStepFunction::zero(d),
            geom: CapGeometry::new(d)?,
            p,
            caps: 0,
            tol: PROCESS_TOL,
        })
    }

    pub fn current(&self) -> &SymmetricStepFunction {
        &self.g
    }

    pub fn add(&mut self, u: f64) -> Result<&SymmetricStepFunction> {
        self.g = add_cap_and_rearrange(&self.g, u, self.p, &self.geom, self.tol)?;
        self.caps += 1;
        if self.caps.is_multiple_of(AUDIT_INTERVAL) {
            let drift = (self.g.integral() - self.caps as f64 * self.p).abs();
            if drift > 1e-9 * self.caps as f64 {
                return Err(Error::Numeric {
                    message: format!("step function integral drifted by {drift:e} after {} caps", self.caps),
                    achieved: drift,
                });
            }
        }
        Ok(&self.g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapProcessState {
    pub eta: f64,
    pub k: u32,
}

impl CapProcessState {
    pub fn start() -> Self {
        CapProcessState { eta: 1.0, k: 0 }
    }
}

/// `η' = μ(C_e^η ∩ C_v^p)` with `<e, v> = u`.
pub fn cap_process_step(state: CapProcessState, u: f64, p: f64, geom: &CapGeometry) -> Result<CapProcessState> {
    cap_process_step_with(state, u, p, geom.altitude(p), geom)
}

fn cap_process_step_with(
    state: CapProcessState,
    u: f64,
    p: f64,
    hp: f64,
    geom: &CapGeometry,
) -> Result<CapProcessState> {
    let eta = state.eta;
    let next = if eta <= 0.0 {
        0.0
    } else {
        let tol = PROCESS_TOL * eta.min(p);
        geom.intersection_with_altitudes(eta, geom.altitude(eta), p, hp, u, tol)?
    };
    Ok(CapProcessState {
        eta: next.min(eta),
        k: state.k + 1,
    })
}

/// One simulated path `η_0 = 1, η_1 = p, ..., η_{k_stop}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapPath {
    pub n: u32,
    pub etas: Vec<f64>,
}

impl CapPath {
    /// `ln(η_k^{n-k})`, the per-path term of the clique bound at step `k`.
    pub fn log_bound_term(&self, k: usize) -> f64 {
        let eta = self.etas[k];
        let power = (self.n as usize).saturating_sub(k) as f64;
        if power == 0.0 {
            0.0
        } else {
            power * eta.ln()
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.etas.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn simulate_cap_process(params: &ModelParams, k_stop: u32, stream: RngStream) -> Result<CapPath> {
    let geom = CapGeometry::new(params.d)?;
    simulate_cap_process_with(&geom, params.n, params.p, k_stop, stream)
}

/// [`simulate_cap_process`] with a prebuilt geometry, for loops over paths.
pub fn simulate_cap_process_with(geom: &CapGeometry, n: u32, p: f64, k_stop: u32, stream: RngStream) -> Result<CapPath> {
    if k_stop > n {
        return Err(Error::param(format!("k_stop = {k_stop} exceeds n = {n}")));
    }
    let hp = geom.altitude(p);
    let mut rng = stream.rng();
    let mut state = CapProcessState::start();
    let mut etas = Vec::with_capacity(k_stop as usize + 1);
    etas.push(state.eta);
    for _ in 0..k_stop {
        let u = sample_first_coordinate(&geom.marginal, &mut rng);
        state = cap_process_step_with(state, u, p, hp, geom)?;
        etas.push(state.eta);
    }
    Ok(CapPath { n, etas })
}

/// `c δ exp(-(d/2)(1 + 3δ²) h(η)²)`.
pub fn fast_decay_gap(eta: f64, delta: f64, d: u32, c: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(Error::domain(format!("eta must lie in (0, 1/2], got {eta}")));
    }
    if !(delta > 0.0 && delta < c) {
        return Err(Error::domain(format!("delta must lie in (0, c = {c}), got {delta}")));
    }
    let h = SphereMarginal::new(d)?.tail_inverse(eta);
    Ok(c * delta * (-0.5 * d as f64 * (1.0 + 3.0 * delta * delta) * h * h).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgfPath {
    pub m0: u64,
    pub mn: u64,
    /// `m_0, ..., m_n` when requested.
    pub trace: Option<Vec<u64>>,
}

/// Draws `X_1..X_n` on the sphere, builds `g_0 = 0, g_k = (g_{k-1} + 1_{C_{X_k}})*`
/// for `k < n`, and returns `m_0 = |E(G)|` and `m_n = Σ_k g_{k-1}(X_k)`; the
/// optional trace evaluates every interpolating `m_k`.
pub fn simulate_mgf_process(params: &ModelParams, stream: RngStream, trace: bool) -> Result<MgfPath> {
    let (n, d, p) = (params.n as usize, params.d, params.p);
    if n == 0 {
        return Err(Error::param("need at least one vertex"));
    }
    if n == 1 {
        return Ok(MgfPath {
            m0: 0,
            mn: 0,
            trace: trace.then(|| vec![0, 0]),
        });
    }
    let threshold = Threshold::solve(p, d)?;
    let cloud = sample_points(params, Model::Sphere, stream);
    let t = threshold.t_sphere;
    let edge = |i: usize, j: usize| dot(cloud.row(i), cloud.row(j)) >= t;
    let mut builder = StepFunctionBuilder::new(d, p)?;
    let marginal = SphereMarginal::new(d)?;
    let tails: Vec<f64> = (0..n).map(|i| marginal.tail(cloud.row(i)[0].clamp(-1.0, 1.0))).collect();

    // gs[k] = g_k for k = 0..n-1.
    let mut gs = Vec::with_capacity(n);
    gs.push(builder.current().clone());
    for x in cloud.rows().take(n - 1) {
        gs.push(builder.add(x[0].clamp(-1.0, 1.0))?.clone());
    }
    let mn: u64 = (0..n).map(|k| gs[k].evaluate_tail(tails[k]) as u64).sum();
    let mut m0 = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            m0 += edge(i, j) as u64;
        }
    }
    let trace = if trace {
        // Edges among the last n - k vertices, for k = 0..n.
        let mut tail_edges = vec![0u64; n + 1];
        for k in (0..n).rev() {
            let fresh: u64 = (k + 1..n).map(|j| edge(k, j) as u64).sum();
            tail_edges[k] = tail_edges[k + 1] + fresh;
        }
        let mut out = Vec::with_capacity(n + 1);
        let mut head = 0u64;
        for k in 0..=n {
            if k > 0 {
                head += gs[k - 1].evaluate_tail(tails[k - 1]) as u64;
            }
            let middle: u64 = if k < n {
                (k..n).map(|i| gs[k].evaluate_tail(tails[i]) as u64).sum()
            } else {
                0
            };
            out.push(head + middle + tail_edges[k]);
        }
        Some(out)
    } else {
        None
    };
    Ok(MgfPath { m0, mn, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "t", rename_all = "snake_case")]
pub enum Region {
    FullSphere,
    /// `|x_1| <= t / d^{1/4}`.
    Strip(f64),
    /// `x_1 <= t / d^{1/4}`.
    ComplementCap(f64),
}

impl Region {
    /// The region as an interval of `Λ_d(x_1)` values.
    fn tail_interval(&self, marginal: &SphereMarginal) -> (f64, f64) {
        let scale = (marginal.dim() as f64).powf(0.25);
        match *self {
            Region::FullSphere => (0.0, 1.0),
            Region::Strip(t) => {
                let tau = (t / scale).min(1.0);
                (marginal.tail(tau), marginal.tail(-tau))
            }
            Region::ComplementCap(t) => (marginal.tail((t / scale).min(1.0)), 1.0),
        }
    }

    pub fn measure(&self, marginal: &SphereMarginal) -> f64 {
        let (lo, hi) = self.tail_interval(marginal);
        (hi - lo).max(0.0)
    }

    pub fn contains(&self, x1: f64, d: u32) -> bool {
        let tau = |t: f64| t / (d as f64).powf(0.25);
        match *self {
            Region::FullSphere => true,
            Region::Strip(t) => x1.abs() <= tau(t),
            Region::ComplementCap(t) => x1 <= tau(t),
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            Region::Strip(t) | Region::ComplementCap(t) if !(t >= 0.0) => {
                Err(Error::domain(format!("region parameter must be nonnegative, got {t}")))
            }
            _ => Ok(()),
        }
    }
}

/// `ln Ψ(g, V, λ) = ln Σ_j e^{λ j} μ({g = j} ∩ V)`.
pub fn ln_psi_mgf(g: &SymmetricStepFunction, region: Region, lambda: f64, marginal: &SphereMarginal) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    region.check()?;
    let (lo, hi) = region.tail_interval(marginal);
    // {g = j} is the Λ-slab (a_{j+1}, a_j] with a_0 = 1, a_{K+1} = 0.
    let k = g.levels.len();
    let mut terms = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let top = if j == 0 { 1.0 } else { g.levels[j - 1] };
        let bottom = if j == k { 0.0 } else { g.levels[j] };
        let overlap = top.min(hi) - bottom.max(lo);
        if overlap > 0.0 {
            terms.push(lambda * j as f64 + overlap.ln());
        }
    }
    Ok(log_sum_exp(&terms))
}

pub fn psi_mgf(g: &SymmetricStepFunction, region: Region, lambda: f64, marginal: &SphereMarginal) -> Result<f64> {
    Ok(ln_psi_mgf(g, region, lambda, marginal)?.exp())
}

/// `1 - q + q e^λ + 2 exp(-a²√d/2 + o1 + λ)`; `o1` is the unnamed O(1)
/// constant, zero by default.
pub fn proportion_step_bound(q: f64, lambda: f64, a: f64, d: u32, o1: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("q must lie in (0, 1), got {q}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::domain(format!("lambda must be nonnegative, got {lambda}")));
    }
    let sd = (d as f64).sqrt();
    Ok(1.0 - q + q * lambda.exp() + 2.0 * (-a * a * sd / 2.0 + o1 + lambda).exp())
}

pub fn write_eta_paths<W: Write>(paths: &[CapPath], mut w: W) -> Result<()> {
    writeln!(w, "path_id,k,eta")?;
    for (id, path) in paths.iter().enumerate() {
        for (k, eta) in path.etas.iter().enumerate() {
            writeln!(w, "{id},{k},{eta:e}")?;
        }
    }
    Ok(())
}

pub fn write_mgf_traces<W: Write>(paths: &[MgfPath], mut w: W) -> Result<()> {
    writeln!(w, "path_id,k,m_k")?;
    for (id, path) in paths.iter().enumerate() {
        match &path.trace {
            Some(trace) => {
                for (k, m) in trace.iter().enumerate() {
                    writeln!(w, "{id},{k},{m}")?;
                }
            }
            None => {
                writeln!(w, "{id},0,{}", path.m0)?;
            }
        }
    }
    Ok(())
}
