//! Point clouds, graphs and the geodesic contraction map.
//!
//! Sphere points are row-normalized Gaussian rows, so one Gaussian draw
//! produces both models at once.

use rand::Rng;
use rand::distr::Open01;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{Model, ModelParams, Threshold};
use crate::rng::RngStream;
use crate::specfun::{gauss_tail_inverse_ln, ln_gauss_tail, SphereMarginal};

/// `n` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub model: Model,
    pub n: usize,
    pub d: usize,
    pub points: Vec<f64>,
    pub seed: u64,
}

impl PointCloud {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.d)
    }
}

/// Upper-triangle adjacency, one flag per unordered pair `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Adjacency {
            n,
            bits: vec![false; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn full(n: usize) -> Self {
        Adjacency {
            n,
            bits: vec![true; n * n.saturating_sub(1) / 2],
        }
    }

    pub fn from_upper(n: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::param(format!("{} pair flags do not fit n = {n}", bits.len())));
        }
        Ok(Adjacency { n, bits })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symmetric view; the diagonal is always empty.
    pub fn get(&self, i: usize, j: usize) -> bool {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.bits[pair_index(self.n, i, j)],
            std::cmp::Ordering::Greater => self.bits[pair_index(self.n, j, i)],
            std::cmp::Ordering::Equal => false,
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        assert!(i != j, "the diagonal of an adjacency matrix is empty");
        self.bits[pair_index(self.n, i, j)] = value;
    }

    /// Flags for pairs in the order (0,1), (0,2), ..., (n-2,n-1).
    pub fn upper(&self) -> &[bool] {
        &self.bits
    }

    pub fn edge_count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn symmetric_difference(&self, other: &Adjacency) -> u64 {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count() as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub cloud: PointCloud,
    pub threshold: Threshold,
    pub adjacency: Adjacency,
}

impl GraphSample {
    pub fn model(&self) -> Model {
        self.cloud.model
    }

    pub fn n(&self) -> usize {
        self.cloud.n
    }

    pub fn d(&self) -> usize {
        self.cloud.d
    }

    pub fn edge_count(&self) -> u64 {
        edge_count(self)
    }

    pub fn is_clique(&self) -> bool {
        is_clique(self)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    // Four independent accumulators; the summation order is fixed, so results
    // are reproducible bit for bit.
    let mut acc = [0.0_f64; 4];
    let (xc, xr) = x.split_at(x.len() - x.len() % 4);
    let (yc, yr) = y.split_at(xc.len());
    for (a, b) in xc.chunks_exact(4).zip(yc.chunks_exact(4)) {
        acc[0] += a[0] * b[0];
        acc[1] += a[1] * b[1];
        acc[2] += a[2] * b[2];
        acc[3] += a[3] * b[3];
    }
    let tail: f64 = xr.iter().zip(yr).map(|(a, b)| a * b).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Overwrites `out` (`n * d` values) with one draw of the model's points.
pub fn fill_points<R: Rng + ?Sized>(rng: &mut R, model: Model, d: usize, out: &mut [f64]) {
    fill_gaussian(rng, out);
    if model == Model::Sphere {
        for row in out.chunks_exact_mut(d) {
            let r = norm(row);
            row.iter_mut().for_each(|v| *v /= r);
        }
    }
}

fn normalize_rows(points: &mut [f64], d: usize) -> Vec<f64> {
    points
        .chunks_exact_mut(d)
        .map(|row| {
            let r = norm(row);
            row.iter_mut().for_each(|v| *v /= r);
            r
        })
        .collect()
}

/// Standard normal entries for the Gaussian model; normalized Gaussian rows
/// for the sphere model.
pub fn sample_points(params: &ModelParams, model: Model, stream: RngStream) -> PointCloud {
    let (n, d) = (params.n as usize, params.d as usize);
    let mut points = vec![0.0; n * d];
    fill_points(&mut stream.rng(), model, d, &mut points);
    PointCloud {
        model,
        n,
        d,
        points,
        seed: stream.master_seed,
    }
}

/// Adjacency `[<x_i, x_j> >= t]` with `t` taken from `threshold` per model.
pub fn build_graph(cloud: PointCloud, threshold: Threshold) -> Result<GraphSample> {
    if threshold.d as usize != cloud.d {
        return Err(Error::param(format!(
            "threshold solved for d = {} but points have d = {}",
            threshold.d, cloud.d
        )));
    }
    if cloud.points.len() != cloud.n * cloud.d {
        return Err(Error::param(format!(
            "{} coordinates do not form a {} x {} matrix",
            cloud.points.len(),
            cloud.n,
            cloud.d
        )));
    }
    let t = threshold.for_model(cloud.model);
    let n = cloud.n;
    let mut bits = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        let xi = cloud.row(i);
        for j in i + 1..n {
            bits.push(dot(xi, cloud.row(j)) >= t);
        }
    }
    Ok(GraphSample {
        adjacency: Adjacency { n, bits },
        cloud,
        threshold,
    })
}

pub fn edge_count(g: &GraphSample) -> u64 {
    g.adjacency.edge_count()
}

pub fn is_clique(g: &GraphSample) -> bool {
    let n = g.n() as u64;
    edge_count(g) == n * (n - 1) / 2
}

/// Both models built from one Gaussian matrix.
#[derive(Debug, Clone)]
pub struct CoupledPair {
    pub gauss: GraphSample,
    pub sphere: GraphSample,
    /// Euclidean norms of the Gaussian rows.
    pub row_norms: Vec<f64>,
}

impl CoupledPair {
    /// Number of pairs on which the two graphs disagree.
    pub fn disagreements(&self) -> u64 {
        self.gauss.adjacency.symmetric_difference(&self.sphere.adjacency)
    }

    /// `(min, max)` of `|Z_i| / sqrt(d)`.
    pub fn norm_ratio_range(&self) -> (f64, f64) {
        let sd = (self.gauss.d() as f64).sqrt();
        self.row_norms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r / sd), hi.max(r / sd)))
    }
}

pub fn coupled_pair(params: &ModelParams, threshold: Threshold, stream: RngStream) -> Result<CoupledPair> {
    let gauss_cloud = sample_points(params, Model::Gauss, stream);
    let mut sphere_cloud = gauss_cloud.clone();
    sphere_cloud.model = Model::Sphere;
    let row_norms = normalize_rows(&mut sphere_cloud.points, sphere_cloud.d);
    let gauss = build_graph(gauss_cloud, threshold)?;
    let mut sphere = build_graph(sphere_cloud, threshold)?;
    if threshold.t_sphere == 0.0 && threshold.s_gauss == 0.0 {
        // At p = 1/2 both cutoffs are zero and only signs matter; reuse the
        // Gaussian signs so rounding in the normalization cannot flip one.
        sphere.adjacency = gauss.adjacency.clone();
    }
    Ok(CoupledPair { gauss, sphere, row_norms })
}

/// Point `z` on the geodesic from `x` through `y` with
/// `<x, z> = Λ_d^{-1}(p Λ_d(<x, y>))`. Maps the uniform law onto the cap
/// `C_x^p`, scaled by `p`.
pub fn contraction_map(x: &[f64], y: &[f64], p: f64, marginal: &SphereMarginal) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.len() != marginal.dim() as usize {
        return Err(Error::param("contraction map needs two unit vectors in the marginal's dimension"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("contraction factor must lie in (0, 1], got {p}")));
    }
    let u = dot(x, y).clamp(-1.0, 1.0);
    if u <= -1.0 + 1e-12 {
        return Err(Error::domain("contraction map is undefined at the antipode"));
    }
    if p == 1.0 {
        return Ok(y.to_vec());
    }
    let target = marginal.tail_inverse_ln(p.ln() + marginal.ln_tail(u));
    // Unit tangent direction from x towards y.
    let mut w: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - u * a).collect();
    let wn = norm(&w);
    if wn == 0.0 || target >= 1.0 {
        return Ok(x.to_vec());
    }
    w.iter_mut().for_each(|v| *v /= wn);
    let s = ((1.0 - target) * (1.0 + target)).max(0.0).sqrt();
    Ok(x.iter().zip(&w).map(|(a, b)| target * a + s * b).collect())
}

/// A uniform draw from the open interval `(0, 1)`.
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// First coordinate of a uniform point on `S^{d-1}`, by inversion.
pub fn sample_first_coordinate<R: Rng + ?Sized>(marginal: &SphereMarginal, rng: &mut R) -> f64 {
    marginal.tail_inverse(open_uniform(rng))
}

/// First coordinate conditioned on `x_1 >= c`, by inversion of the tail.
pub fn sample_first_coordinate_conditioned<R: Rng + ?Sized>(
    marginal: &SphereMarginal,
    c: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(c < 1.0) {
        return Err(Error::domain(format!("cannot condition on x_1 >= {c}")));
    }
    if c <= -1.0 {
        return Ok(sample_first_coordinate(marginal, rng));
    }
    let ln_mass = marginal.ln_tail(c);
    let x = marginal.tail_inverse_ln(open_uniform(rng).ln() + ln_mass);
    Ok(x.max(c))
}

/// Standard normal conditioned on `Z >= c`.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(c: f64, rng: &mut R) -> Result<f64> {
    if c.is_nan() || c == f64::INFINITY {
        return Err(Error::domain(format!("cannot condition a normal on Z >= {c}")));
    }
    let ln_p = open_uniform(rng).ln() + ln_gauss_tail(c);
    Ok(gauss_tail_inverse_ln(ln_p)?.max(c))
}

/// Stream-level convenience for the first-coordinate samplers.
pub fn first_coordinates(d: u32, count: usize, stream: RngStream) -> Result<Vec<f64>> {
    let marginal = SphereMarginal::new(d)?;
    let mut rng = stream.rng();
    Ok((0..count).map(|_| sample_first_coordinate(&marginal, &mut rng)).collect())
}

/// Summary used by logs and the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub model: Model,
    pub n: usize,
    pub d: usize,
    pub edges: u64,
    pub clique: bool,
}

impl From<&GraphSample> for GraphSummary {
    fn from(g: &GraphSample) -> Self {
        GraphSummary {
            model: g.model(),
            n: g.n(),
            d: g.d(),
            edges: g.edge_count(),
            clique: g.is_clique(),
        }
    }
}
