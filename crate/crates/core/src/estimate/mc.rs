//! Monte Carlo estimators: naive hit counting, first-coordinate biasing and
//! exponential tilting of the first coordinate.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{map_shards, run_sharded, LogEstimate, McOptions, Method};
use crate::error::{Error, Result};
use crate::params::{Event, Model, ModelParams, Threshold};
use crate::sampler::{dot, fill_gaussian, fill_points, open_uniform, sample_truncated_gaussian};
use crate::specfun::quad::{integrate_with_breaks, QuadOptions};
use crate::specfun::{gauss_inner_threshold, ln_gauss_tail, SphereMarginal};

/// Default grid for the constant `C` of the first-coordinate bias level.
pub const DEFAULT_BIAS_GRID: [f64; 8] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// Smallest edge count that realizes the edge-deviation event.
pub(crate) fn edge_target(p: f64, eps: f64, pairs: u64) -> u64 {
    let x = (1.0 + eps) * p * pairs as f64;
    // Guard against products such as 1.5 * 0.4 * 10 landing just above an integer.
    (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as u64
}

/// Tests the event on one `n x d` point matrix.
pub(crate) struct EventTest {
    n: usize,
    d: usize,
    cutoff: f64,
    /// `None` for the clique event.
    edge_target: Option<u64>,
}

impl EventTest {
    pub(crate) fn new(params: &ModelParams, model: Model, event: Event, threshold: &Threshold) -> Result<Self> {
        let edge_target = match event {
            Event::Clique => None,
            Event::EdgeDev(eps) => {
                if !(eps > 0.0) {
                    return Err(Error::param(format!("deviation rate must be positive, got {eps}")));
                }
                Some(edge_target(params.p, eps, params.pairs()))
            }
        };
        Ok(EventTest {
            n: params.n as usize,
            d: params.d as usize,
            cutoff: threshold.for_model(model),
            edge_target,
        })
    }

    pub(crate) fn edges(&self, pts: &[f64]) -> u64 {
        let mut count = 0;
        for i in 0..self.n {
            let xi = &pts[i * self.d..(i + 1) * self.d];
            for j in i + 1..self.n {
                count += u64::from(dot(xi, &pts[j * self.d..(j + 1) * self.d]) >= self.cutoff);
            }
        }
        count
    }

    pub(crate) fn hit(&self, pts: &[f64]) -> bool {
        match self.edge_target {
            Some(target) => self.edges(pts) >= target,
            None => {
                for i in 0..self.n {
                    let xi = &pts[i * self.d..(i + 1) * self.d];
                    for j in i + 1..self.n {
                        if dot(xi, &pts[j * self.d..(j + 1) * self.d]) < self.cutoff {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }
}

/// Naive hit frequency of the event.
pub fn mc_event_probability(params: &ModelParams, model: Model, event: Event, opts: &McOptions) -> Result<LogEstimate> {
    if opts.samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    let threshold = Threshold::solve(params.p, params.d)?;
    let test = EventTest::new(params, model, event, &threshold)?;
    let size = params.n as usize * params.d as usize;
    let d = params.d as usize;
    let (acc, timed_out) = run_sharded(opts, |rng, acc| {
        let mut pts = vec![0.0; size];
        fill_points(rng, model, d, &mut pts);
        if test.hit(&pts) {
            acc.hit(0.0)
        } else {
            acc.miss()
        }
    });
    let mut est = acc.to_estimate(Method::Naive, opts.seed);
    if timed_out {
        est.flags.push("budget_exhausted".into());
    }
    Ok(est)
}

/// Histogram of the edge count over `opts.samples` graphs; entry `k` counts
/// graphs with exactly `k` edges.
pub fn edge_count_histogram(params: &ModelParams, model: Model, opts: &McOptions) -> Result<Vec<u64>> {
    let threshold = Threshold::solve(params.p, params.d)?;
    let test = EventTest::new(params, model, Event::Clique, &threshold)?;
    let pairs = params.pairs() as usize;
    let size = params.n as usize * params.d as usize;
    let d = params.d as usize;
    let parts = map_shards(opts.shards.max(1), |shard| {
        let mut rng = opts.stream(shard).rng();
        let mut hist = vec![0u64; pairs + 1];
        let mut pts = vec![0.0; size];
        for _ in 0..opts.shard_samples(shard) {
            fill_points(&mut rng, model, d, &mut pts);
            hist[test.edges(&pts) as usize] += 1;
        }
        hist
    });
    let mut total = vec![0u64; pairs + 1];
    for part in parts {
        total.iter_mut().zip(part).for_each(|(t, h)| *t += h);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    FirstCoord,
    AllCoord,
    EdgeDev,
}

/// A biasing event `{first coordinates >= level}` (all coordinates for
/// [`BiasKind::AllCoord`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSchedule {
    pub kind: BiasKind,
    pub level: f64,
    pub model: Model,
}

impl BiasSchedule {
    /// `level = (s_p + C sqrt(d ln n))^{1/2}`.
    pub fn first_coord(params: &ModelParams, c: f64) -> Result<Self> {
        let s = Threshold::solve(params.p, params.d)?.s_gauss;
        let (d, n) = (params.d as f64, params.n as f64);
        let sq = s + c * (d * n.ln()).sqrt();
        if !(sq >= 0.0) {
            return Err(Error::param(format!("bias level squared is negative ({sq})")));
        }
        Ok(BiasSchedule {
            kind: BiasKind::FirstCoord,
            level: sq.sqrt(),
            model: Model::Gauss,
        })
    }

    /// No conditioning at all.
    pub fn unconditioned() -> Self {
        BiasSchedule {
            kind: BiasKind::FirstCoord,
            level: f64::NEG_INFINITY,
            model: Model::Gauss,
        }
    }

    /// `level = (s_p / d)^{1/2}`.
    pub fn all_coord(params: &ModelParams) -> Result<Self> {
        let s = Threshold::solve(params.p, params.d)?.s_gauss;
        if s < 0.0 {
            return Err(Error::param("the all-coordinate bias needs s_p >= 0"));
        }
        Ok(BiasSchedule {
            kind: BiasKind::AllCoord,
            level: (s / params.d as f64).sqrt(),
            model: Model::Gauss,
        })
    }

    /// `level² = s_{p,d} - s_{p(1+ε)+1/n, d-1}`; `None` when the shifted
    /// probability reaches 1.
    pub fn edge_dev(params: &ModelParams, eps: f64) -> Result<Option<Self>> {
        let q = params.p * (1.0 + eps) + 1.0 / params.n as f64;
        if q >= 1.0 {
            return Ok(None);
        }
        if params.d < 3 {
            return Err(Error::param("the edge-deviation bias needs d >= 3"));
        }
        let sq = gauss_inner_threshold(params.p, params.d)? - gauss_inner_threshold(q, params.d - 1)?;
        Ok(Some(BiasSchedule {
            kind: BiasKind::EdgeDev,
            level: sq.max(0.0).sqrt(),
            model: Model::Gauss,
        }))
    }
}

/// `ln P(B) + ln P̂(clique | B)` with first coordinates conditioned on
/// `>= level`: an estimate of `P(clique ∩ B) <= P(clique)`.
pub fn clique_bias_estimator(params: &ModelParams, schedule: &BiasSchedule, opts: &McOptions) -> Result<LogEstimate> {
    if schedule.kind != BiasKind::FirstCoord || schedule.model != Model::Gauss {
        return Err(Error::param("the conditioned estimator takes a first-coordinate schedule on the Gaussian model"));
    }
    if schedule.level == f64::NEG_INFINITY {
        let mut est = mc_event_probability(params, Model::Gauss, Event::Clique, opts)?;
        est.method = Method::CondBias;
        return Ok(est);
    }
    let level = schedule.level;
    let ln_tail = ln_gauss_tail(level);
    if !ln_tail.is_finite() {
        return Err(Error::Numeric {
            message: format!("bias level {level} leaves no probability mass"),
            achieved: ln_tail,
        });
    }
    let threshold = Threshold::solve(params.p, params.d)?;
    let test = EventTest::new(params, Model::Gauss, Event::Clique, &threshold)?;
    let (n, d) = (params.n as usize, params.d as usize);
    let (acc, timed_out) = run_sharded(opts, |rng, acc| {
        let mut pts = vec![0.0; n * d];
        for row in pts.chunks_exact_mut(d) {
            // The level is finite, so the sampler cannot fail here.
            row[0] = sample_truncated_gaussian(level, rng).unwrap_or(level);
            fill_gaussian(rng, &mut row[1..]);
        }
        if test.hit(&pts) {
            acc.hit(0.0)
        } else {
            acc.miss()
        }
    });
    let mut est = acc.to_estimate(Method::CondBias, opts.seed).shifted(n as f64 * ln_tail);
    est.flags.push(format!("level={level}"));
    if timed_out {
        est.flags.push("budget_exhausted".into());
    }
    Ok(est)
}

/// Runs [`clique_bias_estimator`] for each `C` in `grid` (each on its own
/// lane) and returns the largest certified estimate.
pub fn clique_bias_scan(params: &ModelParams, grid: &[f64], opts: &McOptions) -> Result<LogEstimate> {
    if grid.is_empty() {
        return Err(Error::param("empty bias grid"));
    }
    let mut best: Option<(f64, LogEstimate)> = None;
    for (i, &c) in grid.iter().enumerate() {
        let schedule = BiasSchedule::first_coord(params, c)?;
        let lane_opts = opts.lane(opts.lane.wrapping_add(1 + i as u32));
        let est = clique_bias_estimator(params, &schedule, &lane_opts)?;
        let key = if est.log_value.is_finite() {
            est.log_value
        } else {
            f64::NEG_INFINITY
        };
        let better = match &best {
            None => true,
            Some((k, b)) => {
                key > *k || (key == f64::NEG_INFINITY && *k == f64::NEG_INFINITY && est.log_upper > b.log_upper)
            }
        };
        if better {
            best = Some((key, est.with_flag(format!("C={c}"))));
        }
    }
    let (_, est) = best.expect("grid is nonempty");
    Ok(est.with_flag("grid_max"))
}

/// Normalizer and sampler of the tilted first-coordinate law
/// `e^{θx} f(x) / M(θ)`, with `f` the model's first-coordinate density.
#[derive(Debug, Clone, Copy)]
pub struct TiltNormalizer {
    pub model: Model,
    pub theta: f64,
    pub ln_m: f64,
    marginal: Option<SphereMarginal>,
    mode: f64,
    ln_f_mode: f64,
}

impl TiltNormalizer {
    pub fn new(model: Model, d: u32, theta: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::domain(format!("tilt must be finite and nonnegative, got {theta}")));
        }
        match model {
            Model::Gauss => Ok(TiltNormalizer {
                model,
                theta,
                ln_m: 0.5 * theta * theta,
                marginal: None,
                mode: theta,
                ln_f_mode: 0.0,
            }),
            Model::Sphere => {
                if d < 3 && theta > 0.0 {
                    return Err(Error::param("sphere tilting needs d >= 3"));
                }
                let m = SphereMarginal::new(d)?;
                let df = d as f64;
                let mode = if theta == 0.0 {
                    0.0
                } else {
                    let b = df - 3.0;
                    // Root of θ x² + (d-3) x - θ = 0 in [0, 1], written without cancellation.
                    2.0 * theta / (b + (b * b + 4.0 * theta * theta).sqrt())
                };
                let ln_m = if theta == 0.0 {
                    0.0
                } else if d == 3 {
                    // M(θ) = sinh(θ)/θ
                    theta + (-(-2.0 * theta).exp_m1()).ln() - (2.0 * theta).ln()
                } else {
                    let shift = theta * mode + m.ln_density(mode);
                    let w = 1.0 / df.sqrt();
                    let mut breaks = vec![-1.0, 1.0, mode];
                    for k in [-8.0, -4.0, -2.0, -1.0, 1.0, 2.0, 4.0, 8.0] {
                        let x = mode + k * w;
                        if x > -1.0 && x < 1.0 {
                            breaks.push(x);
                        }
                    }
                    breaks.sort_by(f64::total_cmp);
                    breaks.dedup();
                    let opts = QuadOptions {
                        abs_tol: 0.0,
                        rel_tol: 1e-12,
                        max_intervals: 2000,
                    };
                    let r = integrate_with_breaks(
                        |x| {
                            if x.abs() >= 1.0 {
                                0.0
                            } else {
                                (theta * x + m.ln_density(x) - shift).exp()
                            }
                        },
                        &breaks,
                        &opts,
                    )?;
                    shift + r.value.ln()
                };
                let ln_f_mode = theta * mode + m.ln_density(mode) - ln_m;
                Ok(TiltNormalizer {
                    model,
                    theta,
                    ln_m,
                    marginal: Some(m),
                    mode,
                    ln_f_mode,
                })
            }
        }
    }

    /// Log density of the tilted law.
    pub fn ln_density(&self, x: f64) -> f64 {
        match self.marginal {
            None => self.theta * x - 0.5 * x * x - 0.918_938_533_204_672_7 - self.ln_m,
            Some(m) => {
                if x.abs() >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    self.theta * x + m.ln_density(x) - self.ln_m
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.marginal {
            None => rng.sample::<f64, _>(StandardNormal) + self.theta,
            Some(m) if self.theta == 0.0 => m.tail_inverse(open_uniform(rng)),
            Some(m) if m.dim() == 3 => {
                let u = open_uniform(rng);
                (1.0 + (u + (1.0 - u) * (-2.0 * self.theta).exp()).ln() / self.theta).clamp(-1.0, 1.0)
            }
            Some(_) => self.sample_log_concave(rng),
        }
    }

    /// Rejection from the hat `min(1, e^{1-|y|})` for the rescaled variable
    /// `y = (x - mode) f(mode)`, valid for any log-concave density.
    fn sample_log_concave<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let scale = self.ln_f_mode.exp();
        loop {
            let (y, ln_hat) = if rng.random::<bool>() {
                (2.0 * rng.random::<f64>() - 1.0, 0.0)
            } else {
                let e: f64 = rng.sample(Exp1);
                let y = if rng.random::<bool>() { 1.0 + e } else { -1.0 - e };
                (y, -e)
            };
            let x = self.mode + y / scale;
            let ln_g = self.ln_density(x) - self.ln_f_mode;
            if open_uniform(rng).ln() + ln_hat <= ln_g {
                return x;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltedEstimate {
    pub estimate: LogEstimate,
    /// Per-sample variance of the weighted estimator over `P̂(1 - P̂)`.
    pub variance_ratio: f64,
    /// Kish effective number of weighted hits.
    pub ess: f64,
}

/// Unbiased importance-sampling estimate with each point's first coordinate
/// drawn from the tilted law; a sample carries weight
/// `exp(-θ Σ_i x_i^{(1)} + n ln M(θ))`.
pub fn tilted_estimator(
    params: &ModelParams,
    model: Model,
    event: Event,
    theta: f64,
    opts: &McOptions,
    ess_floor: f64,
) -> Result<TiltedEstimate> {
    if opts.samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    let tilt = TiltNormalizer::new(model, params.d, theta)?;
    let threshold = Threshold::solve(params.p, params.d)?;
    let test = EventTest::new(params, model, event, &threshold)?;
    let (n, d) = (params.n as usize, params.d as usize);
    let n_ln_m = n as f64 * tilt.ln_m;
    let (acc, timed_out) = run_sharded(opts, |rng, acc| {
        let mut pts = vec![0.0; n * d];
        if theta == 0.0 {
            fill_points(rng, model, d, &mut pts);
            if test.hit(&pts) {
                acc.hit(0.0)
            } else {
                acc.miss()
            }
            return;
        }
        match model {
            Model::Gauss => {
                fill_gaussian(rng, &mut pts);
                for row in pts.chunks_exact_mut(d) {
                    row[0] += theta;
                }
            }
            Model::Sphere => {
                for row in pts.chunks_exact_mut(d) {
                    let x1 = tilt.sample(rng);
                    fill_gaussian(rng, &mut row[1..]);
                    let r = dot(&row[1..], &row[1..]).sqrt();
                    let s = ((1.0 - x1) * (1.0 + x1)).max(0.0).sqrt() / r;
                    row[1..].iter_mut().for_each(|v| *v *= s);
                    row[0] = x1;
                }
            }
        }
        if test.hit(&pts) {
            let sum_first: f64 = pts.chunks_exact(d).map(|row| row[0]).sum();
            acc.hit(-theta * sum_first + n_ln_m);
        } else {
            acc.miss();
        }
    });
    let mut estimate = acc.to_estimate(Method::Tilted, opts.seed);
    if timed_out {
        estimate.flags.push("budget_exhausted".into());
    }
    let ess = acc.effective_hits();
    if ess < ess_floor {
        estimate.flags.push("low_ess".into());
    }
    let variance_ratio = if acc.hits > 0 {
        let p = estimate.value();
        let per_sample_var = (estimate.log_stderr * p).powi(2) * acc.count as f64;
        per_sample_var / (p * (1.0 - p))
    } else {
        f64::NAN
    };
    Ok(TiltedEstimate {
        estimate,
        variance_ratio,
        ess,
    })
}

/// Lower bound on the true variance ratio of [`tilted_estimator`] for an
/// event invariant under `x -> -x` applied to all points (both events are).
///
/// The tilted second moment is `E[w 1_E] = M(θ)^n P E[e^{-θ Σ x_i^{(1)}} | E]`,
/// and the conditional mean of `Σ x_i^{(1)}` vanishes by symmetry, so Jensen
/// gives `E[w 1_E] >= M(θ)^n P` with `M(θ) >= 1`. The ratio therefore exceeds
/// 1 for every `θ > 0`; sample ratios below 1 come from unseen heavy-weight hits.
pub fn tilted_variance_ratio_floor(n: u32, ln_m: f64, prob: f64) -> f64 {
    let second = (n as f64 * ln_m).exp() * prob;
    (second - prob * prob) / (prob * (1.0 - prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn edge_targets() {
        assert_eq!(edge_target(0.4, 0.5, 10), 6);
        assert_eq!(edge_target(0.3, 0.5, 190), 86);
        assert_eq!(edge_target(0.5, 0.5, 3), 3);
    }

    #[test]
    fn single_edge_probability() {
        let params = ModelParams::new(2, 7, 0.3).unwrap();
        for model in [Model::Sphere, Model::Gauss] {
            let opts = McOptions::new(200_000, 11).shards(3);
            let est = mc_event_probability(&params, model, Event::Clique, &opts).unwrap();
            assert_eq!(est.n_samples, 200_000);
            assert!((est.log_value - 0.3f64.ln()).abs() < 3.5 * est.log_stderr, "{model}: {est:?}");
        }
    }

    #[test]
    fn sharding_is_deterministic() {
        let params = ModelParams::new(4, 5, 0.4).unwrap();
        let opts = McOptions::new(20_000, 3).shards(4);
        let a = mc_event_probability(&params, Model::Sphere, Event::Clique, &opts).unwrap();
        let b = mc_event_probability(&params, Model::Sphere, Event::Clique, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unconditioned_bias_is_naive() {
        let params = ModelParams::new(4, 6, 0.5).unwrap();
        let opts = McOptions::new(30_000, 5).shards(2);
        let naive = mc_event_probability(&params, Model::Gauss, Event::Clique, &opts).unwrap();
        let bias = clique_bias_estimator(&params, &BiasSchedule::unconditioned(), &opts).unwrap();
        assert_eq!(naive.log_value.to_bits(), bias.log_value.to_bits());
        assert_eq!(naive.log_stderr.to_bits(), bias.log_stderr.to_bits());
    }

    #[test]
    fn bias_is_a_lower_bound() {
        let params = ModelParams::new(4, 20, 0.3).unwrap();
        let opts = McOptions::new(100_000, 8);
        let naive = mc_event_probability(&params, Model::Gauss, Event::Clique, &opts).unwrap();
        let bias = clique_bias_scan(&params, &DEFAULT_BIAS_GRID, &opts).unwrap();
        let sigma = (naive.stderr().powi(2) + bias.stderr().powi(2)).sqrt();
        assert!(bias.value() <= naive.value() + 3.0 * sigma, "{bias:?} vs {naive:?}");
        assert!(bias.has_flag("grid_max"));
    }

    #[test]
    fn tilt_at_zero_is_naive_bit_for_bit() {
        for model in [Model::Gauss, Model::Sphere] {
            let params = ModelParams::new(4, 6, 0.4).unwrap();
            let opts = McOptions::new(20_000, 9).shards(3);
            let naive = mc_event_probability(&params, model, Event::Clique, &opts).unwrap();
            let tilted = tilted_estimator(&params, model, Event::Clique, 0.0, &opts, 0.0).unwrap();
            assert_eq!(naive.log_value.to_bits(), tilted.estimate.log_value.to_bits());
            assert_eq!(naive.log_stderr.to_bits(), tilted.estimate.log_stderr.to_bits());
        }
    }

    #[test]
    fn sphere_tilt_normalizer_and_sampler() {
        for d in [3u32, 5, 40] {
            for theta in [0.5, 3.0] {
                let t = TiltNormalizer::new(Model::Sphere, d, theta).unwrap();
                // Mean of the tilted law is (ln M)'(θ); compare with a finite difference.
                let h = 1e-4;
                let up = TiltNormalizer::new(Model::Sphere, d, theta + h).unwrap().ln_m;
                let dn = TiltNormalizer::new(Model::Sphere, d, theta - h).unwrap().ln_m;
                let mean = (up - dn) / (2.0 * h);
                let mut rng = RngStream::new(21, d as u64).rng();
                let n = 100_000;
                let xs: Vec<f64> = (0..n).map(|_| t.sample(&mut rng)).collect();
                let m1 = xs.iter().sum::<f64>() / n as f64;
                let var = xs.iter().map(|x| (x - m1).powi(2)).sum::<f64>() / n as f64;
                assert!((m1 - mean).abs() < 4.0 * (var / n as f64).sqrt(), "d={d} θ={theta}: {m1} vs {mean}");
            }
        }
    }

    #[test]
    fn tilted_agrees_with_naive() {
        let params = ModelParams::new(4, 20, 0.3).unwrap();
        let opts = McOptions::new(100_000, 4);
        for model in [Model::Gauss, Model::Sphere] {
            let naive = mc_event_probability(&params, model, Event::Clique, &opts).unwrap();
            let theta = if model == Model::Gauss { 0.8 } else { 3.0 };
            let tilted = tilted_estimator(&params, model, Event::Clique, theta, &opts.lane(7), 10.0).unwrap();
            let t = &tilted.estimate;
            let sigma = (naive.stderr().powi(2) + t.stderr().powi(2)).sqrt();
            assert!((naive.value() - t.value()).abs() < 3.0 * sigma, "{model}: {naive:?} {t:?}");
        }
    }

    #[test]
    fn tilted_second_moment_respects_symmetry_floor() {
        // E_q[w² 1_E] = E_p[w 1_E], estimated from untilted draws.
        let params = ModelParams::new(6, 3, 0.3).unwrap();
        let t = Threshold::solve(0.3, 3).unwrap();
        let test = EventTest::new(&params, Model::Gauss, Event::Clique, &t).unwrap();
        let theta = 1.0;
        let ln_m = TiltNormalizer::new(Model::Gauss, 3, theta).unwrap().ln_m;
        let mut rng = RngStream::new(30, 0).rng();
        let mut pts = vec![0.0; 18];
        let (mut hits, mut sum_w, mut sum_w2) = (0u64, 0.0, 0.0);
        let draws = 2_000_000u64;
        for _ in 0..draws {
            fill_gaussian(&mut rng, &mut pts);
            if test.hit(&pts) {
                let s1: f64 = pts.chunks_exact(3).map(|r| r[0]).sum();
                let w = (-theta * s1 + 6.0 * ln_m).exp();
                hits += 1;
                sum_w += w;
                sum_w2 += w * w;
            }
        }
        assert!(hits > 200, "{hits}");
        let m = draws as f64;
        let prob = hits as f64 / m;
        let second = sum_w / m;
        let se = ((sum_w2 / m - second * second) / m).sqrt();
        let floor = (6.0 * ln_m).exp() * prob;
        assert!(second + 3.0 * se > floor, "{second} ± {se} vs {floor}");
        assert!(tilted_variance_ratio_floor(6, ln_m, prob) > 1.0);
        assert_eq!(tilted_variance_ratio_floor(6, 0.0, prob), 1.0);
    }
}
