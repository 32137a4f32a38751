//! The statistic `S = Σ_{i≠j} <Z_i, Z_j>` and its mean on the clique event.

use serde::Serialize;

use super::mc::EventTest;
use crate::error::{Error, Result};
use crate::params::{Event, Model, ModelParams, Threshold};
use crate::rng::RngStream;
use crate::sampler::{dot, fill_gaussian, PointCloud};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeStatistics {
    pub s: f64,
    pub edge_count: u64,
    /// Per-coordinate terms `W_k = (Σ_i Z_ik)² - Σ_i Z_ik²`, summing to `s`.
    pub w: Vec<f64>,
}

fn s_and_w(n: usize, d: usize, pts: &[f64], w: &mut [f64]) -> f64 {
    for (k, wk) in w.iter_mut().enumerate() {
        let (mut sum, mut sq) = (0.0, 0.0);
        for i in 0..n {
            let z = pts[i * d + k];
            sum += z;
            sq += z * z;
        }
        *wk = sum * sum - sq;
    }
    w.iter().sum()
}

/// `S` in `O(nd)` through the per-coordinate decomposition, and the edge count
/// of the Gaussian graph at `threshold`.
pub fn statistic_s(cloud: &PointCloud, threshold: &Threshold) -> Result<EdgeStatistics> {
    if cloud.model != Model::Gauss {
        return Err(Error::domain("the statistic S is defined on Gaussian points"));
    }
    let mut edge_count = 0;
    for i in 0..cloud.n {
        for j in i + 1..cloud.n {
            edge_count += u64::from(dot(cloud.row(i), cloud.row(j)) >= threshold.s_gauss);
        }
    }
    let mut w = vec![0.0; cloud.d];
    let s = s_and_w(cloud.n, cloud.d, &cloud.points, &mut w);
    Ok(EdgeStatistics {
        s,
        edge_count,
        w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalMean {
    pub mean: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub tried: u64,
}

impl ConditionalMean {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.tried as f64
    }

    /// Whether the mean exceeds `c1 n² √d` by `sigmas` standard errors.
    pub fn exceeds(&self, c1: f64, n: u32, d: u32, sigmas: f64) -> bool {
        let target = c1 * (n as f64).powi(2) * (d as f64).sqrt();
        self.mean - sigmas * self.stderr > target
    }
}

/// Default cap on the number of graphs drawn by [`conditional_s_given_clique`].
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

/// Mean of `S` over Gaussian samples that form a clique, by rejection.
/// Stops with [`Error::BudgetExhausted`] after `budget` draws.
pub fn conditional_s_given_clique(
    params: &ModelParams,
    n_accept: u64,
    stream: RngStream,
    budget: u64,
) -> Result<ConditionalMean> {
    params.validate()?;
    if n_accept == 0 {
        return Err(Error::param("need at least one accepted sample"));
    }
    let threshold = Threshold::solve(params.p, params.d)?;
    let test = EventTest::new(params, Model::Gauss, Event::Clique, &threshold)?;
    let (n, d) = (params.n as usize, params.d as usize);
    let mut rng = stream.rng();
    let mut pts = vec![0.0; n * d];
    let mut w = vec![0.0; d];
    let (mut accepted, mut tried) = (0u64, 0u64);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    while accepted < n_accept {
        if tried == budget {
            return Err(Error::BudgetExhausted {
                accepted,
                tried,
                partial_mean: (accepted > 0).then(|| sum / accepted as f64),
            });
        }
        tried += 1;
        fill_gaussian(&mut rng, &mut pts);
        if test.hit(&pts) {
            let s = s_and_w(n, d, &pts, &mut w);
            accepted += 1;
            sum += s;
            sum_sq += s * s;
        }
    }
    let k = accepted as f64;
    let mean = sum / k;
    let var = if accepted > 1 {
        ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(ConditionalMean {
        mean,
        stderr: (var / k).sqrt(),
        accepted,
        tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_points;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn decomposition_matches_pairwise_sum() {
        let params = ModelParams::new(7, 13, 0.4).unwrap();
        let cloud = sample_points(&params, Model::Gauss, RngStream::new(5, 0));
        let t = Threshold::solve(0.4, 13).unwrap();
        let st = statistic_s(&cloud, &t).unwrap();
        let mut direct = 0.0;
        let mut edges = 0;
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    direct += dot(cloud.row(i), cloud.row(j));
                }
                if i < j && dot(cloud.row(i), cloud.row(j)) >= t.s_gauss {
                    edges += 1;
                }
            }
        }
        assert!((st.s - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        assert_eq!(st.edge_count, edges);
        assert_eq!(st.w.len(), 13);
    }

    #[test]
    fn single_point_is_zero() {
        let cloud = PointCloud {
            model: Model::Gauss,
            n: 1,
            d: 6,
            points: vec![0.3; 6],
            seed: 0,
        };
        let st = statistic_s(&cloud, &Threshold::solve(0.4, 6).unwrap()).unwrap();
        assert_eq!(st.s, 0.0);
        assert_eq!(st.edge_count, 0);
    }

    #[test]
    fn rejects_sphere_points() {
        let params = ModelParams::new(3, 6, 0.4).unwrap();
        let cloud = sample_points(&params, Model::Sphere, RngStream::new(5, 0));
        assert!(statistic_s(&cloud, &Threshold::solve(0.4, 6).unwrap()).is_err());
    }

    #[test]
    fn moments() {
        // E[S] = 0 and Var(S) = 2 n (n - 1) d.
        let (n, d, reps) = (10u32, 50u32, 100_000u64);
        let mut rng = RngStream::new(17, 0).rng();
        let mut pts = vec![0.0; (n * d) as usize];
        let mut w = vec![0.0; d as usize];
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for _ in 0..reps {
            fill_gaussian(&mut rng, &mut pts);
            let s = s_and_w(n as usize, d as usize, &pts, &mut w);
            s1 += s;
            s2 += s * s;
            s4 += s.powi(4);
        }
        let r = reps as f64;
        let mean = s1 / r;
        let m2 = s2 / r;
        let var_true = 2.0 * (n * (n - 1) * d) as f64;
        assert!(mean.abs() < 3.0 * (var_true / r).sqrt(), "mean {mean}");
        let var_of_m2 = (s4 / r - m2 * m2) / r;
        assert!((m2 - var_true).abs() < 3.0 * var_of_m2.sqrt(), "{m2} vs {var_true}");
    }

    #[test]
    fn conditional_mean_two_points() {
        // n = 2, p = 1/2: S = 2<Z1,Z2> given <Z1,Z2> >= 0, and
        // E|<Z1,Z2>| = E|Z1| sqrt(2/pi) with E|Z1| = sqrt(2) Γ((d+1)/2) / Γ(d/2).
        let d = 10u32;
        let params = ModelParams::new(2, d, 0.5).unwrap();
        let cm = conditional_s_given_clique(&params, 40_000, RngStream::new(3, 0), DEFAULT_BUDGET).unwrap();
        let df = d as f64;
        let chi_mean = 2f64.sqrt() * (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp();
        let exact = 2.0 * chi_mean * (2.0 / std::f64::consts::PI).sqrt();
        assert!((cm.mean - exact).abs() < 3.0 * cm.stderr, "{} vs {exact} ± {}", cm.mean, cm.stderr);
        assert!((cm.acceptance_rate() - 0.5).abs() < 0.01);
    }

    #[test]
    fn conditional_mean_positive() {
        let params = ModelParams::new(3, 8, 0.4).unwrap();
        let cm = conditional_s_given_clique(&params, 5_000, RngStream::new(4, 0), DEFAULT_BUDGET).unwrap();
        assert!(cm.mean - 3.0 * cm.stderr > 0.0);
        assert!(cm.exceeds(0.0, 3, 8, 3.0));
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let params = ModelParams::new(6, 8, 0.1).unwrap();
        match conditional_s_given_clique(&params, 1_000, RngStream::new(4, 0), 500) {
            Err(Error::BudgetExhausted { accepted, tried, .. }) => {
                assert_eq!(tried, 500);
                assert!(accepted < 1_000);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn clique_frequency_increases_with_first_inner_product() {
        // Bin <X1, X2> over [t, 1] and check P(clique | bin) is nondecreasing.
        let params = ModelParams::new(3, 6, 0.5).unwrap();
        let t = Threshold::solve(0.5, 6).unwrap();
        let test = EventTest::new(&params, Model::Sphere, Event::Clique, &t).unwrap();
        let bins = 5;
        let width = (1.0 - t.t_sphere) / bins as f64;
        let mut hits = vec![0u64; bins];
        let mut totals = vec![0u64; bins];
        let mut rng = RngStream::new(8, 0).rng();
        let mut pts = vec![0.0; 18];
        for _ in 0..200_000 {
            crate::sampler::fill_points(&mut rng, Model::Sphere, 6, &mut pts);
            let x = dot(&pts[..6], &pts[6..12]);
            if x < t.t_sphere {
                continue;
            }
            let b = (((x - t.t_sphere) / width) as usize).min(bins - 1);
            totals[b] += 1;
            hits[b] += u64::from(test.hit(&pts));
        }
        let freq: Vec<(f64, f64)> = hits
            .iter()
            .zip(&totals)
            .map(|(&h, &n)| {
                let f = h as f64 / n as f64;
                (f, (f * (1.0 - f) / n as f64).sqrt())
            })
            .collect();
        for w in freq.windows(2) {
            let ((f0, s0), (f1, s1)) = (w[0], w[1]);
            assert!(f1 + 3.0 * (s0 * s0 + s1 * s1).sqrt() >= f0, "{freq:?}");
        }
        assert!(freq[bins - 1].0 > freq[0].0);
    }
}
