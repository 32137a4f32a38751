//! Exact small-instance probabilities for the spherical model and a
//! hit-or-miss check of stored level measures.
//!
//! The oracles only touch the special functions and quadrature; they share
//! no code with the Monte Carlo estimators or the rearrangement updates they
//! are used to validate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Threshold;
use crate::rearrange::SymmetricStepFunction;
use crate::rng::RngStream;
use crate::sampler::fill_gaussian;
use crate::specfun::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::specfun::{cap_intersection_measure_tol, SphereMarginal};

/// Quadrature tolerance of the oracles.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfTable {
    /// `probabilities[k]` is the probability of the value `k`.
    pub probabilities: Vec<f64>,
}

impl PmfTable {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|&q| !(q >= -ORACLE_TOL)) {
            return Err(Error::Numeric {
                message: "negative probability in pmf".into(),
                achieved: probabilities.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Numeric {
                message: "pmf does not sum to one".into(),
                achieved: total,
            });
        }
        Ok(PmfTable { probabilities })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(k, q)| k as f64 * q).sum()
    }

    /// Pearson statistic of observed counts against this pmf, skipping
    /// zero-probability cells. Returns `(chi2, degrees of freedom)`.
    pub fn chi_square(&self, counts: &[u64]) -> Result<(f64, usize)> {
        if counts.len() != self.len() {
            return Err(Error::param(format!("expected {} counts, got {}", self.len(), counts.len())));
        }
        let total: u64 = counts.iter().sum();
        let mut chi2 = 0.0;
        let mut cells = 0usize;
        for (&c, &q) in counts.iter().zip(&self.probabilities) {
            if q > 0.0 {
                let expected = q * total as f64;
                chi2 += (c as f64 - expected).powi(2) / expected;
                cells += 1;
            }
        }
        Ok((chi2, cells.saturating_sub(1)))
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: ORACLE_TOL,
        max_intervals: 2000,
    }
}

fn numeric(message: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::Numeric {
        message: format!("{message}: {e}"),
        achieved: f64::NAN,
    }
}

/// `P(3-clique)` in the spherical model: conditioning on `u = <X1, X2>`,
/// `∫_{t_p}^1 μ(C(X1) ∩ C(X2)) f_d(u) du`.
pub fn clique3_probability(p: f64, d: u32) -> Result<f64> {
    if d < 3 {
        return Err(Error::param(format!("the 3-clique oracle needs d >= 3, got {d}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let t = Threshold::solve(p, d)?.t_sphere;
    let marginal = SphereMarginal::new(d)?;
    let inner_tol = ORACLE_TOL * 1e-2;
    let mut failure = None;
    let r = integrate_with_breaks(
        |u| match cap_intersection_measure_tol(p, p, u, d, inner_tol) {
            Ok(m) => m * marginal.density(u),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &[t, 1.0],
        &quad_opts(),
    )
    .map_err(numeric("3-clique quadrature failed"))?;
    if let Some(e) = failure {
        return Err(numeric("cap intersection failed")(e));
    }
    Ok(r.value.clamp(p.powi(3) * (1.0 - 1e-6), p))
}

/// Distribution of the edge count of the spherical graph on three points.
///
/// Any two of the three edges share a vertex, so they are independent given
/// that vertex and each pair has probability `p · P(<X1, X2> >= t_p)`; the
/// triple term is [`clique3_probability`]. Inclusion-exclusion then gives the
/// pmf, whose mean is `3p` identically.
pub fn edge_pmf_n3(p: f64, d: u32) -> Result<PmfTable> {
    let c = clique3_probability(p, d)?;
    let t = Threshold::solve(p, d)?.t_sphere;
    let marginal = SphereMarginal::new(d)?;
    let edge = integrate(|u| marginal.density(u), t, 1.0, &quad_opts())
        .map_err(numeric("edge quadrature failed"))?
        .value;
    let (s1, s2, s3) = (3.0 * edge, 3.0 * edge * p, c);
    PmfTable::new(vec![
        1.0 - s1 + s2 - s3,
        s1 - 2.0 * s2 + 3.0 * s3,
        s2 - 3.0 * s3,
        s3,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    /// Hit frequency of `{g >= j}` for `j = 1..=K`.
    pub frequencies: Vec<f64>,
    /// `(frequency - a_j) / sqrt(a_j (1 - a_j) / N)`, 0 when `a_j` is 0 or 1
    /// and the frequency matches.
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
}

/// Hit-or-miss estimates of `μ{g >= j}` from uniform points built by
/// normalizing Gaussian vectors, compared with the stored level measures.
pub fn level_set_mc_check(g: &SymmetricStepFunction, samples: u64, stream: RngStream) -> Result<LevelCheck> {
    if samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    let d = g.dim() as usize;
    let marginal = SphereMarginal::new(g.dim())?;
    let altitudes: Vec<f64> = g.levels().iter().map(|&a| marginal.tail_inverse(a)).collect();
    let mut counts = vec![0u64; altitudes.len()];
    let mut rng = stream.rng();
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        fill_gaussian(&mut rng, &mut x);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x1 = x[0] / r;
        for (count, &h) in counts.iter_mut().zip(&altitudes) {
            if x1 >= h {
                *count += 1;
            } else {
                break;
            }
        }
    }
    let nf = samples as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / nf).collect();
    let z_scores: Vec<f64> = frequencies
        .iter()
        .zip(g.levels())
        .map(|(&f, &a)| {
            let se = (a * (1.0 - a) / nf).sqrt();
            if se > 0.0 {
                (f - a) / se
            } else if f == a {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let max_abs_z = z_scores.iter().fold(0.0_f64, |m, z| m.max(z.abs()));
    Ok(LevelCheck {
        frequencies,
        z_scores,
        max_abs_z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFixture {
    pub p: f64,
    pub d: u32,
    pub clique3: f64,
    pub edge_pmf: Vec<f64>,
}

/// Grid pinned in the checked-in fixtures file.
pub const FIXTURE_GRID: [(f64, u32); 8] = [
    (0.05, 3),
    (0.1, 5),
    (0.3, 3),
    (0.3, 10),
    (0.3, 50),
    (0.5, 3),
    (0.5, 10),
    (0.5, 100),
];

pub fn compute_fixtures(grid: &[(f64, u32)]) -> Result<Vec<OracleFixture>> {
    grid.iter()
        .map(|&(p, d)| {
            Ok(OracleFixture {
                p,
                d,
                clique3: clique3_probability(p, d)?,
                edge_pmf: edge_pmf_n3(p, d)?.probabilities,
            })
        })
        .collect()
}

/// The fixtures shipped with the crate.
pub fn bundled_fixtures() -> Result<Vec<OracleFixture>> {
    Ok(serde_json::from_str(include_str!("../fixtures/oracle.json"))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrange::add_cap_and_rearrange;
    use crate::specfun::CapGeometry;

    #[test]
    fn clique3_limits() {
        assert_eq!(clique3_probability(0.0, 7).unwrap(), 0.0);
        assert!(clique3_probability(0.3, 2).is_err());
        for (p, d) in [(0.05, 3), (0.3, 10), (0.5, 3), (0.2, 40)] {
            let c = clique3_probability(p, d).unwrap();
            assert!(c >= p * p * p && c <= p, "({p}, {d}): {c}");
        }
    }

    #[test]
    fn clique3_reference_values() {
        // Three directions in R^3 with pairwise acute angles: 1/4 - 1/(4π).
        let exact = 0.25 - 0.25 / std::f64::consts::PI;
        assert!((clique3_probability(0.5, 3).unwrap() - exact).abs() < 1e-10);
        // Nested-quadrature values at 20 digits (mpmath, incomplete beta tails).
        for (p, d, reference) in [
            (0.3, 10, 0.041_314_045_218_744_66),
            (0.1, 5, 0.004_547_563_095_105_637),
            (0.5, 10, 0.146_328_217_440_573_33),
        ] {
            let c = clique3_probability(p, d).unwrap();
            assert!((c / reference - 1.0).abs() < 1e-8, "({p}, {d}): {c} vs {reference}");
        }
    }

    #[test]
    fn clique3_approaches_er_in_high_dimension() {
        let p: f64 = 0.3;
        let c = clique3_probability(p, 2000).unwrap();
        assert!((c / p.powi(3) - 1.0).abs() < 0.1, "{}", c / p.powi(3));
    }

    #[test]
    fn edge_pmf_identities() {
        for (p, d) in [(0.3, 10), (0.5, 3), (0.1, 6)] {
            let pmf = edge_pmf_n3(p, d).unwrap();
            assert_eq!(pmf.len(), 4);
            assert!((pmf.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((pmf.mean() - 3.0 * p).abs() < 1e-8);
            assert!(pmf.probabilities.iter().all(|&q| q >= 0.0));
        }
    }

    #[test]
    fn pmf_rejects_bad_tables() {
        assert!(PmfTable::new(vec![0.5, 0.4]).is_err());
        assert!(PmfTable::new(vec![1.5, -0.5]).is_err());
        let t = PmfTable::new(vec![0.25, 0.75]).unwrap();
        let (chi2, dof) = t.chi_square(&[25, 75]).unwrap();
        assert_eq!((chi2, dof), (0.0, 1));
    }

    #[test]
    fn level_check_on_zero_and_caps() {
        let zero = SymmetricStepFunction::zero(6);
        let check = level_set_mc_check(&zero, 100, RngStream::new(1, 0)).unwrap();
        assert!(check.z_scores.is_empty());
        assert_eq!(check.max_abs_z, 0.0);

        let cap = SymmetricStepFunction::indicator(6, 0.3).unwrap();
        let check = level_set_mc_check(&cap, 1_000_000, RngStream::new(2, 0)).unwrap();
        assert!(check.max_abs_z < 3.0, "{check:?}");

        let geom = CapGeometry::new(6).unwrap();
        let g = add_cap_and_rearrange(&cap, 0.4, 0.3, &geom, crate::rearrange::PROCESS_TOL).unwrap();
        let check = level_set_mc_check(&g, 1_000_000, RngStream::new(3, 0)).unwrap();
        assert!(check.max_abs_z < 3.0, "{check:?}");
    }

    #[test]
    fn bundled_fixtures_reproduce() {
        let fixtures = bundled_fixtures().unwrap();
        assert_eq!(fixtures.len(), FIXTURE_GRID.len());
        for f in fixtures.iter().filter(|f| f.d <= 10) {
            let c = clique3_probability(f.p, f.d).unwrap();
            assert!((c - f.clique3).abs() <= 1e-9 * f.clique3.max(1e-300), "({}, {})", f.p, f.d);
        }
    }
}
