use proptest::prelude::*;

use rgg_core::estimate::{mc_event_probability, statistic_s, tilted_estimator, McOptions};
use rgg_core::experiment::{fit_regimes, Observation, Rate};
use rgg_core::oracle::{clique3_probability, edge_pmf_n3};
use rgg_core::rearrange::{
    add_cap_and_rearrange, psi_mgf, simulate_cap_process_with, Region, SymmetricStepFunction, PROCESS_TOL,
};
use rgg_core::sampler::{build_graph, coupled_pair, sample_points, GraphSample, PointCloud};
use rgg_core::specfun::{cap_intersection_measure, CapGeometry, SphereMarginal};
use rgg_core::{Event, Model, ModelParams, RngStream, Threshold};

fn cheap() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn sphere_tail_is_strictly_decreasing(d in 2u32..300, u in -0.95f64..0.9, gap in 1e-3f64..0.05) {
        let m = SphereMarginal::new(d).unwrap();
        prop_assert!(m.ln_tail(u) > m.ln_tail(u + gap));
    }

    #[test]
    fn sphere_tail_inverse_round_trips(d in 2u32..2000, a in 1e-9f64..0.999_999) {
        let m = SphereMarginal::new(d).unwrap();
        let u = m.tail_inverse(a);
        prop_assert!((m.tail(u) / a - 1.0).abs() < 1e-10, "d={} a={} back={}", d, a, m.tail(u));
    }

    #[test]
    fn cap_intersection_respects_frechet_bounds(
        d in 3u32..80, a in 0.01f64..0.99, b in 0.01f64..0.99, u in -1.0f64..1.0, du in 0.01f64..0.3,
    ) {
        let i = cap_intersection_measure(a, b, u, d).unwrap();
        prop_assert!(i <= a.min(b) + 1e-12);
        prop_assert!(i >= (a + b - 1.0).max(0.0) - 1e-12);
        let j = cap_intersection_measure(a, b, (u + du).min(1.0), d).unwrap();
        prop_assert!(j + 1e-9 >= i, "not monotone: {} at {} vs {} at {}", i, u, j, u + du);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), n in 2u32..10, d in 2u32..12) {
        let params = ModelParams::new(n, d, 0.3).unwrap();
        let t = Threshold::solve(0.3, d).unwrap();
        for model in [Model::Sphere, Model::Gauss] {
            let a = build_graph(sample_points(&params, model, RngStream::new(seed, 7)), t).unwrap();
            let b = build_graph(sample_points(&params, model, RngStream::new(seed, 7)), t).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn coupled_graphs_agree_at_one_half(seed in any::<u64>(), n in 2u32..16, d in 2u32..20) {
        let params = ModelParams::new(n, d, 0.5).unwrap();
        let pair = coupled_pair(&params, Threshold::solve(0.5, d).unwrap(), RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(pair.disagreements(), 0);
    }

    #[test]
    fn relabeling_preserves_edge_count(seed in any::<u64>(), n in 2u32..12, d in 2u32..8, shift in 1usize..11) {
        let params = ModelParams::new(n, d, 0.3).unwrap();
        let t = Threshold::solve(0.3, d).unwrap();
        let cloud = sample_points(&params, Model::Sphere, RngStream::new(seed, 0));
        let (n, d) = (cloud.n, cloud.d);
        let mut points = Vec::with_capacity(n * d);
        for i in 0..n {
            points.extend_from_slice(cloud.row((i + shift) % n));
        }
        let permuted = PointCloud { points, ..cloud.clone() };
        let a: GraphSample = build_graph(cloud, t).unwrap();
        let b = build_graph(permuted, t).unwrap();
        prop_assert_eq!(a.edge_count(), b.edge_count());
    }

    #[test]
    fn rearrangement_preserves_mass_and_nesting(
        d in 3u32..40, p in 0.05f64..0.5, us in prop::collection::vec(-1.0f64..1.0, 1..12),
    ) {
        let geom = CapGeometry::new(d).unwrap();
        let mut g = SymmetricStepFunction::zero(d);
        for &u in &us {
            let before = g.integral();
            g = add_cap_and_rearrange(&g, u, p, &geom, PROCESS_TOL).unwrap();
            prop_assert!((g.integral() - before - p).abs() < 1e-8);
            prop_assert!(g.levels().windows(2).all(|w| w[1] <= w[0]));
        }
        prop_assert_eq!(g.len(), us.len());
    }

    #[test]
    fn cap_process_is_monotone(seed in any::<u64>(), n in 2u32..8, d in 3u32..12, p in 0.05f64..0.5) {
        let geom = CapGeometry::new(d).unwrap();
        let path = simulate_cap_process_with(&geom, n, p, n, RngStream::new(seed, 0)).unwrap();
        prop_assert!(path.is_monotone());
        prop_assert_eq!(path.etas[0], 1.0);
    }

    #[test]
    fn psi_at_zero_is_region_measure(
        d in 3u32..60, p in 0.05f64..0.5, us in prop::collection::vec(-1.0f64..1.0, 0..6), t in 0.0f64..3.0,
    ) {
        let geom = CapGeometry::new(d).unwrap();
        let marginal = SphereMarginal::new(d).unwrap();
        let mut g = SymmetricStepFunction::zero(d);
        for &u in &us {
            g = add_cap_and_rearrange(&g, u, p, &geom, PROCESS_TOL).unwrap();
        }
        for region in [Region::FullSphere, Region::Strip(t), Region::ComplementCap(t)] {
            let psi = psi_mgf(&g, region, 0.0, &marginal).unwrap();
            prop_assert!((psi - region.measure(&marginal)).abs() < 1e-9);
        }
    }

    #[test]
    fn statistic_identity(seed in any::<u64>(), n in 1u32..12, d in 2u32..40) {
        let cloud = PointCloud {
            model: Model::Gauss,
            n: n as usize,
            d: d as usize,
            points: Vec::new(),
            seed,
        };
        let params = ModelParams::new(n.max(2), d, 0.3).unwrap();
        let drawn = sample_points(&params, Model::Gauss, RngStream::new(seed, 3));
        let cloud = PointCloud { points: drawn.points[..(n * d) as usize].to_vec(), ..cloud };
        let st = statistic_s(&cloud, &Threshold::solve(0.3, d).unwrap()).unwrap();
        let mut direct = 0.0;
        for i in 0..cloud.n {
            for j in 0..cloud.n {
                if i != j {
                    direct += cloud.row(i).iter().zip(cloud.row(j)).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        let scale = cloud.points.iter().map(|x| x * x).sum::<f64>().max(1.0);
        prop_assert!((st.s - direct).abs() <= 1e-6 * direct.abs().max(1e-6 * scale));
        prop_assert!((st.w.iter().sum::<f64>() - st.s).abs() <= 1e-9 * scale);
    }

    #[test]
    fn planted_rates_are_recovered(c in 0.05f64..5.0, which in 0usize..4) {
        let rate = Rate::ALL[which];
        let mut obs = Vec::new();
        for n in [6u32, 12, 24] {
            for d in [10u32, 100, 1000] {
                obs.push(Observation { n, d, log_value: -c * rate.eval(n as f64, d as f64) });
            }
        }
        let fit = fit_regimes(&obs).unwrap();
        prop_assert_eq!(fit.selected, rate);
        let best = fit.candidates.iter().find(|f| f.rate == rate).unwrap();
        prop_assert!((best.coefficient / c - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimators_are_deterministic(seed in any::<u64>(), shards in 1u32..5, n in 2u32..6) {
        let params = ModelParams::new(n, 5, 0.4).unwrap();
        let opts = McOptions::new(3_000, seed).shards(shards);
        for model in [Model::Sphere, Model::Gauss] {
            let a = mc_event_probability(&params, model, Event::Clique, &opts).unwrap();
            let b = mc_event_probability(&params, model, Event::Clique, &opts).unwrap();
            prop_assert_eq!(&a, &b);
            let ta = tilted_estimator(&params, model, Event::Clique, 0.7, &opts, 0.0).unwrap();
            let tb = tilted_estimator(&params, model, Event::Clique, 0.7, &opts, 0.0).unwrap();
            prop_assert_eq!(ta, tb);
        }
    }

    #[test]
    fn zero_tilt_is_naive_bit_for_bit(seed in any::<u64>(), shards in 1u32..4, n in 2u32..6, d in 3u32..9) {
        let params = ModelParams::new(n, d, 0.3).unwrap();
        let opts = McOptions::new(2_000, seed).shards(shards);
        for model in [Model::Sphere, Model::Gauss] {
            let naive = mc_event_probability(&params, model, Event::Clique, &opts).unwrap();
            let tilted = tilted_estimator(&params, model, Event::Clique, 0.0, &opts, 0.0).unwrap().estimate;
            prop_assert_eq!(naive.log_value.to_bits(), tilted.log_value.to_bits());
            prop_assert_eq!(naive.log_stderr.to_bits(), tilted.log_stderr.to_bits());
            prop_assert_eq!(naive.n_samples, tilted.n_samples);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn three_clique_lies_between_er_and_single_edge(p in 0.02f64..0.5, d in 3u32..60) {
        let c = clique3_probability(p, d).unwrap();
        prop_assert!(c >= p.powi(3) * (1.0 - 1e-8) && c <= p);
        let pmf = edge_pmf_n3(p, d).unwrap();
        prop_assert!((pmf.mean() - 3.0 * p).abs() < 1e-8);
    }
}
