use rgg_core::estimate::{edge_count_histogram, mc_event_probability, McOptions};
use rgg_core::oracle::{clique3_probability, edge_pmf_n3};
use rgg_core::{Event, Model, ModelParams};

#[test]
fn naive_clique_matches_quadrature() {
    for (p, d) in [(0.3, 10), (0.5, 3)] {
        let params = ModelParams::new(3, d, p).unwrap();
        let est = mc_event_probability(&params, Model::Sphere, Event::Clique, &McOptions::new(1_000_000, 40)).unwrap();
        let exact = clique3_probability(p, d).unwrap();
        assert!((est.value() - exact).abs() < 3.0 * est.stderr(), "({p}, {d}): {est:?} vs {exact}");
    }
}

#[test]
fn edge_histogram_matches_pmf() {
    let params = ModelParams::new(3, 10, 0.3).unwrap();
    let counts = edge_count_histogram(&params, Model::Sphere, &McOptions::new(1_000_000, 41)).unwrap();
    let pmf = edge_pmf_n3(0.3, 10).unwrap();
    let (chi2, dof) = pmf.chi_square(&counts).unwrap();
    // Mean plus three standard deviations of a χ² with `dof` degrees of freedom.
    let limit = dof as f64 + 3.0 * (2.0 * dof as f64).sqrt();
    assert!(chi2 < limit, "χ² = {chi2} on {dof} dof, counts {counts:?}");
}

#[test]
fn gaussian_and_sphere_coincide_at_one_half() {
    let params = ModelParams::new(3, 5, 0.5).unwrap();
    let opts = McOptions::new(100_000, 42);
    let pmf = edge_pmf_n3(0.5, 5).unwrap();
    for model in [Model::Sphere, Model::Gauss] {
        let counts = edge_count_histogram(&params, model, &opts).unwrap();
        let (chi2, dof) = pmf.chi_square(&counts).unwrap();
        assert!(chi2 < dof as f64 + 3.0 * (2.0 * dof as f64).sqrt(), "{model}: {chi2}");
    }
}
