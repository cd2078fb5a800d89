use equator_forge::analysis::jacobi::default_order;
use equator_forge::analysis::*;
use equator_forge::correspondence::{metric_from_curv, ConstructionOptions, CurvatureMetric};
use equator_forge::sphere::{random_equator, Equator};
use equator_forge::tensor::{random_positive, round};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn metric(r: &equator_forge::tensor::CurvatureTensor) -> CurvatureMetric {
    metric_from_curv(r, ConstructionOptions::default()).unwrap()
}

fn near_round() -> CurvatureMetric {
    metric(&random_positive(3, 0.2, 11).unwrap().tensor)
}

#[test]
fn round_jacobi_spectrum() {
    let g = metric(&round(3).unwrap());
    let v = Equator::from_slice(&[0.2, 0.4, -0.1, 0.9]).unwrap();
    let rep = jacobi_spectrum_probe(&g, &v, 8, default_order(8), 1e-6).unwrap();
    assert_eq!(rep.negative, 1);
    assert_eq!(rep.near_zero, 3);
    assert!((rep.eigenvalues[0] + 2.0).abs() <= 1e-4);
}

#[test]
fn perturbed_spectra_keep_index_and_nullity() {
    let li = left_invariant_metric(1.0, 1.0, 4.0).unwrap();
    let g = near_round();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = random_equator(&mut rng, 3);
    for degree in [12, 16] {
        for (name, rep) in [
            (
                "near-round",
                jacobi_spectrum_probe(&g, &v, degree, default_order(degree), 1e-3).unwrap(),
            ),
            (
                "li114",
                jacobi_spectrum_probe(&li.metric, &v, degree, default_order(degree), 1e-3).unwrap(),
            ),
        ] {
            assert_eq!((rep.negative, rep.near_zero), (1, 3), "{name} L={degree}");
        }
    }
}

#[test]
fn rotational_jacobi_functions_are_annihilated() {
    let g = near_round();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v = random_equator(&mut rng, 3);
    let w = jacobi_witness_residual(&g, &v, 12, default_order(12)).unwrap();
    assert!(w.sup_norm <= 1e-3, "{w:?}");
    assert!(w.amplitude >= 0.1);
}

#[test]
fn berger_witness_residual_decays_geometrically() {
    // the normal of a stretched Berger sphere has a nearby complex singularity, so the
    // round-harmonic expansion converges slowly but geometrically
    let li = left_invariant_metric(1.0, 1.0, 4.0).unwrap();
    let v = Equator::from_slice(&[0.5, 0.5, -0.5, 0.5]).unwrap();
    let res: Vec<f64> = [12, 16, 20]
        .iter()
        .map(|&l| {
            jacobi_witness_residual(&li.metric, &v, l, default_order(l))
                .unwrap()
                .sup_norm
        })
        .collect();
    assert!(res[1] < res[0] / 4.0 && res[2] < res[1] / 4.0, "{res:?}");
    assert!(res[2] <= 1e-3, "{res:?}");
}

#[test]
fn left_invariant_equators_have_equal_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let equators: Vec<Equator> = (0..20).map(|_| random_equator(&mut rng, 3)).collect();
    for (a, b, c) in [(1.0, 1.0, 4.0), (1.0, 2.0, 3.0)] {
        let li = left_invariant_metric(a, b, c).unwrap();
        let areas = area_scan(&li.form, &equators, 32, 0).unwrap();
        assert!(relative_spread(&areas) <= 1e-8, "{areas:?}");
        let (_, err) = equator_area_with_error(&li.form, &equators[0], 32, 0).unwrap();
        assert!(relative_spread(&areas) <= 10.0 * err.max(1e-12));
    }
}

#[test]
fn berger_equators_are_minimal() {
    let li = left_invariant_metric(1.0, 1.0, 4.0).unwrap();
    assert!(equator_forge::verification::max_mean_curvature(&li.form, 20, 10, 3).unwrap() <= 1e-6);
}

#[test]
fn convergence_csv_lists_every_degree() {
    let g = near_round();
    let v = Equator::from_slice(&[0.0, 0.0, 0.0, 1.0]).unwrap();
    let reports: Vec<SpectrumReport> = [4, 6]
        .iter()
        .map(|&l| jacobi_spectrum_probe(&g, &v, l, default_order(l), 1e-3).unwrap())
        .collect();
    let mut buf = Vec::new();
    write_convergence_csv(&mut buf, &reports).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("4,1,3,"));
}
