use equator_forge::correspondence::{chart_metric, metric_from_curv, ConstructionOptions, MetricField, SymmetricField};
use equator_forge::sphere::{random_group_element, random_point, GnomonicChart, SpherePoint};
use equator_forge::tensor::{fubini_study, random_positive, sectional};
use equator_forge::verification::*;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_metric(n: usize, seed: u64) -> equator_forge::correspondence::CurvatureMetric {
    let r = random_positive(n, 0.5, seed).unwrap().tensor;
    metric_from_curv(&r, ConstructionOptions::default()).unwrap()
}

fn random_x(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-radius..radius))
}

#[test]
fn chart_derivatives_match_finite_differences() {
    let g = random_metric(3, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let chart = GnomonicChart::centered_at(&random_point(&mut rng, 3));
        let x = random_x(&mut rng, 3, 0.5);
        let jet = g.chart_jet(&chart, &x).unwrap();
        for k in 0..3 {
            let h = 1e-4;
            let mut e = DVector::zeros(3);
            e[k] = h;
            let fd = (chart_metric(&g, &chart, &(&x + &e)).unwrap() - chart_metric(&g, &chart, &(&x - &e)).unwrap())
                / (2.0 * h);
            assert!((&fd - &jet.dg[k]).amax() <= 1e-6);
            for l in 0..3 {
                let h = 1e-3;
                let mut el = DVector::zeros(3);
                el[l] = h;
                let mut ek = DVector::zeros(3);
                ek[k] = h;
                let f = |a: &DVector<f64>| chart_metric(&g, &chart, &(&x + a)).unwrap();
                let fd2 = (f(&(&ek + &el)) - f(&(&ek - &el)) - f(&(&el - &ek)) + f(&(-&ek - &el))) / (4.0 * h * h);
                assert!((&fd2 - jet.d2(k, l)).amax() <= 1e-4);
            }
        }
    }
}

#[test]
fn killing_tensor_restricts_to_sectional_curvature() {
    let r = random_positive(4, 0.4, 3).unwrap().tensor;
    let k = equator_forge::correspondence::KillingField::from_tensor(r.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let p = random_point(&mut rng, 4);
        let v = equator_forge::sphere::random_unit_tangent(&mut rng, &p);
        let sec = sectional(&r, p.as_slice(), v.as_slice()).unwrap();
        assert!((k.eval(&p, &v, &v).unwrap() - sec).abs() <= 1e-12);
    }
}

#[test]
fn random_metrics_have_minimal_equators() {
    for seed in 0..3 {
        let g = random_metric(3, seed);
        let h = max_mean_curvature(&g, 10, 10, seed).unwrap();
        assert!(h <= 1e-8, "seed {seed}: {h}");
    }
    let g = random_metric(4, 5);
    assert!(max_mean_curvature(&g, 5, 5, 1).unwrap() <= 1e-8);
}

#[test]
fn bump_metric_fails_minimality_and_metric_equation() {
    let b = BumpMetric::standard(3);
    let h = max_mean_curvature(&b, 50, 20, 0).unwrap();
    assert!(h >= 1e-2, "{h}");
    let p = SpherePoint::from_slice(&[1.0, 0.15, 0.1, 0.0]).unwrap();
    let r = metric_equation_residual(&b, &GnomonicChart::centered_at(&p), &DVector::zeros(3)).unwrap();
    assert!(r >= 1e-3, "{r}");
}

#[test]
fn random_metrics_satisfy_metric_equation() {
    let g = random_metric(3, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let chart = GnomonicChart::centered_at(&random_point(&mut rng, 3));
        let x = random_x(&mut rng, 3, 0.8);
        assert!(metric_equation_residual(&g, &chart, &x).unwrap() <= 1e-10);
        assert!(trace_form_residual(&g, &chart, &x).unwrap() <= 1e-10);
    }
}

#[test]
fn lemma_properties_hold() {
    let g = random_metric(3, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let chart = GnomonicChart::centered_at(&random_point(&mut rng, 3));
        let x = random_x(&mut rng, 3, 0.6);
        let p = chart.to_sphere(&x).unwrap();
        let mut v = DVector::from_fn(4, |_, _| rng.gen_range(-1.0..1.0));
        v -= p.coords() * p.coords().dot(&v);
        v /= v.norm();
        let res = lemma_residuals(&g, &chart, &x, &v).unwrap();
        assert!(res.symmetry <= 1e-10);
        assert!(res.half_derivative <= 1e-10, "{res:?}");
        assert!(res.trace <= 1e-6, "{res:?}");
        assert!(res.hessian <= 1e-6, "{res:?}");
        assert!(obata_residual(&chart, &x, &v) <= 1e-10);
    }
}

#[test]
fn fubini_study_scalar_curvature_matches_berger_formula() {
    // Berger sphere over CP^m (holomorphic curvature 4) with fiber length^2 stretched by 4
    // has scalar curvature 4m(m+1) - 8m; g_R rescales it by 4^(-1/m).
    let berger = |m: f64| (4.0 * m * (m + 1.0) - 8.0 * m) * 4f64.powf(1.0 / m);
    let g2 = metric_from_curv(&fubini_study(2).unwrap(), ConstructionOptions::default()).unwrap();
    let g3 = metric_from_curv(&fubini_study(3).unwrap(), ConstructionOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut s3 = Vec::new();
    for _ in 0..10 {
        let c2 = curvature_of_metric(
            &g2,
            &GnomonicChart::centered_at(&random_point(&mut rng, 5)),
            &DVector::zeros(5),
        )
        .unwrap();
        assert!((c2.scalar - berger(2.0)).abs() <= 1e-8, "{}", c2.scalar);
        assert!(c2.bianchi_residual <= 1e-8);
        let c3 = curvature_of_metric(
            &g3,
            &GnomonicChart::centered_at(&random_point(&mut rng, 7)),
            &DVector::zeros(7),
        )
        .unwrap();
        s3.push(c3.scalar);
    }
    assert!((s3[0] - berger(3.0)).abs() <= 1e-6, "{}", s3[0]);
    assert!(s3.iter().all(|s| (s - s3[0]).abs() <= 1e-6));
}

#[test]
fn equivariance_under_random_group_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for seed in 0..5 {
        let r = random_positive(3, 0.5, seed).unwrap().tensor;
        let t = random_group_element(&mut rng, 3, 0.4);
        let res = equivariance_residual(&r, &t, 50, seed).unwrap();
        assert!(res <= 1e-8, "{res}");
    }
}

#[test]
fn antipodal_map_is_an_isometry() {
    let g = random_metric(3, 2);
    assert!(antipodal_residual(&g, 100, 3).unwrap() <= 1e-12);
    let b = BumpMetric::standard(3);
    assert!(antipodal_residual(&b, 100, 3).unwrap() > 1e-3);
}
