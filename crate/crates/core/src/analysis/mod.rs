//! Equator areas, the Funk–Radon transform, the Jacobi operator of equators in
//! S^3 and the left-invariant family of examples.

pub mod harmonics;
pub mod jacobi;
pub mod left_invariant;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::correspondence::SymmetricField;
use crate::error::{Error, Result};
use crate::quadrature::{equator_quadrature, CompensatedSum, QuadratureRule, RuleKind};
use crate::sphere::{Equator, SpherePoint};
use crate::verification::complement_basis;

pub use jacobi::{
    jacobi_apply, jacobi_spectrum_probe, jacobi_witness_generators, jacobi_witness_residual, tangent_generators,
    EquatorMesh, JacobiGalerkin, SpectrumReport,
};
pub use left_invariant::{left_invariant_metric, quaternion_frame, LeftInvariant, LeftInvariantForm};

/// Round-orthonormal basis (columns) of `T_pΣ_v`.
pub fn equator_tangent_basis(v: &Equator, p: &SpherePoint) -> DMatrix<f64> {
    let hb = v.hyperplane_basis();
    let mut c = hb.transpose() * p.coords();
    c /= c.norm();
    hb * complement_basis(&c)
}

/// `dA_g / dA_round` on `Σ_v` at `p`: square root of the determinant of the induced metric
/// in a round-orthonormal frame.
pub fn area_density(g: &dyn SymmetricField, v: &Equator, p: &SpherePoint) -> Result<f64> {
    let basis = equator_tangent_basis(v, p);
    let h = g.frame_matrix(p, &basis)?;
    let det = h.determinant();
    if !(det > 0.0) {
        return Err(Error::Positivity(format!("induced metric has determinant {det:e}")));
    }
    Ok(det.sqrt())
}

fn weighted_densities(g: &dyn SymmetricField, v: &Equator, rule: &QuadratureRule) -> Result<Vec<f64>> {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(x, w)| Ok(w * area_density(g, v, &SpherePoint::normalize(x.clone())?)?))
        .collect()
}

/// Integral of `f` over `Σ_v` against the area element induced by `g`.
pub fn funk_radon(
    g: &dyn SymmetricField,
    f: &dyn Fn(&DVector<f64>) -> f64,
    v: &Equator,
    order: usize,
    seed: u64,
) -> Result<f64> {
    if v.n() != g.n() {
        return Err(Error::Dimension("equator and metric live on different spheres".into()));
    }
    let rule = equator_quadrature(v, order, seed)?;
    let dens = weighted_densities(g, v, &rule)?;
    let mut acc = CompensatedSum::default();
    for (x, d) in rule.nodes.iter().zip(dens) {
        acc.add(d * f(x));
    }
    Ok(acc.value())
}

/// Area of `Σ_v` for the metric `g`.
pub fn equator_area(g: &dyn SymmetricField, v: &Equator, order: usize, seed: u64) -> Result<f64> {
    funk_radon(g, &|_| 1.0, v, order, seed)
}

/// Area with an error estimate: the Monte Carlo standard error for sampled rules,
/// otherwise the change from a rule of three quarters the order.
pub fn equator_area_with_error(g: &dyn SymmetricField, v: &Equator, order: usize, seed: u64) -> Result<(f64, f64)> {
    let rule = equator_quadrature(v, order, seed)?;
    let dens = weighted_densities(g, v, &rule)?;
    if let RuleKind::MonteCarlo { .. } = rule.kind {
        let w = rule.weights[0];
        let vals: Vec<f64> = dens.iter().map(|d| d / w).collect();
        let k = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        return Ok((mean * rule.total_weight(), (var / k).sqrt() * rule.total_weight()));
    }
    let mut acc = CompensatedSum::default();
    dens.iter().for_each(|d| acc.add(*d));
    let coarse = equator_area(g, v, (3 * order / 4).max(1), seed)?;
    Ok((acc.value(), (acc.value() - coarse).abs()))
}

/// Areas of many equators, computed in parallel.
pub fn area_scan(g: &dyn SymmetricField, equators: &[Equator], order: usize, seed: u64) -> Result<Vec<f64>> {
    equators.par_iter().map(|v| equator_area(g, v, order, seed)).collect()
}

/// `(max − min) / mean` of a set of values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / mean.abs()
}

/// CSV rows `v0, ..., vn, area`.
pub fn write_area_csv<W: Write>(out: W, equators: &[Equator], areas: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = equators.first().map(|e| e.n()).unwrap_or(0);
    let mut header: Vec<String> = (0..=n).map(|i| format!("v{i}")).collect();
    header.push("area".into());
    w.write_record(&header).map_err(csv_err)?;
    for (v, a) in equators.iter().zip(areas) {
        let mut row: Vec<String> = v.normal().iter().map(|c| format!("{c:.17e}")).collect();
        row.push(format!("{a:.17e}"));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `k, eigenvalue`.
pub fn write_spectrum_csv<W: Write>(out: W, eigenvalues: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "eigenvalue"]).map_err(csv_err)?;
    for (k, e) in eigenvalues.iter().enumerate() {
        w.write_record([k.to_string(), format!("{e:.17e}")]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV rows `degree, negative, near_zero, lambda0, ..., lambda4`.
pub fn write_convergence_csv<W: Write>(out: W, reports: &[SpectrumReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "degree",
        "negative",
        "near_zero",
        "lambda0",
        "lambda1",
        "lambda2",
        "lambda3",
        "lambda4",
    ])
    .map_err(csv_err)?;
    for r in reports {
        let mut row = vec![r.degree.to_string(), r.negative.to_string(), r.near_zero.to_string()];
        row.extend((0..5).map(|k| r.eigenvalues.get(k).map(|e| format!("{e:.17e}")).unwrap_or_default()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::RoundForm;
    use crate::sphere::random_equator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn round_equator_areas() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g3 = RoundForm { n: 3 };
        let v = random_equator(&mut rng, 3);
        assert!((equator_area(&g3, &v, 16, 0).unwrap() - 4.0 * PI).abs() <= 1e-12);
        let g2 = RoundForm { n: 2 };
        let v = random_equator(&mut rng, 2);
        assert!((equator_area(&g2, &v, 8, 0).unwrap() - 2.0 * PI).abs() <= 1e-12);
    }

    #[test]
    fn monte_carlo_area_reports_zero_error_for_round_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_equator(&mut rng, 4);
        let (a, err) = equator_area_with_error(&RoundForm { n: 4 }, &v, 8, 3).unwrap();
        assert!((a - crate::quadrature::sphere_area(3)).abs() <= 1e-10);
        assert!(err <= 1e-10);
    }

    #[test]
    fn odd_functions_integrate_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = random_equator(&mut rng, 3);
        let f = |x: &DVector<f64>| x[0] * x[1] * x[2] + x[3];
        assert!(funk_radon(&RoundForm { n: 3 }, &f, &v, 16, 0).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn csv_shapes() {
        let v = Equator::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_area_csv(&mut buf, &[v], &[2.0 * PI]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("v0,v1,v2,area\n"));
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &[-2.0, 0.0]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn spread_of_equal_values_is_zero() {
        assert_eq!(relative_spread(&[3.0, 3.0, 3.0]), 0.0);
        assert!((relative_spread(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
