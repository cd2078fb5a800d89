//! Quadrature rules on S^n and on its equators.
//!
//! Deterministic product rules exist for equators of S^3 (Gauss–Legendre in
//! the height times the trapezoid rule in the azimuth), for S^3 itself (Hopf
//! coordinates) and for the circle/2-sphere cases. Other dimensions fall back to
//! seeded Monte Carlo with antithetic pairs and a reported standard error.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sphere::Equator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Exact for spherical polynomials up to `degree`.
    Deterministic { degree: usize },
    /// `samples` nodes, arranged as antithetic pairs `(x, -x)`.
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_monte_carlo(&self) -> bool {
        matches!(self.kind, RuleKind::MonteCarlo { .. })
    }

    pub fn total_weight(&self) -> f64 {
        let mut s = CompensatedSum::default();
        self.weights.iter().for_each(|w| s.add(*w));
        s.value()
    }

    pub fn integrate<F: FnMut(&DVector<f64>) -> f64>(&self, mut f: F) -> f64 {
        let mut s = CompensatedSum::default();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s.add(w * f(x));
        }
        s.value()
    }

    /// Integral together with a standard-error estimate (zero for deterministic rules).
    pub fn integrate_with_error<F: FnMut(&DVector<f64>) -> f64>(&self, mut f: F) -> (f64, f64) {
        match self.kind {
            RuleKind::Deterministic { .. } => (self.integrate(f), 0.0),
            RuleKind::MonteCarlo { .. } => {
                let total = self.total_weight();
                let pairs = self.nodes.len() / 2;
                let vals: Vec<f64> = self
                    .nodes
                    .chunks(2)
                    .map(|pair| 0.5 * (f(&pair[0]) + f(&pair[1])) * total)
                    .collect();
                let mean = vals.iter().sum::<f64>() / pairs as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (pairs as f64 - 1.0).max(1.0);
                (mean, (var / pairs as f64).sqrt())
            }
        }
    }

    /// Writes one CSV row per node: coordinates followed by the weight.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let dim = self.nodes.first().map_or(0, |x| x.len());
        let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
        header.push("weight".into());
        wtr.write_record(&header).map_err(csv_err)?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let mut row: Vec<String> = x.iter().map(|c| format!("{c:.17e}")).collect();
            row.push(format!("{w:.17e}"));
            wtr.write_record(&row).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(count >= 1);
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // p1 = P_count(x), p0 = P_{count-1}(x)
            let (mut p1, mut p0) = (1.0, 0.0);
            for k in 1..=count {
                let kf = k as f64;
                let p2 = p0;
                p0 = p1;
                p1 = ((2.0 * kf - 1.0) * x * p0 - (kf - 1.0) * p2) / kf;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[count - 1 - i] = x;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// Area of the unit sphere S^k.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Number of Monte Carlo samples used for a fallback rule of the given order.
fn mc_samples(order: usize) -> usize {
    (2 * order * order * order).max(20_000)
}

fn monte_carlo(basis: &[DVector<f64>], ambient: usize, order: usize, seed: u64) -> QuadratureRule {
    let k = basis.len();
    let samples = mc_samples(order);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = sphere_area(k - 1) / samples as f64;
    let mut nodes = Vec::with_capacity(samples);
    while nodes.len() < samples {
        let coeffs: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        let mut x = DVector::zeros(ambient);
        for (c, b) in coeffs.iter().zip(basis) {
            x += b * (c / norm);
        }
        nodes.push(-&x);
        nodes.push(x);
    }
    QuadratureRule {
        weights: vec![weight; nodes.len()],
        nodes,
        kind: RuleKind::MonteCarlo { samples },
    }
}

/// Gauss–Legendre x trapezoid rule on the unit 2-sphere spanned by `b1, b2, b3`.
fn two_sphere_rule(b: [&DVector<f64>; 3], order: usize) -> QuadratureRule {
    let (ts, ws) = gauss_legendre(order);
    let naz = 2 * order;
    let dphi = 2.0 * PI / naz as f64;
    let mut nodes = Vec::with_capacity(order * naz);
    let mut weights = Vec::with_capacity(order * naz);
    for (t, w) in ts.iter().zip(&ws) {
        let s = (1.0 - t * t).sqrt();
        for j in 0..naz {
            let (sp, cp) = (j as f64 * dphi).sin_cos();
            nodes.push(b[0] * (s * cp) + b[1] * (s * sp) + b[2] * *t);
            weights.push(w * dphi);
        }
    }
    QuadratureRule {
        nodes,
        weights,
        kind: RuleKind::Deterministic { degree: 2 * order - 1 },
    }
}

fn circle_rule(b1: &DVector<f64>, b2: &DVector<f64>, order: usize) -> QuadratureRule {
    let count = 2 * order;
    let dt = 2.0 * PI / count as f64;
    let nodes = (0..count)
        .map(|j| {
            let (s, c) = (j as f64 * dt).sin_cos();
            b1 * c + b2 * s
        })
        .collect();
    QuadratureRule {
        nodes,
        weights: vec![dt; count],
        kind: RuleKind::Deterministic { degree: count - 1 },
    }
}

fn columns(m: &nalgebra::DMatrix<f64>) -> Vec<DVector<f64>> {
    (0..m.ncols()).map(|i| m.column(i).into_owned()).collect()
}

/// Rule on the equator `Σ_v` for the round area element. Deterministic for
/// n = 2, 3; Monte Carlo (seeded) otherwise.
pub fn equator_quadrature(v: &Equator, order: usize, seed: u64) -> Result<QuadratureRule> {
    if order < 1 {
        return Err(Error::Domain("quadrature order must be positive".into()));
    }
    let basis = columns(&v.hyperplane_basis());
    let ambient = v.n() + 1;
    Ok(match v.n() {
        2 => circle_rule(&basis[0], &basis[1], order),
        3 => two_sphere_rule([&basis[0], &basis[1], &basis[2]], order),
        _ => monte_carlo(&basis, ambient, order, seed),
    })
}

/// Rule on S^n for the round volume element.
pub fn sphere_quadrature(n: usize, order: usize, seed: u64) -> Result<QuadratureRule> {
    if order < 1 {
        return Err(Error::Domain("quadrature order must be positive".into()));
    }
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension must be >= 2, got {n}")));
    }
    let e = |i: usize| {
        let mut v = DVector::zeros(n + 1);
        v[i] = 1.0;
        v
    };
    Ok(match n {
        2 => two_sphere_rule([&e(0), &e(1), &e(2)], order),
        3 => {
            // x = (sqrt(1-s) e^{i a}, sqrt(s) e^{i b}), dV = (1/2) ds da db
            let (ts, ws) = gauss_legendre(order);
            let naz = 2 * order;
            let d = 2.0 * PI / naz as f64;
            let mut nodes = Vec::with_capacity(order * naz * naz);
            let mut weights = Vec::with_capacity(order * naz * naz);
            for (t, w) in ts.iter().zip(&ws) {
                let s = 0.5 * (t + 1.0);
                let (r1, r2) = ((1.0 - s).sqrt(), s.sqrt());
                let wt = 0.5 * (0.5 * w) * d * d;
                for a in 0..naz {
                    let (sa, ca) = (a as f64 * d).sin_cos();
                    for b in 0..naz {
                        let (sb, cb) = (b as f64 * d).sin_cos();
                        nodes.push(DVector::from_vec(vec![r1 * ca, r1 * sa, r2 * cb, r2 * sb]));
                        weights.push(wt);
                    }
                }
            }
            QuadratureRule {
                nodes,
                weights,
                kind: RuleKind::Deterministic { degree: 2 * order - 1 },
            }
        }
        _ => monte_carlo(&(0..=n).map(e).collect::<Vec<_>>(), n + 1, order, seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_abs_diff_eq!(integral, 2.0 / 15.0, epsilon = 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn sphere_areas() {
        assert_abs_diff_eq!(sphere_area(2), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_area(3), 2.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn equator_rule_on_s3() {
        let v = Equator::from_slice(&[0.3, -0.2, 0.9, 0.1]).unwrap();
        let rule = equator_quadrature(&v, 16, 0).unwrap();
        assert_abs_diff_eq!(rule.total_weight(), 4.0 * PI, epsilon = 1e-10);
        assert!(rule.nodes.iter().all(|x| x.dot(v.normal()).abs() <= 1e-12));
        let w = DVector::from_vec(vec![0.0, 0.9, 0.2, 0.0]);
        let w = &w - v.normal() * w.dot(v.normal());
        assert_abs_diff_eq!(rule.integrate(|x| x.dot(&w)), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn degree_two_harmonic_integrates_to_zero() {
        let v = Equator::from_slice(&[0.3, -0.2, 0.9, 0.1]).unwrap();
        let rule = equator_quadrature(&v, 16, 0).unwrap();
        let basis = v.hyperplane_basis();
        let (b1, b3) = (basis.column(0).into_owned(), basis.column(2).into_owned());
        // 3 z^2 - 1 and x z in the equator's own coordinates
        let i1 = rule.integrate(|x| 3.0 * x.dot(&b3).powi(2) - 1.0);
        let i2 = rule.integrate(|x| x.dot(&b1) * x.dot(&b3));
        assert_abs_diff_eq!(i1, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i2, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn s3_rule_volume_and_moments() {
        let rule = sphere_quadrature(3, 16, 0).unwrap();
        let vol = 2.0 * PI * PI;
        assert_abs_diff_eq!(rule.total_weight(), vol, epsilon = 1e-8);
        assert_abs_diff_eq!(rule.integrate(|x| x[0] * x[0]), vol / 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rule.integrate(|x| x[0] + 0.3 * x[2]), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn monte_carlo_fallback_on_s4() {
        let rule = sphere_quadrature(4, 10, 11).unwrap();
        assert!(rule.is_monte_carlo());
        assert_abs_diff_eq!(rule.total_weight(), sphere_area(4), epsilon = 1e-9);
        let (odd, err) = rule.integrate_with_error(|x| x[1]);
        assert_abs_diff_eq!(odd, 0.0, epsilon = 1e-12);
        assert_eq!(err, 0.0);
        let (val, err) = rule.integrate_with_error(|x| x[0] * x[0]);
        assert!((val - sphere_area(4) / 5.0).abs() < 5.0 * err + 1e-12);
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let v = Equator::from_slice(&[0.0, 0.0, 1.0]).unwrap();
        let rule = equator_quadrature(&v, 3, 0).unwrap();
        let mut buf = Vec::new();
        rule.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x0,x1,x2,weight"));
        assert_eq!(text.lines().count(), 1 + rule.len());
    }
}
