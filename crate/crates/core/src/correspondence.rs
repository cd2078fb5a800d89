//! The correspondence between positive algebraic curvature tensors and metrics
//! on S^n whose equators are all minimal.
//!
//! Forward direction (`R -> g_R`):
//!
//! ```text
//! k_R(p)(v, w) = R(p, v, p, w)
//! D_R(p)       = det[k_R(p)]^(2/(n-1))      (determinant in an orthonormal tangent frame)
//! g_R          = k_R / D_R
//! ```
//!
//! Backward direction (`g -> R_g`):
//!
//! ```text
//! F_g(p)       = det[g(p)]^(2/(n+1))
//! k_g          = g / F_g
//! R_g          : R_g(p, v, p, v) = k_g(p)(v, v), solved by least squares over Curv
//! ```
//!
//! In a gnomonic chart `x -> (c + E x)/|c + E x|` the forward metric has the
//! closed form `g_ij(x) = Q_ij(x) det(Q(x))^(-2/(n-1))` with
//! `Q_ij(x) = R(c + E x, E_i, c + E x, E_j)` quadratic in `x`, which is what
//! [`CurvatureMetric::chart_jet`] differentiates.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{curv_basis, project_to_curv};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::sphere::{great_circle, random_point, random_unit_tangent, tangent_frame, GnomonicChart, SpherePoint};
use crate::tensor::{sec_min_estimate, CurvatureTensor, ProbeOptions, SkewMatrix};

/// Positivity margin below which construction is refused without an override.
pub const DEGENERATE_MARGIN: f64 = 1e-6;

/// A symmetric two-tensor field on S^n, evaluated through an ambient matrix
/// `A(p)` with `field(p)(v, w) = v^T A(p) w` for tangent `v, w`.
pub trait SymmetricField: Send + Sync {
    /// Sphere dimension n.
    fn n(&self) -> usize;

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>>;

    fn eval(&self, p: &SpherePoint, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
        Ok((v.transpose() * self.ambient(p)? * w)[(0, 0)])
    }

    /// Matrix of the field in the tangent frame given by the columns of `frame`.
    fn frame_matrix(&self, p: &SpherePoint, frame: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(frame.transpose() * self.ambient(p)? * frame)
    }
}

/// Chart coordinates of a metric with its first and second partial derivatives.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    /// `dg[k][(i, j)] = d_k g_ij`.
    pub dg: Vec<DMatrix<f64>>,
    /// `d2g[k * n + l][(i, j)] = d_k d_l g_ij`.
    pub d2g: Vec<DMatrix<f64>>,
}

impl MetricJet {
    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    pub fn d2(&self, k: usize, l: usize) -> &DMatrix<f64> {
        &self.d2g[k * self.n() + l]
    }
}

/// A Riemannian metric on S^n with closed-form chart derivatives.
pub trait MetricField: SymmetricField {
    fn chart_jet(&self, chart: &GnomonicChart, x: &DVector<f64>) -> Result<MetricJet>;
}

/// Killing symmetric two-tensor `k_p(v, w) = R(p, v, p, w)` generated by a curvature tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingField {
    source: CurvatureTensor,
}

impl KillingField {
    /// Wraps a tensor without any positivity check.
    pub fn from_tensor(source: CurvatureTensor) -> Self {
        Self { source }
    }

    pub fn source(&self) -> &CurvatureTensor {
        &self.source
    }
}

impl SymmetricField for KillingField {
    fn n(&self) -> usize {
        self.source.n()
    }

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>> {
        Ok(self.source.killing_matrix(p.as_slice()))
    }
}

/// `K ⊙ L`: `(v, w) -> <Kp, v><Lp, w> + <Lp, v><Kp, w>`, represented by the
/// curvature tensor that generates it.
pub fn sym_product(k: &SkewMatrix, l: &SkewMatrix) -> Result<KillingField> {
    if k.n() != l.n() {
        return Err(Error::Dimension("skew matrices act on different spaces".into()));
    }
    let m = k.n() + 1;
    let (km, lm) = (k.matrix(), l.matrix());
    let mut raw = vec![0.0; m.pow(4)];
    // B(x,y,z,w) = <Kx,y><Lz,w> + <Lx,y><Kz,w> already has the pair symmetries;
    // projecting removes its totally antisymmetric part, which vanishes on (p,v,p,w).
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    raw[((a * m + b) * m + c) * m + d] = km[(b, a)] * lm[(d, c)] + lm[(b, a)] * km[(d, c)];
                }
            }
        }
    }
    Ok(KillingField::from_tensor(project_to_curv(k.n(), &raw)?))
}

/// Options for constructing fields from a curvature tensor.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstructionOptions {
    pub probe: ProbeOptions,
    /// Skip the positivity guard.
    pub allow_nonpositive: bool,
}

/// Builds `k_R`, refusing tensors whose positivity probe margin is below
/// [`DEGENERATE_MARGIN`] unless overridden.
pub fn killing_from_curv(r: &CurvatureTensor, opts: ConstructionOptions) -> Result<KillingField> {
    if !opts.allow_nonpositive {
        let est = sec_min_estimate(r, opts.probe);
        if !(est.value >= DEGENERATE_MARGIN) {
            return Err(Error::Positivity(format!(
                "sectional curvature probe found {:.3e} < {DEGENERATE_MARGIN:e}",
                est.value
            )));
        }
    }
    Ok(KillingField::from_tensor(r.clone()))
}

fn positive_det(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let det = m.determinant();
    if !(det > 0.0) {
        return Err(Error::Positivity(format!("{what} has determinant {det:e}")));
    }
    Ok(det)
}

/// `D_k(p) = det[k_p]^(2/(n-1))` in an orthonormal tangent frame.
pub fn volume_ratio_d(k: &dyn SymmetricField, p: &SpherePoint) -> Result<f64> {
    let n = k.n();
    if n < 2 {
        return Err(Error::Domain("D is undefined for n = 1".into()));
    }
    let m = k.frame_matrix(p, &tangent_frame(p))?;
    Ok(positive_det(&m, "Killing tensor")?.powf(2.0 / (n as f64 - 1.0)))
}

/// `F_g(p) = det[g_p]^(2/(n+1))` in an orthonormal tangent frame.
pub fn volume_ratio_f(g: &dyn SymmetricField, p: &SpherePoint) -> Result<f64> {
    let n = g.n();
    let m = g.frame_matrix(p, &tangent_frame(p))?;
    Ok(positive_det(&m, "metric")?.powf(2.0 / (n as f64 + 1.0)))
}

/// Which volume ratio a [`ScalarField`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarRole {
    /// `dV_k = D^((n-1)/4) dV`.
    D,
    /// `dV_g = F^((n+1)/4) dV`.
    F,
    /// `dV_g = psi dV`.
    Psi,
    /// Density of `phi(T)^* dV`.
    Delta,
    Custom,
}

/// A scalar function on S^n tagged with its role; positive roles are checked on evaluation.
pub struct ScalarField<'a> {
    pub role: ScalarRole,
    rule: Box<dyn Fn(&SpherePoint) -> Result<f64> + Send + Sync + 'a>,
}

impl<'a> ScalarField<'a> {
    pub fn new(role: ScalarRole, rule: impl Fn(&SpherePoint) -> Result<f64> + Send + Sync + 'a) -> Self {
        Self {
            role,
            rule: Box::new(rule),
        }
    }

    pub fn eval(&self, p: &SpherePoint) -> Result<f64> {
        let v = (self.rule)(p)?;
        if self.role != ScalarRole::Custom && !(v > 0.0) {
            return Err(Error::Positivity(format!("{:?} evaluated to {v:e}", self.role)));
        }
        Ok(v)
    }
}

/// The metric `g_R = k_R / D_R`.
#[derive(Debug, Clone)]
pub struct CurvatureMetric {
    killing: KillingField,
}

/// `g_R` from a curvature tensor (with the positivity guard of [`killing_from_curv`]).
pub fn metric_from_curv(r: &CurvatureTensor, opts: ConstructionOptions) -> Result<CurvatureMetric> {
    Ok(CurvatureMetric {
        killing: killing_from_curv(r, opts)?,
    })
}

impl CurvatureMetric {
    pub fn tensor(&self) -> &CurvatureTensor {
        self.killing.source()
    }

    pub fn killing(&self) -> &KillingField {
        &self.killing
    }

    pub fn d_field(&self) -> ScalarField<'_> {
        ScalarField::new(ScalarRole::D, move |p| volume_ratio_d(&self.killing, p))
    }

    pub fn f_field(&self) -> ScalarField<'_> {
        ScalarField::new(ScalarRole::F, move |p| volume_ratio_f(self, p))
    }

    /// `psi = dV_g / dV = F^((n+1)/4)`.
    pub fn psi_field(&self) -> ScalarField<'_> {
        let e = (self.n() as f64 + 1.0) / 4.0;
        ScalarField::new(ScalarRole::Psi, move |p| Ok(volume_ratio_f(self, p)?.powf(e)))
    }

    /// The tensor rotated into the basis `(c, E_1, ..., E_n)` of a chart.
    fn chart_tensor(&self, chart: &GnomonicChart) -> Vec<f64> {
        let m = self.n() + 1;
        let mut basis = DMatrix::zeros(m, m);
        basis.set_column(0, chart.center().coords());
        for i in 0..m - 1 {
            basis.set_column(i + 1, &chart.frame().column(i));
        }
        let src = self.tensor().coeffs();
        let mut data = src.to_vec();
        for axis in 0..4u32 {
            let stride = m.pow(3 - axis);
            let mut out = vec![0.0; data.len()];
            for (pos, value) in data.iter().enumerate() {
                if *value == 0.0 {
                    continue;
                }
                let i = (pos / stride) % m;
                let base = pos - i * stride;
                for a in 0..m {
                    out[base + a * stride] += value * basis[(i, a)];
                }
            }
            data = out;
        }
        data
    }
}

impl SymmetricField for CurvatureMetric {
    fn n(&self) -> usize {
        self.killing.n()
    }

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>> {
        let k = self.killing.ambient(p)?;
        let d = volume_ratio_d(&self.killing, p)?;
        Ok(k / d)
    }
}

impl MetricField for CurvatureMetric {
    fn chart_jet(&self, chart: &GnomonicChart, x: &DVector<f64>) -> Result<MetricJet> {
        chart.check(x)?;
        let n = self.n();
        let m = n + 1;
        let rt = self.chart_tensor(chart);
        let at = |a: usize, b: usize, c: usize, d: usize| rt[((a * m + b) * m + c) * m + d];
        // homogeneous coordinates of the lifted point in the chart basis
        let mut yh = vec![1.0];
        yh.extend(x.iter());

        let mut q = DMatrix::zeros(n, n);
        let mut dq = vec![DMatrix::zeros(n, n); n];
        let mut d2q = vec![DMatrix::zeros(n, n); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        s += yh[a] * yh[b] * at(a, i + 1, b, j + 1);
                    }
                }
                q[(i, j)] = s;
                for k in 0..n {
                    let mut s = 0.0;
                    for b in 0..m {
                        s += yh[b] * (at(k + 1, i + 1, b, j + 1) + at(b, i + 1, k + 1, j + 1));
                    }
                    dq[k][(i, j)] = s;
                    for l in 0..n {
                        d2q[k * n + l][(i, j)] = at(k + 1, i + 1, l + 1, j + 1) + at(l + 1, i + 1, k + 1, j + 1);
                    }
                }
            }
        }
        let chol = Cholesky::<f64, Dyn>::new(q.clone())
            .ok_or_else(|| Error::Positivity("k_R is not positive definite in the chart".into()))?;
        let det = chol.determinant();
        let qinv = chol.inverse();
        let alpha = 2.0 / (n as f64 - 1.0);
        let f = det.powf(-alpha);
        let qd: Vec<DMatrix<f64>> = dq.iter().map(|d| &qinv * d).collect();
        let lk: Vec<f64> = qd.iter().map(|a| a.trace()).collect();
        let fk: Vec<f64> = lk.iter().map(|l| -alpha * f * l).collect();

        let g = &q * f;
        let dg: Vec<DMatrix<f64>> = (0..n).map(|k| &q * fk[k] + &dq[k] * f).collect();
        let mut d2g = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                let lkl = (&qinv * &d2q[k * n + l]).trace() - (&qd[l] * &qd[k]).trace();
                let fkl = f * (alpha * alpha * lk[k] * lk[l] - alpha * lkl);
                d2g.push(&q * fkl + &dq[l] * fk[k] + &dq[k] * fk[l] + &d2q[k * n + l] * f);
            }
        }
        Ok(MetricJet { g, dg, d2g })
    }
}

/// `k_g = g / F_g` for an arbitrary metric evaluator.
pub struct MetricKilling<'a> {
    metric: &'a dyn SymmetricField,
}

pub fn killing_from_metric(g: &dyn SymmetricField) -> MetricKilling<'_> {
    MetricKilling { metric: g }
}

impl SymmetricField for MetricKilling<'_> {
    fn n(&self) -> usize {
        self.metric.n()
    }

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>> {
        let f = volume_ratio_f(self.metric, p)?;
        Ok(self.metric.ambient(p)? / f)
    }
}

/// Largest variation of `k(gamma', gamma')` along seeded unit-speed great circles.
/// Zero (up to rounding) iff `k` is constant along every sampled geodesic.
pub fn killing_constancy_residual(k: &dyn SymmetricField, circles: usize, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k.n();
    let mut worst: f64 = 0.0;
    for _ in 0..circles {
        let p = random_point(&mut rng, n);
        let u = random_unit_tangent(&mut rng, &p);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..samples {
            let t = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            let (x, v) = great_circle(&p, &u, t)?;
            let val = k.eval(&SpherePoint::new(x)?, &v, &v)?;
            lo = lo.min(val);
            hi = hi.max(val);
        }
        worst = worst.max(hi - lo);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy)]
pub struct RecoveryOptions {
    pub seed: u64,
    /// Number of samples per basis element.
    pub oversample: usize,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            seed: 0x0c0ffee,
            oversample: 3,
        }
    }
}

/// A curvature tensor recovered from a Killing tensor by least squares.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub tensor: CurvatureTensor,
    /// Max-norm residual of the sampled system.
    pub residual: f64,
    /// Condition number of the normal equations.
    pub condition: f64,
    pub samples: usize,
}

/// Condition numbers above this are treated as a sampling failure.
pub const MAX_CONDITION: f64 = 1e10;

/// Solves `R(p_j, v_j, p_j, v_j) = k_{p_j}(v_j, v_j)` over Curv(R^(n+1)) for a
/// seeded stream of points and unit tangent vectors.
pub fn curv_from_killing(k: &dyn SymmetricField, opts: RecoveryOptions) -> Result<Recovery> {
    let n = k.n();
    let basis = curv_basis(n)?;
    let dim = basis.len();
    let m = n + 1;
    let mut samples = opts.oversample.max(1) * dim;
    for attempt in 0..4 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(attempt);
        let mut a = DMatrix::zeros(samples, dim);
        let mut rhs = DVector::zeros(samples);
        let mut outer = vec![0.0; m.pow(4)];
        for row in 0..samples {
            let p = random_point(&mut rng, n);
            let v = random_unit_tangent(&mut rng, &p);
            rhs[row] = k.eval(&p, &v, &v)?;
            let (ps, vs) = (p.as_slice(), v.as_slice());
            for i in 0..m {
                for j in 0..m {
                    for c in 0..m {
                        let base = ((i * m + j) * m + c) * m;
                        let w = ps[i] * vs[j] * ps[c];
                        for d in 0..m {
                            outer[base + d] = w * vs[d];
                        }
                    }
                }
            }
            for (col, q) in basis.orthonormal().iter().enumerate() {
                a[(row, col)] = q.iter().zip(&outer).map(|(x, y)| x * y).sum();
            }
        }
        let svd = a.clone().svd(true, true);
        let smax: f64 = svd.singular_values.max();
        let smin: f64 = svd.singular_values.min();
        let condition = if smin > 0.0 {
            (smax / smin).powi(2)
        } else {
            f64::INFINITY
        };
        if !(condition <= MAX_CONDITION) {
            samples *= 2;
            continue;
        }
        let coords = svd.solve(&rhs, 0.0).map_err(|e| Error::Sampling(e.to_string()))?;
        let residual = (&a * &coords - &rhs).amax();
        let tensor = basis.combine_orthonormal(coords.as_slice());
        return Ok(Recovery {
            tensor,
            residual,
            condition,
            samples,
        });
    }
    Err(Error::Sampling(format!(
        "normal system stayed ill-conditioned after increasing to {samples} samples"
    )))
}

/// Point `P = y/|y|` and coordinate tangent vectors `d_i P` of a chart as jets in the
/// chart coordinates, evaluated at `x`.
pub(crate) fn chart_point_jets(chart: &GnomonicChart, x: &DVector<f64>) -> (Vec<Jet>, Vec<Vec<Jet>>) {
    let n = chart.n();
    let p = chart_point_jets_along(chart, x, &DMatrix::identity(n, n));
    let e = chart.frame();
    let m = n + 1;
    let r = crate::jet::dot(&p.1, &p.1).sqrt();
    let rinv = r.recip();
    let tangents = (0..n)
        .map(|i| {
            // d_i P = (E_i - P <P, E_i>) / r
            let pe = Jet::linear_combination(&(0..m).map(|a| e[(a, i)]).collect::<Vec<_>>(), &p.0);
            (0..m)
                .map(|a| (&p.0[a] * &pe).scale(-1.0).add_const(e[(a, i)]) * rinv.clone())
                .collect()
        })
        .collect();
    (p.0, tangents)
}

/// Point `P(s) = y/|y|` with `y = c + E (x + D s)` as jets in the variables `s`,
/// returned together with the unnormalised `y`.
pub(crate) fn chart_point_jets_along(
    chart: &GnomonicChart,
    x: &DVector<f64>,
    dirs: &DMatrix<f64>,
) -> (Vec<Jet>, Vec<Jet>) {
    let vars = dirs.ncols();
    let m = chart.n() + 1;
    let base = chart.lift(x);
    let ed = chart.frame() * dirs;
    let y: Vec<Jet> = (0..m)
        .map(|a| {
            let mut j = Jet::constant(base[a], vars);
            j.grad.copy_from_slice(ed.row(a).transpose().as_slice());
            j
        })
        .collect();
    let rinv = crate::jet::dot(&y, &y).sqrt().recip();
    (y.iter().map(|ya| ya * &rinv).collect(), y)
}

/// Packs an `n x n` array of jets into a [`MetricJet`].
pub(crate) fn metric_jet_from_entries(n: usize, entries: &[Jet]) -> MetricJet {
    let g = DMatrix::from_fn(n, n, |i, j| entries[i * n + j].value);
    let dg = (0..n)
        .map(|k| DMatrix::from_fn(n, n, |i, j| entries[i * n + j].grad[k]))
        .collect();
    let mut d2g = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            d2g.push(DMatrix::from_fn(n, n, |i, j| entries[i * n + j].h(k, l)));
        }
    }
    MetricJet { g, dg, d2g }
}

/// Chart matrix `g_ij(x) = g(d_i P, d_j P)` computed pointwise from the ambient form.
pub fn chart_metric(g: &dyn SymmetricField, chart: &GnomonicChart, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    chart.check(x)?;
    let y = chart.lift(x);
    let r = y.norm();
    let p = SpherePoint::normalize(y)?;
    let e = chart.frame();
    let n = chart.n();
    let cols: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let ei = e.column(i).into_owned();
            (&ei - p.coords() * p.coords().dot(&ei)) / r
        })
        .collect();
    let tangent = DMatrix::from_columns(&cols);
    Ok(tangent.transpose() * g.ambient(&p)? * tangent)
}

/// Ambient metric form of the round metric.
#[derive(Debug, Clone, Copy)]
pub struct RoundForm {
    pub n: usize,
}

impl SymmetricField for RoundForm {
    fn n(&self) -> usize {
        self.n
    }

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>> {
        let m = self.n + 1;
        let c = p.coords();
        Ok(DMatrix::identity(m, m) - c * c.transpose())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{fubini_study, random_positive, round};
    use approx::assert_abs_diff_eq;

    #[test]
    fn round_killing_is_round_metric() {
        let k = killing_from_curv(&round(3).unwrap(), ConstructionOptions::default()).unwrap();
        let p = SpherePoint::from_slice(&[0.2, -0.4, 0.1, 0.8]).unwrap();
        let f = tangent_frame(&p);
        assert!((k.frame_matrix(&p, &f).unwrap() - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-14);
        assert_abs_diff_eq!(volume_ratio_d(&k, &p).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn fubini_study_killing_tensor_closed_form() {
        let r = fubini_study(2).unwrap();
        let k = killing_from_curv(&r, ConstructionOptions::default()).unwrap();
        let j = crate::tensor::complex_structure(6);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let p = random_point(&mut rng, 5);
            let v = random_unit_tangent(&mut rng, &p);
            let w = random_unit_tangent(&mut rng, &p);
            let jp = &j * p.coords();
            let expect = v.dot(&w) + 3.0 * jp.dot(&v) * jp.dot(&w);
            assert_abs_diff_eq!(k.eval(&p, &v, &w).unwrap(), expect, epsilon = 1e-13);
            assert_abs_diff_eq!(volume_ratio_d(&k, &p).unwrap(), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn negated_round_is_refused_without_override() {
        let neg = &round(2).unwrap() * -1.0;
        assert!(matches!(
            killing_from_curv(&neg, ConstructionOptions::default()),
            Err(Error::Positivity(_))
        ));
        let forced = ConstructionOptions {
            allow_nonpositive: true,
            ..Default::default()
        };
        assert!(killing_from_curv(&neg, forced).is_ok());
    }

    #[test]
    fn sym_product_values() {
        let k = SkewMatrix::rotation_generator(2, 0, 1);
        let field = sym_product(&k, &k).unwrap();
        let p = SpherePoint::basis(2, 2);
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(field.eval(&p, &v, &v).unwrap(), 0.0);
        assert!(field.source().residuals().max() <= 1e-12);
    }

    #[test]
    fn f_times_d_is_one() {
        let r = random_positive(3, 0.5, 11).unwrap().tensor;
        let g = metric_from_curv(&r, ConstructionOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = random_point(&mut rng, 3);
            let fd = g.f_field().eval(&p).unwrap() * g.d_field().eval(&p).unwrap();
            assert_abs_diff_eq!(fd, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chart_jet_value_matches_pointwise_pullback() {
        let r = random_positive(3, 0.5, 2).unwrap().tensor;
        let g = metric_from_curv(&r, ConstructionOptions::default()).unwrap();
        let p = SpherePoint::from_slice(&[0.5, -0.1, 0.3, 0.8]).unwrap();
        let chart = GnomonicChart::centered_at(&p);
        let x = DVector::from_vec(vec![0.3, -0.2, 0.5]);
        let jet = g.chart_jet(&chart, &x).unwrap();
        let direct = chart_metric(&g, &chart, &x).unwrap();
        assert!((jet.g - direct).amax() <= 1e-13);
    }

    #[test]
    fn round_metric_at_chart_origin() {
        let g = metric_from_curv(&round(3).unwrap(), ConstructionOptions::default()).unwrap();
        let chart = GnomonicChart::centered_at(&SpherePoint::from_slice(&[0.1, 0.2, 0.3, 0.9]).unwrap());
        let jet = g.chart_jet(&chart, &DVector::zeros(3)).unwrap();
        assert!((jet.g - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-14);
        assert!(jet.dg.iter().all(|d| d.amax() <= 1e-14));
    }

    #[test]
    fn recovery_of_round_tensor() {
        let r = round(3).unwrap();
        let rec = curv_from_killing(&KillingField::from_tensor(r.clone()), RecoveryOptions::default()).unwrap();
        assert!(rec.tensor.max_abs_diff(&r) <= 1e-10);
        assert!(rec.residual <= 1e-9);
        assert!(rec.condition < MAX_CONDITION);
    }

    #[test]
    fn scalar_field_rejects_nonpositive_roles() {
        let p = SpherePoint::basis(2, 0);
        assert!(ScalarField::new(ScalarRole::D, |_| Ok(-1.0)).eval(&p).is_err());
        assert_eq!(
            ScalarField::new(ScalarRole::Custom, |_| Ok(-1.0)).eval(&p).unwrap(),
            -1.0
        );
    }
}
