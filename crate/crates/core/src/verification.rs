//! Independent checks that a metric on S^n has minimal equators.
//!
//! Everything here works in gnomonic charts from the chart jet `(g, dg, d2g)`
//! of a [`MetricField`]. Conventions: `gamma[k][i][j] = Γ^k_ij`; the curvature
//! endomorphism is `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z` and the lowered
//! tensor is `Rm(X,Y,Z,W) = g(R(X,Y)W, Z)`, so `Rm(X,Y,X,Y)` is the sectional
//! numerator and the round sphere has scalar curvature `n(n−1)`.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correspondence::{
    chart_point_jets, curv_from_killing, killing_constancy_residual, killing_from_metric, metric_jet_from_entries,
    volume_ratio_f, ConstructionOptions, CurvatureMetric, KillingField, MetricField, MetricJet, RecoveryOptions,
    SymmetricField,
};
use crate::error::{Error, Result};
use crate::jet::{dot, Jet};
use crate::sphere::{
    dphi_t, phi_t, random_equator, random_group_element, random_point, random_unit_tangent, tangent_frame, Equator,
    GnomonicChart, SpherePoint,
};
use crate::tensor::{act, CurvatureTensor, GroupElement};

/// Tolerance on `|<p, v>|` for a point to count as lying on `Σ_v`.
pub const ON_EQUATOR_TOL: f64 = 1e-10;

fn inverse_spd(g: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let chol = Cholesky::<f64, Dyn>::new(g.clone())
        .ok_or_else(|| Error::Singular("metric matrix is not positive definite".into()))?;
    Ok((chol.inverse(), chol.determinant()))
}

/// Christoffel symbols of a metric in a chart.
#[derive(Debug, Clone)]
pub struct ChristoffelData {
    pub x: DVector<f64>,
    n: usize,
    gamma: Vec<f64>,
}

impl ChristoffelData {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }

    /// `max |Γ^k_ij − Γ^k_ji|`.
    pub fn torsion_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

/// `Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
fn lowered_christoffels(jet: &MetricJet) -> Vec<f64> {
    let n = jet.n();
    let mut low = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                low[(l * n + i) * n + j] = 0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
            }
        }
    }
    low
}

fn raise(ginv: &DMatrix<f64>, low: &[f64]) -> Vec<f64> {
    let n = ginv.nrows();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for l in 0..n {
            let gkl = ginv[(k, l)];
            if gkl == 0.0 {
                continue;
            }
            for ij in 0..n * n {
                out[k * n * n + ij] += gkl * low[l * n * n + ij];
            }
        }
    }
    out
}

/// Christoffel symbols from a chart jet.
pub fn christoffels_from_jet(jet: &MetricJet, x: &DVector<f64>) -> Result<ChristoffelData> {
    let (ginv, _) = inverse_spd(&jet.g)?;
    Ok(ChristoffelData {
        x: x.clone(),
        n: jet.n(),
        gamma: raise(&ginv, &lowered_christoffels(jet)),
    })
}

pub fn christoffels(g: &dyn MetricField, chart: &GnomonicChart, x: &DVector<f64>) -> Result<ChristoffelData> {
    christoffels_from_jet(&g.chart_jet(chart, x)?, x)
}

/// Round metric in gnomonic coordinates: `(r² δ − x xᵀ) / r⁴`, `r² = 1 + |x|²`.
pub fn round_chart_metric(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let r2 = 1.0 + x.norm_squared();
    (DMatrix::identity(n, n) * r2 - x * x.transpose()) / (r2 * r2)
}

/// Closed-form Christoffel symbols of the round metric in a gnomonic chart,
/// `Γ̄^k_ij = −(x_i δ_jk + x_j δ_ik) / r²` (straight lines are geodesics).
pub fn round_christoffels(x: &DVector<f64>) -> ChristoffelData {
    let n = x.len();
    let r2 = 1.0 + x.norm_squared();
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if j == k {
                    v -= x[i];
                }
                if i == k {
                    v -= x[j];
                }
                gamma[(k * n + i) * n + j] = v / r2;
            }
        }
    }
    ChristoffelData { x: x.clone(), n, gamma }
}

/// Derivatives of the height function `V̂(x) = <x, v>` in a chart.
#[derive(Debug, Clone)]
pub struct HeightDerivatives {
    pub value: f64,
    /// Coordinate differential `∂_i V̂`.
    pub differential: DVector<f64>,
    /// Coordinates of the g-gradient, `g^{ij} ∂_j V̂`.
    pub gradient: DVector<f64>,
    /// `|∇V̂|_g`.
    pub gradient_norm: f64,
    /// `Hess_g V̂` in chart coordinates.
    pub hessian: DMatrix<f64>,
    /// `Δ_g V̂ = tr_g Hess_g V̂`.
    pub laplacian: f64,
}

/// Height jet `V̂ ∘ P` through second order at chart coordinates `x`.
pub fn height_jet(chart: &GnomonicChart, x: &DVector<f64>, v: &DVector<f64>) -> Jet {
    let (p, _) = chart_point_jets(chart, x);
    Jet::linear_combination(v.as_slice(), &p)
}

fn height_from_parts(value: &Jet, g: &DMatrix<f64>, ginv: &DMatrix<f64>, gamma: &ChristoffelData) -> HeightDerivatives {
    let n = g.nrows();
    let differential = DVector::from_column_slice(&value.grad);
    let gradient = ginv * &differential;
    let gradient_norm = differential.dot(&gradient).max(0.0).sqrt();
    let hessian = DMatrix::from_fn(n, n, |i, j| {
        let mut h = value.h(i, j);
        for k in 0..n {
            h -= gamma.get(k, i, j) * differential[k];
        }
        h
    });
    let laplacian = (ginv.component_mul(&hessian)).sum();
    HeightDerivatives {
        value: value.value,
        differential,
        gradient,
        gradient_norm,
        hessian,
        laplacian,
    }
}

/// Height derivatives for the metric `g` at chart coordinates `x`.
pub fn height_in_chart(
    g: &dyn MetricField,
    chart: &GnomonicChart,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<HeightDerivatives> {
    let jet = g.chart_jet(chart, x)?;
    let (ginv, _) = inverse_spd(&jet.g)?;
    let gamma = ChristoffelData {
        x: x.clone(),
        n: jet.n(),
        gamma: raise(&ginv, &lowered_christoffels(&jet)),
    };
    Ok(height_from_parts(&height_jet(chart, x, v), &jet.g, &ginv, &gamma))
}

/// Height derivatives at `p`, expressed in the orthonormal (for the round metric)
/// frame of the chart centred at `p`.
pub fn height_derivatives(g: &dyn MetricField, v: &Equator, p: &SpherePoint) -> Result<HeightDerivatives> {
    let chart = GnomonicChart::centered_at(p);
    height_in_chart(g, &chart, &DVector::zeros(g.n()), v.normal())
}

fn check_on_equator(v: &Equator, p: &SpherePoint) -> Result<()> {
    let h = v.height(p.coords());
    if h.abs() > ON_EQUATOR_TOL {
        return Err(Error::Domain(format!("point is off the equator by {h:e}")));
    }
    Ok(())
}

/// Mean curvature of `Σ_v` at `p`: `(Δ_g V̂ − Hess_g V̂(N, N)) / |∇V̂|_g`.
pub fn mean_curvature_equator(g: &dyn MetricField, v: &Equator, p: &SpherePoint) -> Result<f64> {
    check_on_equator(v, p)?;
    let hd = height_derivatives(g, v, p)?;
    if hd.gradient_norm <= 0.0 {
        return Err(Error::Singular("height gradient vanishes".into()));
    }
    let nvec = &hd.gradient / hd.gradient_norm;
    let hnn = (nvec.transpose() * &hd.hessian * &nvec)[(0, 0)];
    Ok((hd.laplacian - hnn) / hd.gradient_norm)
}

/// Geometry of `Σ_v` at one of its points, in the chart centred at that point.
#[derive(Debug, Clone)]
pub struct EquatorPointGeometry {
    pub chart: GnomonicChart,
    /// Euclidean-orthonormal basis (columns) of the tangent hyperplane in chart coordinates.
    pub tangent: DMatrix<f64>,
    pub jet: MetricJet,
    pub christoffels: ChristoffelData,
    pub height: HeightDerivatives,
    /// Induced metric `h = Wᵀ g W`.
    pub induced: DMatrix<f64>,
    /// Second fundamental form `Wᵀ Hess W / |∇V̂|_g`.
    pub second_fundamental: DMatrix<f64>,
    /// Unit normal (chart coordinates).
    pub normal: DVector<f64>,
}

impl EquatorPointGeometry {
    pub fn at(g: &dyn MetricField, v: &Equator, p: &SpherePoint) -> Result<Self> {
        check_on_equator(v, p)?;
        let n = g.n();
        let chart = GnomonicChart::centered_at(p);
        let x = DVector::zeros(n);
        let jet = g.chart_jet(&chart, &x)?;
        let (ginv, _) = inverse_spd(&jet.g)?;
        let christoffels = ChristoffelData {
            x: x.clone(),
            n,
            gamma: raise(&ginv, &lowered_christoffels(&jet)),
        };
        let height = height_from_parts(&height_jet(&chart, &x, v.normal()), &jet.g, &ginv, &christoffels);
        if height.gradient_norm <= 0.0 {
            return Err(Error::Singular("height gradient vanishes".into()));
        }
        let a = &height.differential / height.differential.norm();
        let tangent = complement_basis(&a);
        let induced = tangent.transpose() * &jet.g * &tangent;
        let second_fundamental = tangent.transpose() * &height.hessian * &tangent / height.gradient_norm;
        let normal = &height.gradient / height.gradient_norm;
        Ok(Self {
            chart,
            tangent,
            jet,
            christoffels,
            height,
            induced,
            second_fundamental,
            normal,
        })
    }

    /// `tr_h A`, which equals the mean curvature.
    pub fn mean_curvature(&self) -> Result<f64> {
        let (hinv, _) = inverse_spd(&self.induced)?;
        Ok(hinv.component_mul(&self.second_fundamental).sum())
    }

    /// `|A|²_h`.
    pub fn second_fundamental_norm_sq(&self) -> Result<f64> {
        let (hinv, _) = inverse_spd(&self.induced)?;
        let m = &hinv * &self.second_fundamental;
        Ok((&m * &m).trace())
    }
}

/// Orthonormal basis (columns) of the orthogonal complement of a unit vector.
pub(crate) fn complement_basis(a: &DVector<f64>) -> DMatrix<f64> {
    let n = a.len();
    let pivot = a.iamax();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
    for i in (0..n).filter(|&i| i != pivot) {
        let mut w = DVector::zeros(n);
        w[i] = 1.0;
        for _ in 0..2 {
            w -= a * a.dot(&w);
            for c in &cols {
                w -= c * c.dot(&w);
            }
        }
        let norm = w.norm();
        cols.push(w / norm);
    }
    DMatrix::from_columns(&cols)
}

/// Second fundamental form of `Σ_v` at `p` in an h-orthonormal frame of `T_pΣ_v`.
pub fn second_fundamental_form(g: &dyn MetricField, v: &Equator, p: &SpherePoint) -> Result<DMatrix<f64>> {
    let geo = EquatorPointGeometry::at(g, v, p)?;
    let chol = Cholesky::<f64, Dyn>::new(geo.induced.clone())
        .ok_or_else(|| Error::Singular("induced metric is not positive definite".into()))?;
    // with h = L Lᵀ, the frame W L^{-T} is h-orthonormal
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Singular("induced metric factor is singular".into()))?;
    Ok(&linv * &geo.second_fundamental * linv.transpose())
}

/// The difference tensor `𝒯_{ijl} = g_lk (Γ − Γ̄)^k_ij` at chart coordinates `x`.
pub fn fundamental_tensor_array(g: &dyn MetricField, chart: &GnomonicChart, x: &DVector<f64>) -> Result<Vec<f64>> {
    let jet = g.chart_jet(chart, x)?;
    Ok(fundamental_from_jet(&jet, x)?.0)
}

fn fundamental_from_jet(jet: &MetricJet, x: &DVector<f64>) -> Result<(Vec<f64>, ChristoffelData)> {
    let n = jet.n();
    let gamma = christoffels_from_jet(jet, x)?;
    let round = round_christoffels(x);
    let mut t = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += jet.g[(l, k)] * (gamma.get(k, i, j) - round.get(k, i, j));
                }
                t[(i * n + j) * n + l] = s;
            }
        }
    }
    Ok((t, gamma))
}

/// `𝒯_g(X, Y, Z)` for chart vectors `X, Y, Z`.
pub fn fundamental_tensor(
    g: &dyn MetricField,
    chart: &GnomonicChart,
    x: &DVector<f64>,
    xv: &DVector<f64>,
    yv: &DVector<f64>,
    zv: &DVector<f64>,
) -> Result<f64> {
    let n = g.n();
    let t = fundamental_tensor_array(g, chart, x)?;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                s += t[(i * n + j) * n + l] * xv[i] * yv[j] * zv[l];
            }
        }
    }
    Ok(s)
}

/// `(∇̄g)_{ijl} = (∇̄_l g)_{ij}`.
fn round_covariant_derivative(jet: &MetricJet, x: &DVector<f64>) -> Vec<f64> {
    let n = jet.n();
    let round = round_christoffels(x);
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut s = jet.dg[l][(i, j)];
                for k in 0..n {
                    s -= round.get(k, l, i) * jet.g[(k, j)] + round.get(k, l, j) * jet.g[(i, k)];
                }
                out[(i * n + j) * n + l] = s;
            }
        }
    }
    out
}

fn symmetrize3(n: usize, t: &[f64]) -> Vec<f64> {
    let at = |i: usize, j: usize, l: usize| t[(i * n + j) * n + l];
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                out[(i * n + j) * n + l] =
                    (at(i, j, l) + at(j, i, l) + at(i, l, j) + at(l, i, j) + at(j, l, i) + at(l, j, i)) / 6.0;
            }
        }
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `d log ψ` with `ψ = sqrt(det g / det ḡ)`, from the chart jet.
fn dlog_psi(jet: &MetricJet, x: &DVector<f64>) -> Result<DVector<f64>> {
    let n = jet.n();
    let (ginv, _) = inverse_spd(&jet.g)?;
    let r2 = 1.0 + x.norm_squared();
    Ok(DVector::from_fn(n, |i, _| {
        0.5 * (&ginv * &jet.dg[i]).trace() + (n as f64 + 1.0) * x[i] / r2
    }))
}

/// Max-norm of `(∇̄g − 4/(n+1) d log ψ ⊗ g)^S` at chart coordinates `x`.
pub fn metric_equation_residual(g: &dyn MetricField, chart: &GnomonicChart, x: &DVector<f64>) -> Result<f64> {
    let jet = g.chart_jet(chart, x)?;
    let n = jet.n();
    let mut t = round_covariant_derivative(&jet, x);
    let dl = dlog_psi(&jet, x)?;
    let c = 4.0 / (n as f64 + 1.0);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                t[(i * n + j) * n + l] -= c * dl[l] * jet.g[(i, j)];
            }
        }
    }
    Ok(max_abs(&symmetrize3(n, &t)))
}

/// Max-norm of `(𝒯 − g ⊗ tr^{12}_g 𝒯)^S`, an equivalent form of the metric equation.
pub fn trace_form_residual(g: &dyn MetricField, chart: &GnomonicChart, x: &DVector<f64>) -> Result<f64> {
    let jet = g.chart_jet(chart, x)?;
    let n = jet.n();
    let (mut t, _) = fundamental_from_jet(&jet, x)?;
    let (ginv, _) = inverse_spd(&jet.g)?;
    let tau: Vec<f64> = (0..n)
        .map(|l| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += ginv[(i, j)] * t[(i * n + j) * n + l];
                }
            }
            s
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                t[(i * n + j) * n + l] -= jet.g[(i, j)] * tau[l];
            }
        }
    }
    Ok(max_abs(&symmetrize3(n, &t)))
}

/// Residuals of the four structural properties of `𝒯_g` at one chart point.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct LemmaResiduals {
    /// `𝒯(X,Y,Z) = 𝒯(Y,X,Z)`.
    pub symmetry: f64,
    /// `𝒯^S = ½ (∇̄g)^S`.
    pub half_derivative: f64,
    /// `tr^{23}_g 𝒯 = d log ψ`, against finite differences of the volume ratio.
    pub trace: f64,
    /// `𝒯(X, Y, ∇V̂) = −Hess V̂(X, Y)` at a point of `Σ_v`.
    pub hessian: f64,
}

impl LemmaResiduals {
    pub fn max(&self) -> f64 {
        self.symmetry
            .max(self.half_derivative)
            .max(self.trace)
            .max(self.hessian)
    }
}

/// Step used for the finite-difference volume-ratio oracle.
const PSI_STEP: f64 = 1e-4;

/// Evaluates the four properties at chart coordinates `x`; `v` must be
/// orthogonal to the point `P(x)` for the Hessian property.
pub fn lemma_residuals(
    g: &dyn MetricField,
    chart: &GnomonicChart,
    x: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<LemmaResiduals> {
    let n = g.n();
    let jet = g.chart_jet(chart, x)?;
    let (t, gamma) = fundamental_from_jet(&jet, x)?;
    let (ginv, _) = inverse_spd(&jet.g)?;
    let at = |i: usize, j: usize, l: usize| t[(i * n + j) * n + l];

    let mut symmetry: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                symmetry = symmetry.max((at(i, j, l) - at(j, i, l)).abs());
            }
        }
    }

    let ts = symmetrize3(n, &t);
    let ds = symmetrize3(n, &round_covariant_derivative(&jet, x));
    let half_derivative = ts.iter().zip(&ds).fold(0.0f64, |m, (a, b)| m.max((a - 0.5 * b).abs()));

    let psi = |y: &DVector<f64>| -> Result<f64> {
        let p = chart.to_sphere(y)?;
        Ok(volume_ratio_f(g, &p)?.powf((n as f64 + 1.0) / 4.0))
    };
    let mut trace: f64 = 0.0;
    for i in 0..n {
        let mut tr = 0.0;
        for j in 0..n {
            for l in 0..n {
                tr += ginv[(j, l)] * at(i, j, l);
            }
        }
        let mut e = DVector::zeros(n);
        e[i] = PSI_STEP;
        let fd = (psi(&(x + &e))?.ln() - psi(&(x - &e))?.ln()) / (2.0 * PSI_STEP);
        trace = trace.max((tr - fd).abs());
    }

    let p = chart.to_sphere(x)?;
    if p.coords().dot(v).abs() > ON_EQUATOR_TOL * v.norm() {
        return Err(Error::Domain("Hessian property needs a point on the equator".into()));
    }
    let hd = height_from_parts(&height_jet(chart, x, v), &jet.g, &ginv, &gamma);
    let mut hessian: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..n {
                s += at(i, j, l) * hd.gradient[l];
            }
            hessian = hessian.max((s + hd.hessian[(i, j)]).abs());
        }
    }
    Ok(LemmaResiduals {
        symmetry,
        half_derivative,
        trace,
        hessian,
    })
}

/// Max-norm of `Hess_ḡ V̂ + V̂ ḡ` at chart coordinates `x`.
pub fn obata_residual(chart: &GnomonicChart, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let gbar = round_chart_metric(x);
    let gamma = round_christoffels(x);
    let hj = height_jet(chart, x, v);
    let n = x.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut hess = hj.h(i, j);
            for k in 0..n {
                hess -= gamma.get(k, i, j) * hj.grad[k];
            }
            worst = worst.max((hess + hj.value * gbar[(i, j)]).abs());
        }
    }
    worst
}

/// Curvature of a metric at a chart point.
#[derive(Debug, Clone)]
pub struct MetricCurvature {
    n: usize,
    /// `rm[((i n + j) n + k) n + l] = Rm(∂_i, ∂_j, ∂_k, ∂_l)`.
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    /// `max |R^l_ijk + R^l_jki + R^l_kij|`.
    pub bianchi_residual: f64,
}

impl MetricCurvature {
    pub fn rm(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.riemann[((i * n + j) * n + k) * n + l]
    }

    /// `Ric(X, X)` for chart vector `X`.
    pub fn ricci_at(&self, xv: &DVector<f64>) -> f64 {
        (xv.transpose() * &self.ricci * xv)[(0, 0)]
    }
}

/// Curvature from a chart jet, using the closed-form second derivatives.
pub fn curvature_from_jet(jet: &MetricJet, x: &DVector<f64>) -> Result<MetricCurvature> {
    let n = jet.n();
    let (ginv, _) = inverse_spd(&jet.g)?;
    let low = lowered_christoffels(jet);
    let gamma = raise(&ginv, &low);
    let gi = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    // ∂_m Γ^k_ij = ∂_m g^{kl} Γ_{l,ij} + g^{kl} ∂_m Γ_{l,ij}
    let mut dgamma = vec![0.0; n * n * n * n];
    for m in 0..n {
        let dginv = -(&ginv * &jet.dg[m] * &ginv);
        let d2 = |a: usize, i: usize, j: usize| jet.d2(m, a)[(i, j)];
        let mut dlow = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dlow[(l * n + i) * n + j] = 0.5 * (d2(i, j, l) + d2(j, i, l) - d2(l, i, j));
                }
            }
        }
        let a = raise(&dginv, &low);
        let b = raise(&ginv, &dlow);
        for idx in 0..n * n * n {
            dgamma[m * n * n * n + idx] = a[idx] + b[idx];
        }
    }
    let dg = |m: usize, k: usize, i: usize, j: usize| dgamma[((m * n + k) * n + i) * n + j];
    // R^l_{ijk} = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    let mut up = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = dg(i, l, j, k) - dg(j, l, i, k);
                    for m in 0..n {
                        s += gi(l, i, m) * gi(m, j, k) - gi(l, j, m) * gi(m, i, k);
                    }
                    up[((l * n + i) * n + j) * n + k] = s;
                }
            }
        }
    }
    let upr = |l: usize, i: usize, j: usize, k: usize| up[((l * n + i) * n + j) * n + k];
    let mut bianchi_residual: f64 = 0.0;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let b = upr(l, i, j, k) + upr(l, j, k, i) + upr(l, k, i, j);
                    bianchi_residual = bianchi_residual.max(b.abs());
                }
            }
        }
    }
    // Rm_{ijkl} = g(R(∂_i, ∂_j)∂_l, ∂_k) = g_{ka} R^a_{ijl}
    let mut riemann = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for a in 0..n {
                        s += jet.g[(k, a)] * upr(a, i, j, l);
                    }
                    riemann[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    let ricci = DMatrix::from_fn(n, n, |j, l| (0..n).map(|i| upr(i, i, j, l)).sum());
    let ricci = (&ricci + ricci.transpose()) * 0.5;
    let scalar = ginv.component_mul(&ricci).sum();
    let _ = x;
    Ok(MetricCurvature {
        n,
        riemann,
        ricci,
        scalar,
        bianchi_residual,
    })
}

pub fn curvature_of_metric(g: &dyn MetricField, chart: &GnomonicChart, x: &DVector<f64>) -> Result<MetricCurvature> {
    curvature_from_jet(&g.chart_jet(chart, x)?, x)
}

/// Matrix of `(φ(T)^* g)_p` in the columns of `frame`.
pub fn pullback_matrix(
    g: &dyn SymmetricField,
    t: &GroupElement,
    p: &SpherePoint,
    frame: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let q = phi_t(t, p);
    let cols: Vec<DVector<f64>> = (0..frame.ncols())
        .map(|i| dphi_t(t, p, &frame.column(i).into_owned()))
        .collect();
    let images = DMatrix::from_columns(&cols);
    Ok(images.transpose() * g.ambient(&q)? * images)
}

/// `max |φ(T)^* g_R − g_{R·T}|` over seeded points, in orthonormal frames.
pub fn equivariance_residual(r: &CurvatureTensor, t: &GroupElement, samples: usize, seed: u64) -> Result<f64> {
    let opts = ConstructionOptions {
        allow_nonpositive: true,
        ..Default::default()
    };
    let g = crate::correspondence::metric_from_curv(r, opts)?;
    let gt = crate::correspondence::metric_from_curv(&act(r, t)?, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = r.n();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p = random_point(&mut rng, n);
        let frame = tangent_frame(&p);
        let lhs = pullback_matrix(&g, t, &p, &frame)?;
        let rhs = gt.frame_matrix(&p, &frame)?;
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}

/// `max |g_{−p}(−E) − g_p(E)|` over seeded points and their tangent frames.
pub fn antipodal_residual(g: &dyn SymmetricField, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p = random_point(&mut rng, g.n());
        let frame = tangent_frame(&p);
        let a = g.frame_matrix(&p, &frame)?;
        let b = g.frame_matrix(&p.antipode(), &(-&frame))?;
        worst = worst.max((a - b).amax());
    }
    Ok(worst)
}

/// `‖R·T − R‖_max`.
pub fn stabilizer_residual(r: &CurvatureTensor, t: &GroupElement) -> Result<f64> {
    Ok(act(r, t)?.max_abs_diff(r))
}

/// Seeded sample of points on `Σ_v`: the point of `Σ_v` closest to `e_0`
/// followed by points on random great circles of `Σ_v` through it.
pub fn equator_sample_points(v: &Equator, count: usize, rng: &mut impl Rng) -> Result<Vec<SpherePoint>> {
    let n = v.n();
    let normal = v.normal();
    let mut anchor = DVector::zeros(n + 1);
    anchor[0] = 1.0;
    anchor -= normal * normal.dot(&anchor);
    if anchor.norm() < 1e-8 {
        anchor = DVector::zeros(n + 1);
        anchor[1] = 1.0;
        anchor -= normal * normal.dot(&anchor);
    }
    let q = SpherePoint::normalize(anchor)?;
    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(q.clone());
    }
    while out.len() < count {
        let mut u = random_unit_tangent(rng, &q);
        u -= normal * normal.dot(&u);
        let norm = u.norm();
        if norm < 1e-8 {
            continue;
        }
        u /= norm;
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = q.coords() * t.cos() + u * t.sin();
        // re-project to remove rounding drift off the hyperplane
        let x = &x - normal * normal.dot(&x);
        out.push(SpherePoint::normalize(x)?);
    }
    Ok(out)
}

/// Largest `|H|` over seeded equators and points.
pub fn max_mean_curvature(g: &dyn MetricField, equators: usize, points: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(equators * points);
    for _ in 0..equators {
        let v = random_equator(&mut rng, g.n());
        for p in equator_sample_points(&v, points, &mut rng)? {
            jobs.push((v.clone(), p));
        }
    }
    let values: Result<Vec<f64>> = jobs
        .par_iter()
        .map(|(v, p)| mean_curvature_equator(g, v, p).map(f64::abs))
        .collect();
    Ok(values?.into_iter().fold(0.0, f64::max))
}

/// Largest metric-equation residual at chart centres over seeded points.
pub fn max_metric_equation_residual(g: &dyn MetricField, points: &[SpherePoint]) -> Result<f64> {
    let values: Result<Vec<f64>> = points
        .par_iter()
        .map(|p| metric_equation_residual(g, &GnomonicChart::centered_at(p), &DVector::zeros(g.n())))
        .collect();
    Ok(values?.into_iter().fold(0.0, f64::max))
}

/// The negative control `ḡ + A h(p) dV̂₀ ⊗ dV̂₀` with `h(p) = exp(−|p − p₀|² / w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpMetric {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
    pub direction: Vec<f64>,
}

impl BumpMetric {
    /// Amplitude 0.1 and width 0.04 centred at `e_0`, along `dV̂` for `v = e_1`.
    pub fn standard(n: usize) -> Self {
        let mut center = vec![0.0; n + 1];
        center[0] = 1.0;
        let mut direction = vec![0.0; n + 1];
        direction[1] = 1.0;
        Self {
            amplitude: 0.1,
            width: 0.04,
            center,
            direction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.center.len();
        if m < 3 || self.direction.len() != m {
            return Err(Error::Dimension(
                "bump centre and direction must share a length >= 3".into(),
            ));
        }
        if !(self.width > 0.0) || !(self.amplitude >= 0.0) {
            return Err(Error::Domain("bump needs width > 0 and amplitude >= 0".into()));
        }
        SpherePoint::from_slice(&self.center)?;
        Ok(())
    }

    fn bump(&self, p: &[f64]) -> f64 {
        let d2: f64 = p.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2 / self.width).exp()
    }
}

impl SymmetricField for BumpMetric {
    fn n(&self) -> usize {
        self.center.len() - 1
    }

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>> {
        let m = self.center.len();
        let c = p.coords();
        let v0 = DVector::from_column_slice(&self.direction);
        let mut a = DMatrix::identity(m, m) - c * c.transpose();
        a += &v0 * v0.transpose() * (self.amplitude * self.bump(p.as_slice()));
        Ok(a)
    }
}

impl MetricField for BumpMetric {
    fn chart_jet(&self, chart: &GnomonicChart, x: &DVector<f64>) -> Result<MetricJet> {
        chart.check(x)?;
        let n = chart.n();
        let (p, tangents) = chart_point_jets(chart, x);
        // |P − p₀|² = 2 − 2 <P, p₀> on the unit sphere
        let pc = Jet::linear_combination(&self.center, &p);
        let h = pc
            .scale(2.0 / self.width)
            .add_const(-2.0 / self.width)
            .exp()
            .scale(self.amplitude);
        let dv: Vec<Jet> = tangents
            .iter()
            .map(|t| Jet::linear_combination(&self.direction, t))
            .collect();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(&dot(&tangents[i], &tangents[j]) + &(&h * &(&dv[i] * &dv[j])));
            }
        }
        Ok(metric_jet_from_entries(n, &entries))
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckResult {
    pub residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(residual: f64, tolerance: f64, samples: usize, seed: u64) -> Self {
        Self {
            residual,
            tolerance,
            samples,
            seed,
            pass: residual <= tolerance,
        }
    }
}

/// Named residuals with their tolerances; passes iff every check passes.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct VerificationReport {
    pub checks: BTreeMap<String, CheckResult>,
}

impl VerificationReport {
    pub fn insert(&mut self, name: &str, result: CheckResult) {
        self.checks.insert(name.to_string(), result);
    }

    pub fn passed(&self) -> bool {
        self.checks.values().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Tolerances of the verification suite.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    pub roundtrip: f64,
    pub mean_curvature: f64,
    pub killing_constancy: f64,
    pub metric_equation: f64,
    pub equivariance: f64,
    pub antipodal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            roundtrip: 1e-8,
            mean_curvature: 1e-6,
            killing_constancy: 1e-10,
            metric_equation: 1e-6,
            equivariance: 1e-8,
            antipodal: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub equators: usize,
    pub points_per_equator: usize,
    pub circles: usize,
    pub samples_per_circle: usize,
    /// Random group elements for the equivariance check.
    pub group_elements: usize,
    /// Points per group element, and for the antipodal and metric-equation checks.
    pub samples: usize,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            equators: 50,
            points_per_equator: 20,
            circles: 100,
            samples_per_circle: 100,
            group_elements: 5,
            samples: 100,
            tolerances: Tolerances::default(),
        }
    }
}

fn sample_points(n: usize, count: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(&mut rng, n)).collect()
}

/// Checks shared by every metric: minimality, Killing constancy of `g/F`,
/// the metric equation, antipodal symmetry and reconstruction of `g/F`.
fn metric_checks(g: &dyn MetricField, cfg: &SuiteConfig, report: &mut VerificationReport) -> Result<Option<Recovered>> {
    let tol = cfg.tolerances;
    let n = g.n();
    let h = max_mean_curvature(g, cfg.equators, cfg.points_per_equator, cfg.seed)?;
    report.insert(
        "mean_curvature",
        CheckResult::new(h, tol.mean_curvature, cfg.equators * cfg.points_per_equator, cfg.seed),
    );
    let kg = killing_from_metric(g);
    let kc = killing_constancy_residual(&kg, cfg.circles, cfg.samples_per_circle, cfg.seed)?;
    report.insert(
        "killing_constancy",
        CheckResult::new(
            kc,
            tol.killing_constancy,
            cfg.circles * cfg.samples_per_circle,
            cfg.seed,
        ),
    );
    let pts = sample_points(n, cfg.samples, cfg.seed ^ 0x9e37);
    let me = max_metric_equation_residual(g, &pts)?;
    report.insert(
        "metric_equation",
        CheckResult::new(me, tol.metric_equation, pts.len(), cfg.seed),
    );
    let anti = antipodal_residual(g, cfg.samples, cfg.seed)?;
    report.insert(
        "antipodal",
        CheckResult::new(anti, tol.antipodal, cfg.samples, cfg.seed),
    );

    let rec = curv_from_killing(
        &kg,
        RecoveryOptions {
            seed: cfg.seed,
            ..Default::default()
        },
    )?;
    Ok(Some(Recovered {
        tensor: rec.tensor,
        residual: rec.residual,
    }))
}

struct Recovered {
    tensor: CurvatureTensor,
    residual: f64,
}

/// Full suite for a metric generated by a curvature tensor.
pub fn verify_tensor(r: &CurvatureTensor, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let g: CurvatureMetric = crate::correspondence::metric_from_curv(r, ConstructionOptions::default())?;
    let mut report = VerificationReport::default();
    let rec = metric_checks(&g, cfg, &mut report)?.expect("tensor suite always recovers");
    let samples = crate::basis::curv_basis(r.n())?.len() * RecoveryOptions::default().oversample;
    report.insert(
        "roundtrip",
        CheckResult::new(rec.tensor.max_abs_diff(r), cfg.tolerances.roundtrip, samples, cfg.seed),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7f4a);
    let mut eq: f64 = 0.0;
    for k in 0..cfg.group_elements {
        let t = random_group_element(&mut rng, r.n(), 0.3);
        eq = eq.max(equivariance_residual(
            r,
            &t,
            cfg.samples,
            cfg.seed.wrapping_add(k as u64),
        )?);
    }
    report.insert(
        "equivariance",
        CheckResult::new(
            eq,
            cfg.tolerances.equivariance,
            cfg.group_elements * cfg.samples,
            cfg.seed,
        ),
    );
    Ok(report)
}

/// Suite for a metric given only as an evaluator (no generator tensor). The
/// roundtrip check compares `g/F` with the Killing tensor of the recovered generator.
pub fn verify_metric(g: &dyn MetricField, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    let rec = metric_checks(g, cfg, &mut report)?.expect("metric suite always recovers");
    let kg = killing_from_metric(g);
    let kr = KillingField::from_tensor(rec.tensor);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x51);
    let mut worst = rec.residual;
    for _ in 0..cfg.samples {
        let p = random_point(&mut rng, g.n());
        let frame = tangent_frame(&p);
        worst = worst.max((kg.frame_matrix(&p, &frame)? - kr.frame_matrix(&p, &frame)?).amax());
    }
    report.insert(
        "roundtrip",
        CheckResult::new(worst, cfg.tolerances.roundtrip, cfg.samples, cfg.seed),
    );
    Ok(report)
}
