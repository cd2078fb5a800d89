//! Jacobi operator `η ↦ Δη + (Ric(N,N) + |A|²) η` of an equator of S^3.
//!
//! Functions on `Σ_v` are expanded in round spherical harmonics of the
//! 2-sphere `Σ_v`. The spectrum comes from the weak form (stiffness and mass
//! matrices under the induced area element); pointwise values of `𝒥η` use the
//! strong form with exact jet derivatives of the harmonics.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::harmonics::{harmonic_count, harmonic_labels, real_harmonics};
use crate::correspondence::{chart_point_jets_along, MetricField};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quadrature::{equator_quadrature, QuadratureRule};
use crate::sphere::{Equator, SpherePoint};
use crate::tensor::SkewMatrix;
use crate::verification::{curvature_from_jet, EquatorPointGeometry};

/// Quadrature order used when none is given: exact for products of degree `2L + 16`.
pub fn default_order(degree: usize) -> usize {
    (degree + 8).max(24)
}

#[derive(Debug, Clone)]
pub struct MeshNode {
    pub point: SpherePoint,
    /// Round quadrature weight.
    pub weight: f64,
    /// `dA_g / dA_round`.
    pub area_density: f64,
    /// Induced metric in the surface coordinates of the node's chart.
    pub induced: DMatrix<f64>,
    /// g-unit normal as an ambient vector.
    pub normal: DVector<f64>,
    /// `Ric(N, N) + |A|²`.
    pub potential: f64,
    pub geometry: EquatorPointGeometry,
}

/// Quadrature nodes on an equator of S^3 with the induced geometry at each node.
#[derive(Debug, Clone)]
pub struct EquatorMesh {
    pub equator: Equator,
    pub rule: QuadratureRule,
    pub nodes: Vec<MeshNode>,
}

impl EquatorMesh {
    pub fn build(g: &dyn MetricField, v: &Equator, order: usize) -> Result<Self> {
        if g.n() != 3 || v.n() != 3 {
            return Err(Error::Unsupported("Jacobi analysis is implemented on S^3 only".into()));
        }
        let rule = equator_quadrature(v, order, 0)?;
        let mut nodes = Vec::with_capacity(rule.len());
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let p = SpherePoint::normalize(x.clone())?;
            let geometry = EquatorPointGeometry::at(g, v, &p)?;
            let det = geometry.induced.determinant();
            if !(det > 0.0) {
                return Err(Error::Positivity("induced metric is not positive definite".into()));
            }
            let curv = curvature_from_jet(&geometry.jet, &DVector::zeros(3))?;
            let potential = curv.ricci_at(&geometry.normal) + geometry.second_fundamental_norm_sq()?;
            let normal = geometry.chart.frame() * &geometry.normal;
            nodes.push(MeshNode {
                point: p,
                weight: *w,
                area_density: det.sqrt(),
                induced: geometry.induced.clone(),
                normal,
                potential,
                geometry,
            });
        }
        Ok(Self {
            equator: v.clone(),
            rule,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.area_density).sum()
    }

    /// Values of `g(K p, N)` at the nodes.
    pub fn normal_component(&self, k: &SkewMatrix) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|node| {
                let geo = &node.geometry;
                let kp = k.apply(node.point.as_slice());
                let coords = geo.chart.frame().transpose() * kp;
                (coords.transpose() * &geo.jet.g * &geo.normal)[(0, 0)]
            })
            .collect()
    }
}

/// Harmonic jets in the surface coordinates of a node.
fn node_harmonics(v: &Equator, node: &MeshNode, degree: usize) -> Vec<Jet> {
    let geo = &node.geometry;
    let (p, _) = chart_point_jets_along(&geo.chart, &DVector::zeros(3), &geo.tangent);
    let hb = v.hyperplane_basis();
    let u: Vec<Jet> = (0..3)
        .map(|k| Jet::linear_combination(hb.column(k).as_slice(), &p))
        .collect();
    real_harmonics([&u[0], &u[1], &u[2]], degree)
}

/// Surface Laplacian `h^{ab}(∂_ab f − Γ^c_ab ∂_c f)` data at a node: `(h^{-1}, Γ)`.
fn surface_connection(node: &MeshNode) -> Result<(DMatrix<f64>, [[[f64; 2]; 2]; 2])> {
    let geo = &node.geometry;
    let w = &geo.tangent;
    let dh: Vec<DMatrix<f64>> = (0..2)
        .map(|c| {
            let mut d = DMatrix::zeros(3, 3);
            for k in 0..3 {
                d += &geo.jet.dg[k] * w[(k, c)];
            }
            w.transpose() * d * w
        })
        .collect();
    let hinv = node
        .induced
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("induced metric is singular".into()))?;
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for c in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for d in 0..2 {
                    s += hinv[(c, d)] * (dh[a][(b, d)] + dh[b][(a, d)] - dh[d][(a, b)]);
                }
                gamma[c][a][b] = 0.5 * s;
            }
        }
    }
    Ok((hinv, gamma))
}

/// Galerkin discretisation of the Jacobi operator in harmonics of degree `<= degree`.
#[derive(Debug, Clone)]
pub struct JacobiGalerkin {
    pub degree: usize,
    pub labels: Vec<(usize, i64)>,
    /// `∫ <∇Y_a, ∇Y_b>_h − q Y_a Y_b dA_g`, the form of `−𝒥`.
    pub stiffness: DMatrix<f64>,
    /// `∫ Y_a Y_b dA_g`.
    pub mass: DMatrix<f64>,
    /// `Y_a` at the nodes (rows).
    values: DMatrix<f64>,
    /// `𝒥 Y_a` at the nodes (rows), strong form.
    jacobi: DMatrix<f64>,
    /// `weight * area_density` per node.
    measure: DVector<f64>,
}

impl JacobiGalerkin {
    pub fn assemble(mesh: &EquatorMesh, degree: usize) -> Result<Self> {
        let k = harmonic_count(degree);
        let nn = mesh.len();
        let mut values = DMatrix::zeros(nn, k);
        let mut jacobi = DMatrix::zeros(nn, k);
        let mut grads = DMatrix::zeros(2 * nn, k);
        let mut measure = DVector::zeros(nn);
        let mut scaled_potential = DMatrix::zeros(nn, k);
        for (row, node) in mesh.nodes.iter().enumerate() {
            let ys = node_harmonics(&mesh.equator, node, degree);
            let (hinv, gamma) = surface_connection(node)?;
            let chol = Cholesky::<f64, Dyn>::new(hinv.clone())
                .ok_or_else(|| Error::Singular("induced metric is not positive definite".into()))?;
            let lt = chol.l().transpose();
            let om = node.weight * node.area_density;
            measure[row] = om;
            let so = om.sqrt();
            for (a, y) in ys.iter().enumerate() {
                values[(row, a)] = y.value;
                let mut lap = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        let mut second = y.h(i, j);
                        for c in 0..2 {
                            second -= gamma[c][i][j] * y.grad[c];
                        }
                        lap += hinv[(i, j)] * second;
                    }
                }
                jacobi[(row, a)] = lap + node.potential * y.value;
                // rows of sqrt(ω) Lᵀ ∇Y with h^{-1} = L Lᵀ
                for i in 0..2 {
                    let mut s = 0.0;
                    for j in 0..2 {
                        s += lt[(i, j)] * y.grad[j];
                    }
                    grads[(2 * row + i, a)] = so * s;
                }
                scaled_potential[(row, a)] = om * node.potential * y.value;
            }
        }
        let weighted = DMatrix::from_fn(nn, k, |r, a| measure[r] * values[(r, a)]);
        let mass = values.transpose() * &weighted;
        let stiffness = grads.transpose() * &grads - values.transpose() * &scaled_potential;
        let mass = (&mass + mass.transpose()) * 0.5;
        let stiffness = (&stiffness + stiffness.transpose()) * 0.5;
        Ok(Self {
            degree,
            labels: harmonic_labels(degree),
            stiffness,
            mass,
            values,
            jacobi,
            measure,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Generalised eigenvalues of `(stiffness, mass)` in increasing order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = Cholesky::<f64, Dyn>::new(self.mass.clone())
            .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .try_inverse()
            .ok_or_else(|| Error::Singular("mass factor is singular".into()))?;
        let c = &linv * &self.stiffness * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    /// `L²(dA_g)` projection of node values onto the harmonic basis.
    pub fn project(&self, node_values: &[f64]) -> Result<DVector<f64>> {
        if node_values.len() != self.values.nrows() {
            return Err(Error::Dimension("one value per mesh node is required".into()));
        }
        let f = DVector::from_fn(node_values.len(), |r, _| self.measure[r] * node_values[r]);
        let rhs = self.values.transpose() * f;
        let chol = Cholesky::<f64, Dyn>::new(self.mass.clone())
            .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
        Ok(chol.solve(&rhs))
    }

    /// Values of the expansion at the nodes.
    pub fn evaluate(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs)?;
        Ok(&self.values * coeffs)
    }

    /// `𝒥η` at the nodes for `η = Σ c_a Y_a`.
    pub fn apply(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs)?;
        Ok(&self.jacobi * coeffs)
    }

    /// Coefficients of the Galerkin Jacobi operator `−M⁻¹ S c`, the projection of `𝒥η` onto the basis.
    pub fn galerkin_apply(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs)?;
        let chol = Cholesky::<f64, Dyn>::new(self.mass.clone())
            .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
        Ok(-chol.solve(&(&self.stiffness * coeffs)))
    }

    fn check_len(&self, coeffs: &DVector<f64>) -> Result<()> {
        if coeffs.len() > self.len() {
            return Err(Error::Domain(format!(
                "{} coefficients exceed the degree-{} basis",
                coeffs.len(),
                self.degree
            )));
        }
        if coeffs.len() != self.len() {
            return Err(Error::Dimension("coefficient count does not match the basis".into()));
        }
        Ok(())
    }
}

/// `𝒥_g η` at the mesh nodes of `Σ_v`, for `η` given by harmonic coefficients.
pub fn jacobi_apply(g: &dyn MetricField, v: &Equator, coeffs: &[f64], order: usize) -> Result<Vec<f64>> {
    let mut degree = 0;
    while harmonic_count(degree) < coeffs.len() {
        degree += 1;
    }
    if harmonic_count(degree) != coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients do not fill a complete harmonic basis",
            coeffs.len()
        )));
    }
    let mesh = EquatorMesh::build(g, v, order)?;
    let gal = JacobiGalerkin::assemble(&mesh, degree)?;
    Ok(gal
        .apply(&DVector::from_column_slice(coeffs))?
        .iter()
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectrumReport {
    pub degree: usize,
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `−tolerance`.
    pub negative: usize,
    /// Eigenvalues within `tolerance` of zero.
    pub near_zero: usize,
    pub tolerance: f64,
}

impl SpectrumReport {
    pub fn from_eigenvalues(degree: usize, eigenvalues: Vec<f64>, tolerance: f64) -> Self {
        let negative = eigenvalues.iter().filter(|&&e| e < -tolerance).count();
        let near_zero = eigenvalues.iter().filter(|&&e| e.abs() <= tolerance).count();
        Self {
            degree,
            eigenvalues,
            negative,
            near_zero,
            tolerance,
        }
    }
}

/// Index and nullity counts of the Galerkin Jacobi form on `Σ_v`.
pub fn jacobi_spectrum_probe(
    g: &dyn MetricField,
    v: &Equator,
    degree: usize,
    order: usize,
    tolerance: f64,
) -> Result<SpectrumReport> {
    let mesh = EquatorMesh::build(g, v, order)?;
    let gal = JacobiGalerkin::assemble(&mesh, degree)?;
    Ok(SpectrumReport::from_eigenvalues(degree, gal.eigenvalues()?, tolerance))
}

fn wedge(a: &DVector<f64>, b: &DVector<f64>) -> SkewMatrix {
    SkewMatrix::new(b * a.transpose() - a * b.transpose()).expect("wedge of two vectors is skew")
}

/// Rotations `b ∧ v` (moving `v` towards `b` for `b` in a basis of `v^⊥`); the normal
/// components of their fields along `Σ_v` span the rotational Jacobi functions.
pub fn jacobi_witness_generators(v: &Equator) -> Vec<SkewMatrix> {
    let hb = v.hyperplane_basis();
    (0..hb.ncols())
        .map(|k| wedge(v.normal(), &hb.column(k).into_owned()))
        .collect()
}

/// Rotations fixing `v`, whose fields are tangent to `Σ_v`.
pub fn tangent_generators(v: &Equator) -> Vec<SkewMatrix> {
    let hb = v.hyperplane_basis();
    let mut out = Vec::new();
    for i in 0..hb.ncols() {
        for j in (i + 1)..hb.ncols() {
            out.push(wedge(&hb.column(i).into_owned(), &hb.column(j).into_owned()));
        }
    }
    out
}

/// How well the rotational Jacobi functions are annihilated.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct WitnessResidual {
    /// `max_K ‖P 𝒥 P η_K‖∞` with `P` the projection onto the harmonic basis, i.e. the
    /// Galerkin operator applied to the projected function.
    pub sup_norm: f64,
    /// `max_K ‖𝒥 P η_K‖∞`, the strong form applied to the projection.
    pub strong_sup_norm: f64,
    /// `max_K ‖η_K − P η_K‖∞`.
    pub projection_error: f64,
    /// `max_K ‖η_K‖∞`.
    pub amplitude: f64,
}

pub fn jacobi_witness_residual(
    g: &dyn MetricField,
    v: &Equator,
    degree: usize,
    order: usize,
) -> Result<WitnessResidual> {
    let mesh = EquatorMesh::build(g, v, order)?;
    let gal = JacobiGalerkin::assemble(&mesh, degree)?;
    let mut out = WitnessResidual {
        sup_norm: 0.0,
        strong_sup_norm: 0.0,
        projection_error: 0.0,
        amplitude: 0.0,
    };
    for k in jacobi_witness_generators(v) {
        let eta = mesh.normal_component(&k);
        let c = gal.project(&eta)?;
        let back = gal.evaluate(&c)?;
        let j = gal.apply(&c)?;
        let weak = gal.evaluate(&gal.galerkin_apply(&c)?)?;
        out.sup_norm = out.sup_norm.max(weak.amax());
        out.strong_sup_norm = out.strong_sup_norm.max(j.amax());
        out.amplitude = out.amplitude.max(eta.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        for (a, b) in eta.iter().zip(back.iter()) {
            out.projection_error = out.projection_error.max((a - b).abs());
        }
    }
    Ok(out)
}
