//! Algebraic curvature tensors on R^(n+1).
//!
//! A [`CurvatureTensor`] stores the dense coefficient array `R[i][j][k][l]`
//! (row-major, ambient dimension `m = n + 1`) of a 4-linear map with the
//! symmetries of a Riemannian curvature tensor:
//!
//! ```text
//! R(x,y,z,w) = -R(y,x,z,w)
//! R(x,y,z,w) = -R(x,y,w,z)
//! R(x,y,z,w) =  R(z,w,x,y)
//! R(x,y,z,w) + R(x,z,w,y) + R(x,w,y,z) = 0
//! ```
//!
//! `n` always denotes the dimension of the sphere S^n on which the tensor
//! induces a metric, so the ambient space is R^(n+1).

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::curv_basis;
use crate::error::{Error, Result};

/// Residual bound for a tensor to be accepted as an algebraic curvature tensor.
pub const CONSTRUCTION_TOLERANCE: f64 = 1e-12;

/// Smallest Gram determinant accepted for a plane.
pub const DEGENERATE_PLANE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTensor {
    n: usize,
    coeffs: Vec<f64>,
}

/// Max-norm violations of the four curvature-tensor symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResiduals {
    pub antisym_first: f64,
    pub antisym_second: f64,
    pub pair: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisym_first
            .max(self.antisym_second)
            .max(self.pair)
            .max(self.bianchi)
    }

    /// Returns the first symmetry whose residual exceeds `tol`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let named = [
            ("antisymmetry in the first pair", self.antisym_first),
            ("antisymmetry in the second pair", self.antisym_second),
            ("pair symmetry", self.pair),
            ("first Bianchi identity", self.bianchi),
        ];
        for (which, residual) in named {
            if !(residual <= tol) {
                return Err(Error::Symmetry {
                    which,
                    residual,
                    tolerance: tol,
                });
            }
        }
        Ok(())
    }
}

#[inline]
fn idx(m: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * m + j) * m + k) * m + l
}

/// Checks the four symmetries of a raw coefficient array for sphere dimension `n`.
pub fn validate(n: usize, coeffs: &[f64]) -> Result<SymmetryResiduals> {
    let m = n + 1;
    if coeffs.len() != m.pow(4) {
        return Err(Error::Dimension(format!(
            "expected {} coefficients for n = {n}, got {}",
            m.pow(4),
            coeffs.len()
        )));
    }
    let r = |i, j, k, l| coeffs[idx(m, i, j, k, l)];
    let mut res = SymmetryResiduals {
        antisym_first: 0.0,
        antisym_second: 0.0,
        pair: 0.0,
        bianchi: 0.0,
    };
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let v = r(i, j, k, l);
                    res.antisym_first = res.antisym_first.max((v + r(j, i, k, l)).abs());
                    res.antisym_second = res.antisym_second.max((v + r(i, j, l, k)).abs());
                    res.pair = res.pair.max((v - r(k, l, i, j)).abs());
                    res.bianchi = res.bianchi.max((v + r(i, k, l, j) + r(i, l, j, k)).abs());
                }
            }
        }
    }
    // NaN anywhere must not pass as zero residual
    if coeffs.iter().any(|c| !c.is_finite()) {
        res.antisym_first = f64::INFINITY;
    }
    Ok(res)
}

impl CurvatureTensor {
    /// Builds a tensor after checking all symmetries to [`CONSTRUCTION_TOLERANCE`].
    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::from_coeffs_with_tolerance(n, coeffs, CONSTRUCTION_TOLERANCE)
    }

    pub fn from_coeffs_with_tolerance(n: usize, coeffs: Vec<f64>, tol: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("sphere dimension must be >= 2, got {n}")));
        }
        validate(n, &coeffs)?.check(tol)?;
        Ok(Self { n, coeffs })
    }

    /// Internal constructor for arrays that satisfy the symmetries by construction.
    pub(crate) fn from_raw(n: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len(), (n + 1).pow(4));
        Self { n, coeffs }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_raw(n, vec![0.0; (n + 1).pow(4)])
    }

    /// Sphere dimension n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ambient dimension n + 1.
    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.coeffs[idx(self.n + 1, i, j, k, l)]
    }

    pub fn residuals(&self) -> SymmetryResiduals {
        validate(self.n, &self.coeffs).expect("shape is fixed at construction")
    }

    /// R(x, y, z, w).
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let m = self.n + 1;
        let mut total = 0.0;
        for i in 0..m {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for k in 0..m {
                    let xyz = xy * z[k];
                    if xyz == 0.0 {
                        continue;
                    }
                    let base = idx(m, i, j, k, 0);
                    let mut s = 0.0;
                    for l in 0..m {
                        s += self.coeffs[base + l] * w[l];
                    }
                    total += xyz * s;
                }
            }
        }
        total
    }

    /// The symmetric matrix `K(p)[b][d] = sum_{a,c} R[a][b][c][d] p_a p_c`, so that
    /// `R(p, v, p, w) = v^T K(p) w`. It annihilates `p`.
    pub fn killing_matrix(&self, p: &[f64]) -> DMatrix<f64> {
        let m = self.n + 1;
        let mut k = DMatrix::zeros(m, m);
        for a in 0..m {
            if p[a] == 0.0 {
                continue;
            }
            for c in 0..m {
                let w = p[a] * p[c];
                if w == 0.0 {
                    continue;
                }
                for b in 0..m {
                    for d in 0..m {
                        k[(b, d)] += w * self.coeffs[idx(m, a, b, c, d)];
                    }
                }
            }
        }
        k
    }

    /// Max-norm distance between coefficient arrays.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "tensor dimensions differ");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Euclidean (Frobenius) norm of the coefficient array.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl Add for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn add(self, rhs: &CurvatureTensor) -> CurvatureTensor {
        assert_eq!(self.n, rhs.n, "tensor dimensions differ");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect();
        CurvatureTensor::from_raw(self.n, coeffs)
    }
}

impl Sub for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn sub(self, rhs: &CurvatureTensor) -> CurvatureTensor {
        assert_eq!(self.n, rhs.n, "tensor dimensions differ");
        let coeffs = self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect();
        CurvatureTensor::from_raw(self.n, coeffs)
    }
}

impl Mul<f64> for &CurvatureTensor {
    type Output = CurvatureTensor;
    fn mul(self, s: f64) -> CurvatureTensor {
        CurvatureTensor::from_raw(self.n, self.coeffs.iter().map(|c| c * s).collect())
    }
}

/// `c * (<x,z><y,w> - <x,w><y,z>)`, the tensor of constant sectional curvature `c`.
pub fn constant_curvature(n: usize, c: f64) -> Result<CurvatureTensor> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension must be >= 2, got {n}")));
    }
    let m = n + 1;
    let mut coeffs = vec![0.0; m.pow(4)];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            coeffs[idx(m, i, j, i, j)] = c;
            coeffs[idx(m, i, j, j, i)] = -c;
        }
    }
    Ok(CurvatureTensor::from_raw(n, coeffs))
}

/// Round tensor (constant curvature one).
pub fn round(n: usize) -> Result<CurvatureTensor> {
    constant_curvature(n, 1.0)
}

/// Standard complex structure on R^(2m+2): pairs coordinates (2a, 2a+1), J e_{2a} = e_{2a+1}.
pub fn complex_structure(ambient: usize) -> DMatrix<f64> {
    assert!(ambient.is_multiple_of(2), "complex structure needs even dimension");
    let mut j = DMatrix::zeros(ambient, ambient);
    for a in 0..ambient / 2 {
        j[(2 * a + 1, 2 * a)] = 1.0;
        j[(2 * a, 2 * a + 1)] = -1.0;
    }
    j
}

/// Curvature tensor of complex projective space CP^m, acting on R^(2m+2).
pub fn fubini_study(m: usize) -> Result<CurvatureTensor> {
    if m < 2 {
        return Err(Error::Domain(format!("complex dimension must be >= 2, got {m}")));
    }
    let dim = 2 * m + 2;
    let n = dim - 1;
    let j = complex_structure(dim);
    // jm(a, b) = <e_a, J e_b>
    let jm = |a: usize, b: usize| j[(a, b)];
    let mut coeffs = vec![0.0; dim.pow(4)];
    for i in 0..dim {
        for jj in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let mut v = 0.0;
                    if i == k && jj == l {
                        v += 1.0;
                    }
                    if i == l && jj == k {
                        v -= 1.0;
                    }
                    // <Jx,z><Jy,w> - <Jx,w><Jy,z> + 2<Jx,y><Jz,w>
                    v += jm(k, i) * jm(l, jj) - jm(l, i) * jm(k, jj) + 2.0 * jm(jj, i) * jm(l, k);
                    coeffs[idx(dim, i, jj, k, l)] = v;
                }
            }
        }
    }
    Ok(CurvatureTensor::from_raw(n, coeffs))
}

/// Sectional curvature of the plane spanned by `x` and `y`.
pub fn sectional(r: &CurvatureTensor, x: &[f64], y: &[f64]) -> Result<f64> {
    let m = r.ambient_dim();
    if x.len() != m || y.len() != m {
        return Err(Error::Dimension(format!(
            "vectors must have length {m}, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let xx: f64 = x.iter().map(|a| a * a).sum();
    let yy: f64 = y.iter().map(|a| a * a).sum();
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let gram = xx * yy - xy * xy;
    if !(gram > DEGENERATE_PLANE) {
        return Err(Error::Domain(format!("degenerate plane, Gram determinant {gram:e}")));
    }
    Ok(r.eval(x, y, x, y) / gram)
}

/// An invertible linear map of R^(n+1).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    n: usize,
    matrix: DMatrix<f64>,
    det: f64,
}

impl GroupElement {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "group element must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() < 3 {
            return Err(Error::Domain("group element must act on R^(n+1), n >= 2".into()));
        }
        let det = matrix.clone().lu().determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::Singular(format!("determinant {det:e}")));
        }
        Ok(Self {
            n: matrix.nrows() - 1,
            matrix,
            det,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn scalar(n: usize, lambda: f64) -> Self {
        Self::new(DMatrix::identity(n + 1, n + 1) * lambda).expect("nonzero scalar")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// `|det T|^(4/(n+1))`; the sign of the determinant is tracked by [`GroupElement::det`].
    pub fn det_factor(&self) -> f64 {
        self.det.abs().powf(4.0 / (self.n as f64 + 1.0))
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("matrix is not invertible".into()))?;
        Self::new(inv)
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Dimension("group elements act on different spaces".into()));
        }
        Self::new(&self.matrix * &other.matrix)
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let m = self.n + 1;
        (self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(m, m)).amax() <= tol
    }
}

/// A skew-symmetric matrix, i.e. a Killing vector field p -> V p of the round sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    n: usize,
    matrix: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 3 {
            return Err(Error::Dimension("skew matrix must be square of size >= 3".into()));
        }
        let resid = (&matrix + matrix.transpose()).amax();
        if resid > 1e-14 {
            return Err(Error::Domain(format!("skew-symmetry residual {resid:e}")));
        }
        Ok(Self {
            n: matrix.nrows() - 1,
            matrix,
        })
    }

    /// Generator of rotations in the (a, b) coordinate plane: e_a -> e_b.
    pub fn rotation_generator(n: usize, a: usize, b: usize) -> Self {
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(b, a)] = 1.0;
        m[(a, b)] = -1.0;
        Self { n, matrix: m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, p: &[f64]) -> DVector<f64> {
        &self.matrix * DVector::from_column_slice(p)
    }
}

/// Contracts index `axis` of a dense 4-array with the columns of `t`:
/// `out[.., a, ..] = sum_i in[.., i, ..] t[i][a]`.
fn mode_product(m: usize, data: &[f64], t: &DMatrix<f64>, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    let stride = m.pow(3 - axis as u32);
    for (pos, value) in data.iter().enumerate() {
        if *value == 0.0 {
            continue;
        }
        let i = (pos / stride) % m;
        let base = pos - i * stride;
        for a in 0..m {
            let coef = t[(i, a)];
            if coef != 0.0 {
                out[base + a * stride] += value * coef;
            }
        }
    }
    out
}

/// Right action `(R.T)(x,y,z,w) = |det T|^(-4/(n+1)) R(Tx,Ty,Tz,Tw)`.
pub fn act(r: &CurvatureTensor, t: &GroupElement) -> Result<CurvatureTensor> {
    if r.n() != t.n() {
        return Err(Error::Dimension(format!(
            "tensor on R^{} cannot be acted on by a {}x{} matrix",
            r.ambient_dim(),
            t.n() + 1,
            t.n() + 1
        )));
    }
    let m = r.ambient_dim();
    let mut data = r.coeffs().to_vec();
    for axis in 0..4 {
        data = mode_product(m, &data, t.matrix(), axis);
    }
    let factor = t.det_factor();
    if factor != 1.0 {
        for v in &mut data {
            *v /= factor;
        }
    }
    Ok(CurvatureTensor::from_raw(r.n(), data))
}

/// Result of the multi-start sectional-curvature minimisation.
#[derive(Debug, Clone)]
pub struct SecMin {
    pub value: f64,
    /// Orthonormal pair spanning the minimising plane.
    pub plane: (DVector<f64>, DVector<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            iters: 600,
            seed: 0x5eed,
        }
    }
}

fn orthonormalize_pair(x: &DVector<f64>, y: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let nx = x.norm();
    if nx < 1e-300 {
        return None;
    }
    let x = x / nx;
    let y = y - &x * x.dot(y);
    let ny = y.norm();
    if ny < 1e-12 {
        return None;
    }
    Some((x, y / ny))
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        let norm: f64 = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

fn plane_value(r: &CurvatureTensor, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    r.eval(x.as_slice(), y.as_slice(), x.as_slice(), y.as_slice())
}

fn descend(r: &CurvatureTensor, mut x: DVector<f64>, mut y: DVector<f64>, iters: usize) -> SecMin {
    let mut f = plane_value(r, &x, &y);
    for _ in 0..iters {
        // Euclidean gradient of R(x,y,x,y): (2 K(y) x, 2 K(x) y)
        let gx = r.killing_matrix(y.as_slice()) * &x * 2.0;
        let gy = r.killing_matrix(x.as_slice()) * &y * 2.0;
        // tangent projection onto the Stiefel manifold of orthonormal pairs
        let s11 = x.dot(&gx);
        let s22 = y.dot(&gy);
        let s12 = 0.5 * (x.dot(&gy) + y.dot(&gx));
        let px = &gx - &x * s11 - &y * s12;
        let py = &gy - &x * s12 - &y * s22;
        let gnorm2 = px.norm_squared() + py.norm_squared();
        if gnorm2 < 1e-26 {
            break;
        }
        let mut step = 0.05;
        let mut moved = false;
        while step > 1e-10 {
            if let Some((cx, cy)) = orthonormalize_pair(&(&x - &px * step), &(&y - &py * step)) {
                let fc = plane_value(r, &cx, &cy);
                if fc <= f - 1e-4 * step * gnorm2 {
                    x = cx;
                    y = cy;
                    f = fc;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    SecMin {
        value: f,
        plane: (x, y),
    }
}

/// Multi-start projected-gradient minimisation of the sectional curvature over
/// orthonormal pairs. Deterministic given `opts.seed`. This is a numerical
/// probe: it finds local minima, not a certified global minimum.
pub fn sec_min_estimate(r: &CurvatureTensor, opts: ProbeOptions) -> SecMin {
    use rayon::prelude::*;
    let m = r.ambient_dim();
    let restarts = opts.restarts.max(1);
    let results: Vec<SecMin> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64 + 1);
            let (x, y) = loop {
                let x = random_unit(&mut rng, m);
                let y = random_unit(&mut rng, m);
                if let Some(pair) = orthonormalize_pair(&x, &y) {
                    break pair;
                }
            };
            descend(r, x, y, opts.iters)
        })
        .collect();
    // first minimum in restart order, independent of scheduling
    results
        .into_iter()
        .reduce(|best, cand| if cand.value < best.value { cand } else { best })
        .expect("at least one restart")
}

/// Outcome of a positivity probe.
#[derive(Debug, Clone)]
pub struct PositivityProbe {
    pub positive: bool,
    pub min_sectional: f64,
    pub witness: (DVector<f64>, DVector<f64>),
}

/// Numerical probe for positive sectional curvature: true iff the best local
/// minimum found by [`sec_min_estimate`] is at least `margin`.
pub fn is_positive(r: &CurvatureTensor, margin: f64, opts: ProbeOptions) -> PositivityProbe {
    let est = sec_min_estimate(r, opts);
    PositivityProbe {
        positive: est.value >= margin,
        min_sectional: est.value,
        witness: est.plane,
    }
}

/// A seeded random tensor `round + eps * D` with `D` a unit direction in Curv.
#[derive(Debug, Clone)]
pub struct RandomTensor {
    pub tensor: CurvatureTensor,
    pub direction: CurvatureTensor,
    pub eps: f64,
    pub margin: f64,
}

/// Positivity margin required of generated random tensors.
pub const RANDOM_MARGIN: f64 = 0.1;

/// A unit-norm (Frobenius) random element of Curv(R^(n+1)), drawn from the seed.
pub fn random_direction(n: usize, seed: u64) -> Result<CurvatureTensor> {
    let basis = curv_basis(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..basis.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let unit: Vec<f64> = weights.iter().map(|w| w / norm).collect();
    Ok(basis.combine_orthonormal(&unit))
}

/// Draws `round + eps * D`, shrinking `eps` by bisection until the positivity
/// probe reports a margin of at least [`RANDOM_MARGIN`].
pub fn random_positive(n: usize, eps: f64, seed: u64) -> Result<RandomTensor> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("eps must be non-negative, got {eps}")));
    }
    let base = round(n)?;
    let direction = random_direction(n, seed)?;
    let opts = ProbeOptions {
        seed: seed.wrapping_add(1),
        ..ProbeOptions::default()
    };
    let build = |e: f64| &base + &(&direction * e);
    let probe = |t: &CurvatureTensor| sec_min_estimate(t, opts).value;

    let candidate = build(eps);
    let margin = probe(&candidate);
    if margin >= RANDOM_MARGIN {
        return Ok(RandomTensor {
            tensor: candidate,
            direction,
            eps,
            margin,
        });
    }
    let (mut lo, mut hi) = (0.0, eps);
    let mut lo_margin = 1.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let v = probe(&build(mid));
        if v >= RANDOM_MARGIN {
            lo = mid;
            lo_margin = v;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 * eps.max(1.0) {
            break;
        }
    }
    Ok(RandomTensor {
        tensor: build(lo),
        direction,
        eps: lo,
        margin: lo_margin,
    })
}
