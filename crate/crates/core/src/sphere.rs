//! Geometry of the unit sphere S^n ⊂ R^(n+1): points, tangent frames, equators,
//! great circles, gnomonic charts and the projective maps `x -> Tx/|Tx|`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::GroupElement;

const UNIT_TOL: f64 = 1e-12;

/// A unit vector of R^(n+1).
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(DVector<f64>);

impl SpherePoint {
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::Domain(format!("point has norm {norm}, expected 1")));
        }
        if coords.len() < 3 {
            return Err(Error::Dimension("points must live in R^(n+1), n >= 2".into()));
        }
        Ok(Self(coords))
    }

    /// Normalises a nonzero vector onto the sphere.
    pub fn normalize(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if !(norm > 1e-300) {
            return Err(Error::Domain("cannot normalise the zero vector".into()));
        }
        Self::new(coords / norm)
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::normalize(DVector::from_column_slice(coords))
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n + 1);
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    /// Sphere dimension n.
    pub fn n(&self) -> usize {
        self.0.len() - 1
    }

    pub fn antipode(&self) -> Self {
        Self(-&self.0)
    }
}

/// The equator `{x : <x, v> = 0}`, keyed by its canonicalised unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Equator {
    normal: DVector<f64>,
}

impl Equator {
    /// Normalises `v` and flips its sign so that the first nonzero coordinate is positive.
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let p = SpherePoint::normalize(v)?;
        let mut normal = p.0;
        if let Some(first) = normal.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                normal = -normal;
            }
        }
        Ok(Self { normal })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(v))
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    pub fn n(&self) -> usize {
        self.normal.len() - 1
    }

    /// Signed height `<x, v>` of a point over the equator.
    pub fn height(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.normal)
    }

    /// Orthonormal basis of the hyperplane `v^⊥` (the ambient space of the equator).
    pub fn hyperplane_basis(&self) -> DMatrix<f64> {
        tangent_frame(&SpherePoint(self.normal.clone()))
    }
}

/// Orthonormal basis of `T_p S^n`, as the columns of an `(n+1) x n` matrix.
///
/// Gram–Schmidt on the standard basis with the coordinate most aligned with `p`
/// removed (lowest index on ties).
pub fn tangent_frame(p: &SpherePoint) -> DMatrix<f64> {
    let m = p.0.len();
    let mut drop = 0;
    for i in 1..m {
        if p.0[i].abs() > p.0[drop].abs() {
            drop = i;
        }
    }
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for i in (0..m).filter(|&i| i != drop) {
        let mut v = DVector::zeros(m);
        v[i] = 1.0;
        for _ in 0..2 {
            let c = v.dot(&p.0);
            v -= &p.0 * c;
            for q in &cols {
                let c = v.dot(q);
                v -= q * c;
            }
        }
        let norm = v.norm();
        cols.push(v / norm);
    }
    DMatrix::from_columns(&cols)
}

/// Point and velocity of the unit-speed great circle `cos t p + sin t u`.
pub fn great_circle(p: &SpherePoint, u: &DVector<f64>, t: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    if u.len() != p.0.len() {
        return Err(Error::Dimension("tangent vector has the wrong length".into()));
    }
    if (u.norm() - 1.0).abs() > 1e-10 || u.dot(&p.0).abs() > 1e-10 {
        return Err(Error::Domain("great circle needs a unit vector tangent at p".into()));
    }
    let (s, c) = t.sin_cos();
    Ok((&p.0 * c + u * s, u * c - &p.0 * s))
}

/// `phi(T)(p) = Tp / |Tp|`.
pub fn phi_t(t: &GroupElement, p: &SpherePoint) -> SpherePoint {
    let tp = t.matrix() * &p.0;
    let norm = tp.norm();
    SpherePoint(tp / norm)
}

/// Differential of `phi(T)` at `p` applied to the tangent vector `w`.
pub fn dphi_t(t: &GroupElement, p: &SpherePoint, w: &DVector<f64>) -> DVector<f64> {
    let tp = t.matrix() * &p.0;
    let tw = t.matrix() * w;
    let r2 = tp.norm_squared();
    (&tw - &tp * (tw.dot(&tp) / r2)) / r2.sqrt()
}

/// Closed form `|det T|^(4/(n+1)) / |Tp|^4` of the density `delta(T)` defined by
/// `phi(T)^* dV = delta^((n+1)/4) dV`. The orientation of `T` is `T.det().signum()`.
pub fn jacobian_density(t: &GroupElement, p: &SpherePoint) -> f64 {
    let tp = t.matrix() * &p.0;
    t.det_factor() / tp.norm_squared().powi(2)
}

/// Same density from the Gram determinant of the image of a tangent frame under `dphi(T)`.
pub fn volume_distortion_density(t: &GroupElement, p: &SpherePoint) -> f64 {
    let frame = tangent_frame(p);
    let n = frame.ncols();
    let images: Vec<DVector<f64>> = (0..n).map(|i| dphi_t(t, p, &frame.column(i).into_owned())).collect();
    let gram = DMatrix::from_fn(n, n, |i, j| images[i].dot(&images[j]));
    // |volume distortion| = sqrt(det gram) = delta^((n+1)/4)
    let jac = gram.determinant().abs().sqrt();
    jac.powf(4.0 / (n as f64 + 1.0))
}

/// Normal of the image equator: `phi(T)` maps `Σ_v` onto `Σ_{(T^{-1})^T v}`.
pub fn image_equator(t: &GroupElement, v: &Equator) -> Result<Equator> {
    let inv = t.inverse()?;
    Equator::new(inv.matrix().transpose() * v.normal())
}

/// Gnomonic (central) chart from the open hemisphere centred at `center` onto R^n:
/// `x -> (c + E x) / |c + E x|`, with `E` an orthonormal tangent frame at `c`.
/// Great circles map to straight lines and equators to affine hyperplanes.
#[derive(Debug, Clone)]
pub struct GnomonicChart {
    center: SpherePoint,
    frame: DMatrix<f64>,
}

/// Coordinates beyond this radius are rejected.
pub const CHART_RADIUS: f64 = 10.0;

impl GnomonicChart {
    pub fn centered_at(center: &SpherePoint) -> Self {
        Self {
            frame: tangent_frame(center),
            center: center.clone(),
        }
    }

    pub fn with_frame(center: &SpherePoint, frame: DMatrix<f64>) -> Result<Self> {
        let m = center.0.len();
        if frame.nrows() != m || frame.ncols() != m - 1 {
            return Err(Error::Dimension("chart frame must be (n+1) x n".into()));
        }
        let gram = frame.transpose() * &frame;
        let ortho = (gram - DMatrix::<f64>::identity(m - 1, m - 1)).amax();
        let perp = (frame.transpose() * &center.0).amax();
        if ortho > 1e-12 || perp > 1e-12 {
            return Err(Error::Domain("chart frame must be orthonormal and tangent".into()));
        }
        Ok(Self {
            center: center.clone(),
            frame,
        })
    }

    pub fn center(&self) -> &SpherePoint {
        &self.center
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.frame.ncols()
    }

    pub fn check(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension("chart coordinates have the wrong length".into()));
        }
        if !(x.norm() < CHART_RADIUS) {
            return Err(Error::Domain(format!(
                "chart coordinate radius {} exceeds {CHART_RADIUS}",
                x.norm()
            )));
        }
        Ok(())
    }

    /// Unnormalised ambient point `c + E x`.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.center.0 + &self.frame * x
    }

    pub fn to_sphere(&self, x: &DVector<f64>) -> Result<SpherePoint> {
        self.check(x)?;
        SpherePoint::normalize(self.lift(x))
    }

    pub fn from_sphere(&self, p: &SpherePoint) -> Result<DVector<f64>> {
        let h = p.0.dot(&self.center.0);
        if !(h > 0.0) {
            return Err(Error::Domain("point is outside the chart hemisphere".into()));
        }
        let x = self.frame.transpose() * &p.0 / h;
        self.check(&x)?;
        Ok(x)
    }
}

/// Uniformly distributed point on S^n.
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> SpherePoint {
    loop {
        let v = DVector::from_fn(n + 1, |_, _| StandardNormal.sample(rng));
        let norm: f64 = v.norm();
        if norm > 1e-8 {
            return SpherePoint(v / norm);
        }
    }
}

/// Uniformly distributed unit tangent vector at `p`.
pub fn random_unit_tangent<R: Rng + ?Sized>(rng: &mut R, p: &SpherePoint) -> DVector<f64> {
    loop {
        let mut v: DVector<f64> = DVector::from_fn(p.0.len(), |_, _| StandardNormal.sample(rng));
        let c = v.dot(&p.0);
        v -= &p.0 * c;
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Uniformly distributed equator.
pub fn random_equator<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Equator {
    Equator::new(random_point(rng, n).0).expect("unit normal")
}

/// Random invertible matrix `I + scale * G` with Gaussian `G`, rejected until
/// `|det| >= 0.1`.
pub fn random_group_element<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> GroupElement {
    loop {
        let g = DMatrix::from_fn(n + 1, n + 1, |_, _| StandardNormal.sample(rng));
        let m = DMatrix::<f64>::identity(n + 1, n + 1) + g * scale;
        if let Ok(t) = GroupElement::new(m) {
            if t.det().abs() >= 0.1 {
                return t;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frame_at_basis_vector() {
        let f = tangent_frame(&SpherePoint::basis(2, 0));
        assert_eq!(f, DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn frame_is_orthonormal_and_tangent() {
        let p = SpherePoint::from_slice(&[1.0, 1.0, 0.0]).unwrap();
        let f = tangent_frame(&p);
        assert!((f.transpose() * &f - DMatrix::<f64>::identity(2, 2)).amax() <= 1e-14);
        assert!((f.transpose() * p.coords()).amax() <= 1e-14);
    }

    #[test]
    fn great_circle_special_times() {
        let p = SpherePoint::basis(2, 0);
        let u = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let (x, v) = great_circle(&p, &u, 0.0).unwrap();
        assert_eq!((x, v), (p.coords().clone(), u.clone()));
        let (x, v) = great_circle(&p, &u, std::f64::consts::PI).unwrap();
        assert!((x + p.coords()).amax() < 1e-15 && (v + &u).amax() < 1e-15);
        let (x, v) = great_circle(&p, &u, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((x - &u).amax() < 1e-15 && (v + p.coords()).amax() < 1e-15);
    }

    #[test]
    fn great_circle_rejects_non_tangent() {
        let p = SpherePoint::basis(2, 0);
        assert!(great_circle(&p, &DVector::from_vec(vec![1.0, 0.0, 0.0]), 0.3).is_err());
        assert!(great_circle(&p, &DVector::from_vec(vec![0.0, 2.0, 0.0]), 0.3).is_err());
    }

    #[test]
    fn phi_of_diagonal_map() {
        let t = GroupElement::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]))).unwrap();
        let e0 = SpherePoint::basis(3, 0);
        assert_eq!(phi_t(&t, &e0), e0);
        let p = SpherePoint::from_slice(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let q = phi_t(&t, &p);
        let expect = DVector::from_vec(vec![2.0, 1.0, 0.0, 0.0]) / 5f64.sqrt();
        assert!((q.coords() - expect).amax() <= 1e-15);
        assert!((phi_t(&GroupElement::identity(3), &p).coords() - p.coords()).amax() <= 1e-15);
    }

    #[test]
    fn density_of_diagonal_map() {
        let t = GroupElement::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0, 1.0]))).unwrap();
        let e0 = SpherePoint::basis(3, 0);
        assert_abs_diff_eq!(jacobian_density(&t, &e0), 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(volume_distortion_density(&t, &e0), 0.125, epsilon = 1e-14);
        let p = SpherePoint::from_slice(&[0.2, 0.5, -0.3, 0.7]).unwrap();
        assert_abs_diff_eq!(
            jacobian_density(&GroupElement::scalar(3, 2.0), &p),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn orthogonal_maps_have_unit_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = DMatrix::from_fn(4, 4, |_, _| StandardNormal.sample(&mut rng)).qr().q();
        let t = GroupElement::new(q).unwrap();
        let p = random_point(&mut rng, 3);
        assert_abs_diff_eq!(jacobian_density(&t, &p), 1.0, epsilon = 1e-12);
        let w = random_unit_tangent(&mut rng, &p);
        assert!((dphi_t(&t, &p, &w) - t.matrix() * &w).amax() <= 1e-14);
    }

    #[test]
    fn equator_canonical_sign() {
        let a = Equator::from_slice(&[0.0, -1.0, 1.0]).unwrap();
        let b = Equator::from_slice(&[0.0, 1.0, -1.0]).unwrap();
        assert_eq!(a, b);
        assert!(a.normal()[1] > 0.0);
    }

    #[test]
    fn chart_roundtrip_and_overflow() {
        let p = SpherePoint::from_slice(&[0.3, 0.1, -0.9, 0.2]).unwrap();
        let chart = GnomonicChart::centered_at(&p);
        let x = DVector::from_vec(vec![0.4, -1.2, 2.0]);
        let q = chart.to_sphere(&x).unwrap();
        assert!((chart.from_sphere(&q).unwrap() - &x).amax() <= 1e-13);
        assert!(chart.to_sphere(&DVector::from_vec(vec![11.0, 0.0, 0.0])).is_err());
        assert!(chart.from_sphere(&p.antipode()).is_err());
    }
}
