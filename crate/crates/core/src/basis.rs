//! A basis of the space Curv(R^(n+1)) of algebraic curvature tensors.
//!
//! Elementary tensors `e_i ⊗ e_j ⊗ e_k ⊗ e_l` are pushed through the orthogonal
//! projector onto Curv and a maximal independent subset is kept, scanning the
//! index tuples in lexicographic order. The projector is `P = S - A`, where `S`
//! symmetrises into symmetric bilinear forms on 2-vectors and `A` is the full
//! antisymmetrisation (which agrees with the Bianchi map on the image of `S`).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::tensor::CurvatureTensor;

/// Dimension of Curv(R^(n+1)): `m^2 (m^2 - 1) / 12` with `m = n + 1`.
pub fn curv_dimension(n: usize) -> usize {
    let m = n + 1;
    m * m * (m * m - 1) / 12
}

#[derive(Debug)]
pub struct CurvBasis {
    n: usize,
    labels: Vec<[usize; 4]>,
    elements: Vec<CurvatureTensor>,
    /// Gram–Schmidt orthonormalisation of `elements` in coefficient space.
    orthonormal: Vec<Vec<f64>>,
}

const PERMS: [([usize; 4], f64); 24] = perms();

const fn perms() -> [([usize; 4], f64); 24] {
    let mut out = [([0usize; 4], 0.0f64); 24];
    let mut count = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                let mut d = 0;
                while d < 4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        let p = [a, b, c, d];
                        let mut inversions = 0;
                        let mut s = 0;
                        while s < 4 {
                            let mut t = s + 1;
                            while t < 4 {
                                if p[s] > p[t] {
                                    inversions += 1;
                                }
                                t += 1;
                            }
                            s += 1;
                        }
                        out[count] = (p, if inversions % 2 == 0 { 1.0 } else { -1.0 });
                        count += 1;
                    }
                    d += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

#[inline]
fn idx(m: usize, t: [usize; 4]) -> usize {
    ((t[0] * m + t[1]) * m + t[2]) * m + t[3]
}

/// Orthogonal projection of an arbitrary 4-array onto Curv(R^(n+1)).
pub fn project_to_curv(n: usize, raw: &[f64]) -> Result<CurvatureTensor> {
    let m = n + 1;
    if raw.len() != m.pow(4) {
        return Err(Error::Dimension(format!(
            "expected {} coefficients, got {}",
            m.pow(4),
            raw.len()
        )));
    }
    let mut sym = vec![0.0; raw.len()];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let g = |a, b, c, d| raw[idx(m, [a, b, c, d])];
                    sym[idx(m, [i, j, k, l])] =
                        (g(i, j, k, l) - g(j, i, k, l) - g(i, j, l, k) + g(j, i, l, k) + g(k, l, i, j)
                            - g(l, k, i, j)
                            - g(k, l, j, i)
                            + g(l, k, j, i))
                            / 8.0;
                }
            }
        }
    }
    let mut out = sym.clone();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let t = [i, j, k, l];
                    let mut alt = 0.0;
                    for (p, sign) in PERMS.iter() {
                        alt += sign * sym[idx(m, [t[p[0]], t[p[1]], t[p[2]], t[p[3]]])];
                    }
                    out[idx(m, t)] -= alt / 24.0;
                }
            }
        }
    }
    Ok(CurvatureTensor::from_raw(n, out))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CurvBasis {
    fn build(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("sphere dimension must be >= 2, got {n}")));
        }
        let m = n + 1;
        let target = curv_dimension(n);
        let len = m.pow(4);
        let mut labels = Vec::with_capacity(target);
        let mut elements = Vec::with_capacity(target);
        let mut orthonormal: Vec<Vec<f64>> = Vec::with_capacity(target);

        // Only i<j, k<l, (i,j) <= (k,l) can contribute new directions; the other
        // elementary tensors project to multiples of these.
        'scan: for i in 0..m {
            for j in (i + 1)..m {
                for k in i..m {
                    for l in (k + 1)..m {
                        if (k, l) < (i, j) {
                            continue;
                        }
                        let mut raw = vec![0.0; len];
                        raw[idx(m, [i, j, k, l])] = 1.0;
                        let projected = project_to_curv(n, &raw)?;
                        let norm0 = projected.norm();
                        if norm0 < 1e-12 {
                            continue;
                        }
                        let mut v = projected.coeffs().to_vec();
                        // two passes of modified Gram-Schmidt
                        for _ in 0..2 {
                            for q in &orthonormal {
                                let c = dot(&v, q);
                                for (vi, qi) in v.iter_mut().zip(q) {
                                    *vi -= c * qi;
                                }
                            }
                        }
                        let norm = dot(&v, &v).sqrt();
                        if norm > 1e-8 * norm0 {
                            v.iter_mut().for_each(|x| *x /= norm);
                            orthonormal.push(v);
                            labels.push([i, j, k, l]);
                            elements.push(projected);
                            if elements.len() == target {
                                break 'scan;
                            }
                        }
                    }
                }
            }
        }
        Ok(Self {
            n,
            labels,
            elements,
            orthonormal,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Projected elementary tensors, in lexicographic order of their index labels.
    pub fn elements(&self) -> &[CurvatureTensor] {
        &self.elements
    }

    pub fn labels(&self) -> &[[usize; 4]] {
        &self.labels
    }

    /// Orthonormal (in coefficient space) vectors spanning the same subspace.
    pub fn orthonormal(&self) -> &[Vec<f64>] {
        &self.orthonormal
    }

    /// `sum_b w_b Q_b` over the orthonormal basis vectors.
    pub fn combine_orthonormal(&self, weights: &[f64]) -> CurvatureTensor {
        assert_eq!(weights.len(), self.len());
        let mut out = vec![0.0; (self.n + 1).pow(4)];
        for (w, q) in weights.iter().zip(&self.orthonormal) {
            for (o, qi) in out.iter_mut().zip(q) {
                *o += w * qi;
            }
        }
        CurvatureTensor::from_raw(self.n, out)
    }

    /// Coordinates of a coefficient array along the orthonormal basis vectors.
    pub fn coordinates(&self, coeffs: &[f64]) -> Vec<f64> {
        self.orthonormal.iter().map(|q| dot(coeffs, q)).collect()
    }

    /// Least-squares projection of a raw array onto the span of the basis.
    pub fn project(&self, coeffs: &[f64]) -> Result<CurvatureTensor> {
        if coeffs.len() != (self.n + 1).pow(4) {
            return Err(Error::Dimension("coefficient array has the wrong length".into()));
        }
        Ok(self.combine_orthonormal(&self.coordinates(coeffs)))
    }

    /// Max-norm of `R - proj(R)`.
    pub fn reconstruction_residual(&self, r: &CurvatureTensor) -> f64 {
        let p = self.combine_orthonormal(&self.coordinates(r.coeffs()));
        p.max_abs_diff(r)
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<CurvBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<CurvBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The basis of Curv(R^(n+1)), built once per `n` and shared.
pub fn curv_basis(n: usize) -> Result<Arc<CurvBasis>> {
    if let Some(b) = cache().lock().expect("basis cache poisoned").get(&n) {
        return Ok(b.clone());
    }
    let built = Arc::new(CurvBasis::build(n)?);
    let mut guard = cache().lock().expect("basis cache poisoned");
    Ok(guard.entry(n).or_insert(built).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{fubini_study, round};
    use nalgebra::DMatrix;

    #[test]
    fn dimension_formula() {
        assert_eq!(curv_dimension(2), 6);
        assert_eq!(curv_dimension(3), 20);
        assert_eq!(curv_dimension(4), 50);
    }

    #[test]
    fn basis_elements_are_curvature_tensors() {
        let b = curv_basis(3).unwrap();
        assert_eq!(b.len(), 20);
        for e in b.elements() {
            assert!(e.residuals().max() <= 1e-12);
        }
    }

    #[test]
    fn gram_matrix_has_full_rank() {
        let b = curv_basis(3).unwrap();
        let k = b.len();
        let gram = DMatrix::from_fn(k, k, |i, j| dot(b.elements()[i].coeffs(), b.elements()[j].coeffs()));
        let sv = gram.singular_values();
        assert!(sv.min() > 1e-8 * sv.max());
    }

    #[test]
    fn projector_fixes_curvature_tensors() {
        let r = fubini_study(2).unwrap();
        let p = project_to_curv(5, r.coeffs()).unwrap();
        assert!(p.max_abs_diff(&r) <= 1e-14);
    }

    #[test]
    fn known_tensors_lie_in_the_span() {
        let b = curv_basis(5).unwrap();
        assert!(b.reconstruction_residual(&fubini_study(2).unwrap()) <= 1e-10);
        let b3 = curv_basis(3).unwrap();
        assert!(b3.reconstruction_residual(&round(3).unwrap()) <= 1e-10);
    }

    #[test]
    fn labels_are_lexicographic() {
        let b = curv_basis(4).unwrap();
        assert!(b.labels().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn n_below_two_is_rejected() {
        assert!(curv_basis(1).is_err());
    }
}
