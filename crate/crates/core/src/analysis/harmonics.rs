//! Real orthonormal spherical harmonics on the unit 2-sphere, evaluated on jets.
//!
//! `Y_l0 = P̄_l0(z)`, `Y_lm = √2 P̄_lm(z)/sin^m θ · Re (x + iy)^m` and
//! `Y_l,−m = √2 P̄_lm(z)/sin^m θ · Im (x + iy)^m`, where `P̄_lm` are the
//! normalised associated Legendre functions. Dividing out `sin^m θ` leaves a
//! polynomial in `z`, so every `Y` is a polynomial in `(x, y, z)`.

use std::f64::consts::PI;

use crate::jet::Jet;

/// Number of harmonics of degree at most `degree`.
pub fn harmonic_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// `(l, m)` labels in evaluation order: for each `l`, `m = 0, 1, −1, 2, −2, ...`.
pub fn harmonic_labels(degree: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::with_capacity(harmonic_count(degree));
    for l in 0..=degree {
        out.push((l, 0));
        for m in 1..=l as i64 {
            out.push((l, m));
            out.push((l, -m));
        }
    }
    out
}

/// Evaluates every harmonic of degree `<= degree` at the unit vector `u`
/// (given as jets), in the order of [`harmonic_labels`].
pub fn real_harmonics(u: [&Jet; 3], degree: usize) -> Vec<Jet> {
    let vars = u[0].vars();
    let z = u[2];
    // q[m][l - m] = P̄_lm / sin^m θ as a jet in z
    let mut q: Vec<Vec<Jet>> = Vec::with_capacity(degree + 1);
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=degree {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt();
        }
        let mut col = Vec::with_capacity(degree + 1 - m);
        col.push(Jet::constant(pmm, vars));
        if m < degree {
            col.push(z.scale(((2 * m + 3) as f64).sqrt() * pmm));
        }
        for l in (m + 2)..=degree {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            let next = (&(z * &col[l - m - 1]) - &col[l - m - 2].scale(b)).scale(a);
            col.push(next);
        }
        q.push(col);
    }
    // (x + i y)^m
    let mut re = vec![Jet::constant(1.0, vars)];
    let mut im = vec![Jet::constant(0.0, vars)];
    for m in 1..=degree {
        let (pr, pi) = (&re[m - 1], &im[m - 1]);
        let (nr, ni) = (&(pr * u[0]) - &(pi * u[1]), &(pr * u[1]) + &(pi * u[0]));
        re.push(nr);
        im.push(ni);
    }
    let sqrt2 = 2f64.sqrt();
    let mut out = Vec::with_capacity(harmonic_count(degree));
    for l in 0..=degree {
        out.push(q[0][l].clone());
        for m in 1..=l {
            let c = q[m][l - m].scale(sqrt2);
            out.push(&c * &re[m]);
            out.push(&c * &im[m]);
        }
    }
    out
}

/// Plain values of the harmonics at a unit vector.
pub fn real_harmonic_values(u: [f64; 3], degree: usize) -> Vec<f64> {
    let j = u.map(|c| Jet::constant(c, 0));
    real_harmonics([&j[0], &j[1], &j[2]], degree)
        .into_iter()
        .map(|y| y.value)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;
    use approx::assert_abs_diff_eq;

    #[test]
    fn counts_and_labels() {
        assert_eq!(harmonic_count(8), 81);
        let labels = harmonic_labels(2);
        assert_eq!(
            labels,
            vec![
                (0, 0),
                (1, 0),
                (1, 1),
                (1, -1),
                (2, 0),
                (2, 1),
                (2, -1),
                (2, 2),
                (2, -2)
            ]
        );
    }

    #[test]
    fn low_degree_closed_forms() {
        let u = [0.48, -0.6, 0.64];
        let y = real_harmonic_values(u, 2);
        let c1 = (3.0 / (4.0 * PI)).sqrt();
        assert_abs_diff_eq!(y[0], (1.0 / (4.0 * PI)).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], c1 * u[2], epsilon = 1e-15);
        assert_abs_diff_eq!(y[2], c1 * u[0], epsilon = 1e-15);
        assert_abs_diff_eq!(y[3], c1 * u[1], epsilon = 1e-15);
        let c20 = (5.0 / (16.0 * PI)).sqrt();
        assert_abs_diff_eq!(y[4], c20 * (3.0 * u[2] * u[2] - 1.0), epsilon = 1e-14);
    }

    #[test]
    fn orthonormal_under_quadrature() {
        let degree = 6;
        let order = 12;
        let (ts, ws) = gauss_legendre(order);
        let naz = 2 * order;
        let k = harmonic_count(degree);
        let mut gram = vec![0.0; k * k];
        for (t, w) in ts.iter().zip(&ws) {
            let s = (1.0 - t * t).sqrt();
            for j in 0..naz {
                let phi = 2.0 * PI * j as f64 / naz as f64;
                let y = real_harmonic_values([s * phi.cos(), s * phi.sin(), *t], degree);
                let wt = w * 2.0 * PI / naz as f64;
                for a in 0..k {
                    for b in 0..k {
                        gram[a * k + b] += wt * y[a] * y[b];
                    }
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[a * k + b], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn harmonics_are_laplace_eigenfunctions() {
        // extend Y homogeneously of degree 0 and check the Euclidean Laplacian of
        // |x|^l Y(x/|x|) vanishes, via jets in all three coordinates
        let degree = 4;
        let x0 = [0.3, -0.5, 0.7];
        let vars: Vec<Jet> = (0..3).map(|i| Jet::variable(x0[i], i, 3)).collect();
        let r = crate::jet::dot(&vars, &vars).sqrt();
        let rinv = r.recip();
        let u: Vec<Jet> = vars.iter().map(|v| v * &rinv).collect();
        let ys = real_harmonics([&u[0], &u[1], &u[2]], degree);
        for ((l, _), y) in harmonic_labels(degree).into_iter().zip(ys) {
            let solid = &y * &r.powf(l as f64);
            let lap = solid.h(0, 0) + solid.h(1, 1) + solid.h(2, 2);
            assert!(lap.abs() <= 1e-11, "degree {l}: {lap}");
        }
    }
}
