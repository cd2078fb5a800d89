//! Metrics on S^3 ⊂ ℍ that are diagonal in the frame `p ↦ ip, jp, kp`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::correspondence::{
    chart_point_jets, curv_from_killing, killing_from_metric, metric_from_curv, metric_jet_from_entries, sym_product,
    ConstructionOptions, CurvatureMetric, MetricField, MetricJet, RecoveryOptions, SymmetricField,
};
use crate::error::{Error, Result};
use crate::jet::{dot, Jet};
use crate::sphere::{random_point, GnomonicChart, SpherePoint};
use crate::tensor::{CurvatureTensor, SkewMatrix};
use crate::verification::metric_equation_residual;

/// Left multiplication by `i`, `j`, `k` on `ℍ = R^4` with coordinates `(1, i, j, k)`.
pub fn quaternion_frame() -> [SkewMatrix; 3] {
    let li = [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ];
    let lj = [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ];
    let lk = [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ];
    [li, lj, lk]
        .map(|rows| SkewMatrix::new(DMatrix::from_fn(4, 4, |r, c| rows[r][c])).expect("quaternion units are skew"))
}

/// `g = a L_i^♭² + b L_j^♭² + c L_k^♭²`, i.e. the frame matrix is `diag(a, b, c)`.
#[derive(Debug, Clone)]
pub struct LeftInvariantForm {
    pub diag: [f64; 3],
    frame: [SkewMatrix; 3],
}

impl LeftInvariantForm {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(Error::Domain(format!(
                "left-invariant parameters must be positive, got ({a}, {b}, {c})"
            )));
        }
        Ok(Self {
            diag: [a, b, c],
            frame: quaternion_frame(),
        })
    }
}

impl SymmetricField for LeftInvariantForm {
    fn n(&self) -> usize {
        3
    }

    fn ambient(&self, p: &SpherePoint) -> Result<DMatrix<f64>> {
        if p.n() != 3 {
            return Err(Error::Dimension("left-invariant metrics live on S^3".into()));
        }
        let mut out = DMatrix::zeros(4, 4);
        for (l, a) in self.frame.iter().zip(self.diag) {
            let u = l.apply(p.as_slice());
            out += &u * u.transpose() * a;
        }
        Ok(out)
    }
}

impl MetricField for LeftInvariantForm {
    fn chart_jet(&self, chart: &GnomonicChart, x: &DVector<f64>) -> Result<MetricJet> {
        chart.check(x)?;
        let (p, tangents) = chart_point_jets(chart, x);
        let fields: Vec<Vec<Jet>> = self
            .frame
            .iter()
            .map(|l| {
                let m = l.matrix();
                (0..4)
                    .map(|r| Jet::linear_combination(m.row(r).transpose().as_slice(), &p))
                    .collect()
            })
            .collect();
        let comps: Vec<Vec<Jet>> = fields
            .iter()
            .map(|f| tangents.iter().map(|t| dot(f, t)).collect())
            .collect();
        let mut entries = Vec::with_capacity(9);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = (&comps[0][i] * &comps[0][j]).scale(self.diag[0]);
                for k in 1..3 {
                    acc = &acc + &(&comps[k][i] * &comps[k][j]).scale(self.diag[k]);
                }
                entries.push(acc);
            }
        }
        Ok(metric_jet_from_entries(3, &entries))
    }
}

/// A left-invariant metric together with its generator tensor.
#[derive(Debug, Clone)]
pub struct LeftInvariant {
    pub form: LeftInvariantForm,
    /// Recovered from `g / F` by least squares.
    pub generator: CurvatureTensor,
    /// `g_R` for the recovered generator; equal to `form` up to the recovery error.
    pub metric: CurvatureMetric,
    pub recovery_residual: f64,
    pub condition: f64,
    /// Largest metric-equation residual of `form` over the seeded check points.
    pub metric_equation_residual: f64,
}

/// Points used for the post-construction metric-equation check.
const CHECK_POINTS: usize = 20;

pub fn left_invariant_metric(a: f64, b: f64, c: f64) -> Result<LeftInvariant> {
    let form = LeftInvariantForm::new(a, b, c)?;
    let rec = curv_from_killing(&killing_from_metric(&form), RecoveryOptions::default())?;
    let metric = metric_from_curv(&rec.tensor, ConstructionOptions::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ef7);
    let mut worst: f64 = 0.0;
    for _ in 0..CHECK_POINTS {
        let p = random_point(&mut rng, 3);
        worst = worst.max(metric_equation_residual(
            &form,
            &GnomonicChart::centered_at(&p),
            &DVector::zeros(3),
        )?);
    }
    Ok(LeftInvariant {
        form,
        generator: rec.tensor,
        metric,
        recovery_residual: rec.residual,
        condition: rec.condition,
        metric_equation_residual: worst,
    })
}

/// Generator built directly as `(abc)^{-1/2} Σ (a_k / 2) L_k ⊙ L_k`.
pub fn left_invariant_generator(a: f64, b: f64, c: f64) -> Result<CurvatureTensor> {
    LeftInvariantForm::new(a, b, c)?;
    let f = (a * b * c).sqrt();
    let mut out = CurvatureTensor::zero(3);
    for (l, w) in quaternion_frame().iter().zip([a, b, c]) {
        let term = sym_product(l, l)?;
        out = &out + &(term.source() * (w / (2.0 * f)));
    }
    Ok(out)
}
