//! Pseudo-inverse visual servoing laws used as baselines.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AxisAngle, Twist, Vec3, Vec6};

/// Singular values below this fraction of the largest are dropped.
pub const PINV_TOLERANCE: f64 = 1e-10;

/// Proportional gain λ_s of the classical laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalGain(f64);

impl ClassicalGain {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self(lambda))
        } else {
            Err(Error::config("classical.gain", "gain must be positive"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ClassicalGain {
    fn default() -> Self {
        Self(0.5)
    }
}

/// Moore-Penrose pseudo-inverse with relative singular value truncation.
///
/// Uses a one-sided Jacobi SVD. nalgebra's bidiagonal SVD occasionally stops
/// early on small matrices and returns singular values off by 1e-3.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r < c {
        return pseudo_inverse(&m.transpose()).transpose();
    }
    if c == 0 {
        return DMatrix::zeros(c, r);
    }
    let (w, v) = jacobi_columns(m.clone());
    let norms: Vec<f64> = w.column_iter().map(|col| col.norm()).collect();
    let smax = norms.iter().copied().fold(0.0, f64::max);
    let mut p = DMatrix::zeros(c, r);
    for (j, &s) in norms.iter().enumerate() {
        if s > PINV_TOLERANCE * smax {
            p += v.column(j) * w.column(j).transpose() / (s * s);
        }
    }
    p
}

/// Rotates the columns of a tall `a` until they are mutually orthogonal.
/// Returns `a V` and `V`, whose column norms are the singular values.
fn jacobi_columns(mut a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut v = DMatrix::identity(n, n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let (x, y) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = cs * x - sn * y;
                        mat[(i, q)] = sn * x + cs * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

fn feature_law(s: &[f64], s_star: &[f64], l: &DMatrix<f64>, gain: ClassicalGain) -> Result<Twist> {
    if s.len() != s_star.len() || l.nrows() != s.len() || l.ncols() != 6 {
        return Err(Error::Shape(format!(
            "feature length {} / {} against a {}x{} interaction matrix",
            s.len(),
            s_star.len(),
            l.nrows(),
            l.ncols()
        )));
    }
    let e = DVector::from_iterator(s.len(), s.iter().zip(s_star).map(|(a, b)| a - b));
    let v = pseudo_inverse(l) * e * (-gain.value());
    Ok(Twist::from_vector(&Vec6::from_column_slice(v.as_slice())))
}

/// `v = -λ L⁺ (s - s*)` on stacked pixel features.
pub fn c_ibvs(s: &[f64], s_star: &[f64], l: &DMatrix<f64>, gain: ClassicalGain) -> Result<Twist> {
    feature_law(s, s_star, l, gain)
}

/// `v = -λ L⁺ (P - P*)` on stacked camera-frame points.
pub fn c_3dvs(p: &[f64], p_star: &[f64], l: &DMatrix<f64>, gain: ClassicalGain) -> Result<Twist> {
    feature_law(p, p_star, l, gain)
}

/// Decoupled pose law: `v = -λ Rᵀ t`, `ω = -λ θu`.
pub fn c_pbvs(t: &Vec3, tu: &AxisAngle, gain: ClassicalGain) -> Twist {
    let r = tu.to_rotation();
    Twist::new(-gain.value() * (r.transpose() * t), -gain.value() * tu.0)
}
