//! Interaction matrices linking the camera velocity screw to feature motion.

use nalgebra::{DMatrix, Matrix2x6, Matrix3x6, Matrix6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{skew, AxisAngle, CameraIntrinsics, Mat3, PixelPoint, Point3};

/// Depths below this are treated as degenerate.
pub const MIN_DEPTH: f64 = 1e-6;

/// Which values feed the approximate image Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IbvsCase {
    /// Current features, current depth estimates.
    Case0,
    /// Current features, desired depths.
    Case1,
    /// Desired features and desired depths (constant matrix).
    Case2,
    /// Mean of Case0 and Case2.
    Case3,
}

impl IbvsCase {
    /// Whether the case needs the depths to be predicted along with the pixels.
    pub fn tracks_depth(self) -> bool {
        matches!(self, IbvsCase::Case0 | IbvsCase::Case3)
    }
}

/// Image Jacobian of one point feature, taking raw pixel coordinates.
pub fn l2d_point(p: &PixelPoint, z: f64, cam: &CameraIntrinsics) -> Result<Matrix2x6<f64>> {
    if !(z >= MIN_DEPTH) {
        return Err(Error::DegenerateDepth(z));
    }
    let (fu, fv) = (cam.fu, cam.fv);
    let u = p.u - cam.u0;
    let v = p.v - cam.v0;
    Ok(Matrix2x6::new(
        -fu / z,
        0.0,
        u / z,
        u * v / fv,
        -(fu * fu + u * u) / fu,
        fu * v / fv,
        0.0,
        -fv / z,
        v / z,
        (fv * fv + v * v) / fv,
        -u * v / fu,
        -fv * u / fu,
    ))
}

/// Jacobian of a camera-frame 3D point: `Ṗ = [-I | [P]x] v`.
pub fn l3d_point(p: &Point3) -> Matrix3x6<f64> {
    let mut l = Matrix3x6::zeros();
    l.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-Mat3::identity()));
    l.fixed_view_mut::<3, 3>(0, 3).copy_from(&skew(p));
    l
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Jacobian of θu with respect to the angular velocity.
pub fn l_theta_u(tu: &AxisAngle) -> Mat3 {
    let theta = tu.angle();
    if theta == 0.0 {
        return Mat3::identity();
    }
    let ux = skew(&(tu.0 / theta));
    let s = sinc(theta * 0.5);
    Mat3::identity() - 0.5 * theta * ux + (1.0 - sinc(theta) / (s * s)) * ux * ux
}

/// Pose-error Jacobian with `R` the current-to-desired rotation.
///
/// `L_θu` differentiates `θu` against an angular rate expressed in the
/// desired frame, so the camera-frame rate is rotated by `R` first. Both
/// blocks then act on the camera twist. Since `R θu = θu`, the inverse
/// still maps the error `(t, θu)` to `(Rᵀ t, θu)`.
pub fn l_pbvs(r: &Mat3, tu: &AxisAngle) -> Matrix6<f64> {
    let mut l = Matrix6::zeros();
    l.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    l.fixed_view_mut::<3, 3>(3, 3).copy_from(&(l_theta_u(tu) * r));
    l
}

/// Stacks per-point image Jacobians in feature order.
pub fn stack_ibvs(points: &[PixelPoint], depths: &[f64], cam: &CameraIntrinsics) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::Shape("at least one feature is required".into()));
    }
    if points.len() != depths.len() {
        return Err(Error::Shape(format!(
            "{} features but {} depths",
            points.len(),
            depths.len()
        )));
    }
    let mut l = DMatrix::zeros(2 * points.len(), 6);
    for (i, (p, &z)) in points.iter().zip(depths).enumerate() {
        l.fixed_view_mut::<2, 6>(2 * i, 0).copy_from(&l2d_point(p, z, cam)?);
    }
    Ok(l)
}

/// Stacks 3D point Jacobians in feature order.
pub fn stack_3d(points: &[Point3]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(3 * points.len(), 6);
    for (i, p) in points.iter().enumerate() {
        l.fixed_view_mut::<3, 6>(3 * i, 0).copy_from(&l3d_point(p));
    }
    l
}

/// Features paired with depth estimates.
#[derive(Debug, Clone, Copy)]
pub struct FeatureSet<'a> {
    pub points: &'a [PixelPoint],
    pub depths: &'a [f64],
}

/// Builds the approximate image Jacobian for the chosen case.
pub fn ibvs_matrix_for_case(
    case: IbvsCase,
    current: FeatureSet<'_>,
    desired: FeatureSet<'_>,
    cam: &CameraIntrinsics,
) -> Result<DMatrix<f64>> {
    if current.points.len() != desired.points.len() {
        return Err(Error::Shape(format!(
            "{} current features but {} desired",
            current.points.len(),
            desired.points.len()
        )));
    }
    match case {
        IbvsCase::Case0 => stack_ibvs(current.points, current.depths, cam),
        IbvsCase::Case1 => stack_ibvs(current.points, desired.depths, cam),
        IbvsCase::Case2 => stack_ibvs(desired.points, desired.depths, cam),
        IbvsCase::Case3 => {
            let a = stack_ibvs(current.points, current.depths, cam)?;
            let b = stack_ibvs(desired.points, desired.depths, cam)?;
            Ok((a + b) * 0.5)
        }
    }
}
