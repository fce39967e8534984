//! Pinhole camera, rigid poses and the θu rotation parameterization.
//!
//! Poses are stored as the camera pose expressed in the world (object)
//! frame: a world point `P` maps into the camera frame as `Rᵀ (P - t)`.
//! Camera twists are expressed in the camera frame, so a static world point
//! moves in the camera frame as `Ṗ = -v - ω × P`.

use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat3 = Matrix3<f64>;

/// A 3D point in meters. Whether it lives in the camera or the object frame
/// depends on context.
pub type Point3 = Vector3<f64>;

const SMALL_ANGLE: f64 = 1e-8;

/// Intrinsic parameters of an ideal pinhole camera plus the image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fu: f64,
    pub fv: f64,
    pub u0: f64,
    pub v0: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for CameraIntrinsics {
    /// 640×480 image, 840 px focal lengths, centered principal point.
    fn default() -> Self {
        Self {
            fu: 840.0,
            fv: 840.0,
            u0: 320.0,
            v0: 240.0,
            width: 640.0,
            height: 480.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(fu: f64, fv: f64, u0: f64, v0: f64, width: f64, height: f64) -> Result<Self> {
        let cam = Self {
            fu,
            fv,
            u0,
            v0,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fu > 0.0 && self.fu.is_finite()) {
            return Err(Error::config("camera.fu", "focal length must be positive"));
        }
        if !(self.fv > 0.0 && self.fv.is_finite()) {
            return Err(Error::config("camera.fv", "focal length must be positive"));
        }
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::config("camera.width", "image size must be positive"));
        }
        if !(0.0..=self.width).contains(&self.u0) {
            return Err(Error::config("camera.u0", "principal point outside the image"));
        }
        if !(0.0..=self.height).contains(&self.v0) {
            return Err(Error::config("camera.v0", "principal point outside the image"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &PixelPoint) -> bool {
        p.u >= 0.0 && p.u <= self.width && p.v >= 0.0 && p.v <= self.height
    }

    /// Half-extent of the image on the normalized image plane.
    pub fn normalized_half_extent(&self) -> (f64, f64) {
        (0.5 * self.width / self.fu, 0.5 * self.height / self.fv)
    }

    /// Back-projects a pixel at the given depth into the camera frame.
    pub fn back_project(&self, p: &PixelPoint, depth: f64) -> Point3 {
        Point3::new(
            (p.u - self.u0) / self.fu * depth,
            (p.v - self.v0) / self.fv * depth,
            depth,
        )
    }
}

/// Image coordinates in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Perspective projection of a camera-frame point.
pub fn project(p: &Point3, cam: &CameraIntrinsics) -> Result<PixelPoint> {
    if !(p.z > 0.0) {
        return Err(Error::DepthBehindCamera(p.z));
    }
    Ok(PixelPoint {
        u: cam.fu * p.x / p.z + cam.u0,
        v: cam.fv * p.y / p.z + cam.v0,
    })
}

/// Rotation vector θu: unit axis scaled by the rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle(pub Vec3);

impl AxisAngle {
    pub fn zero() -> Self {
        Self(Vec3::zeros())
    }

    pub fn from_degrees(x: f64, y: f64, z: f64) -> Self {
        Self(Vec3::new(x.to_radians(), y.to_radians(), z.to_radians()))
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn to_rotation(&self) -> Mat3 {
        axis_angle_to_rotation(self)
    }
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues exponential map.
pub fn axis_angle_to_rotation(tu: &AxisAngle) -> Mat3 {
    let w = skew(&tu.0);
    let theta = tu.angle();
    if theta < SMALL_ANGLE {
        return Mat3::identity() + w + 0.5 * w * w;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Mat3::identity() + a * w + b * w * w
}

/// Logarithm map of a rotation matrix, with the angle in `[0, π]`.
///
/// For angles above π/2 the axis is read from the symmetric part of `R`,
/// which stays well conditioned all the way to the half-turn.
pub fn rotation_to_axis_angle(r: &Mat3) -> AxisAngle {
    let w = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let s = 0.5 * w.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if theta < SMALL_ANGLE {
        return AxisAngle(0.5 * w);
    }
    if c >= 0.0 {
        return AxisAngle(w * (theta / (2.0 * s)));
    }
    // R = cI + s[u]x + (1 - c) u uᵀ, so the symmetric part isolates u uᵀ.
    let sym = (0.5 * (r + r.transpose()) - Mat3::identity() * c) / (1.0 - c);
    let k = (0..3)
        .max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)]))
        .unwrap_or(0);
    let uk = sym[(k, k)].max(0.0).sqrt();
    let mut axis = Vec3::new(sym[(k, 0)], sym[(k, 1)], sym[(k, 2)]) / uk;
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    AxisAngle(axis.normalize() * theta)
}

/// Projects a nearly orthonormal matrix onto SO(3).
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let svd = r.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return *r,
    };
    let mut out = u * vt;
    if out.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        out = u * vt;
    }
    out
}

/// Camera velocity screw expressed in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}

impl Twist {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn new(linear: Vec3, angular: Vec3) -> Self {
        Self { linear, angular }
    }

    pub fn from_vector(v: &Vec6) -> Self {
        Self {
            linear: v.fixed_rows::<3>(0).into_owned(),
            angular: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vec6 {
        Vec6::new(
            self.linear.x,
            self.linear.y,
            self.linear.z,
            self.angular.x,
            self.angular.y,
            self.angular.z,
        )
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            linear: self.linear * k,
            angular: self.angular * k,
        }
    }
}

/// Camera pose in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_theta_u(translation: Vec3, tu: &AxisAngle) -> Self {
        Self::new(tu.to_rotation(), translation)
    }

    pub fn theta_u(&self) -> AxisAngle {
        rotation_to_axis_angle(&self.rotation)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        let r = &self.rotation;
        (r.transpose() * r - Mat3::identity()).amax() < tol
            && (r.determinant() - 1.0).abs() < tol
            && self.translation.iter().all(|x| x.is_finite())
    }
}

/// Maps a world point into the frame of `pose`: `Rᵀ (P - t)`.
pub fn transform_point(pose: &RigidTransform, p: &Point3) -> Point3 {
    pose.rotation.transpose() * (p - pose.translation)
}

/// Closed-form SE(3) exponential of a body twist held for `dt`.
pub fn se3_exp(twist: &Twist, dt: f64) -> RigidTransform {
    let rho = twist.linear * dt;
    let phi = twist.angular * dt;
    let theta = phi.norm();
    let w = skew(&phi);
    let w2 = w * w;
    let v = if theta < 1e-6 {
        Mat3::identity() + 0.5 * w + w2 / 6.0
    } else {
        let t2 = theta * theta;
        Mat3::identity() + (1.0 - theta.cos()) / t2 * w + (theta - theta.sin()) / (t2 * theta) * w2
    };
    RigidTransform {
        rotation: axis_angle_to_rotation(&AxisAngle(phi)),
        translation: v * rho,
    }
}

/// Moves the camera by a constant camera-frame twist over `dt`.
pub fn integrate_twist(pose: &RigidTransform, twist: &Twist, dt: f64) -> RigidTransform {
    let mut next = pose.compose(&se3_exp(twist, dt));
    next.rotation = orthonormalize(&next.rotation);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn object_square() -> [Point3; 4] {
        [
            Point3::new(-0.1, -0.1, 0.0),
            Point3::new(0.1, -0.1, 0.0),
            Point3::new(0.1, 0.1, 0.0),
            Point3::new(-0.1, 0.1, 0.0),
        ]
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let p = project(&Point3::new(0.0, 0.0, 0.75), &CameraIntrinsics::default()).unwrap();
        assert_eq!(p, PixelPoint::new(320.0, 240.0));
    }

    #[test]
    fn projects_corner_point() {
        let p = project(&Point3::new(-0.1, -0.1, 0.75), &CameraIntrinsics::default()).unwrap();
        assert_relative_eq!(p.u, 208.0, epsilon = 1e-12);
        assert_relative_eq!(p.v, 128.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_points_behind_camera() {
        let cam = CameraIntrinsics::default();
        assert_eq!(
            project(&Point3::new(0.0, 0.0, 0.0), &cam),
            Err(Error::DepthBehindCamera(0.0))
        );
        assert!(project(&Point3::new(0.0, 0.0, -1.0), &cam).is_err());
    }

    #[test]
    fn desired_pose_reproduces_reference_pixels_up_to_axis_order() {
        // The reference pixel list is in (v, u) order; projection gives (u, v).
        let cam = CameraIntrinsics::default();
        let pose = RigidTransform::new(Mat3::identity(), Vec3::new(0.0, 0.0, -0.75));
        let mut projected: Vec<(i64, i64)> = object_square()
            .iter()
            .map(|p| project(&transform_point(&pose, p), &cam).unwrap())
            .map(|p| (p.v.round() as i64, p.u.round() as i64))
            .collect();
        let mut reference = vec![(128, 208), (352, 208), (352, 432), (128, 432)];
        projected.sort();
        reference.sort();
        assert_eq!(projected, reference);
    }

    #[test]
    fn identity_rotation_has_zero_log() {
        assert_eq!(rotation_to_axis_angle(&Mat3::identity()).0, Vec3::zeros());
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let tu = rotation_to_axis_angle(&r);
        assert_relative_eq!(tu.0, Vec3::new(0.0, 0.0, FRAC_PI_2), epsilon = 1e-12);
    }

    #[test]
    fn half_turn_exp_and_log() {
        let r = axis_angle_to_rotation(&AxisAngle(Vec3::new(0.0, 0.0, PI)));
        assert_relative_eq!(r, Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, 1.0)), epsilon = 1e-12);
        let back = rotation_to_axis_angle(&r);
        assert_relative_eq!(back.angle(), PI, epsilon = 1e-12);
        assert_relative_eq!(back.0.z.abs(), PI, epsilon = 1e-12);
    }

    #[test]
    fn zero_axis_angle_is_identity() {
        assert_eq!(axis_angle_to_rotation(&AxisAngle::zero()), Mat3::identity());
    }

    #[test]
    fn zero_twist_leaves_pose() {
        let pose = RigidTransform::from_theta_u(Vec3::new(0.1, 0.2, -0.7), &AxisAngle::from_degrees(10.0, 5.0, -30.0));
        let next = integrate_twist(&pose, &Twist::zero(), 0.02);
        assert_relative_eq!(next.rotation, pose.rotation, epsilon = 1e-14);
        assert_relative_eq!(next.translation, pose.translation, epsilon = 1e-14);
    }

    #[test]
    fn forward_translation_reduces_depth() {
        let pose = RigidTransform::new(Mat3::identity(), Vec3::new(0.0, 0.0, -1.0));
        let world = Point3::zeros();
        let next = integrate_twist(&pose, &Twist::new(Vec3::new(0.0, 0.0, 0.5), Vec3::zeros()), 0.02);
        assert_relative_eq!(transform_point(&next, &world).z, 0.99, epsilon = 1e-12);
    }

    #[test]
    fn pure_translation_transform() {
        let pose = RigidTransform::new(Mat3::identity(), Vec3::new(0.0, 0.0, -0.75));
        assert_eq!(transform_point(&pose, &Point3::zeros()), Point3::new(0.0, 0.0, 0.75));
        let p = Point3::new(0.3, -0.2, 1.0);
        assert_eq!(transform_point(&RigidTransform::identity(), &p), p);
    }

    #[test]
    fn twist_matches_point_kinematics() {
        // Forward difference of the camera-frame point against Ṗ = -v - ω × P.
        let pose = RigidTransform::from_theta_u(Vec3::new(0.2, -0.1, -0.9), &AxisAngle::from_degrees(12.0, -8.0, 40.0));
        let twist = Twist::new(Vec3::new(0.1, -0.2, 0.3), Vec3::new(0.2, 0.1, -0.3));
        let world = Point3::new(0.1, 0.1, 0.0);
        let dt = 1e-4;
        let p0 = transform_point(&pose, &world);
        let p1 = transform_point(&integrate_twist(&pose, &twist, dt), &world);
        let fd = (p1 - p0) / dt;
        let expected = -twist.linear - twist.angular.cross(&p0);
        assert!((fd - expected).norm() / expected.norm() < 1e-3);
    }

    #[test]
    fn forward_and_back_returns_to_start() {
        let pose = RigidTransform::from_theta_u(Vec3::new(0.2, -0.1, -0.9), &AxisAngle::from_degrees(12.0, -8.0, 40.0));
        let twist = Twist::new(Vec3::new(0.3, -0.2, 0.1), Vec3::new(-0.4, 0.2, 0.5));
        let dt = 1e-3;
        let back = integrate_twist(&integrate_twist(&pose, &twist, dt), &twist.scaled(-1.0), dt);
        let bound = dt * dt * twist.norm().powi(2);
        assert!((back.translation - pose.translation).norm() <= bound);
        assert!((back.rotation - pose.rotation).amax() <= bound);
    }

    #[test]
    fn long_integration_stays_orthonormal() {
        let mut pose = RigidTransform::identity();
        let twist = Twist::new(Vec3::new(0.1, 0.0, 0.05), Vec3::new(0.3, -0.7, 1.1));
        for _ in 0..10_000 {
            pose = integrate_twist(&pose, &twist, 0.02);
        }
        assert!(pose.is_valid(1e-9));
    }

    #[test]
    fn composition_matches_sequential_transforms() {
        let a = RigidTransform::from_theta_u(Vec3::new(0.3, 0.1, -0.2), &AxisAngle::from_degrees(20.0, -10.0, 70.0));
        let b = RigidTransform::from_theta_u(Vec3::new(-0.1, 0.4, 0.5), &AxisAngle::from_degrees(-35.0, 15.0, 5.0));
        let p = Point3::new(0.7, -0.3, 1.2);
        let direct = transform_point(&a.compose(&b), &p);
        let chained = transform_point(&b, &transform_point(&a, &p));
        assert_relative_eq!(direct, chained, epsilon = 1e-12);
    }

    fn theta_u_strategy() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..(PI - 1e-6))
            .prop_filter("nonzero axis", |(x, y, z, _)| x * x + y * y + z * z > 1e-6)
            .prop_map(|(x, y, z, a)| Vec3::new(x, y, z).normalize() * a)
    }

    proptest! {
        #[test]
        fn log_inverts_exp(tu in theta_u_strategy()) {
            let back = rotation_to_axis_angle(&axis_angle_to_rotation(&AxisAngle(tu)));
            prop_assert!((back.0 - tu).norm() < 1e-9);
            prop_assert!(back.angle() <= PI);
        }

        #[test]
        fn projection_is_scale_invariant(
            x in -1.0..1.0f64, y in -1.0..1.0f64, z in 0.1..3.0f64, k in 0.01..100.0f64,
        ) {
            let cam = CameraIntrinsics::default();
            let p = project(&Point3::new(x, y, z), &cam).unwrap();
            let q = project(&(Point3::new(x, y, z) * k), &cam).unwrap();
            prop_assert!((p.u - q.u).abs() < 1e-9 && (p.v - q.v).abs() < 1e-9);
        }

        #[test]
        fn exp_is_a_rotation(tu in theta_u_strategy()) {
            let r = axis_angle_to_rotation(&AxisAngle(tu));
            prop_assert!(RigidTransform::new(r, Vec3::zeros()).is_valid(1e-9));
        }
    }
}
