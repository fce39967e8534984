//! Ground-truth world: a static object seen by a camera on a gantry.

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    integrate_twist, project, rotation_to_axis_angle, transform_point, AxisAngle, CameraIntrinsics, PixelPoint,
    Point3, RigidTransform, Twist, Vec3,
};

/// The four coplanar points of the default target, in meters.
pub fn default_object() -> Vec<Point3> {
    vec![
        Point3::new(-0.1, -0.1, 0.0),
        Point3::new(0.1, -0.1, 0.0),
        Point3::new(0.1, 0.1, 0.0),
        Point3::new(-0.1, 0.1, 0.0),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub object_points: Vec<Point3>,
    pub camera_pose: RigidTransform,
    pub camera: CameraIntrinsics,
}

impl World {
    pub fn new(object_points: Vec<Point3>, camera_pose: RigidTransform, camera: CameraIntrinsics) -> Result<Self> {
        if object_points.is_empty() {
            return Err(Error::config("object", "at least one point is required"));
        }
        if !camera_pose.is_valid(1e-9) {
            return Err(Error::config("initial", "camera pose is not a rigid transform"));
        }
        camera.validate()?;
        Ok(Self {
            object_points,
            camera_pose,
            camera,
        })
    }

    /// Object points in the camera frame.
    pub fn camera_points(&self) -> Vec<Point3> {
        self.object_points
            .iter()
            .map(|p| transform_point(&self.camera_pose, p))
            .collect()
    }
}

/// Box limits on the camera position and on the θu components of its
/// orientation, both in the object frame. A free-flying stand-in for the
/// joint limits of a gantry robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GantryLimits {
    pub t_min: [f64; 3],
    pub t_max: [f64; 3],
    /// Radians.
    pub r_min: [f64; 3],
    /// Radians.
    pub r_max: [f64; 3],
}

impl Default for GantryLimits {
    fn default() -> Self {
        let tilt = std::f64::consts::FRAC_PI_2;
        let spin = 157f64.to_radians();
        Self {
            t_min: [-1.0, -1.0, -1.45],
            t_max: [1.0, 1.0, -0.2],
            r_min: [-tilt, -tilt, -spin],
            r_max: [tilt, tilt, spin],
        }
    }
}

impl GantryLimits {
    pub fn unbounded() -> Self {
        let inf = f64::INFINITY;
        Self {
            t_min: [-inf; 3],
            t_max: [inf; 3],
            r_min: [-inf; 3],
            r_max: [inf; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.t_min[i] < self.t_max[i]) {
                return Err(Error::config("limits.t_min", "must be below limits.t_max"));
            }
            if !(self.r_min[i] < self.r_max[i]) {
                return Err(Error::config("limits.r_min", "must be below limits.r_max"));
            }
        }
        Ok(())
    }

    pub fn contains(&self, pose: &RigidTransform) -> bool {
        let tu = rotation_to_axis_angle(&pose.rotation).0;
        (0..3).all(|i| {
            let t = pose.translation[i];
            t >= self.t_min[i] && t <= self.t_max[i] && tu[i] >= self.r_min[i] && tu[i] <= self.r_max[i]
        })
    }
}

/// Uniform measurement noise amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// ± pixels.
    #[serde(default)]
    pub pixel: f64,
    /// ± meters.
    #[serde(default)]
    pub depth: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pixel >= 0.0 && self.pixel.is_finite()) {
            return Err(Error::config("noise.pixel", "amplitude must be nonnegative"));
        }
        if !(self.depth >= 0.0 && self.depth.is_finite()) {
            return Err(Error::config("noise.depth", "amplitude must be nonnegative"));
        }
        Ok(())
    }
}

/// Relative errors on the intrinsics known to the controller, and the
/// relative offset of its initial depth estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationError {
    #[serde(default)]
    pub focal: f64,
    #[serde(default)]
    pub rho_u: f64,
    #[serde(default)]
    pub rho_v: f64,
    #[serde(default)]
    pub u0: f64,
    #[serde(default)]
    pub v0: f64,
    #[serde(default)]
    pub depth_offset: f64,
}

/// Intrinsics and depth scale factor the controller believes in.
pub fn perturb_model(cam: &CameraIntrinsics, err: &CalibrationError) -> Result<(CameraIntrinsics, f64)> {
    let fu = cam.fu * (1.0 + err.focal) / (1.0 + err.rho_u);
    let fv = cam.fv * (1.0 + err.focal) / (1.0 + err.rho_v);
    if !(fu > 0.0 && fu.is_finite()) {
        return Err(Error::config("calibration.rho_u", "estimated focal length must be positive"));
    }
    if !(fv > 0.0 && fv.is_finite()) {
        return Err(Error::config("calibration.rho_v", "estimated focal length must be positive"));
    }
    let factor = 1.0 + err.depth_offset;
    if !(factor > 0.0) {
        return Err(Error::config("calibration.depth_offset", "must be above -1"));
    }
    let hat = CameraIntrinsics {
        fu,
        fv,
        u0: cam.u0 * (1.0 + err.u0),
        v0: cam.v0 * (1.0 + err.v0),
        ..*cam
    };
    Ok((hat, factor))
}

/// Moves the camera unless that would cross a limit, in which case every
/// axis is stopped for this step and the returned flag is set.
pub fn apply_twist(world: &mut World, twist: &Twist, dt: f64, limits: &GantryLimits) -> bool {
    let next = integrate_twist(&world.camera_pose, twist, dt);
    if limits.contains(&next) {
        world.camera_pose = next;
        false
    } else {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pixels: Vec<PixelPoint>,
    pub depths: Vec<f64>,
    pub visible: Vec<bool>,
}

impl Observation {
    pub fn all_visible(&self) -> bool {
        self.visible.iter().all(|v| *v)
    }
}

/// Projects the object through `cam` and adds uniform noise. Visibility is
/// decided on the noiseless projection.
pub fn observe<R: Rng + ?Sized>(world: &World, cam: &CameraIntrinsics, noise: &NoiseSpec, rng: &mut R) -> Observation {
    let pts = world.camera_points();
    let mut out = Observation {
        pixels: Vec::with_capacity(pts.len()),
        depths: Vec::with_capacity(pts.len()),
        visible: Vec::with_capacity(pts.len()),
    };
    for p in &pts {
        let (pix, vis) = match project(p, cam) {
            Ok(px) => (px, cam.contains(&px)),
            Err(_) => (PixelPoint::new(f64::NAN, f64::NAN), false),
        };
        let mut pix = pix;
        let mut z = p.z;
        if noise.pixel > 0.0 {
            pix.u += rng.random_range(-noise.pixel..=noise.pixel);
            pix.v += rng.random_range(-noise.pixel..=noise.pixel);
        }
        if noise.depth > 0.0 {
            z += rng.random_range(-noise.depth..=noise.depth);
        }
        out.pixels.push(pix);
        out.depths.push(z);
        out.visible.push(vis);
    }
    out
}

/// Pose of the current camera frame in the desired one, as `(t, θu)`.
pub fn true_pose_error(current: &RigidTransform, desired: &RigidTransform) -> (Vec3, AxisAngle) {
    let rel = desired.inverse().compose(current);
    (rel.translation, rotation_to_axis_angle(&rel.rotation))
}
