//! Closed-loop task execution, success metrics and suite aggregation.

use nalgebra::Matrix3;
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{c_3dvs, c_ibvs, c_pbvs, ClassicalGain};
use crate::error::{Error, Result};
use crate::geometry::{
    project, rotation_to_axis_angle, transform_point, AxisAngle, CameraIntrinsics, Mat3, PixelPoint, Point3,
    RigidTransform, Twist, Vec3, Vec6,
};
use crate::interaction::{ibvs_matrix_for_case, stack_3d, FeatureSet};
use crate::mppi::{stream_seed, Mppi, MppiConfig};
use crate::sim::{
    apply_twist, default_object, observe, perturb_model, CalibrationError, GantryLimits, NoiseSpec, World,
};
use crate::vscost::{ibvs_state, pbvs_state, points_state, ConstraintSpec, CostWeights, Goal, VsModel, VsScheme};

/// Convergence threshold on the pixel error norm.
pub const IBVS_CONVERGENCE_PX: f64 = 0.6;
/// Convergence threshold on the 3D or pose error norm.
pub const METRIC_CONVERGENCE: f64 = 3e-3;
/// Translational MSE threshold, m².
pub const EPSILON_TRANSLATION: f64 = 1e-5;
/// Rotational MSE threshold, rad².
pub const EPSILON_ROTATION: f64 = 1e-4;
/// Twist norm regarded as a standstill.
pub const STALL_TWIST: f64 = 1e-4;
/// Standstill duration that flags a local minimum.
pub const STALL_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Classical,
    Mppi,
}

/// Camera pose in the object frame as translation (m) and θu (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub t: [f64; 3],
    pub theta_u_deg: [f64; 3],
}

impl PoseSpec {
    pub const fn new(t: [f64; 3], theta_u_deg: [f64; 3]) -> Self {
        Self { t, theta_u_deg }
    }

    /// Centered view from 0.75 m.
    pub const fn c1() -> Self {
        Self::new([0.0, 0.0, -0.75], [0.0, 0.0, 0.0])
    }

    /// Object near the top-right corner of the image.
    pub const fn c2() -> Self {
        Self::new([0.076, 0.202, -0.727], [10.0, -10.0, -15.0])
    }

    pub fn to_transform(&self) -> RigidTransform {
        let [a, b, c] = self.theta_u_deg;
        RigidTransform::from_theta_u(Vec3::from(self.t), &AxisAngle::from_degrees(a, b, c))
    }

    pub fn from_transform(pose: &RigidTransform) -> Self {
        let tu = rotation_to_axis_angle(&pose.rotation).0;
        Self {
            t: pose.translation.into(),
            theta_u_deg: [tu.x.to_degrees(), tu.y.to_degrees(), tu.z.to_degrees()],
        }
    }
}

/// Complete description of one servoing task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub scheme: VsScheme,
    pub controller: ControllerKind,
    /// Gain of the classical law.
    pub gain: f64,
    pub desired: PoseSpec,
    pub initial: PoseSpec,
    /// Simulated seconds.
    pub duration: f64,
    /// Control rate, Hz.
    pub rate: f64,
    pub camera: CameraIntrinsics,
    pub object: Vec<[f64; 3]>,
    pub constraints: ConstraintSpec,
    /// Diagonal state weight.
    pub q: f64,
    pub w1: f64,
    pub w2: f64,
    pub noise: NoiseSpec,
    pub calibration: CalibrationError,
    pub mppi: MppiConfig,
    pub limits: GantryLimits,
    pub seed: u64,
    /// Stop once the error has stayed converged this many seconds.
    pub early_stop: Option<f64>,
}

impl ScenarioConfig {
    /// Scheme defaults for the given controller: 60 s classical, 90 s MPPI,
    /// 50 Hz, the per-scheme temperature and state weight, and pixel
    /// visibility constraints for MPPI-IBVS.
    pub fn new(scheme: VsScheme, controller: ControllerKind) -> Self {
        let camera = CameraIntrinsics::default();
        let (lambda, q) = match scheme {
            VsScheme::Ibvs(_) => (100.0, 2.5),
            VsScheme::ThreeDvs => (1e-2, 35.0),
            VsScheme::Pbvs | VsScheme::PbvsAugmented => (1e-3, 35.0),
        };
        let constraints = if scheme.is_ibvs() {
            ConstraintSpec {
                image: Some(crate::vscost::ImageBox::of_camera(&camera)),
                ..ConstraintSpec::default()
            }
        } else {
            ConstraintSpec::default()
        };
        Self {
            name: String::new(),
            scheme,
            controller,
            gain: 0.5,
            desired: PoseSpec::c1(),
            initial: PoseSpec::c1(),
            duration: match controller {
                ControllerKind::Classical => 60.0,
                ControllerKind::Mppi => 90.0,
            },
            rate: 50.0,
            camera,
            object: default_object().iter().map(|p| [p.x, p.y, p.z]).collect(),
            constraints,
            q,
            w1: 35.0,
            w2: 150.0,
            noise: NoiseSpec::default(),
            calibration: CalibrationError::default(),
            mppi: MppiConfig {
                lambda,
                ..MppiConfig::default()
            },
            limits: GantryLimits::default(),
            seed: 0,
            early_stop: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration", "must be positive"));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::config("rate", "must be positive"));
        }
        if !(self.gain > 0.0) {
            return Err(Error::config("gain", "must be positive"));
        }
        if self.object.is_empty() {
            return Err(Error::config("object", "at least one point is required"));
        }
        if !(self.q >= 0.0) {
            return Err(Error::config("q", "must be nonnegative"));
        }
        if !(self.w1 > 0.0 && self.w2 > 0.0) {
            return Err(Error::config("w1", "augmented weights must be positive"));
        }
        if let Some(h) = self.early_stop {
            if !(h >= 0.0) {
                return Err(Error::config("early_stop", "must be nonnegative"));
            }
        }
        self.camera.validate()?;
        self.constraints.validate()?;
        self.noise.validate()?;
        self.limits.validate()?;
        perturb_model(&self.camera, &self.calibration)?;
        if self.controller == ControllerKind::Mppi {
            self.mppi.validate()?;
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn convergence_threshold(&self) -> f64 {
        if self.scheme.is_ibvs() {
            IBVS_CONVERGENCE_PX
        } else {
            METRIC_CONVERGENCE
        }
    }

    fn object_points(&self) -> Vec<Point3> {
        self.object.iter().map(|p| Point3::from(*p)).collect()
    }
}

/// One control period of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: f64,
    /// Noiseless pixel coordinates.
    pub pixels: Vec<PixelPoint>,
    /// True camera-frame depths.
    pub depths: Vec<f64>,
    /// Camera pose in the object frame.
    pub pose: PoseSpec,
    /// Twist actually applied over this period.
    pub twist: [f64; 6],
    pub err_norm: f64,
    pub jl_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub name: String,
    pub r_lm: bool,
    pub r_jl: bool,
    pub p_out: bool,
    pub success: bool,
    pub convergence_time: Option<f64>,
    pub final_error_norm: f64,
    /// Translational and rotational MSE of the final pose.
    pub final_mse: [f64; 2],
    /// Number of control periods in which a limit stopped the robot.
    pub limit_hits: usize,
    /// True when the run ended before its full duration.
    pub stopped_early: bool,
    pub initial: PoseSpec,
    #[serde(skip)]
    pub log: Vec<StepLog>,
}

impl TaskResult {
    pub fn max_depth(&self) -> f64 {
        self.log
            .iter()
            .flat_map(|r| r.depths.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest error norm over the final `window` seconds of the log.
    pub fn steady_state_error(&self, window: f64) -> f64 {
        let Some(last) = self.log.last() else { return f64::NAN };
        self.log
            .iter()
            .filter(|r| r.t >= last.t - window)
            .map(|r| r.err_norm)
            .fold(0.0, f64::max)
    }
}

/// `true` when both MSE figures fall strictly below their thresholds.
pub fn check_local_minimum(e1: &Vec3, e2: &Vec3) -> bool {
    let (m1, m2) = pose_mse(e1, e2);
    mse_within(m1, m2)
}

/// Strict comparison of both MSE figures against their thresholds.
pub fn mse_within(m1: f64, m2: f64) -> bool {
    m1 < EPSILON_TRANSLATION && m2 < EPSILON_ROTATION
}

fn pose_mse(e1: &Vec3, e2: &Vec3) -> (f64, f64) {
    (2.0 / 6.0 * e1.norm_squared(), 2.0 / 6.0 * e2.norm_squared())
}

/// Time after which the error stays below `threshold`, `None` if the last
/// sample is above it.
pub fn convergence_time(errors: &[f64], threshold: f64, dt: f64) -> Option<f64> {
    match errors.iter().rposition(|e| !(*e < threshold)) {
        None => Some(0.0),
        Some(i) if i + 1 == errors.len() => None,
        Some(i) => Some((i + 1) as f64 * dt),
    }
}

/// Rigid motion `(R, t)` minimizing `Σ ‖to_i - (R from_i + t)‖²`.
pub fn align_points(from: &[Point3], to: &[Point3]) -> (Mat3, Vec3) {
    let n = from.len().max(1) as f64;
    let cf = from.iter().sum::<Point3>() / n;
    let ct = to.iter().sum::<Point3>() / n;
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += (a - cf) * (b - ct).transpose();
    }
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.unwrap_or_else(Mat3::identity), svd.v_t.unwrap_or_else(Mat3::identity));
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    let r = vt.transpose() * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose();
    (r, ct - r * cf)
}

/// Box the initial poses are drawn from, in the object frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingBox {
    pub t_min: [f64; 3],
    pub t_max: [f64; 3],
    pub theta_u_min_deg: [f64; 3],
    pub theta_u_max_deg: [f64; 3],
}

impl Default for SamplingBox {
    fn default() -> Self {
        Self {
            t_min: [-0.8, -0.8, -1.4],
            t_max: [0.8, 0.8, -0.5],
            theta_u_min_deg: [-45.0, -45.0, -150.0],
            theta_u_max_deg: [45.0, 45.0, 150.0],
        }
    }
}

/// Uniform initial poses that respect the limits and see every feature.
pub fn sample_initial_poses(
    n: usize,
    seed: u64,
    bounds: &SamplingBox,
    limits: &GantryLimits,
    object: &[Point3],
    cam: &CameraIntrinsics,
) -> Result<Vec<RigidTransform>> {
    let budget = 10_000 * n.max(1);
    let mut rng = Pcg64Mcg::seed_from_u64(stream_seed(seed, u64::MAX, 7));
    let mut out = Vec::with_capacity(n);
    for _ in 0..budget {
        if out.len() == n {
            break;
        }
        let mut t = [0.0; 3];
        let mut r = [0.0; 3];
        for i in 0..3 {
            t[i] = rng.random_range(bounds.t_min[i]..=bounds.t_max[i]);
            r[i] = rng.random_range(bounds.theta_u_min_deg[i]..=bounds.theta_u_max_deg[i]);
        }
        let pose = PoseSpec::new(t, r).to_transform();
        if pose_is_admissible(&pose, limits, object, cam) {
            out.push(pose);
        }
    }
    if out.len() < n {
        return Err(Error::SamplingExhausted(budget));
    }
    Ok(out)
}

/// Inside the limits with every feature in front of the camera and in the image.
pub fn pose_is_admissible(pose: &RigidTransform, limits: &GantryLimits, object: &[Point3], cam: &CameraIntrinsics) -> bool {
    limits.contains(pose)
        && object.iter().all(|p| {
            let pc = transform_point(pose, p);
            matches!(project(&pc, cam), Ok(px) if cam.contains(&px))
        })
}

enum Controller {
    Classical(ClassicalGain),
    Mppi(Box<Mppi>, Box<VsModel>),
}

/// What the controller knows at one instant.
struct View {
    pixels: Vec<PixelPoint>,
    depths: Vec<f64>,
    points: Vec<Point3>,
    pose_t: Vec3,
    pose_tu: AxisAngle,
}

struct Loop<'a> {
    cfg: &'a ScenarioConfig,
    cam_hat: CameraIntrinsics,
    goal: Goal,
    goal_pixels: Vec<f64>,
    depth_track: Vec<f64>,
}

impl Loop<'_> {
    fn view(&self, pixels: &[PixelPoint], measured_depths: &[f64]) -> View {
        let mut v = View {
            pixels: pixels.to_vec(),
            depths: self.depth_track.clone(),
            points: Vec::new(),
            pose_t: Vec3::zeros(),
            pose_tu: AxisAngle::zero(),
        };
        if !self.cfg.scheme.is_ibvs() {
            v.points = pixels
                .iter()
                .zip(measured_depths)
                .map(|(p, z)| self.cam_hat.back_project(p, *z))
                .collect();
            let (r, t) = align_points(&v.points, &self.goal.points);
            v.pose_t = t;
            v.pose_tu = rotation_to_axis_angle(&r);
        }
        v
    }

    fn classical(&self, gain: ClassicalGain, v: &View) -> Result<Twist> {
        match self.cfg.scheme {
            VsScheme::Ibvs(case) => {
                let s: Vec<f64> = v.pixels.iter().flat_map(|p| [p.u, p.v]).collect();
                let l = ibvs_matrix_for_case(
                    case,
                    FeatureSet {
                        points: &v.pixels,
                        depths: &v.depths,
                    },
                    FeatureSet {
                        points: &self.goal.pixels,
                        depths: &self.goal.depths,
                    },
                    &self.cam_hat,
                )?;
                c_ibvs(&s, &self.goal_pixels, &l, gain)
            }
            VsScheme::ThreeDvs => {
                let l = stack_3d(&v.points);
                c_3dvs(&points_state(&v.points), &points_state(&self.goal.points), &l, gain)
            }
            VsScheme::Pbvs | VsScheme::PbvsAugmented => Ok(c_pbvs(&v.pose_t, &v.pose_tu, gain)),
        }
    }

    fn mppi_state(&self, model: &VsModel, v: &View) -> Vec<f64> {
        match self.cfg.scheme {
            VsScheme::Ibvs(case) => ibvs_state(&v.pixels, case.tracks_depth().then_some(v.depths.as_slice())),
            VsScheme::ThreeDvs => points_state(&v.points),
            VsScheme::Pbvs | VsScheme::PbvsAugmented => {
                pbvs_state(&v.pose_t, &v.pose_tu, model.carries_points().then_some(v.points.as_slice()))
            }
        }
    }

    /// Propagates the depth estimates with the applied twist.
    fn track_depths(&mut self, pixels: &[PixelPoint], twist: &Vec6, dt: f64) {
        for (z, p) in self.depth_track.iter_mut().zip(pixels) {
            let x = (p.u - self.cam_hat.u0) / self.cam_hat.fu * *z;
            let y = (p.v - self.cam_hat.v0) / self.cam_hat.fv * *z;
            *z += (-twist[2] - y * twist[3] + x * twist[4]) * dt;
        }
    }
}

fn scheme_error(scheme: VsScheme, pixels: &[PixelPoint], goal_pixels: &[f64], pts: &[Point3], goal_pts: &[Point3], pose_err: (Vec3, Vec3)) -> f64 {
    match scheme {
        VsScheme::Ibvs(_) => pixels
            .iter()
            .flat_map(|p| [p.u, p.v])
            .zip(goal_pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        VsScheme::ThreeDvs => pts
            .iter()
            .zip(goal_pts)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt(),
        VsScheme::Pbvs | VsScheme::PbvsAugmented => (pose_err.0.norm_squared() + pose_err.1.norm_squared()).sqrt(),
    }
}

/// Runs one closed-loop servoing task.
pub fn run_task(cfg: &ScenarioConfig) -> Result<TaskResult> {
    cfg.validate()?;
    let object = cfg.object_points();
    let desired = cfg.desired.to_transform();
    let mut world = World::new(object.clone(), cfg.initial.to_transform(), cfg.camera)?;
    let (cam_hat, depth_factor) = perturb_model(&cfg.camera, &cfg.calibration)?;
    let dt = cfg.dt();

    let goal_true: Vec<Point3> = object.iter().map(|p| transform_point(&desired, p)).collect();
    let goal_px = goal_true
        .iter()
        .map(|p| project(p, &cfg.camera))
        .collect::<Result<Vec<_>>>()
        .map_err(|_| Error::config("desired", "object is not in front of the desired camera"))?;
    let goal_depths: Vec<f64> = goal_true.iter().map(|p| p.z).collect();
    let goal = Goal {
        points: goal_px
            .iter()
            .zip(&goal_depths)
            .map(|(p, z)| cam_hat.back_project(p, *z))
            .collect(),
        pixels: goal_px.clone(),
        depths: goal_depths,
    };
    let goal_pixels: Vec<f64> = goal_px.iter().flat_map(|p| [p.u, p.v]).collect();

    let mut controller = match cfg.controller {
        ControllerKind::Classical => Controller::Classical(ClassicalGain::new(cfg.gain)?),
        ControllerKind::Mppi => {
            let cost_dim = match cfg.scheme {
                VsScheme::Ibvs(_) => 2 * object.len(),
                VsScheme::ThreeDvs => 3 * object.len(),
                _ => 6,
            };
            let weights = CostWeights {
                q: vec![cfg.q; cost_dim],
                w1: cfg.w1,
                w2: cfg.w2,
            };
            let model = VsModel::new(cfg.scheme, cam_hat, &goal, weights, cfg.constraints.clone())?;
            let mut mcfg = cfg.mppi.clone();
            mcfg.seed = cfg.seed;
            Controller::Mppi(Box::new(Mppi::new(mcfg)?), Box::new(model))
        }
    };

    let mut rng = Pcg64Mcg::seed_from_u64(stream_seed(cfg.seed, u64::MAX, 1));
    let first = observe(&world, &cfg.camera, &cfg.noise, &mut rng);
    let mut state = Loop {
        cfg,
        cam_hat,
        goal,
        goal_pixels,
        depth_track: world.camera_points().iter().map(|p| p.z * depth_factor).collect(),
    };

    let steps = (cfg.duration * cfg.rate).round() as usize;
    let threshold = cfg.convergence_threshold();
    let hold_steps = cfg.early_stop.map(|h| (h * cfg.rate).round() as usize);
    let stall_steps = (STALL_SECONDS * cfg.rate).round() as usize;

    let mut log = Vec::with_capacity(steps);
    let mut p_out = false;
    let mut limit_hits = 0usize;
    let mut stalled = false;
    let mut numeric_failure = false;
    let mut below = 0usize;
    let mut still = 0usize;
    let mut obs = first;

    for k in 0..steps {
        if k > 0 {
            obs = observe(&world, &cfg.camera, &cfg.noise, &mut rng);
        }
        let true_pts = world.camera_points();
        let true_px: Vec<PixelPoint> = true_pts
            .iter()
            .map(|p| project(p, &cfg.camera).unwrap_or(PixelPoint::new(f64::NAN, f64::NAN)))
            .collect();
        let pose_err = pose_error(&world.camera_pose, &desired);
        let err = scheme_error(cfg.scheme, &true_px, &state.goal_pixels, &true_pts, &goal_true, pose_err);
        let mut row = StepLog {
            t: k as f64 * dt,
            pixels: true_px,
            depths: true_pts.iter().map(|p| p.z).collect(),
            pose: PoseSpec::from_transform(&world.camera_pose),
            twist: [0.0; 6],
            err_norm: err,
            jl_flag: false,
        };
        if !obs.all_visible() {
            p_out = true;
            log.push(row);
            break;
        }

        let view = state.view(&obs.pixels, &obs.depths);
        let command = match &mut controller {
            Controller::Classical(gain) => state.classical(*gain, &view).map(|t| t.to_vector()),
            Controller::Mppi(engine, model) => {
                let s0 = state.mppi_state(model, &view);
                Ok(engine.step(model.as_ref(), &s0))
            }
        };
        let command = match command {
            Ok(c) if c.iter().all(|x| x.is_finite()) => c,
            _ => {
                numeric_failure = true;
                log.push(row);
                break;
            }
        };
        let hit = apply_twist(&mut world, &Twist::from_vector(&command), dt, &cfg.limits);
        let applied = if hit { Vec6::zeros() } else { command };
        limit_hits += hit as usize;
        row.twist = applied.into();
        row.jl_flag = hit;
        log.push(row);
        state.track_depths(&obs.pixels, &applied, dt);

        below = if err < threshold { below + 1 } else { 0 };
        still = if applied.norm() < STALL_TWIST { still + 1 } else { 0 };
        if still >= stall_steps {
            let (e1, e2) = pose_error(&world.camera_pose, &desired);
            if !check_local_minimum(&e1, &e2) {
                stalled = true;
                break;
            }
        }
        if let Some(h) = hold_steps {
            if below > h {
                break;
            }
        }
    }

    let (e1, e2) = pose_error(&world.camera_pose, &desired);
    let (m1, m2) = pose_mse(&e1, &e2);
    let final_ok = check_local_minimum(&e1, &e2);
    let r_jl = limit_hits > 0 && !p_out;
    let r_lm = (stalled || numeric_failure || !final_ok) && !p_out && !r_jl;
    let errors: Vec<f64> = log.iter().map(|r| r.err_norm).collect();
    let conv = if p_out { None } else { convergence_time(&errors, threshold, dt) };
    Ok(TaskResult {
        name: cfg.name.clone(),
        r_lm,
        r_jl,
        p_out,
        success: !(r_lm || r_jl || p_out),
        convergence_time: conv,
        final_error_norm: errors.last().copied().unwrap_or(f64::NAN),
        final_mse: [m1, m2],
        limit_hits,
        stopped_early: log.len() < steps,
        initial: cfg.initial,
        log,
    })
}

/// Translation error in the object frame and the relative rotation vector.
fn pose_error(current: &RigidTransform, desired: &RigidTransform) -> (Vec3, Vec3) {
    let e1 = current.translation - desired.translation;
    let e2 = rotation_to_axis_angle(&(desired.rotation.transpose() * current.rotation)).0;
    (e1, e2)
}

/// Per-task line of a suite summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub index: usize,
    pub name: String,
    pub success: bool,
    pub r_lm: bool,
    pub r_jl: bool,
    pub p_out: bool,
    pub convergence_time: Option<f64>,
    pub initial: PoseSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub name: String,
    pub tasks: usize,
    pub r_lm: usize,
    pub p_out: usize,
    pub r_jl: usize,
    pub n_success: usize,
    /// Percent.
    pub s_rate: f64,
    pub mean_convergence_time: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    pub entries: Vec<TaskSummary>,
}

/// Folds task results in index order.
pub fn summarize(name: &str, results: &[TaskResult]) -> SuiteSummary {
    let entries: Vec<TaskSummary> = results
        .iter()
        .enumerate()
        .map(|(index, r)| TaskSummary {
            index,
            name: r.name.clone(),
            success: r.success,
            r_lm: r.r_lm,
            r_jl: r.r_jl,
            p_out: r.p_out,
            convergence_time: r.convergence_time,
            initial: r.initial,
        })
        .collect();
    let count = |f: fn(&TaskSummary) -> bool| entries.iter().filter(|e| f(e)).count();
    let n_success = count(|e| e.success);
    let times: Vec<f64> = entries
        .iter()
        .filter(|e| e.success)
        .filter_map(|e| e.convergence_time)
        .collect();
    let mean = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
    SuiteSummary {
        name: name.to_string(),
        tasks: entries.len(),
        r_lm: count(|e| e.r_lm),
        p_out: count(|e| e.p_out),
        r_jl: count(|e| e.r_jl),
        n_success,
        s_rate: if entries.is_empty() {
            0.0
        } else {
            100.0 * n_success as f64 / entries.len() as f64
        },
        mean_convergence_time: mean,
        histogram: histogram(&times, 10.0),
        entries,
    }
}

fn histogram(times: &[f64], width: f64) -> Vec<HistogramBin> {
    let top = times.iter().copied().fold(0.0, f64::max);
    let bins = ((top / width).floor() as usize + 1).max(1);
    (0..bins)
        .map(|i| {
            let lo = i as f64 * width;
            let hi = lo + width;
            HistogramBin {
                lo,
                hi,
                count: times.iter().filter(|t| **t >= lo && **t < hi).count(),
            }
        })
        .collect()
}

/// Runs tasks concurrently and aggregates them in list order.
pub fn run_suite(name: &str, configs: &[ScenarioConfig]) -> Result<(Vec<TaskResult>, SuiteSummary)> {
    if configs.is_empty() {
        return Err(Error::config("tasks", "a suite needs at least one task"));
    }
    let results = configs.par_iter().map(run_task).collect::<Result<Vec<_>>>()?;
    let summary = summarize(name, &results);
    Ok((results, summary))
}

/// Copies `template` once per sampled initial pose, with a distinct seed per task.
pub fn suite_from_template(
    template: &ScenarioConfig,
    tasks: usize,
    seed: u64,
    bounds: &SamplingBox,
) -> Result<Vec<ScenarioConfig>> {
    let poses = sample_initial_poses(
        tasks,
        seed,
        bounds,
        &template.limits,
        &template.object_points(),
        &template.camera,
    )?;
    Ok(poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            let mut c = template.clone();
            c.initial = PoseSpec::from_transform(pose);
            c.seed = stream_seed(seed, i as u64, 0);
            c.name = format!("{}#{}", template.name, i + 1);
            c
        })
        .collect())
}
