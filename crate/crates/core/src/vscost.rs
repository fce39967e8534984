//! Predictive models and running costs for the three visual servoing schemes.
//!
//! State layouts, in order:
//! - IBVS: `[u1, v1, .., un, vn]`, followed by `[Z1, .., Zn]` for cases that
//!   predict depth.
//! - 3DVS: `[X1, Y1, Z1, .., Xn, Yn, Zn]` in the camera frame.
//! - PBVS: `[t (3), θu (3)]`, followed by the camera-frame points when the
//!   field-of-view penalty or the augmented cost needs them.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_to_axis_angle, AxisAngle, CameraIntrinsics, PixelPoint, Point3, Vec3, Vec6};
use crate::interaction::{l_theta_u, stack_ibvs, IbvsCase, MIN_DEPTH};
use crate::mppi::RolloutModel;

/// Penalty added when any feature leaves the image box.
pub const VISIBILITY_PENALTY: f64 = 1e7;
/// Penalty added when any 3D bound is violated.
pub const BOUND_PENALTY: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VsScheme {
    Ibvs(IbvsCase),
    ThreeDvs,
    Pbvs,
    PbvsAugmented,
}

impl VsScheme {
    pub fn is_ibvs(&self) -> bool {
        matches!(self, VsScheme::Ibvs(_))
    }
}

/// Pixel box the features must stay in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageBox {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl ImageBox {
    pub fn of_camera(cam: &CameraIntrinsics) -> Self {
        Self {
            u_min: 0.0,
            u_max: cam.width,
            v_min: 0.0,
            v_max: cam.height,
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= self.u_min && u <= self.u_max && v >= self.v_min && v <= self.v_max
    }
}

/// Exponential barrier on normalized image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovPenalty {
    pub beta: f64,
    pub alpha: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl FovPenalty {
    /// Bounds matching the pixel box of `cam` for a centered principal point.
    pub fn for_camera(cam: &CameraIntrinsics, beta: f64, alpha: f64) -> Self {
        let (x_max, y_max) = cam.normalized_half_extent();
        Self {
            beta,
            alpha,
            x_max,
            y_max,
        }
    }
}

impl Default for FovPenalty {
    fn default() -> Self {
        Self::for_camera(&CameraIntrinsics::default(), 150.0, 1e3)
    }
}

/// Constraint terms of the running cost.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    /// Image-plane visibility box (indicator cost).
    #[serde(default)]
    pub image: Option<ImageBox>,
    #[serde(default)]
    pub p_min: Option<[f64; 3]>,
    #[serde(default)]
    pub p_max: Option<[f64; 3]>,
    /// Upper bound on camera-frame depth.
    #[serde(default)]
    pub z_max: Option<f64>,
    /// Exponential field-of-view barrier for PBVS.
    #[serde(default)]
    pub fov: Option<FovPenalty>,
}

impl ConstraintSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(b) = &self.image {
            if !(b.u_min < b.u_max && b.v_min < b.v_max) {
                return Err(Error::config("constraints.image", "minimum must be below maximum"));
            }
        }
        if let (Some(lo), Some(hi)) = (&self.p_min, &self.p_max) {
            if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(Error::config("constraints.p_min", "must be below constraints.p_max"));
            }
        }
        if let Some(z) = self.z_max {
            if !z.is_finite() {
                return Err(Error::config("constraints.z_max", "must be finite"));
            }
        }
        if let Some(f) = &self.fov {
            if !(f.beta > 0.0 && f.alpha > 0.0 && f.x_max > 0.0 && f.y_max > 0.0) {
                return Err(Error::config("constraints.fov", "beta, alpha and bounds must be positive"));
            }
        }
        Ok(())
    }

    fn has_3d_terms(&self) -> bool {
        self.p_min.is_some() || self.p_max.is_some() || self.z_max.is_some()
    }

    fn point_violates(&self, p: &Point3) -> bool {
        if let Some(lo) = &self.p_min {
            if (0..3).any(|i| p[i] < lo[i]) {
                return true;
            }
        }
        if let Some(hi) = &self.p_max {
            if (0..3).any(|i| p[i] > hi[i]) {
                return true;
            }
        }
        matches!(self.z_max, Some(z) if p.z > z)
    }
}

/// State weights: diagonal Q, plus the pose and point weights of the
/// augmented PBVS cost.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q: Vec<f64>,
    pub w1: f64,
    pub w2: f64,
}

impl CostWeights {
    pub fn uniform(q: f64, n: usize) -> Self {
        Self {
            q: vec![q; n],
            w1: 35.0,
            w2: 150.0,
        }
    }
}

/// `(s - s*)ᵀ Q (s - s*)` with diagonal Q.
pub fn quadratic_state_cost(s: &[f64], s_star: &[f64], q: &[f64]) -> f64 {
    s.iter()
        .zip(s_star)
        .zip(q)
        .map(|((a, b), w)| {
            let e = a - b;
            w * e * e
        })
        .sum()
}

/// Indicator penalties on stacked pixels and optional depths.
pub fn ibvs_indicator_cost(
    pixels: &[f64],
    depths: Option<&[f64]>,
    cam: &CameraIntrinsics,
    spec: &ConstraintSpec,
) -> f64 {
    let mut cost = 0.0;
    if let Some(b) = &spec.image {
        if pixels.chunks_exact(2).any(|p| !b.contains(p[0], p[1])) {
            cost += VISIBILITY_PENALTY;
        }
    }
    if let (Some(z), true) = (depths, spec.has_3d_terms()) {
        let violated = pixels.chunks_exact(2).zip(z).any(|(p, &z)| {
            let pt = cam.back_project(&PixelPoint::new(p[0], p[1]), z);
            spec.point_violates(&pt)
        });
        if violated {
            cost += BOUND_PENALTY;
        }
    }
    cost
}

/// Indicator penalties on stacked camera-frame points.
pub fn points_indicator_cost(points: &[f64], cam: &CameraIntrinsics, spec: &ConstraintSpec) -> f64 {
    let mut cost = 0.0;
    if let Some(b) = &spec.image {
        let out = points.chunks_exact(3).any(|p| {
            p[2] <= 0.0 || !b.contains(cam.fu * p[0] / p[2] + cam.u0, cam.fv * p[1] / p[2] + cam.v0)
        });
        if out {
            cost += VISIBILITY_PENALTY;
        }
    }
    if spec.has_3d_terms()
        && points
            .chunks_exact(3)
            .any(|p| spec.point_violates(&Point3::new(p[0], p[1], p[2])))
    {
        cost += BOUND_PENALTY;
    }
    cost
}

/// `β Σ [exp(-α(x_max - |x|)) + exp(-α(y_max - |y|))]` over normalized points.
pub fn pbvs_exponential_penalty(points: &[(f64, f64)], fov: &FovPenalty) -> f64 {
    points
        .iter()
        .map(|(x, y)| (-fov.alpha * (fov.x_max - x.abs())).exp() + (-fov.alpha * (fov.y_max - y.abs())).exp())
        .sum::<f64>()
        * fov.beta
}

/// `w1 ‖pose error‖² + w2 ‖point error‖²` on the augmented PBVS state.
pub fn pbvs_augmented_cost(s: &[f64], s_star: &[f64], w1: f64, w2: f64) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    for (i, (x, y)) in s.iter().zip(s_star).enumerate() {
        let e = x - y;
        if i < 6 {
            a += e * e;
        } else {
            b += e * e;
        }
    }
    w1 * a + w2 * b
}

/// Goal of the servoing task as seen by the controller's model.
#[derive(Debug, Clone, PartialEq)]
pub struct Goal {
    pub pixels: Vec<PixelPoint>,
    pub depths: Vec<f64>,
    /// Desired camera-frame points.
    pub points: Vec<Point3>,
}

/// Scheme-specific prediction model and running cost.
#[derive(Debug, Clone)]
pub struct VsModel {
    scheme: VsScheme,
    cam: CameraIntrinsics,
    n: usize,
    goal_state: Vec<f64>,
    goal_depths: Vec<f64>,
    weights: CostWeights,
    constraints: ConstraintSpec,
    carries_points: bool,
    /// Image Jacobian at the goal, row-major 2n×6, for cases 2 and 3.
    goal_jacobian: Vec<f64>,
}

impl VsModel {
    pub fn new(
        scheme: VsScheme,
        cam: CameraIntrinsics,
        goal: &Goal,
        weights: CostWeights,
        constraints: ConstraintSpec,
    ) -> Result<Self> {
        constraints.validate()?;
        let n = goal.pixels.len();
        if n == 0 || goal.depths.len() != n || goal.points.len() != n {
            return Err(Error::Shape("goal needs matching pixels, depths and points".into()));
        }
        let carries_points = match scheme {
            VsScheme::Pbvs => constraints.fov.is_some() || constraints.image.is_some() || constraints.has_3d_terms(),
            VsScheme::PbvsAugmented => true,
            _ => false,
        };
        let mut model = Self {
            scheme,
            cam,
            n,
            goal_state: Vec::new(),
            goal_depths: goal.depths.clone(),
            weights,
            constraints,
            carries_points,
            goal_jacobian: Vec::new(),
        };
        model.goal_state = match scheme {
            VsScheme::Ibvs(case) => {
                let depths = case.tracks_depth().then_some(goal.depths.as_slice());
                ibvs_state(&goal.pixels, depths)
            }
            VsScheme::ThreeDvs => points_state(&goal.points),
            VsScheme::Pbvs | VsScheme::PbvsAugmented => {
                pbvs_state(&Vec3::zeros(), &AxisAngle::zero(), carries_points.then_some(goal.points.as_slice()))
            }
        };
        let cost_dim = model.cost_dim();
        if model.weights.q.len() < cost_dim {
            return Err(Error::Shape(format!(
                "state weight has {} entries, the scheme needs {cost_dim}",
                model.weights.q.len()
            )));
        }
        if let VsScheme::Ibvs(IbvsCase::Case2 | IbvsCase::Case3) = scheme {
            let l: DMatrix<f64> = stack_ibvs(&goal.pixels, &goal.depths, &cam)?;
            model.goal_jacobian = l.transpose().as_slice().to_vec();
        }
        Ok(model)
    }

    pub fn scheme(&self) -> VsScheme {
        self.scheme
    }

    pub fn camera(&self) -> &CameraIntrinsics {
        &self.cam
    }

    pub fn goal_state(&self) -> &[f64] {
        &self.goal_state
    }

    pub fn carries_points(&self) -> bool {
        self.carries_points
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    /// Length of the prefix of the state weighted by Q.
    fn cost_dim(&self) -> usize {
        match self.scheme {
            VsScheme::Ibvs(_) => 2 * self.n,
            VsScheme::ThreeDvs => 3 * self.n,
            VsScheme::Pbvs | VsScheme::PbvsAugmented => 6,
        }
    }

    fn ibvs_step(&self, case: IbvsCase, s: &mut [f64], v: &Vec6, dt: f64) -> bool {
        let n = self.n;
        let (fu, fv, u0, v0) = (self.cam.fu, self.cam.fv, self.cam.u0, self.cam.v0);
        let (pix, rest) = s.split_at_mut(2 * n);
        for i in 0..n {
            let u = pix[2 * i] - u0;
            let w = pix[2 * i + 1] - v0;
            let z = match case {
                IbvsCase::Case0 | IbvsCase::Case3 => rest[i],
                IbvsCase::Case1 | IbvsCase::Case2 => self.goal_depths[i],
            };
            if !(z >= MIN_DEPTH) {
                return false;
            }
            let live = || {
                let du = -fu / z * v[0] + u / z * v[2] + u * w / fv * v[3] - (fu * fu + u * u) / fu * v[4]
                    + fu * w / fv * v[5];
                let dv = -fv / z * v[1] + w / z * v[2] + (fv * fv + w * w) / fv * v[3] - u * w / fu * v[4]
                    - fv * u / fu * v[5];
                (du, dv)
            };
            let fixed = || {
                let row = |r: usize| -> f64 { (0..6).map(|c| self.goal_jacobian[6 * r + c] * v[c]).sum() };
                (row(2 * i), row(2 * i + 1))
            };
            let (du, dv) = match case {
                IbvsCase::Case0 | IbvsCase::Case1 => live(),
                IbvsCase::Case2 => fixed(),
                IbvsCase::Case3 => {
                    let (a, b) = live();
                    let (c, d) = fixed();
                    (0.5 * (a + c), 0.5 * (b + d))
                }
            };
            if case.tracks_depth() {
                // Ż = -v_z - Y ω_x + X ω_y
                let x = u / fu * z;
                let y = w / fv * z;
                let zn = z + (-v[2] - y * v[3] + x * v[4]) * dt;
                if !(zn >= MIN_DEPTH) {
                    return false;
                }
                rest[i] = zn;
            }
            pix[2 * i] += du * dt;
            pix[2 * i + 1] += dv * dt;
        }
        true
    }

    fn ibvs_cost(&self, case: IbvsCase, s: &[f64]) -> f64 {
        let n = self.n;
        let q = quadratic_state_cost(&s[..2 * n], &self.goal_state[..2 * n], &self.weights.q);
        let depths = if case.tracks_depth() { Some(&s[2 * n..3 * n]) } else { None };
        q + ibvs_indicator_cost(&s[..2 * n], depths, &self.cam, &self.constraints)
    }

    fn pbvs_cost(&self, s: &[f64]) -> f64 {
        if self.scheme == VsScheme::PbvsAugmented {
            return pbvs_augmented_cost(s, &self.goal_state, self.weights.w1, self.weights.w2);
        }
        let mut cost = quadratic_state_cost(&s[..6], &self.goal_state[..6], &self.weights.q);
        if self.carries_points {
            let pts = &s[6..];
            if let Some(fov) = &self.constraints.fov {
                let normalized: Vec<(f64, f64)> = pts.chunks_exact(3).map(|p| (p[0] / p[2], p[1] / p[2])).collect();
                cost += pbvs_exponential_penalty(&normalized, fov);
            }
            cost += points_indicator_cost(pts, &self.cam, &self.constraints);
        }
        cost
    }
}

fn step_points(pts: &mut [f64], v: &Vec6, dt: f64) -> bool {
    let lin = Vec3::new(v[0], v[1], v[2]);
    let ang = Vec3::new(v[3], v[4], v[5]);
    for p in pts.chunks_exact_mut(3) {
        let cur = Vec3::new(p[0], p[1], p[2]);
        // Ṗ = -v + [P]x ω
        let next = cur + (-lin + cur.cross(&ang)) * dt;
        if !(next.z >= MIN_DEPTH) {
            return false;
        }
        p.copy_from_slice(next.as_slice());
    }
    true
}

impl RolloutModel for VsModel {
    fn state_dim(&self) -> usize {
        self.goal_state.len()
    }

    fn step(&self, s: &mut [f64], v: &Vec6, dt: f64) -> bool {
        match self.scheme {
            VsScheme::Ibvs(case) => self.ibvs_step(case, s, v, dt),
            VsScheme::ThreeDvs => step_points(s, v, dt),
            VsScheme::Pbvs | VsScheme::PbvsAugmented => {
                let t = Vec3::new(s[0], s[1], s[2]);
                let tu = AxisAngle(Vec3::new(s[3], s[4], s[5]));
                let lin = Vec3::new(v[0], v[1], v[2]);
                let ang = Vec3::new(v[3], v[4], v[5]);
                let r = tu.to_rotation();
                let t2 = t + r * lin * dt;
                let mut tu2 = tu.0 + l_theta_u(&tu) * (r * ang) * dt;
                if tu2.norm() > std::f64::consts::PI {
                    tu2 = rotation_to_axis_angle(&AxisAngle(tu2).to_rotation()).0;
                }
                s[..3].copy_from_slice(t2.as_slice());
                s[3..6].copy_from_slice(tu2.as_slice());
                if self.carries_points {
                    return step_points(&mut s[6..], v, dt);
                }
                true
            }
        }
    }

    fn running_cost(&self, s: &[f64]) -> f64 {
        match self.scheme {
            VsScheme::Ibvs(case) => self.ibvs_cost(case, s),
            VsScheme::ThreeDvs => {
                quadratic_state_cost(s, &self.goal_state, &self.weights.q)
                    + points_indicator_cost(s, &self.cam, &self.constraints)
            }
            VsScheme::Pbvs | VsScheme::PbvsAugmented => self.pbvs_cost(s),
        }
    }
}

/// Running cost of `model` as a standalone closure.
pub fn build_running_cost(model: VsModel) -> impl Fn(&[f64]) -> f64 + Send + Sync {
    move |s| model.running_cost(s)
}

pub fn ibvs_state(pixels: &[PixelPoint], depths: Option<&[f64]>) -> Vec<f64> {
    let mut s: Vec<f64> = pixels.iter().flat_map(|p| [p.u, p.v]).collect();
    if let Some(z) = depths {
        s.extend_from_slice(z);
    }
    s
}

pub fn points_state(points: &[Point3]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

pub fn pbvs_state(t: &Vec3, tu: &AxisAngle, points: Option<&[Point3]>) -> Vec<f64> {
    let mut s = vec![t.x, t.y, t.z, tu.0.x, tu.0.y, tu.0.z];
    if let Some(p) = points {
        s.extend(points_state(p));
    }
    s
}
