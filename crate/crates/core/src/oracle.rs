//! Independent numerical checks of the library against its own simulator
//! and against closed-form identities.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64Mcg;

use crate::classical::pseudo_inverse;
use crate::geometry::{
    axis_angle_to_rotation, integrate_twist, project, rotation_to_axis_angle, transform_point, AxisAngle,
    CameraIntrinsics, Point3, RigidTransform, Twist, Vec3, Vec6,
};
use crate::interaction::{l2d_point, l3d_point, l_pbvs};
use crate::mppi::{Mppi, MppiConfig, RolloutModel};
use crate::sim::true_pose_error;
use crate::interaction::IbvsCase;
use crate::vscost::{ConstraintSpec, CostWeights, Goal, VsModel, VsScheme};

/// Outcome of one oracle: the largest error seen and the bound it must stay under.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub max_error: f64,
    pub bound: f64,
    pub passed: bool,
    pub detail: String,
}

impl OracleReport {
    fn new(name: &str, max_error: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            max_error,
            bound,
            passed: max_error < bound,
            detail: detail.into(),
        }
    }
}

pub const ORACLE_NAMES: [&str; 5] = ["finite-diff", "pinv-axioms", "mppi-toy", "depth-integration", "rotation-round-trip"];

/// Runs the named oracle with its default sizes.
pub fn run_oracle(name: &str, seed: u64) -> Option<Vec<OracleReport>> {
    Some(match name {
        "finite-diff" => finite_difference(1000, seed).to_vec(),
        "pinv-axioms" => vec![pinv_axioms(1000, seed)],
        "mppi-toy" => vec![mppi_toy(seed)],
        "depth-integration" => vec![depth_integration()],
        "rotation-round-trip" => vec![rotation_round_trip(1000, seed)],
        _ => return None,
    })
}

const FD_STEP: f64 = 1e-4;

fn random_twist(rng: &mut Pcg64Mcg) -> Twist {
    let mut g = || -> f64 { StandardNormal.sample(&mut *rng) };
    Twist::new(Vec3::new(g(), g(), g()) * 0.2, Vec3::new(g(), g(), g()) * 0.3)
}

fn random_pose(rng: &mut Pcg64Mcg) -> RigidTransform {
    let t = Vec3::new(
        rng.random_range(-0.3..0.3),
        rng.random_range(-0.3..0.3),
        rng.random_range(-1.4..-0.5),
    );
    let tu = AxisAngle(Vec3::new(
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(-2.5..2.5),
    ));
    RigidTransform::from_theta_u(t, &tu)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-12)
}

/// Central differences of simulated feature motion against `L v` for the
/// pixel, 3D-point and pose interaction matrices.
pub fn finite_difference(pairs: usize, seed: u64) -> [OracleReport; 3] {
    let cam = CameraIntrinsics::default();
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let (mut e2d, mut e3d, mut epose) = (0.0f64, 0.0f64, 0.0f64);
    let desired = RigidTransform::from_theta_u(Vec3::new(0.0, 0.0, -0.75), &AxisAngle::zero());
    for _ in 0..pairs {
        let pose = random_pose(&mut rng);
        let twist = random_twist(&mut rng);
        let world_point = Point3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 0.0);
        let ahead = integrate_twist(&pose, &twist, FD_STEP);
        let back = integrate_twist(&pose, &twist, -FD_STEP);
        let v = twist.to_vector();

        let p = transform_point(&pose, &world_point);
        let (pa, pb) = (transform_point(&ahead, &world_point), transform_point(&back, &world_point));
        let fd3: Vec<f64> = ((pa - pb) / (2.0 * FD_STEP)).iter().copied().collect();
        let an3: Vec<f64> = (l3d_point(&p) * v).iter().copied().collect();
        e3d = e3d.max(rel(&fd3, &an3));

        if let (Ok(px), Ok(qa), Ok(qb)) = (project(&p, &cam), project(&pa, &cam), project(&pb, &cam)) {
            let fd = [(qa.u - qb.u) / (2.0 * FD_STEP), (qa.v - qb.v) / (2.0 * FD_STEP)];
            let l = l2d_point(&px, p.z, &cam).expect("point in front of the camera");
            let an: Vec<f64> = (l * v).iter().copied().collect();
            e2d = e2d.max(rel(&fd, &an));
        }

        let (_, tu0) = true_pose_error(&pose, &desired);
        let (ta, tua) = true_pose_error(&ahead, &desired);
        let (tb, tub) = true_pose_error(&back, &desired);
        let mut fd = [0.0; 6];
        for i in 0..3 {
            fd[i] = (ta[i] - tb[i]) / (2.0 * FD_STEP);
            fd[i + 3] = (tua.0[i] - tub.0[i]) / (2.0 * FD_STEP);
        }
        let r = axis_angle_to_rotation(&tu0);
        let an: Vec<f64> = (l_pbvs(&r, &tu0) * v).iter().copied().collect();
        epose = epose.max(rel(&fd, &an));
    }
    let bound = 1e-3;
    [
        OracleReport::new("finite-diff/pixel", e2d, bound, format!("{pairs} pose/twist pairs")),
        OracleReport::new("finite-diff/point", e3d, bound, format!("{pairs} pose/twist pairs")),
        OracleReport::new("finite-diff/pose", epose, bound, format!("{pairs} pose/twist pairs")),
    ]
}

fn gaussian(rng: &mut Pcg64Mcg, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut *rng))
}

fn penrose_residual(a: &DMatrix<f64>) -> f64 {
    let p = pseudo_inverse(a);
    let ap = a * &p;
    let pa = &p * a;
    let r1 = (&ap * a - a).norm() / a.norm();
    let r2 = (&pa * &p - &p).norm() / p.norm();
    let r3 = (&ap - ap.transpose()).norm();
    let r4 = (&pa - pa.transpose()).norm();
    r1.max(r2).max(r3).max(r4)
}

/// Largest Penrose residual over tall and wide, random full-rank and rank-deficient matrices.
pub fn pinv_axioms(cases: usize, seed: u64) -> OracleReport {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for k in 0..cases {
        let rows = [6, 8, 12, 16][k % 4];
        // Random orthogonal factors around singular values in [0.1, 10], with
        // every third matrix losing its last direction.
        let u = gaussian(&mut rng, rows, 6).qr().q();
        let v = gaussian(&mut rng, 6, 6).qr().q();
        let mut sigma: Vec<f64> = (0..6).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
        if k % 3 == 0 {
            sigma[5] = 0.0;
        }
        let a: DMatrix<f64> = &u * DMatrix::from_diagonal(&DVector::from_vec(sigma)) * v.transpose();
        worst = worst.max(penrose_residual(&a)).max(penrose_residual(&a.transpose()));
    }
    OracleReport::new("pinv-axioms", worst, 1e-9, format!("{cases} matrices and their transposes"))
}

/// `log(exp(θu)) = θu` for random rotation vectors with angle below π.
pub fn rotation_round_trip(cases: usize, seed: u64) -> OracleReport {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let axis = Vec3::from_fn(|_, _| StandardNormal.sample(&mut rng)).normalize();
        let angle = rng.random_range(0.0..std::f64::consts::PI * 0.999);
        let tu = AxisAngle(axis * angle);
        let back = rotation_to_axis_angle(&axis_angle_to_rotation(&tu));
        worst = worst.max((back.0 - tu.0).norm());
    }
    OracleReport::new("rotation-round-trip", worst, 1e-9, format!("{cases} rotation vectors"))
}

/// Predicted depth under a constant `v_z` against the closed form `Z₀ - v_z t`.
pub fn depth_integration() -> OracleReport {
    let cam = CameraIntrinsics::default();
    let points = [
        Point3::new(-0.1, -0.1, 0.8),
        Point3::new(0.1, -0.1, 0.9),
        Point3::new(0.1, 0.1, 1.0),
        Point3::new(-0.1, 0.1, 1.1),
    ];
    let goal = Goal {
        pixels: points.iter().map(|p| project(p, &cam).expect("in front")).collect(),
        depths: points.iter().map(|p| p.z).collect(),
        points: points.to_vec(),
    };
    let model = VsModel::new(
        VsScheme::Ibvs(IbvsCase::Case0),
        cam,
        &goal,
        CostWeights::uniform(1.0, 8),
        ConstraintSpec::default(),
    )
    .expect("valid model");
    let mut s: Vec<f64> = goal.pixels.iter().flat_map(|p| [p.u, p.v]).collect();
    s.extend(goal.depths.iter());
    let vz = 0.13;
    let v = Vec6::new(0.0, 0.0, vz, 0.0, 0.0, 0.0);
    let dt = 0.02;
    let steps = 100;
    let mut worst = 0.0f64;
    for k in 1..=steps {
        assert!(model.step(&mut s, &v, dt));
        for (i, p) in points.iter().enumerate() {
            let exact = p.z - vz * dt * k as f64;
            worst = worst.max((s[8 + i] - exact).abs());
        }
    }
    OracleReport::new("depth-integration", worst, 1e-12, format!("{steps} steps at v_z = {vz} m/s"))
}

struct Integrator;

impl RolloutModel for Integrator {
    fn state_dim(&self) -> usize {
        1
    }
    fn step(&self, state: &mut [f64], v: &Vec6, dt: f64) -> bool {
        state[0] += v[0] * dt;
        true
    }
    fn running_cost(&self, state: &[f64]) -> f64 {
        100.0 * state[0] * state[0]
    }
}

/// A 1D integrator driven from x = 1 must get within 1e-2 of the origin
/// in 100 control steps. The reported error is the closest approach.
pub fn mppi_toy(seed: u64) -> OracleReport {
    let dt = 0.05;
    let cfg = MppiConfig {
        samples: 256,
        horizon: 20,
        dt,
        lambda: 1.0,
        sigma: [0.25; 6],
        seed,
        ..MppiConfig::default()
    };
    let mut mppi = Mppi::new(cfg).expect("valid config");
    let mut x = [1.0];
    let mut best = f64::INFINITY;
    for _ in 0..100 {
        let u = mppi.step(&Integrator, &x);
        x[0] += u[0] * dt;
        best = best.min(x[0].abs());
    }
    OracleReport::new("mppi-toy", best, 1e-2, "closest approach to the origin over 100 steps")
}
