//! Sampling-based predictive visual servoing.
//!
//! The crate bundles the camera and pose geometry, the interaction matrices
//! of image-based, 3D-point and pose-based servoing, the classical
//! pseudo-inverse laws, a generic MPPI engine with scheme-specific costs,
//! a gantry simulator and an experiment harness.

pub mod classical;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod interaction;
pub mod io;
pub mod mppi;
pub mod oracle;
pub mod presets;
pub mod sim;
pub mod vscost;

pub use classical::{c_3dvs, c_ibvs, c_pbvs, pseudo_inverse, ClassicalGain};
pub use error::{Error, Result};
pub use geometry::{
    axis_angle_to_rotation, integrate_twist, project, rotation_to_axis_angle, transform_point, AxisAngle,
    CameraIntrinsics, PixelPoint, Point3, RigidTransform, Twist, Vec3, Vec6,
};
pub use interaction::{ibvs_matrix_for_case, l2d_point, l3d_point, l_pbvs, l_theta_u, stack_ibvs, IbvsCase};
pub use harness::{run_suite, run_task, ControllerKind, PoseSpec, ScenarioConfig, SuiteSummary, TaskResult};
pub use mppi::{ControlSequence, Mppi, MppiConfig, RolloutModel};
pub use sim::{CalibrationError, GantryLimits, NoiseSpec, Observation, World};
pub use vscost::{ConstraintSpec, CostWeights, FovPenalty, ImageBox, VsModel, VsScheme};
