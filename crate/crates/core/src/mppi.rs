//! Model predictive path integral control, independent of any visual scheme.
//!
//! Each control cycle draws `K` perturbed copies of the nominal sequence,
//! rolls them through a predictive model, and moves the nominal sequence
//! toward the exponentially cost-weighted mean of the perturbations.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec6;

/// Cost assigned to a rollout whose predicted state left the valid domain.
pub const DIVERGED_COST: f64 = 1e18;

/// Sampler and cost parameters of the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MppiConfig {
    /// Number of sampled trajectories K.
    pub samples: usize,
    /// Horizon length T in control steps.
    pub horizon: usize,
    /// Prediction step in seconds.
    pub dt: f64,
    /// Inverse temperature λ.
    pub lambda: f64,
    /// Exploration noise ν.
    pub nu: f64,
    /// Diagonal of the perturbation covariance Σ_u.
    pub sigma: [f64; 6],
    /// Diagonal of the control weight R. Defaults to ½λΣ_u⁻¹.
    #[serde(default)]
    pub control_weight: Option<[f64; 6]>,
    #[serde(default)]
    pub v_min: Option<[f64; 6]>,
    #[serde(default)]
    pub v_max: Option<[f64; 6]>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            horizon: 175,
            dt: 0.02,
            lambda: 100.0,
            nu: 1000.0,
            sigma: [0.02, 0.01, 0.01, 0.02, 0.02, 0.01],
            control_weight: None,
            v_min: None,
            v_max: None,
            seed: 0,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::config("mppi.samples", "at least one sample is required"));
        }
        if self.horizon < 1 {
            return Err(Error::config("mppi.horizon", "horizon must be at least one step"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("mppi.dt", "must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("mppi.lambda", "must be positive"));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config("mppi.nu", "must be positive"));
        }
        if self.sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("mppi.sigma", "variances must be positive"));
        }
        if let Some(r) = &self.control_weight {
            if r.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(Error::config("mppi.control_weight", "weights must be nonnegative"));
            }
        }
        match (&self.v_min, &self.v_max) {
            (None, None) => {}
            (Some(lo), Some(hi)) => {
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(Error::config("mppi.v_min", "must be below mppi.v_max elementwise"));
                }
            }
            (Some(_), None) => return Err(Error::config("mppi.v_max", "missing upper bound")),
            (None, Some(_)) => return Err(Error::config("mppi.v_min", "missing lower bound")),
        }
        Ok(())
    }

    pub fn sigma_vec(&self) -> Vec6 {
        Vec6::from(self.sigma)
    }

    /// Diagonal of R, falling back to ½λΣ_u⁻¹.
    pub fn control_weight_vec(&self) -> Vec6 {
        match self.control_weight {
            Some(r) => Vec6::from(r),
            None => self.sigma_vec().map(|s| 0.5 * self.lambda / s),
        }
    }

    pub fn bounds(&self) -> Option<(Vec6, Vec6)> {
        match (self.v_min, self.v_max) {
            (Some(lo), Some(hi)) => Some((Vec6::from(lo), Vec6::from(hi))),
            _ => None,
        }
    }

    /// Symmetric bounds `±(lin, lin, lin, ang, ang, ang)`.
    pub fn with_symmetric_bounds(mut self, linear: f64, angular: f64) -> Self {
        let hi = [linear, linear, linear, angular, angular, angular];
        self.v_max = Some(hi);
        self.v_min = Some(hi.map(|x| -x));
        self
    }
}

/// Nominal control plan, one twist per horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence(pub Vec<Vec6>);

impl ControlSequence {
    pub fn zeros(horizon: usize) -> Self {
        Self(vec![Vec6::zeros(); horizon])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Predictive model and running cost driven by a rollout.
pub trait RolloutModel: Sync {
    fn state_dim(&self) -> usize;

    /// Advances `state` in place by one prediction step. Returns `false` when
    /// the prediction left the model's valid domain.
    fn step(&self, state: &mut [f64], v: &Vec6, dt: f64) -> bool;

    fn running_cost(&self, state: &[f64]) -> f64;

    fn terminal_cost(&self, _state: &[f64]) -> f64 {
        0.0
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the noise stream of one sample at one control step.
pub fn stream_seed(seed: u64, step: u64, sample: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ step) ^ sample)
}

fn fill_sample(out: &mut [f64], std: &Vec6, seed: u64) {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    for (i, x) in out.iter_mut().enumerate() {
        let n: f64 = StandardNormal.sample(&mut rng);
        *x = n * std[i % 6];
    }
}

/// Draws `samples × horizon × 6` Gaussian perturbations with variances
/// `sigma`, laid out sample-major. Depends only on `(seed, step)`.
pub fn sample_perturbations(samples: usize, horizon: usize, sigma: &Vec6, seed: u64, step: u64) -> Vec<f64> {
    let mut out = vec![0.0; samples * horizon * 6];
    fill_perturbations(&mut out, horizon, sigma, seed, step);
    out
}

fn fill_perturbations(out: &mut [f64], horizon: usize, sigma: &Vec6, seed: u64, step: u64) {
    let std = sigma.map(f64::sqrt);
    out.par_chunks_mut(horizon * 6)
        .enumerate()
        .for_each(|(k, chunk)| fill_sample(chunk, &std, stream_seed(seed, step, k as u64)));
}

/// Elementwise clamp of a twist into `[v_min, v_max]`.
pub fn clamp_control(v: &Vec6, v_min: &Vec6, v_max: &Vec6) -> Vec6 {
    Vec6::from_fn(|i, _| v[i].max(v_min[i]).min(v_max[i]))
}

fn apply_bounds(v: &Vec6, bounds: &Option<(Vec6, Vec6)>) -> Vec6 {
    match bounds {
        Some((lo, hi)) => clamp_control(v, lo, hi),
        None => *v,
    }
}

/// `((1 - 1/ν)/2) δuᵀRδu + uᵀRδu + ½ uᵀRu` with diagonal `R`.
pub fn control_cost(u: &Vec6, du: &Vec6, r: &Vec6, nu: f64) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    for i in 0..6 {
        a += du[i] * r[i] * du[i];
        b += u[i] * r[i] * du[i];
        c += u[i] * r[i] * u[i];
    }
    0.5 * (1.0 - 1.0 / nu) * a + b + 0.5 * c
}

/// Cost-to-go of one perturbed trajectory. The running cost is charged on
/// each predicted state after its control is applied.
pub fn rollout<M: RolloutModel + ?Sized>(
    model: &M,
    s0: &[f64],
    controls: &ControlSequence,
    noise: &[f64],
    cfg: &MppiConfig,
) -> f64 {
    let r = cfg.control_weight_vec();
    let bounds = cfg.bounds();
    let mut state = s0.to_vec();
    rollout_with(model, &mut state, controls, noise, &r, cfg.nu, &bounds, cfg.dt)
}

#[allow(clippy::too_many_arguments)]
fn rollout_with<M: RolloutModel + ?Sized>(
    model: &M,
    state: &mut [f64],
    controls: &ControlSequence,
    noise: &[f64],
    r: &Vec6,
    nu: f64,
    bounds: &Option<(Vec6, Vec6)>,
    dt: f64,
) -> f64 {
    let mut cost = 0.0;
    for (t, u) in controls.0.iter().enumerate() {
        let du = Vec6::from_column_slice(&noise[6 * t..6 * t + 6]);
        let v = apply_bounds(&(u + du), bounds);
        if !model.step(state, &v, dt) {
            return DIVERGED_COST;
        }
        cost += model.running_cost(state) + control_cost(u, &du, r, nu);
    }
    cost += model.terminal_cost(state);
    if cost.is_finite() {
        cost.min(DIVERGED_COST)
    } else {
        DIVERGED_COST
    }
}

/// Normalized importance weights `exp(-(S_k - min S)/λ)`.
pub fn importance_weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = costs.iter().map(|s| (-(s - min) / lambda).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Moves each `u_t` by the weighted mean of the sampled perturbations.
/// The reduction runs in sample order so the result never depends on how
/// the rollouts were scheduled.
pub fn update_controls(controls: &ControlSequence, costs: &[f64], noise: &[f64], lambda: f64) -> ControlSequence {
    let horizon = controls.len();
    let w = importance_weights(costs, lambda);
    let mut out = controls.clone();
    for (k, wk) in w.iter().enumerate() {
        if *wk == 0.0 {
            continue;
        }
        let base = &noise[k * horizon * 6..(k + 1) * horizon * 6];
        for (t, u) in out.0.iter_mut().enumerate() {
            for i in 0..6 {
                u[i] += wk * base[6 * t + i];
            }
        }
    }
    out
}

/// Slides the plan one step forward, repeating the last control.
pub fn shift_sequence(controls: &ControlSequence) -> ControlSequence {
    let mut out = controls.0.clone();
    if out.len() > 1 {
        out.rotate_left(1);
        let n = out.len();
        out[n - 1] = out[n - 2];
    }
    ControlSequence(out)
}

/// One full control cycle from an explicit plan. Returns the twist to apply
/// and the warm-started plan for the next cycle.
pub fn mppi_step<M: RolloutModel>(
    model: &M,
    s0: &[f64],
    controls: &ControlSequence,
    cfg: &MppiConfig,
    step: u64,
) -> (Vec6, ControlSequence) {
    let mut engine = Mppi {
        cfg: cfg.clone(),
        controls: controls.clone(),
        step,
        noise: Vec::new(),
        costs: Vec::new(),
    };
    let u0 = engine.step(model, s0);
    (u0, engine.controls)
}

/// Stateful controller holding the warm-started plan and scratch buffers.
#[derive(Debug, Clone)]
pub struct Mppi {
    cfg: MppiConfig,
    controls: ControlSequence,
    step: u64,
    noise: Vec<f64>,
    costs: Vec<f64>,
}

impl Mppi {
    pub fn new(cfg: MppiConfig) -> Result<Self> {
        cfg.validate()?;
        let controls = ControlSequence::zeros(cfg.horizon);
        Ok(Self {
            cfg,
            controls,
            step: 0,
            noise: Vec::new(),
            costs: Vec::new(),
        })
    }

    pub fn config(&self) -> &MppiConfig {
        &self.cfg
    }

    pub fn controls(&self) -> &ControlSequence {
        &self.controls
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Cost-to-go of every sample from the most recent cycle.
    pub fn last_costs(&self) -> &[f64] {
        &self.costs
    }

    /// Runs one cycle from state `s0` and returns the clamped first control.
    pub fn step<M: RolloutModel + ?Sized>(&mut self, model: &M, s0: &[f64]) -> Vec6 {
        let k = self.cfg.samples;
        let horizon = self.cfg.horizon;
        let stride = horizon * 6;
        self.noise.resize(k * stride, 0.0);
        let sigma = self.cfg.sigma_vec();
        fill_perturbations(&mut self.noise, horizon, &sigma, self.cfg.seed, self.step);

        let r = self.cfg.control_weight_vec();
        let bounds = self.cfg.bounds();
        let nu = self.cfg.nu;
        let dt = self.cfg.dt;
        let controls = &self.controls;
        self.costs.clear();
        self.costs.resize(k, 0.0);
        self.costs
            .par_iter_mut()
            .zip(self.noise.par_chunks(stride))
            .for_each_init(
                || s0.to_vec(),
                |state, (cost, noise)| {
                    state.copy_from_slice(s0);
                    *cost = rollout_with(model, state, controls, noise, &r, nu, &bounds, dt);
                },
            );

        let mut updated = update_controls(&self.controls, &self.costs, &self.noise, self.cfg.lambda);
        if let Some((lo, hi)) = &bounds {
            for u in updated.0.iter_mut() {
                *u = clamp_control(u, lo, hi);
            }
        }
        let u0 = apply_bounds(&updated.0[0], &bounds);
        self.controls = shift_sequence(&updated);
        self.step += 1;
        u0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    struct Constant(f64);

    impl RolloutModel for Constant {
        fn state_dim(&self) -> usize {
            1
        }
        fn step(&self, _state: &mut [f64], _v: &Vec6, _dt: f64) -> bool {
            true
        }
        fn running_cost(&self, _state: &[f64]) -> f64 {
            self.0
        }
    }

    /// `x' = x + v_x dt`, quadratic cost on x.
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

    fn cfg(samples: usize, horizon: usize) -> MppiConfig {
        MppiConfig {
            samples,
            horizon,
            lambda: 1.0,
            ..MppiConfig::default()
        }
    }

    #[test]
    fn zero_variance_gives_zero_noise() {
        let n = sample_perturbations(4, 3, &Vec6::zeros(), 1, 0);
        assert!(n.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = Vec6::from([0.02, 0.01, 0.01, 0.02, 0.02, 0.01]);
        let a = sample_perturbations(16, 10, &s, 42, 3);
        let b = sample_perturbations(16, 10, &s, 42, 3);
        assert_eq!(a, b);
        assert_ne!(a, sample_perturbations(16, 10, &s, 42, 4));
    }

    #[test]
    fn sample_variance_matches_sigma() {
        let s = Vec6::from([0.02, 0.01, 0.01, 0.02, 0.02, 0.01]);
        let n = sample_perturbations(1000, 1000, &s, 9, 0);
        for ch in 0..6 {
            let xs: Vec<f64> = n.iter().skip(ch).step_by(6).copied().collect();
            let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
            assert!((var / s[ch] - 1.0).abs() < 0.02, "channel {ch}: {var}");
        }
    }

    #[test]
    fn clamp_examples() {
        let hi = Vec6::from([0.5, 0.5, 0.5, 0.3, 0.3, 0.3]);
        let lo = -hi;
        let v = Vec6::from([0.1, -0.2, 0.9, 0.0, 0.1, -0.1]);
        let c = clamp_control(&v, &lo, &hi);
        assert_eq!(c, Vec6::from([0.1, -0.2, 0.5, 0.0, 0.1, -0.1]));
        assert_eq!(clamp_control(&c, &lo, &hi), c);
    }

    #[test]
    fn control_cost_examples() {
        let r = Vec6::repeat(1.0);
        assert_eq!(control_cost(&Vec6::zeros(), &Vec6::zeros(), &r, 1000.0), 0.0);
        let e1 = Vec6::from([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(control_cost(&Vec6::zeros(), &e1, &r, 1000.0), 0.4995, epsilon = 1e-15);
        let u = Vec6::from([0.5, -1.0, 0.0, 2.0, 0.0, 0.1]);
        assert_relative_eq!(control_cost(&u, &Vec6::zeros(), &r, 1000.0), 0.5 * u.dot(&u), epsilon = 1e-15);
    }

    #[test]
    fn rollout_sums_constant_costs() {
        let c = cfg(1, 1);
        let s = rollout(&Constant(4.0), &[0.0], &ControlSequence::zeros(1), &[0.0; 6], &c);
        assert_eq!(s, 4.0);
        let c = cfg(1, 3);
        let s = rollout(&Constant(2.0), &[0.0], &ControlSequence::zeros(3), &[0.0; 18], &c);
        assert_eq!(s, 6.0);
    }

    struct Diverging;

    impl RolloutModel for Diverging {
        fn state_dim(&self) -> usize {
            1
        }
        fn step(&self, _state: &mut [f64], _v: &Vec6, _dt: f64) -> bool {
            false
        }
        fn running_cost(&self, _state: &[f64]) -> f64 {
            0.0
        }
    }

    #[test]
    fn diverged_rollout_gets_sentinel() {
        let s = rollout(&Diverging, &[0.0], &ControlSequence::zeros(2), &[0.0; 12], &cfg(1, 2));
        assert_eq!(s, DIVERGED_COST);
        let s = rollout(&Constant(f64::NAN), &[0.0], &ControlSequence::zeros(2), &[0.0; 12], &cfg(1, 2));
        assert_eq!(s, DIVERGED_COST);
    }

    #[test]
    fn rollout_sees_clamped_controls() {
        struct Recorder(std::sync::Mutex<Vec<Vec6>>);
        impl RolloutModel for Recorder {
            fn state_dim(&self) -> usize {
                1
            }
            fn step(&self, _s: &mut [f64], v: &Vec6, _dt: f64) -> bool {
                self.0.lock().unwrap().push(*v);
                true
            }
            fn running_cost(&self, _s: &[f64]) -> f64 {
                0.0
            }
        }
        let c = cfg(1, 2).with_symmetric_bounds(0.5, 0.3);
        let rec = Recorder(Default::default());
        let u = ControlSequence(vec![Vec6::repeat(0.4), Vec6::repeat(-0.4)]);
        let noise = [1.0; 12];
        rollout(&rec, &[0.0], &u, &noise, &c);
        let seen = rec.0.into_inner().unwrap();
        assert_eq!(seen[0], Vec6::from([0.5, 0.5, 0.5, 0.3, 0.3, 0.3]));
        assert_eq!(seen[1], Vec6::from([0.5, 0.5, 0.5, 0.3, 0.3, 0.3]));
    }

    #[test]
    fn update_single_sample_takes_its_perturbation() {
        let u = ControlSequence(vec![Vec6::repeat(1.0)]);
        let noise = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let out = update_controls(&u, &[123.0], &noise, 1.0);
        assert_relative_eq!(out.0[0], Vec6::repeat(1.0) + Vec6::from_column_slice(&noise), epsilon = 1e-15);
    }

    #[test]
    fn update_equal_costs_averages() {
        let u = ControlSequence::zeros(1);
        let noise = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 3.0, 2.0, 1.0, 0.0, -1.0, -2.0];
        let out = update_controls(&u, &[5.0, 5.0], &noise, 1.0);
        assert_relative_eq!(out.0[0], Vec6::from([2.0, 2.0, 2.0, 2.0, 2.0, 2.0]), epsilon = 1e-15);
    }

    #[test]
    fn update_weighted_fixture() {
        let u = ControlSequence::zeros(1);
        let mut noise = [0.0; 12];
        noise[0] = 1.0;
        noise[6] = -1.0;
        let out = update_controls(&u, &[0.0, 3f64.ln()], &noise, 1.0);
        assert_relative_eq!(out.0[0][0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn temperature_limits() {
        let u = ControlSequence::zeros(1);
        let mut noise = [0.0; 12];
        noise[0] = 1.0;
        noise[6] = -1.0;
        let hot = update_controls(&u, &[0.0, 1.0], &noise, 1e12);
        assert!(hot.0[0][0].abs() < 1e-9);
        let cold = update_controls(&u, &[0.0, 1.0], &noise, 1e-3);
        assert_relative_eq!(cold.0[0][0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shift_examples() {
        let a = Vec6::repeat(1.0);
        let b = Vec6::repeat(2.0);
        let c = Vec6::repeat(3.0);
        assert_eq!(shift_sequence(&ControlSequence(vec![a, b])).0, vec![b, b]);
        let twice = shift_sequence(&shift_sequence(&ControlSequence(vec![a, b, c])));
        assert_eq!(twice.0, vec![c, c, c]);
        let mut k = ControlSequence(vec![a; 5]);
        for _ in 0..5 {
            k = shift_sequence(&k);
        }
        assert_eq!(k.0, vec![a; 5]);
    }

    #[test]
    fn uniform_weights_average_first_perturbations() {
        let c = MppiConfig {
            control_weight: Some([0.0; 6]),
            ..cfg(8, 4)
        };
        let (u0, _) = mppi_step(&Constant(0.0), &[0.0], &ControlSequence::zeros(4), &c, 0);
        let noise = sample_perturbations(8, 4, &c.sigma_vec(), c.seed, 0);
        let mut mean = Vec6::zeros();
        for k in 0..8 {
            mean += Vec6::from_column_slice(&noise[k * 24..k * 24 + 6]) / 8.0;
        }
        assert_relative_eq!(u0, mean, epsilon = 1e-15);
    }

    #[test]
    fn config_validation_names_keys() {
        let bad = MppiConfig {
            samples: 0,
            ..MppiConfig::default()
        };
        match bad.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "mppi.samples"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = MppiConfig {
            v_min: Some([1.0; 6]),
            v_max: Some([0.5; 6]),
            ..MppiConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(MppiConfig::default().validate().is_ok());
    }

    #[test]
    fn default_control_weight() {
        let c = MppiConfig::default();
        assert_relative_eq!(c.control_weight_vec()[0], 0.5 * 100.0 / 0.02);
    }

    #[test]
    fn toy_integrator_converges() {
        let c = MppiConfig {
            samples: 256,
            horizon: 20,
            dt: 0.05,
            lambda: 1.0,
            sigma: [0.25; 6],
            seed: 3,
            ..MppiConfig::default()
        };
        let mut mppi = Mppi::new(c).unwrap();
        let mut x = [1.0];
        let mut reached = None;
        for i in 0..100 {
            let u = mppi.step(&Integrator, &x);
            x[0] += u[0] * 0.05;
            if x[0].abs() < 1e-2 && reached.is_none() {
                reached = Some(i);
            }
        }
        assert!(reached.is_some(), "final state {}", x[0]);
    }

    #[test]
    fn bounded_first_control() {
        let c = MppiConfig {
            samples: 64,
            horizon: 10,
            sigma: [4.0; 6],
            ..MppiConfig::default()
        }
        .with_symmetric_bounds(0.5, 0.3);
        let mut mppi = Mppi::new(c).unwrap();
        for _ in 0..20 {
            let u = mppi.step(&Integrator, &[5.0]);
            assert!(u.iter().take(3).all(|x| x.abs() <= 0.5));
            assert!(u.iter().skip(3).all(|x| x.abs() <= 0.3));
        }
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let c = MppiConfig {
            samples: 128,
            horizon: 15,
            seed: 11,
            ..cfg(128, 15)
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut m = Mppi::new(c.clone()).unwrap();
                (0..5).map(|_| m.step(&Integrator, &[0.7])).collect::<Vec<_>>()
            })
        };
        assert_eq!(run(1), run(4));
    }

    proptest! {
        #[test]
        fn update_ignores_cost_offset(
            costs in proptest::collection::vec(0.0..50.0f64, 4),
            shift in -1e3..1e3f64,
        ) {
            let noise = sample_perturbations(4, 3, &Vec6::repeat(1.0), 5, 0);
            let u = ControlSequence::zeros(3);
            let a = update_controls(&u, &costs, &noise, 2.0);
            let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
            let b = update_controls(&u, &shifted, &noise, 2.0);
            for (x, y) in a.0.iter().zip(&b.0) {
                prop_assert!((x - y).amax() < 1e-12);
            }
        }

        #[test]
        fn clamp_is_idempotent_and_bounded(v in proptest::array::uniform6(-5.0..5.0f64)) {
            let hi = Vec6::from([0.5, 0.5, 0.5, 0.3, 0.3, 0.3]);
            let c = clamp_control(&Vec6::from(v), &-hi, &hi);
            prop_assert_eq!(clamp_control(&c, &-hi, &hi), c);
            for i in 0..6 {
                prop_assert!(c[i].abs() <= hi[i]);
            }
        }
    }
}
