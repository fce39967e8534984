//! Acceptance criteria, one PASS/FAIL line each.
//!
//! The report always runs to completion. Set `ACCEPTANCE_STRICT=1` to make a
//! FAIL line fail the process.
//!
//! Runtime limits quoted for 8 cores are scaled by `8 / cores` on smaller machines.

use std::time::{Duration, Instant};

use mppivs::harness::{suite_from_template, SamplingBox, TaskResult};
use mppivs::io::write_trajectory;
use mppivs::mppi::{importance_weights, update_controls};
use mppivs::oracle::{depth_integration, finite_difference, mppi_toy, pinv_axioms, rotation_round_trip};
use mppivs::{presets, run_suite, run_task, ControlSequence, ControllerKind, IbvsCase, PoseSpec, ScenarioConfig, VsScheme};

const SEED: u64 = 2024;
/// Reference initial pose of task #113.
const TASK_113: PoseSpec = PoseSpec::new([0.44, -0.23, -1.35], [10.95, -20.48, -50.15]);
/// Reference initial pose of task #15.
const TASK_15: PoseSpec = PoseSpec::new([0.74, 0.29, -1.13], [38.69, -11.09, -95.65]);
/// Desk-scale sample count permitted for the MPPI suites.
const DESK_SAMPLES: usize = 500;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn core_scale() -> f64 {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    8.0 / cores as f64
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn conv(t: Option<f64>) -> String {
    t.map_or("none".into(), |t| format!("{t:.2} s"))
}

fn flags(r: &TaskResult) -> String {
    format!(
        "success={} conv={} R_LM={} R_JL={} P_out={}",
        r.success,
        conv(r.convergence_time),
        r.r_lm,
        r.r_jl,
        r.p_out
    )
}

fn scenario(scheme: VsScheme, controller: ControllerKind, initial: PoseSpec) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(scheme, controller);
    cfg.initial = initial;
    cfg.seed = SEED;
    cfg
}

fn desk(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.mppi.samples = DESK_SAMPLES;
    cfg
}

fn ibvs0() -> VsScheme {
    VsScheme::Ibvs(IbvsCase::Case0)
}

fn run(cfg: &ScenarioConfig) -> TaskResult {
    run_task(cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.name))
}

fn c1_interaction_fidelity() -> Outcome {
    let start = Instant::now();
    let reports = finite_difference(1000, SEED);
    let elapsed = start.elapsed();
    let all = reports.iter().all(|r| r.passed);
    let fast = elapsed < Duration::from_secs(10);
    let parts: Vec<String> = reports.iter().map(|r| format!("{} {:.2e}", r.name, r.max_error)).collect();
    outcome(all && fast, format!("{} (bound 1e-3), runtime {} (< 10 s)", parts.join(", "), secs(elapsed)))
}

fn c2_exponential_decay() -> Outcome {
    let mut cfg = scenario(ibvs0(), ControllerKind::Classical, PoseSpec::new([0.01, -0.008, -0.77], [0.6, -0.5, 2.0]));
    cfg.duration = 6.0;
    let lambda = cfg.gain;
    let r = run(&cfg);
    let e0 = r.log[0].err_norm;
    let horizon = 2.0 / lambda;
    let mut worst = 0.0f64;
    for row in r.log.iter().filter(|row| row.t <= horizon + 1e-9) {
        let ideal = e0 * (-lambda * row.t).exp();
        worst = worst.max((row.err_norm - ideal).abs() / ideal);
    }
    outcome(
        worst < 0.05,
        format!("largest relative deviation from e0 exp(-{lambda} t) over [0, {horizon} s]: {:.2}% (< 5%), e0 = {e0:.1} px", 100.0 * worst),
    )
}

fn c3_timing_band() -> Outcome {
    let limit = Duration::from_secs_f64(120.0 * core_scale());
    let classical = run(&scenario(ibvs0(), ControllerKind::Classical, TASK_113));
    let (lo, hi) = (14.46 * 0.8, 14.46 * 1.2);
    let c_ok = classical.convergence_time.is_some_and(|t| (lo..=hi).contains(&t));

    let start = Instant::now();
    let mppi = run(&desk(scenario(ibvs0(), ControllerKind::Mppi, TASK_113)));
    let elapsed = start.elapsed();
    let m_ok = mppi.success && mppi.convergence_time.is_some_and(|t| (10.0..=40.0).contains(&t));
    outcome(
        c_ok && m_ok && elapsed < limit,
        format!(
            "C-IBVS conv {} in [{lo:.2}, {hi:.2}]; MPPI-IBVS K={DESK_SAMPLES} {} (conv in [10, 40] s), final error {:.1} px, runtime {} (< {})",
            conv(classical.convergence_time),
            flags(&mppi),
            mppi.final_error_norm,
            secs(elapsed),
            secs(limit)
        ),
    )
}

fn update_scalar(costs: &[f64], perturbations: &[f64], lambda: f64) -> f64 {
    let noise: Vec<f64> = perturbations.iter().flat_map(|p| [*p, 0.0, 0.0, 0.0, 0.0, 0.0]).collect();
    update_controls(&ControlSequence::zeros(1), costs, &noise, lambda).0[0][0]
}

fn c4_update_law() -> Outcome {
    let identity = update_scalar(&[123.0], &[0.37], 1.0);
    let mean = update_scalar(&[4.0, 4.0], &[1.0, -0.5], 1.0);
    let ln3 = update_scalar(&[0.0, 3f64.ln()], &[1.0, -1.0], 1.0);
    let ln3_temp = update_scalar(&[0.0, 1.0], &[1.0, -1.0], 1.0 / 3f64.ln());
    let hot = update_scalar(&[0.0, 1.0], &[1.0, -1.0], 1e12);
    let cold = update_scalar(&[0.0, 1.0], &[1.0, -1.0], 1e-6);
    let w = importance_weights(&[0.0, 1.0], 1e-6);
    // One rounding of exp(-ln 3) is the only inexact step of the hand evaluation.
    let exact = |x: f64, want: f64| (x - want).abs() <= 2.0 * f64::EPSILON;
    let passed = identity == 0.37
        && mean == 0.25
        && exact(ln3, 0.5)
        && exact(ln3_temp, 0.5)
        && hot.abs() < 1e-9
        && cold == 1.0
        && w[1] == 0.0;
    outcome(
        passed,
        format!("K=1 {identity}, equal costs {mean}, ln 3 fixture {ln3} / {ln3_temp}, lambda 1e12 {hot:.1e}, lambda 1e-6 {cold}"),
    )
}

fn c5_clamping() -> Outcome {
    let mut cfg = desk(presets::preset("test11").expect("preset"));
    cfg.initial = TASK_113;
    cfg.seed = SEED;
    let r = run(&cfg);
    let (lin, ang) = (0.5, 0.3);
    let violations = r
        .log
        .iter()
        .flat_map(|row| row.twist.iter().enumerate().map(|(i, v)| (i, *v)).collect::<Vec<_>>())
        .filter(|(i, v)| v.abs() > if *i < 3 { lin } else { ang })
        .count();
    outcome(
        violations == 0 && r.success,
        format!("{violations} bound violations over {} steps; run {}", r.log.len(), flags(&r)),
    )
}

fn c6_camera_retreat() -> Outcome {
    let pose = PoseSpec::new([0.0, 0.0, -0.75], [0.0, 0.0, 155.0]);
    let z_max = 1.1;
    let classical = run(&scenario(ibvs0(), ControllerKind::Classical, pose));
    let free = run(&desk(scenario(ibvs0(), ControllerKind::Mppi, pose)));
    let mut cfg = desk(scenario(ibvs0(), ControllerKind::Mppi, pose));
    cfg.constraints.z_max = Some(z_max);
    let bounded = run(&cfg);
    let depth = bounded.max_depth();
    let passed = classical.r_jl && free.r_jl && bounded.success && depth <= z_max + 0.01;
    outcome(
        passed,
        format!(
            "C-IBVS R_JL={}; unconstrained MPPI R_JL={} ({}); Z_max MPPI {}, max depth {depth:.3} m (<= {:.2})",
            classical.r_jl,
            free.r_jl,
            flags(&free),
            flags(&bounded),
            z_max + 0.01
        ),
    )
}

fn pbvs_suite(preset: &str) -> (usize, usize) {
    let mut template = desk(presets::preset(preset).expect("preset"));
    template.desired = PoseSpec::c1();
    let configs = suite_from_template(&template, 20, SEED, &SamplingBox::default()).expect("poses");
    let (_, summary) = run_suite(preset, &configs).expect("suite");
    (summary.p_out, summary.n_success)
}

fn c7_visibility() -> Outcome {
    let (fov_out, fov_ok) = pbvs_suite("test26");
    let (aug_out, aug_ok) = pbvs_suite("test28");
    let (free_out, free_ok) = pbvs_suite("test23");
    outcome(
        fov_out == 0 && aug_out == 0 && free_out > 0,
        format!(
            "P_out/success over 20 poses: barrier {fov_out}/{fov_ok}, augmented {aug_out}/{aug_ok} (need P_out 0), unconstrained {free_out}/{free_ok} (need P_out > 0)"
        ),
    )
}

fn c8_w2_sensitivity() -> Outcome {
    let lost = |w2: f64| {
        let mut cfg = desk(scenario(VsScheme::PbvsAugmented, ControllerKind::Mppi, TASK_15));
        cfg.w2 = w2;
        run(&cfg).p_out
    };
    let low = lost(1.0);
    let high: Vec<(f64, bool)> = [20.0, 50.0, 150.0].iter().map(|w| (*w, lost(*w))).collect();
    let passed = low && high.iter().all(|(_, out)| !out);
    let parts: Vec<String> = high.iter().map(|(w, out)| format!("w2={w} P_out={out}")).collect();
    outcome(passed, format!("w2=1 P_out={low} (need true); {} (need false)", parts.join(", ")))
}

fn c9_success_rate() -> Outcome {
    let limit = Duration::from_secs_f64(30.0 * 60.0 * core_scale());
    let mut template = desk(presets::preset("test1").expect("preset"));
    template.mppi.horizon = 175;
    let start = Instant::now();
    let configs = suite_from_template(&template, 20, SEED, &SamplingBox::default()).expect("poses");
    let (_, s) = run_suite("test1", &configs).expect("suite");
    let elapsed = start.elapsed();
    outcome(
        s.s_rate >= 90.0 && elapsed < limit,
        format!(
            "S_rate {:.0}% (>= 90%), {} succeeded, R_LM {} R_JL {} P_out {}, runtime {} (< {})",
            s.s_rate,
            s.n_success,
            s.r_lm,
            s.r_jl,
            s.p_out,
            secs(elapsed),
            secs(limit)
        ),
    )
}

fn c10_robustness() -> Outcome {
    let base = || desk(scenario(ibvs0(), ControllerKind::Mppi, TASK_113));
    let mut noisy = base();
    noisy.noise.pixel = 1.0;
    noisy.noise.depth = 0.005;
    let n = run(&noisy);
    let steady = n.steady_state_error(5.0);
    let mut parts = vec![format!("noise: {} steady error {steady:.2} px (< 2)", flags(&n))];
    let mut passed = n.success && steady < 2.0;

    let mut focal = base();
    focal.calibration.focal = 0.3;
    let f = run(&focal);
    passed &= f.success;
    parts.push(format!("focal +30%: success={}", f.success));

    for offset in [-0.5, 0.5, 1.0, 2.0] {
        let mut cfg = base();
        cfg.calibration.depth_offset = offset;
        let r = run(&cfg);
        passed &= r.success;
        parts.push(format!("depth {:+.0}%: success={}", offset * 100.0, r.success));
    }
    outcome(passed, parts.join("; "))
}

fn trajectory_bytes(cfg: &ScenarioConfig, threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("pool");
    let r = pool.install(|| run(cfg));
    let mut out = Vec::new();
    write_trajectory(&mut out, &r.log).expect("csv");
    out
}

fn c11_determinism() -> Outcome {
    let mut cfg = desk(scenario(ibvs0(), ControllerKind::Mppi, TASK_113));
    cfg.duration = 2.0;
    cfg.noise.pixel = 1.0;
    let one = trajectory_bytes(&cfg, 1);
    let eight = trajectory_bytes(&cfg, 8);
    let again = trajectory_bytes(&cfg, 1);
    outcome(
        one == eight && one == again,
        format!("{} CSV bytes; parallelism 1 vs 8 identical={}, rerun identical={}", one.len(), one == eight, one == again),
    )
}

fn c12_oracles() -> Outcome {
    let reports = [
        pinv_axioms(1000, SEED),
        rotation_round_trip(1000, SEED),
        depth_integration(),
        mppi_toy(SEED),
    ];
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {:.1e} (< {:.0e})", r.name, r.max_error, r.bound))
        .collect();
    outcome(reports.iter().all(|r| r.passed), parts.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("interaction-matrix fidelity", c1_interaction_fidelity),
        ("classical exponential decay", c2_exponential_decay),
        ("reference timing band", c3_timing_band),
        ("MPPI update law fixtures", c4_update_law),
        ("control clamping", c5_clamping),
        ("camera retreat", c6_camera_retreat),
        ("visibility", c7_visibility),
        ("w2 sensitivity", c8_w2_sensitivity),
        ("success-rate miniature", c9_success_rate),
        ("robustness", c10_robustness),
        ("determinism", c11_determinism),
        ("oracle suites", c12_oracles),
    ];
    // Honors libtest-style filters so `cargo test <name>` skips this target cheaply.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = format!("C{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || id == *f) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "{} {id:<3} {name}: {} [{}]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            secs(start.elapsed())
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
