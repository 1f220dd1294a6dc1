//! Built-in invariant suite.
//!
//! Every property is deterministic: random samples come from a ChaCha
//! stream with a fixed seed. Properties that depend on the vehicle or the
//! coefficient tables read them from the scenario config under test, so a
//! flipped `gyroscopic_sign` or a corrupted table is exercised as loaded.

use std::f64::consts::{PI, TAU};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actuation::{flapping_instantaneous_force, time_averaged_coefficients};
use crate::control::{mode_supervisor, ControlMode, ModeSchedule};
use crate::cpg::{
    behavior_preset, cpg_output, cpg_output_rate, cpg_step, critically_damped, set_params,
    Behavior, CpgNetworkState, CpgParams,
};
use crate::dynamics::{dynamics_derivative_with_centre, AeroCoefficients, MediumContext, Wrench};
use crate::integrate::rk4_step;
use crate::oracle;
use crate::sim::{detect_medium, run_scenario, ScenarioConfig};
use crate::spatial::{
    angular_rate_transform, kinematics_derivative, rotation_body_to_earth, rotation_earth_to_body,
    EulerZXY, RigidBodyState,
};
use crate::{Mat3, Vec3};

const SEED: u64 = 0x5eed_a4f1;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl PropertyResult {
    fn check(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }

    fn error(name: &'static str, detail: impl fmt::Display) -> Self {
        Self::check(name, false, detail.to_string())
    }
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<28} {}", self.name, self.detail)
    }
}

/// Runs every property against `cfg`.
pub fn run_suite(cfg: &ScenarioConfig) -> Vec<PropertyResult> {
    vec![
        rotation_orthogonality(1000),
        rate_transform_oracle(1000),
        kinematics_propagation(200),
        dynamics_oracle(cfg, false, 1000),
        dynamics_oracle(cfg, true, 1000),
        cpg_amplitude_convergence(),
        cpg_frequency(),
        cpg_phase_locking(),
        cpg_smooth_switching(),
        zero_mean_vertical_force(cfg),
        medium_hysteresis(),
        supervisor_guard(500),
        coefficient_table(cfg, false),
        coefficient_table(cfg, true),
        free_fall(cfg),
        determinism(cfg),
    ]
}

fn random_attitude(rng: &mut ChaCha8Rng) -> EulerZXY {
    EulerZXY::new(
        rng.random_range(-1.5..1.5),
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
    )
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::from_fn(|_, _| rng.random_range(-scale..scale))
}

/// `R R^T = I` and `det R = 1` within 1e-12, the transpose is the inverse,
/// and the matrix agrees with the quaternion composition.
pub fn rotation_orthogonality(n: usize) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut orth, mut det, mut inv, mut quat) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n {
        let att = random_attitude(&mut rng);
        let r = rotation_body_to_earth(att);
        orth = orth.max((r * r.transpose() - Mat3::identity()).amax());
        det = det.max((r.determinant() - 1.0).abs());
        inv = inv.max((rotation_earth_to_body(att) * r - Mat3::identity()).amax());
        quat = quat.max((r - oracle::rotation_matrix(att)).amax());
    }
    let worst = orth.max(det).max(inv).max(quat);
    PropertyResult::check(
        "rotation_orthogonality",
        worst < 1e-12,
        format!("{n} attitudes: |RR^T-I| {orth:.1e}, |det-1| {det:.1e}, |R^T R-I| {inv:.1e}, quaternion {quat:.1e}"),
    )
}

/// The Euler-rate transform inverts the quaternion-derived body-rate map
/// within 1e-9.
pub fn rate_transform_oracle(n: usize) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let att = random_attitude(&mut rng);
        let w = match angular_rate_transform(att, 1e-3) {
            Ok(w) => w,
            Err(e) => return PropertyResult::error("rate_transform_oracle", e),
        };
        worst = worst.max((w * oracle::euler_rate_to_body_rate(att) - Mat3::identity()).amax());
    }
    PropertyResult::check(
        "rate_transform_oracle",
        worst < 1e-9,
        format!("{n} attitudes: max |W E - I| {worst:.1e}"),
    )
}

/// Kinematics against central differences of a quaternion propagated with
/// the body rate over `h = 1e-4`: within 1e-6.
pub fn kinematics_propagation(n: usize) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let state = RigidBodyState {
            position: random_vec(&mut rng, 10.0),
            attitude: EulerZXY::new(
                rng.random_range(-1.2..1.2),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            ),
            velocity: random_vec(&mut rng, 5.0),
            rates: random_vec(&mut rng, 1.0),
        };
        let (pdot, adot) = match kinematics_derivative(&state, 1e-3) {
            Ok(d) => d,
            Err(e) => return PropertyResult::error("kinematics_propagation", e),
        };
        let fd = oracle::euler_rates_by_propagation(state.attitude, &state.rates, 1e-4);
        let p_ref = oracle::attitude_quaternion(state.attitude) * state.velocity;
        worst = worst.max((adot - fd).amax()).max((pdot - p_ref).amax());
    }
    PropertyResult::check(
        "kinematics_propagation",
        worst < 1e-6,
        format!("{n} states: max error {worst:.1e}"),
    )
}

/// Largest relative deviation of the production accelerations from the
/// dense-solve oracle over `n` random states.
pub fn dynamics_oracle_error(cfg: &ScenarioConfig, water: bool, n: usize) -> Result<f64, String> {
    let coeffs = cfg.fluid_coefficients().map_err(|e| e.to_string())?;
    let coeffs: &AeroCoefficients = coeffs.for_medium(water);
    let params = &cfg.vehicle;
    let medium = if water {
        MediumContext {
            water: true,
            rho: cfg.medium.water_density,
            rho_water: cfg.medium.water_density,
            submergence: 1.0,
        }
    } else {
        MediumContext {
            water: false,
            rho: cfg.medium.air_density,
            rho_water: cfg.medium.water_density,
            submergence: 0.0,
        }
    };
    let speed = if water { 2.0 } else { 25.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3 + water as u64);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let state = RigidBodyState {
            position: random_vec(&mut rng, 5.0),
            attitude: random_attitude(&mut rng),
            velocity: random_vec(&mut rng, speed),
            rates: random_vec(&mut rng, 4.0),
        };
        let control = Wrench::new(random_vec(&mut rng, 20.0), random_vec(&mut rng, 2.0));
        let centre = params.buoyancy_centre + random_vec(&mut rng, 0.005);
        let (vd, wd) =
            dynamics_derivative_with_centre(&state, &control, &medium, coeffs, params, &centre)
                .map_err(|e| e.to_string())?;
        let (vr, wr) = oracle::dense_accelerations(
            &state,
            &control.force,
            &control.moment,
            &medium,
            coeffs,
            params,
            &centre,
        )
        .ok_or("dense oracle failed to solve")?;
        let scale = vr.amax().max(wr.amax()).max(1e-6);
        worst = worst.max((vd - vr).amax().max((wd - wr).amax()) / scale);
    }
    Ok(worst)
}

/// Accelerations match the dense oracle within 1e-10 relative.
pub fn dynamics_oracle(cfg: &ScenarioConfig, water: bool, n: usize) -> PropertyResult {
    let name = if water {
        "dynamics_oracle_water"
    } else {
        "dynamics_oracle_air"
    };
    match dynamics_oracle_error(cfg, water, n) {
        Ok(e) => PropertyResult::check(
            name,
            e < 1e-10,
            format!(
                "{n} states, gyroscopic_sign {:+}: max relative error {e:.1e}",
                cfg.vehicle.gyroscopic_sign
            ),
        ),
        Err(e) => PropertyResult::error(name, e),
    }
}

/// Largest deviation of `r(t)` from the critically damped closed form over
/// `[0, t_end]`, starting from rest at zero amplitude.
pub fn cpg_amplitude_error(a_r: f64, target: f64, dt: f64, t_end: f64) -> f64 {
    let p = CpgParams {
        a_r,
        amplitude: [target; 3],
        ..CpgParams::default()
    };
    let mut s = CpgNetworkState {
        phi: p.bias[0],
        ..Default::default()
    };
    let steps = (t_end / dt).round() as usize;
    let mut worst = 0.0f64;
    for i in 1..=steps {
        s = cpg_step(&s, &p, dt);
        let exact = critically_damped(target, 0.0, a_r, i as f64 * dt);
        worst = s.r.iter().fold(worst, |w, r| w.max((r - exact).abs()));
    }
    worst
}

/// `r(t)` follows the closed form within 1e-6 over `[0, 0.5]` s.
pub fn cpg_amplitude_convergence() -> PropertyResult {
    let e = cpg_amplitude_error(20.0, 0.5, 1e-3, 0.5);
    PropertyResult::check(
        "cpg_amplitude_convergence",
        e < 1e-6,
        format!("a_r 20, R 0.5: max |r - r_exact| {e:.1e}"),
    )
}

/// Mean period of the first output from upward zero crossings (linearly
/// interpolated) over `cycles` periods of a converged network.
pub fn measured_output_frequency(p: &CpgParams, dt: f64, cycles: usize) -> f64 {
    let mut s = CpgNetworkState::converged(p, p.bias[0]);
    let mut crossings = Vec::new();
    let mut prev = cpg_output(&s)[0] - p.offset[0];
    let mut t = 0.0;
    while crossings.len() <= cycles {
        s = cpg_step(&s, p, dt);
        t += dt;
        let cur = cpg_output(&s)[0] - p.offset[0];
        if prev < 0.0 && cur >= 0.0 {
            crossings.push(t - dt * cur / (cur - prev));
        }
        prev = cur;
    }
    cycles as f64 / (crossings[cycles] - crossings[0])
}

/// Converged output frequency within 0.1% of `f`.
pub fn cpg_frequency() -> PropertyResult {
    let p = CpgParams::default();
    let f = measured_output_frequency(&p, 1e-3, 40);
    let rel = (f - p.freq[0]).abs() / p.freq[0];
    PropertyResult::check(
        "cpg_frequency",
        rel < 1e-3,
        format!(
            "measured {f:.6} Hz vs {:.6} Hz ({rel:.1e} relative)",
            p.freq[0]
        ),
    )
}

/// Two coupled oscillators (w = 4) lock to the bias within 1e-3 rad by 5 s.
pub fn cpg_phase_locking() -> PropertyResult {
    let bias = 1.2;
    let mut p = CpgParams::default();
    p.weight = [[0.0; 3]; 3];
    p.weight[0][1] = 4.0;
    p.weight[1][0] = 4.0;
    p.bias = [[0.0; 3]; 3];
    p.bias[0][1] = bias;
    p.bias[1][0] = -bias;
    let mut s = CpgNetworkState::converged(&p, [0.0, -2.0, 0.0]);
    for _ in 0..5000 {
        s = cpg_step(&s, &p, 1e-3);
    }
    let err = crate::spatial::wrap_angle(s.phi[1] - s.phi[0] - bias).abs();
    PropertyResult::check(
        "cpg_phase_locking",
        err < 1e-3,
        format!("phase error at 5 s {err:.1e} rad"),
    )
}

/// Outcome of a scripted run of parameter switches through every preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingReport {
    /// Largest sample-to-sample output change (rad).
    pub max_step: f64,
    /// `2 (2 pi f r_max + a_x |dX|) dt` (rad).
    pub bound: f64,
    /// Largest output change caused by the parameter swap itself (rad).
    pub switch_jump: f64,
    pub switches: usize,
}

/// Steps the network through a schedule that visits every behavior preset,
/// changing amplitude along the way, and measures output increments.
pub fn cpg_switching_report(dt: f64) -> SwitchingReport {
    let base = CpgParams::default();
    let f = base.freq[0];
    let schedule: Vec<(Behavior, f64)> = Behavior::ALL
        .iter()
        .zip([0.5, 0.3, 0.5, 0.2, 0.5, 0.4])
        .map(|(&b, r)| (b, r))
        .collect();
    let mut params = base.clone();
    let mut s = CpgNetworkState::converged(&params, params.bias[0]);
    let (mut max_step, mut switch_jump, mut max_dx, mut r_max) =
        (0.0f64, 0.0f64, 0.0f64, base.amplitude[0]);
    let mut prev = cpg_output(&s);
    let mut switches = 0;
    for (k, &(behavior, amp)) in schedule.iter().enumerate() {
        // switch mid-cycle, off the sample grid of the period
        let hold = if k == 0 { 0.37 } else { 1.0 };
        for _ in 0..(hold / dt).round() as usize {
            s = cpg_step(&s, &params, dt);
            let out = cpg_output(&s);
            for i in 0..3 {
                max_step = max_step.max((out[i] - prev[i]).abs());
            }
            prev = out;
        }
        let next =
            behavior_preset(behavior.name(), f, amp, 0.4, &base).expect("preset names are valid");
        for i in 0..3 {
            max_dx = max_dx.max((next.offset[i] - params.offset[i]).abs());
        }
        r_max = r_max.max(amp);
        let before = cpg_output(&s);
        set_params(&s, &mut params, next).expect("presets validate");
        let after = cpg_output(&s);
        for i in 0..3 {
            switch_jump = switch_jump.max((after[i] - before[i]).abs());
        }
        switches += 1;
    }
    for _ in 0..(1.0 / dt).round() as usize {
        s = cpg_step(&s, &params, dt);
        let out = cpg_output(&s);
        for i in 0..3 {
            max_step = max_step.max((out[i] - prev[i]).abs());
        }
        prev = out;
    }
    SwitchingReport {
        max_step,
        bound: 2.0 * (TAU * f * r_max + base.a_x * max_dx) * dt,
        switch_jump,
        switches,
    }
}

pub fn cpg_smooth_switching() -> PropertyResult {
    let r = cpg_switching_report(1e-3);
    PropertyResult::check(
        "cpg_smooth_switching",
        r.max_step <= r.bound && r.switch_jump == 0.0 && r.switches >= 6,
        format!(
            "{} switches: max step {:.3e} rad <= bound {:.3e} rad, jump at switch {:.1e}",
            r.switches, r.max_step, r.bound, r.switch_jump
        ),
    )
}

/// Per-wing `|mean fz| / peak |fz|` over `cycles` converged periods at zero
/// flow angle, with the mean taken by trapezoidal quadrature.
pub fn vertical_force_ratio(
    cfg: &ScenarioConfig,
    vf: f64,
    cycles: usize,
) -> Result<[f64; 3], String> {
    let p = cfg.cpg_params().map_err(|e| e.to_string())?;
    let period = 1.0 / p.freq[0];
    let per_cycle = 1000;
    let dt = period / per_cycle as f64;
    let fl = &cfg.flapping;
    let rho = cfg.medium.water_density;
    let mut s = CpgNetworkState::converged(&p, p.bias[0]);
    let mut traces: [Vec<(f64, f64, f64)>; 3] = Default::default();
    for step in 0..=cycles * per_cycle {
        let theta = cpg_output(&s);
        let rate = cpg_output_rate(&s, &p);
        for i in 0..3 {
            let (fx, fz) = flapping_instantaneous_force(
                theta[i],
                rate[i],
                0.0,
                vf,
                fl.area[i],
                fl.lever[i],
                fl.cn_inst,
                rho,
            );
            traces[i].push((step as f64 * dt, fx, fz));
        }
        s = cpg_step(&s, &p, dt);
    }
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (_, cfz) = time_averaged_coefficients(&traces[i], period, cycles, rho, vf, fl.area[i])
            .map_err(|e| e.to_string())?;
        let mean = cfz.abs() * 0.5 * rho * vf * vf * fl.area[i];
        let peak = traces[i].iter().fold(0.0f64, |m, s| m.max(s.2.abs()));
        out[i] = mean / peak;
    }
    Ok(out)
}

pub fn zero_mean_vertical_force(cfg: &ScenarioConfig) -> PropertyResult {
    match vertical_force_ratio(cfg, 0.29, 10) {
        Ok(r) => {
            let worst = r.iter().cloned().fold(0.0, f64::max);
            PropertyResult::check(
                "zero_mean_vertical_force",
                worst < 1e-6,
                format!(
                    "10 cycles: |mean fz| / peak = {:.1e}, {:.1e}, {:.1e}",
                    r[0], r[1], r[2]
                ),
            )
        }
        Err(e) => PropertyResult::error("zero_mean_vertical_force", e),
    }
}

/// The medium flag never chatters for `z` inside `+-h/4` of the surface and
/// switches once the depth clears the band.
pub fn medium_hysteresis() -> PropertyResult {
    let (surface, h) = (0.0, 0.05);
    let mut ok = true;
    for start in [false, true] {
        let mut k = start;
        for i in 0..1000 {
            let z = surface + 0.25 * h * (i as f64 * 0.37).sin();
            k = detect_medium(z, k, surface, h);
            ok &= k == start;
        }
    }
    ok &= !detect_medium(surface + 0.51 * h, true, surface, h);
    ok &= detect_medium(surface - 0.51 * h, false, surface, h);
    ok &= !detect_medium(1.0, true, surface, h) && detect_medium(-1.0, false, surface, h);
    PropertyResult::check(
        "medium_hysteresis",
        ok,
        format!("band {h} m, oscillation +-{} m", 0.25 * h),
    )
}

/// Random schedules never yield a water-only mode out of water.
pub fn supervisor_guard(n: usize) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let modes = [
        ControlMode::VerticalFlight,
        ControlMode::HorizontalFlight,
        ControlMode::UnderwaterVectored,
        ControlMode::UnderwaterFlapping,
    ];
    for _ in 0..n {
        let mut t = 0.0;
        let entries: Vec<(f64, ControlMode)> = (0..4)
            .map(|_| {
                t += rng.random_range(0.1..2.0);
                (t, modes[rng.random_range(0..modes.len())])
            })
            .collect();
        let schedule = ModeSchedule { entries };
        let at = rng.random_range(0.0..8.0);
        let medium = if rng.random_bool(0.5) {
            MediumContext::water()
        } else {
            MediumContext::air()
        };
        match mode_supervisor(&schedule, &medium, at) {
            Ok(m) if m.requires_water() != medium.water => {
                return PropertyResult::error(
                    "supervisor_guard",
                    format!("{m} active with k = {}", medium.k()),
                )
            }
            Err(_) if !schedule.mode_at(at).requires_water() || medium.water => {
                return PropertyResult::error("supervisor_guard", "legal demand rejected")
            }
            _ => {}
        }
    }
    PropertyResult::check("supervisor_guard", true, format!("{n} random schedules"))
}

pub fn coefficient_table(cfg: &ScenarioConfig, water: bool) -> PropertyResult {
    let name = if water {
        "coefficient_table_water"
    } else {
        "coefficient_table_air"
    };
    let medium = if water {
        &cfg.fluid.water
    } else {
        &cfg.fluid.air
    };
    match medium.build() {
        Ok(c) => match c.table.check_invariants() {
            Ok(()) => PropertyResult::check(
                name,
                true,
                "non-negative drag, zero lift at zero incidence".into(),
            ),
            Err(e) => PropertyResult::error(name, e),
        },
        Err(e) => PropertyResult::error(name, e),
    }
}

/// Worst deviation from `z0 - g t^2 / 2` over 1 s of RK4 free fall in air
/// with no fluid forces.
pub fn free_fall_error(cfg: &ScenarioConfig, dt: f64) -> Result<f64, String> {
    let params = &cfg.vehicle;
    let coeffs = AeroCoefficients::zero();
    let medium = MediumContext::air();
    let z0 = 10.0;
    let mut y = nalgebra::SVector::<f64, 12>::zeros();
    y[2] = z0;
    let f = |_: f64, y: &nalgebra::SVector<f64, 12>| {
        let s = RigidBodyState {
            position: y.fixed_rows::<3>(0).into(),
            attitude: EulerZXY::from_vector(&y.fixed_rows::<3>(3).into()),
            velocity: y.fixed_rows::<3>(6).into(),
            rates: y.fixed_rows::<3>(9).into(),
        };
        let (pd, ad) = kinematics_derivative(&s, 1e-3)?;
        let (vd, wd) = dynamics_derivative_with_centre(
            &s,
            &Wrench::zero(),
            &medium,
            &coeffs,
            params,
            &Vec3::zeros(),
        )?;
        let mut d = nalgebra::SVector::<f64, 12>::zeros();
        d.fixed_rows_mut::<3>(0).copy_from(&pd);
        d.fixed_rows_mut::<3>(3).copy_from(&ad);
        d.fixed_rows_mut::<3>(6).copy_from(&vd);
        d.fixed_rows_mut::<3>(9).copy_from(&wd);
        Ok::<_, crate::SimError>(d)
    };
    let steps = (1.0 / dt).round() as usize;
    let mut worst = 0.0f64;
    for i in 1..=steps {
        y = rk4_step((i - 1) as f64 * dt, &y, dt, f).map_err(|e| e.to_string())?;
        let exact = oracle::ballistic_height(z0, params.gravity, i as f64 * dt);
        worst = worst.max((y[2] - exact).abs());
    }
    Ok(worst)
}

pub fn free_fall(cfg: &ScenarioConfig) -> PropertyResult {
    match free_fall_error(cfg, 1e-3) {
        Ok(e) => PropertyResult::check(
            "free_fall",
            e < 1e-9,
            format!("1 s: max |z - z_exact| {e:.1e} m"),
        ),
        Err(e) => PropertyResult::error("free_fall", e),
    }
}

/// Two runs of the config (capped at 1 s) write identical CSV bytes.
pub fn determinism(cfg: &ScenarioConfig) -> PropertyResult {
    let mut c = cfg.clone();
    c.integrator.duration = c.integrator.duration.min(1.0);
    let render = || -> Result<Vec<u8>, crate::SimError> {
        let mut buf = Vec::new();
        run_scenario(&c)?.write_csv(&mut buf)?;
        Ok(buf)
    };
    match (render(), render()) {
        (Ok(a), Ok(b)) => PropertyResult::check(
            "determinism",
            a == b,
            format!(
                "two runs of {:.2} s, {} bytes each",
                c.integrator.duration,
                a.len()
            ),
        ),
        (Err(e), _) | (_, Err(e)) => PropertyResult::error("determinism", e),
    }
}
