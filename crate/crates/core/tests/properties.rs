use std::f64::consts::{FRAC_PI_2, PI, TAU};

use amphisim_core::actuation::{
    allocate_tilt_rotor, flapping_instantaneous_force, flapping_wrench,
    tilt_rotor_wrench_from_thrust, RotorParams, WingGeometry,
};
use amphisim_core::control::{
    mode_supervisor, vectored_mix, ControlMode, MixGains, ModeSchedule, PilotInput,
};
use amphisim_core::cpg::{
    cpg_derivative, cpg_output, cpg_step, set_params, CpgNetworkState, CpgParams,
};
use amphisim_core::dynamics::{
    dynamics_derivative_with_centre, AeroCoefficients, MediumContext, VehicleParams, Wrench,
};
use amphisim_core::oracle;
use amphisim_core::sim::{detect_medium, ScenarioConfig};
use amphisim_core::spatial::{
    kinematics_derivative, rotation_body_to_earth, rotation_earth_to_body, EulerZXY, RigidBodyState,
};
use amphisim_core::{Mat3, Vec3};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    -PI..PI
}

fn attitude() -> impl Strategy<Value = EulerZXY> {
    (-1.5..1.5f64, angle(), angle()).prop_map(|(p, t, s)| EulerZXY::new(p, t, s))
}

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn state(speed: f64) -> impl Strategy<Value = RigidBodyState> {
    (vec3(10.0), attitude(), vec3(speed), vec3(4.0)).prop_map(
        |(position, attitude, velocity, rates)| RigidBodyState {
            position,
            attitude,
            velocity,
            rates,
        },
    )
}

fn cpg_state() -> impl Strategy<Value = CpgNetworkState> {
    let triple = |lo: f64, hi: f64| [lo..hi, lo..hi, lo..hi];
    (
        triple(-10.0, 10.0),
        triple(0.0, 1.0),
        triple(-5.0, 5.0),
        triple(-1.5, 1.5),
        triple(-5.0, 5.0),
    )
        .prop_map(|(phi, r, rdot, x, xdot)| CpgNetworkState {
            phi,
            r,
            rdot,
            x,
            xdot,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rotation_is_proper_orthogonal(phi in angle(), theta in angle(), psi in angle()) {
        let att = EulerZXY::new(phi, theta, psi);
        let r = rotation_body_to_earth(att);
        prop_assert!((r * r.transpose() - Mat3::identity()).amax() < 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((rotation_earth_to_body(att) * r - Mat3::identity()).amax() < 1e-12);
    }

    #[test]
    fn euler_extraction_inverts_the_matrix(att in attitude()) {
        let back = EulerZXY::from_rotation(&rotation_body_to_earth(att));
        let d = back.to_vector() - att.to_vector();
        prop_assert!(d.amax() < 1e-9, "{att:?} -> {back:?}");
    }

    #[test]
    fn euler_rates_match_the_quaternion_oracle(s in state(5.0)) {
        let (pdot, adot) = kinematics_derivative(&s, 1e-3).unwrap();
        // mapping the Euler rates back through the quaternion map recovers Omega
        let back = oracle::euler_rate_to_body_rate(s.attitude) * adot;
        prop_assert!((back - s.rates).amax() <= 1e-9 * s.rates.amax().max(1.0));
        let p_ref = oracle::attitude_quaternion(s.attitude) * s.velocity;
        prop_assert!((pdot - p_ref).amax() < 1e-12);
    }

    #[test]
    fn dynamics_match_dense_solve(
        s in state(3.0),
        f in vec3(20.0),
        m in vec3(2.0),
        water in any::<bool>(),
        flip in any::<bool>(),
    ) {
        let mut params = VehicleParams::default();
        if flip {
            params.gyroscopic_sign = -1.0;
        }
        let (medium, coeffs) = if water {
            (MediumContext::water(), AeroCoefficients::water())
        } else {
            (MediumContext::air(), AeroCoefficients::air())
        };
        let centre = params.buoyancy_centre;
        let (vd, wd) = dynamics_derivative_with_centre(&s, &Wrench::new(f, m), &medium, &coeffs, &params, &centre).unwrap();
        let (vr, wr) = oracle::dense_accelerations(&s, &f, &m, &medium, &coeffs, &params, &centre).unwrap();
        let scale = vr.amax().max(wr.amax()).max(1e-6);
        prop_assert!((vd - vr).amax() / scale < 1e-10);
        prop_assert!((wd - wr).amax() / scale < 1e-10);
    }

    #[test]
    fn cpg_derivative_matches_direct_expression(s in cpg_state(), w in 0.0..8.0f64, b in angle(), f in 0.5..4.0f64) {
        let mut p = CpgParams { freq: [f, 1.1 * f, 0.9 * f], amplitude: [0.5, 0.2, 0.3], offset: [0.1, -0.4, 1.0], ..CpgParams::default() };
        p.weight = [[0.0, w, 0.5 * w], [w, 0.0, 2.0 * w], [0.5 * w, 2.0 * w, 0.0]];
        p.bias = [[0.0, b, -b], [-b, 0.0, 0.3], [b, -0.3, 0.0]];
        let d = cpg_derivative(&s, &p);
        for i in 0..3 {
            let mut phidot = TAU * p.freq[i];
            for j in (0..3).filter(|&j| j != i) {
                phidot += p.weight[i][j] * (s.phi[j] - s.phi[i] - p.bias[i][j]).sin();
            }
            let rdd = p.a_r * p.a_r / 4.0 * (p.amplitude[i] - s.r[i]) - p.a_r * s.rdot[i];
            let xdd = p.a_x * p.a_x / 4.0 * (p.offset[i] - s.x[i]) - p.a_x * s.xdot[i];
            prop_assert!((d.phi[i] - phidot).abs() <= 1e-14 * phidot.abs().max(1.0));
            prop_assert!((d.rdot[i] - rdd).abs() <= 1e-12 * rdd.abs().max(1.0));
            prop_assert!((d.xdot[i] - xdd).abs() <= 1e-12 * xdd.abs().max(1.0));
            prop_assert_eq!(d.r[i], s.rdot[i]);
            prop_assert_eq!(d.x[i], s.xdot[i]);
        }
    }

    #[test]
    fn cpg_output_is_continuous_under_random_switches(
        targets in prop::collection::vec((0.0..0.8f64, -FRAC_PI_2..FRAC_PI_2, 0.0..PI), 1..6),
    ) {
        let dt = 1e-3;
        let mut p = CpgParams::default();
        let mut s = CpgNetworkState::converged(&p, p.bias[0]);
        let mut prev = cpg_output(&s);
        for (amp, off, tail) in targets {
            let next = CpgParams {
                amplitude: [amp; 3],
                offset: [off, -off, 0.0],
                bias: amphisim_core::cpg::tail_bias(tail),
                ..p.clone()
            };
            let before = cpg_output(&s);
            set_params(&s, &mut p, next).unwrap();
            prop_assert_eq!(before, cpg_output(&s));
            for _ in 0..300 {
                s = cpg_step(&s, &p, dt);
                let out = cpg_output(&s);
                // |phi'| r + |r'| + |x'| stays well inside this per-step bound
                for i in 0..3 {
                    prop_assert!((out[i] - prev[i]).abs() < 0.05, "step {} at wing {i}", (out[i] - prev[i]).abs());
                }
                prev = out;
            }
        }
    }

    #[test]
    fn flapping_wrench_matches_hand_assembly(
        t in prop::array::uniform3(-5.0..5.0f64),
        x in prop::array::uniform3(-FRAC_PI_2..FRAC_PI_2),
    ) {
        let g = WingGeometry { lateral: 0.2, axial: 0.03, tail: 0.22 };
        let w = flapping_wrench(t, x, &g);
        let fx = t[0] * x[0].sin() + t[1] * x[1].sin() + t[2] * x[2].sin();
        let fz = t[0] * x[0].cos() + t[1] * x[1].cos() + t[2] * x[2].cos();
        let mx = g.lateral * (t[0] * x[0].cos() - t[1] * x[1].cos());
        let my = g.tail * t[2] * x[2].cos() - g.axial * (t[0] * x[0].cos() + t[1] * x[1].cos());
        let mz = t[1] * x[1].sin() - t[0] * x[0].sin();
        let expect = [fx, 0.0, fz, mx, my, mz];
        let got = [w.force.x, w.force.y, w.force.z, w.moment.x, w.moment.y, w.moment.z];
        for (a, b) in got.iter().zip(expect) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_pitching_has_zero_mean_vertical_force(amp in 0.05..1.2f64, omega in 5.0..30.0f64, vf in 0.0..1.0f64) {
        let n = 2000;
        let mean: f64 = (0..n)
            .map(|k| {
                let ph = TAU * k as f64 / n as f64;
                let th = amp * ph.cos();
                let rate = -amp * omega * ph.sin();
                flapping_instantaneous_force(th, rate, 0.0, vf, 0.028, 0.12, 3.0, 1000.0).1
            })
            .sum::<f64>()
            / n as f64;
        let peak = 0.5 * 1000.0 * 0.028 * 3.0 * ((0.12 * amp * omega).powi(2) + vf * vf);
        prop_assert!(mean.abs() < 1e-10 * peak);
    }

    #[test]
    fn tilt_rotor_allocation_realizes_feasible_demands(
        t in prop::array::uniform2(0.5..10.0f64),
        g in prop::array::uniform2(-1.4..1.4f64),
    ) {
        let a = 0.16;
        let w = tilt_rotor_wrench_from_thrust(t, g, a, 0.0);
        let (t2, g2) = allocate_tilt_rotor(w.force.x, w.force.z, w.moment.x, w.moment.z, a, 20.0, FRAC_PI_2);
        let w2 = tilt_rotor_wrench_from_thrust(t2, g2, a, 0.0);
        prop_assert!((w2.force - w.force).amax() < 1e-10);
        prop_assert!((w2.moment - w.moment).amax() < 1e-10);
    }

    #[test]
    fn vectored_mix_is_linear_when_unsaturated(
        sticks in prop::array::uniform4(-0.3..0.3f64),
        scale in 0.0..1.0f64,
    ) {
        let rotor = RotorParams::default();
        let gains = MixGains::default();
        let base = PilotInput { throttle: 0.5, ..Default::default() };
        let u = PilotInput { throttle: 0.5 + sticks[0], roll: sticks[1], pitch: sticks[2], yaw: sticks[3] };
        let su = PilotInput {
            throttle: 0.5 + scale * sticks[0],
            roll: scale * sticks[1],
            pitch: scale * sticks[2],
            yaw: scale * sticks[3],
        };
        let trim = vectored_mix(&base, &gains, &rotor).unwrap();
        let full = vectored_mix(&u, &gains, &rotor).unwrap();
        let part = vectored_mix(&su, &gains, &rotor).unwrap();
        for i in 0..2 {
            let w = trim.omega[i] + scale * (full.omega[i] - trim.omega[i]);
            let g = trim.gamma[i] + scale * (full.gamma[i] - trim.gamma[i]);
            prop_assert!((part.omega[i] - w).abs() <= 1e-12 * rotor.omega_max);
            prop_assert!((part.gamma[i] - g).abs() <= 1e-12);
        }
    }

    #[test]
    fn vectored_mix_respects_limits(sticks in prop::array::uniform4(-1.0..=1.0f64)) {
        let rotor = RotorParams::default();
        let u = PilotInput { throttle: sticks[0], roll: sticks[1], pitch: sticks[2], yaw: sticks[3] };
        let cmd = vectored_mix(&u, &MixGains::default(), &rotor).unwrap();
        prop_assert!(cmd.check(&rotor).is_ok());
    }

    #[test]
    fn medium_flag_does_not_chatter_inside_the_band(
        zs in prop::collection::vec(-0.0125..0.0125f64, 1..200),
        start in any::<bool>(),
    ) {
        let mut k = start;
        for z in zs {
            k = detect_medium(z, k, 0.0, 0.05);
            prop_assert_eq!(k, start);
        }
    }

    #[test]
    fn supervisor_never_runs_water_modes_in_air(
        modes in prop::collection::vec(0usize..4, 1..6),
        t in 0.0..10.0f64,
        water in any::<bool>(),
    ) {
        let all = [
            ControlMode::VerticalFlight,
            ControlMode::HorizontalFlight,
            ControlMode::UnderwaterVectored,
            ControlMode::UnderwaterFlapping,
        ];
        let schedule = ModeSchedule { entries: modes.iter().enumerate().map(|(i, &m)| (i as f64 * 2.0, all[m])).collect() };
        let medium = if water { MediumContext::water() } else { MediumContext::air() };
        match mode_supervisor(&schedule, &medium, t) {
            Ok(m) => prop_assert_eq!(m.requires_water(), water),
            Err(_) => prop_assert!(!water && schedule.mode_at(t).requires_water()),
        }
    }

    #[test]
    fn invalid_overrides_never_yield_a_config(dt in -1.0..0.0f64) {
        let good = ScenarioConfig::from_toml_str("", &["cpg.R=0.2".into()], None).unwrap();
        prop_assert_eq!(good.cpg.amplitude, 0.2);
        let bad = ScenarioConfig::from_toml_str("", &["cpg.R=0.2".into(), format!("integrator.dt={dt}")], None);
        prop_assert!(bad.is_err());
    }
}
