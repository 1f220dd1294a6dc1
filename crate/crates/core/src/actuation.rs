//! Tilt-rotor and flapping-wing force models.

use serde::{Deserialize, Serialize};

use crate::dynamics::Wrench;
use crate::{Result, SimError, Vec3};

/// Combined static thrust of both rotors at full speed in air (N).
pub const MAX_AIR_THRUST: f64 = 31.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotorParams {
    /// Thrust coefficient in air (N s^2/rad^2).
    pub ct_air: f64,
    /// Thrust coefficient in water (N s^2/rad^2).
    pub ct_water: f64,
    /// Reaction-torque coefficient in air (m).
    pub cq_air: f64,
    /// Reaction-torque coefficient in water (m).
    pub cq_water: f64,
    /// Maximum rotor speed (rad/s).
    pub omega_max: f64,
    /// Spin direction of R1 and R2.
    pub spin: [f64; 2],
    /// Symmetric tilt servo limit (rad).
    pub tilt_limit: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        let omega_max = 1100.0;
        Self {
            ct_air: 0.5 * MAX_AIR_THRUST / (omega_max * omega_max),
            ct_water: 1.0e-6,
            cq_air: 0.012,
            cq_water: 0.012,
            omega_max,
            spin: [1.0, -1.0],
            tilt_limit: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl RotorParams {
    /// Thrust coefficient for a rotor whose disc is a fraction `water` in
    /// water (0 in air, 1 submerged).
    pub fn thrust_coefficient(&self, water: f64) -> f64 {
        self.ct_air + (self.ct_water - self.ct_air) * water.clamp(0.0, 1.0)
    }

    pub fn torque_coefficient(&self, water: f64) -> f64 {
        self.cq_air + (self.cq_water - self.cq_air) * water.clamp(0.0, 1.0)
    }

    pub fn max_thrust(&self, water: f64) -> f64 {
        self.thrust_coefficient(water) * self.omega_max * self.omega_max
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.ct_air, self.ct_water, self.omega_max, self.tilt_limit]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0)
            && self.cq_air.is_finite()
            && self.cq_water.is_finite()
            && self.spin.iter().all(|s| s.abs() == 1.0);
        if ok {
            Ok(())
        } else {
            Err(SimError::Config(
                "rotor: thrust coefficients, omega_max and tilt_limit must be positive, spin must be +-1".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotorCommand {
    /// Rotor speeds (rad/s).
    pub omega: [f64; 2],
    /// Tilt angles (rad); 0 is thrust along `+x`, pi/2 along `+z`.
    pub gamma: [f64; 2],
}

impl RotorCommand {
    pub fn check(&self, params: &RotorParams) -> Result<()> {
        const TOL: f64 = 1e-9;
        for i in 0..2 {
            let w = self.omega[i];
            if !(w >= -TOL && w <= params.omega_max * (1.0 + TOL)) {
                return Err(SimError::CommandOutOfRange(format!(
                    "omega{} = {w} outside [0, {}]",
                    i + 1,
                    params.omega_max
                )));
            }
            let g = self.gamma[i];
            if !(g.abs() <= params.tilt_limit + TOL) {
                return Err(SimError::CommandOutOfRange(format!(
                    "gamma{} = {g} outside +-{}",
                    i + 1,
                    params.tilt_limit
                )));
            }
        }
        Ok(())
    }

    /// Copy with speeds and tilts clamped into their limits.
    pub fn saturated(&self, params: &RotorParams) -> Self {
        let clamp_w = |w: f64| {
            if w.is_nan() {
                0.0
            } else {
                w.clamp(0.0, params.omega_max)
            }
        };
        let clamp_g = |g: f64| {
            if g.is_nan() {
                0.0
            } else {
                g.clamp(-params.tilt_limit, params.tilt_limit)
            }
        };
        Self {
            omega: [clamp_w(self.omega[0]), clamp_w(self.omega[1])],
            gamma: [clamp_g(self.gamma[0]), clamp_g(self.gamma[1])],
        }
    }
}

/// Thrust `C_T w^2` and reaction torque `C_Q T spin` of rotor `index`.
pub fn rotor_thrust(
    omega: f64,
    index: usize,
    params: &RotorParams,
    water: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=params.omega_max).contains(&omega) {
        return Err(SimError::CommandOutOfRange(format!(
            "omega = {omega} outside [0, {}]",
            params.omega_max
        )));
    }
    let t = params.thrust_coefficient(water) * omega * omega;
    Ok((t, params.torque_coefficient(water) * t * params.spin[index]))
}

/// Wrench of two thrusts `T1`, `T2` tilted by `gamma1`, `gamma2`, with
/// lateral arm `a` and longitudinal arm `b`.
pub fn tilt_rotor_wrench_from_thrust(thrust: [f64; 2], gamma: [f64; 2], a: f64, b: f64) -> Wrench {
    let (s1, c1) = gamma[0].sin_cos();
    let (s2, c2) = gamma[1].sin_cos();
    let (t1, t2) = (thrust[0], thrust[1]);
    Wrench::new(
        Vec3::new(t1 * c1 + t2 * c2, 0.0, t1 * s1 + t2 * s2),
        Vec3::new(
            t1 * a * s1 - t2 * a * s2,
            -t1 * b * s1 - t2 * b * s2,
            t2 * a * c2 - t1 * a * c1,
        ),
    )
}

/// Tilt-rotor wrench for a command. `water` gives the submerged fraction of
/// each rotor disc.
pub fn tilt_rotor_wrench(
    cmd: &RotorCommand,
    params: &RotorParams,
    a: f64,
    b: f64,
    water: [f64; 2],
) -> Result<Wrench> {
    cmd.check(params)?;
    let omega = cmd.saturated(params).omega;
    let t1 = rotor_thrust(omega[0], 0, params, water[0])?.0;
    let t2 = rotor_thrust(omega[1], 1, params, water[1])?.0;
    Ok(tilt_rotor_wrench_from_thrust([t1, t2], cmd.gamma, a, b))
}

/// Per-rotor thrusts and tilts that realize `(Fx, Fz, Mx, Mz)` exactly when
/// within limits. Splits the demand into per-rotor `x` and `z` components
/// and converts each to polar form; tilts are clamped to the servo range
/// and thrusts to `[0, t_max]`.
pub fn allocate_tilt_rotor(
    fx: f64,
    fz: f64,
    mx: f64,
    mz: f64,
    a: f64,
    t_max: f64,
    tilt_limit: f64,
) -> ([f64; 2], [f64; 2]) {
    let x = [0.5 * (fx - mz / a), 0.5 * (fx + mz / a)];
    let z = [0.5 * (fz + mx / a), 0.5 * (fz - mx / a)];
    let mut thrust = [0.0; 2];
    let mut gamma = [0.0; 2];
    for i in 0..2 {
        let t = x[i].hypot(z[i]);
        gamma[i] = if t > 0.0 {
            z[i].atan2(x[i])
        } else {
            std::f64::consts::FRAC_PI_2
        };
        gamma[i] = gamma[i].clamp(-tilt_limit, tilt_limit);
        thrust[i] = t.min(t_max);
    }
    (thrust, gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlappingParams {
    /// Wing areas of W1, W2, W3 (m^2).
    pub area: [f64; 3],
    /// Instantaneous normal-force coefficient.
    pub cn_inst: f64,
    /// Pitch lever of each wing: the chordwise distance from the pivot to
    /// the centre of pressure (m). Sets the self-induced flow speed
    /// `lever * theta_dot` that lets a wing produce force at zero speed.
    pub lever: [f64; 3],
    /// Time-averaged thrust coefficients for the averaged model.
    pub cfx_bar: [f64; 3],
    /// Time-averaged vertical-force coefficients; zero for symmetric pitching.
    pub cfz_bar: [f64; 3],
    /// Wing servo travel limit (rad).
    pub servo_limit: f64,
}

impl Default for FlappingParams {
    fn default() -> Self {
        Self {
            area: [0.028, 0.028, 0.020],
            cn_inst: 3.0,
            lever: [0.12, 0.12, 0.10],
            cfx_bar: [0.8; 3],
            cfz_bar: [0.0; 3],
            servo_limit: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl FlappingParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.area.iter().all(|s| s.is_finite() && *s > 0.0)
            && self.lever.iter().all(|l| l.is_finite() && *l >= 0.0)
            && self.cn_inst.is_finite()
            && self
                .cfx_bar
                .iter()
                .chain(&self.cfz_bar)
                .all(|c| c.is_finite())
            && self.servo_limit.is_finite()
            && self.servo_limit > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::Config(
                "flapping: areas and servo_limit must be positive, levers non-negative".into(),
            ))
        }
    }
}

/// Period-averaged thrust and vertical force of one wing at offset `x`.
pub fn flapping_mean_thrust(
    x: f64,
    alpha: f64,
    vf: f64,
    area: f64,
    cfx_bar: f64,
    cfz_bar: f64,
    rho_w: f64,
) -> (f64, f64) {
    let q = 0.5 * rho_w * ((x - alpha).sin() * vf).powi(2) * area;
    (q * cfx_bar, q * cfz_bar)
}

/// Instantaneous quasi-steady force `(fx, fz)` of one wing at pitch `theta`.
///
/// ```text
/// N = 0.5 rho S Cn ((lever theta_dot)^2 sin(theta)|sin(theta)| - Vf^2 sin(d)|sin(d)|)
/// ```
///
/// with relative incidence `d = theta - alpha`, resolved as
/// `fx = N sin(theta)`, `fz = N cos(theta)`. The stroke term is the thrust
/// from the wing's own pitching; the `Vf^2` term opposes the flow through
/// the wing, so a wing held across the stream is a drag rudder. `alpha` is
/// positive nose-up, so `theta = alpha` puts the chord along the flow.
#[allow(clippy::too_many_arguments)]
pub fn flapping_instantaneous_force(
    theta: f64,
    theta_dot: f64,
    alpha: f64,
    vf: f64,
    area: f64,
    lever: f64,
    cn: f64,
    rho_w: f64,
) -> (f64, f64) {
    let s = (theta - alpha).sin();
    let (st, ct) = theta.sin_cos();
    let v_tip = lever * theta_dot;
    let n = 0.5 * rho_w * area * cn * (v_tip * v_tip * st * st.abs() - vf * vf * s * s.abs());
    (n * st, n * ct)
}

/// Time-averaged coefficients from a sampled trace `(t, Tfx, Tfz)` over the
/// first `n` periods, by trapezoidal quadrature. The leading minus sign of
/// the definition is kept, so a trace of forces opposing `+x` yields a
/// positive thrust coefficient.
pub fn time_averaged_coefficients(
    trace: &[(f64, f64, f64)],
    period: f64,
    n: usize,
    rho_w: f64,
    vf: f64,
    area: f64,
) -> Result<(f64, f64)> {
    let span = period * n as f64;
    let available = match (trace.first(), trace.last()) {
        (Some(a), Some(b)) => b.0 - a.0,
        _ => 0.0,
    };
    if n == 0 || !(period > 0.0) || available < span * (1.0 - 1e-9) {
        return Err(SimError::InsufficientTrace {
            available,
            required: span,
        });
    }
    if !(vf > 0.0) {
        return Err(SimError::Config(
            "time-averaged coefficients need Vf > 0".into(),
        ));
    }
    let t_end = trace[0].0 + span;
    let (mut ix, mut iz) = (0.0, 0.0);
    for w in trace.windows(2) {
        let (t0, x0, z0) = w[0];
        let (mut t1, mut x1, mut z1) = w[1];
        if t0 >= t_end {
            break;
        }
        if t1 > t_end {
            let f = (t_end - t0) / (t1 - t0);
            x1 = x0 + f * (x1 - x0);
            z1 = z0 + f * (z1 - z0);
            t1 = t_end;
        }
        ix += 0.5 * (x0 + x1) * (t1 - t0);
        iz += 0.5 * (z0 + z1) * (t1 - t0);
    }
    let scale = -1.0 / (span * 0.5 * rho_w * vf * vf * area);
    Ok((ix * scale, iz * scale))
}

/// Geometry of the flapping wrench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingGeometry {
    /// Lateral arm of W1/W2 (m).
    pub lateral: f64,
    /// Longitudinal arm of the outer-wing thrust axis (m).
    pub axial: f64,
    /// Arm of the tail-wing thrust axis (m).
    pub tail: f64,
}

impl WingGeometry {
    /// Body-frame positions of W1, W2 and W3 consistent with the moment rows
    /// of [`flapping_wrench`].
    pub fn stations(&self) -> [Vec3; 3] {
        [
            Vec3::new(self.axial, self.lateral, 0.0),
            Vec3::new(self.axial, -self.lateral, 0.0),
            Vec3::new(-self.tail, 0.0, 0.0),
        ]
    }
}

/// Flapping-wing wrench for per-wing forces `t` at wing angles `x`.
///
/// The yaw row has no lever arm: `Mz = T2 sin(x2) - T1 sin(x1)` in N m per
/// N, i.e. a unit arm.
pub fn flapping_wrench(t: [f64; 3], x: [f64; 3], geom: &WingGeometry) -> Wrench {
    let (s, c): (Vec<f64>, Vec<f64>) = x.iter().map(|a| a.sin_cos()).unzip();
    let WingGeometry {
        lateral: a,
        axial: b,
        tail,
    } = *geom;
    Wrench::new(
        Vec3::new(
            t[0] * s[0] + t[1] * s[1] + t[2] * s[2],
            0.0,
            t[0] * c[0] + t[1] * c[1] + t[2] * c[2],
        ),
        Vec3::new(
            t[0] * a * c[0] - t[1] * a * c[1],
            t[2] * tail * c[2] - t[0] * b * c[0] - t[1] * b * c[1],
            t[1] * s[1] - t[0] * s[0],
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    #[test]
    fn rotor_thrust_examples() {
        let p = RotorParams::default();
        assert_eq!(rotor_thrust(0.0, 0, &p, 0.0).unwrap(), (0.0, 0.0));
        let full = rotor_thrust(p.omega_max, 0, &p, 0.0).unwrap().0;
        assert!((2.0 * full - MAX_AIR_THRUST).abs() < 1e-12);
        let half = rotor_thrust(0.5 * p.omega_max, 1, &p, 0.0).unwrap().0;
        assert!((half - 0.25 * full).abs() < 1e-12);
        assert!(rotor_thrust(p.omega_max * 1.01, 0, &p, 0.0).is_err());
        assert!(rotor_thrust(-1.0, 0, &p, 0.0).is_err());
    }

    #[test]
    fn reaction_torque_follows_spin() {
        let p = RotorParams::default();
        let (t1, m1) = rotor_thrust(500.0, 0, &p, 1.0).unwrap();
        let (t2, m2) = rotor_thrust(500.0, 1, &p, 1.0).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(m1, -m2);
        assert!((m1 - p.cq_water * t1).abs() < 1e-15);
    }

    #[test]
    fn tilt_rotor_examples() {
        let (a, b, t) = (0.16, 0.05, 3.0);
        let w = tilt_rotor_wrench_from_thrust([t, t], [0.0, 0.0], a, b);
        assert_eq!(w.force, Vec3::new(2.0 * t, 0.0, 0.0));
        assert_eq!(w.moment, Vec3::zeros());

        let w = tilt_rotor_wrench_from_thrust([t, t], [FRAC_PI_2, FRAC_PI_2], a, b);
        assert!((w.force - Vec3::new(0.0, 0.0, 2.0 * t)).norm() < 1e-12);
        assert!((w.moment - Vec3::new(0.0, -2.0 * t * b, 0.0)).norm() < 1e-12);

        let w = tilt_rotor_wrench_from_thrust([t, 0.0], [0.0, 0.0], a, b);
        assert!((w.moment.z + t * a).abs() < 1e-15);
    }

    #[test]
    fn allocation_inverts_wrench() {
        let (a, tmax) = (0.16, 20.0);
        for &(fx, fz, mx, mz) in &[
            (0.0, 15.8, 0.0, 0.0),
            (1.0, 14.0, 0.1, -0.05),
            (3.0, 2.0, -0.2, 0.1),
        ] {
            let (t, g) = allocate_tilt_rotor(fx, fz, mx, mz, a, tmax, FRAC_PI_2);
            let w = tilt_rotor_wrench_from_thrust(t, g, a, 0.0);
            assert!((w.force.x - fx).abs() < 1e-12);
            assert!((w.force.z - fz).abs() < 1e-12);
            assert!((w.moment.x - mx).abs() < 1e-12);
            assert!((w.moment.z - mz).abs() < 1e-12);
        }
        let (t, g) = allocate_tilt_rotor(0.0, 15.8, 0.0, 0.0, a, tmax, FRAC_PI_2);
        assert_eq!(g, [FRAC_PI_2; 2]);
        assert!((t[0] + t[1] - 15.8).abs() < 1e-12);
    }

    #[test]
    fn command_limits_are_checked() {
        let p = RotorParams::default();
        let ok = RotorCommand {
            omega: [100.0, 200.0],
            gamma: [0.3, -0.3],
        };
        assert!(ok.check(&p).is_ok());
        let bad = RotorCommand {
            omega: [100.0, 200.0],
            gamma: [2.0, 0.0],
        };
        assert!(matches!(bad.check(&p), Err(SimError::CommandOutOfRange(_))));
        let sat = RotorCommand {
            omega: [5000.0, -3.0],
            gamma: [2.0, -2.0],
        }
        .saturated(&p);
        assert!(sat.check(&p).is_ok());
    }

    #[test]
    fn mean_thrust_examples() {
        assert_eq!(
            flapping_mean_thrust(0.3, 0.1, 0.0, 0.028, 0.8, 0.0, 1000.0),
            (0.0, 0.0)
        );
        assert_eq!(
            flapping_mean_thrust(0.2, 0.2, 0.5, 0.028, 0.8, 0.0, 1000.0),
            (0.0, 0.0)
        );
        let (_, fz) = flapping_mean_thrust(0.7, 0.0, 0.5, 0.028, 0.8, 0.0, 1000.0);
        assert_eq!(fz, 0.0);
    }

    #[test]
    fn instantaneous_force_signs() {
        assert_eq!(
            flapping_instantaneous_force(0.2, 0.0, 0.2, 0.4, 0.028, 0.07, 2.0, 1000.0),
            (0.0, 0.0)
        );
        // held wing in a stream: pure drag
        let (fx, fz) = flapping_instantaneous_force(0.4, 0.0, 0.1, 0.4, 0.028, 0.07, 2.0, 1000.0);
        assert!(fz < 0.0 && fx < 0.0);
        let (fx, _) = flapping_instantaneous_force(-0.4, 0.0, 0.0, 0.4, 0.028, 0.07, 2.0, 1000.0);
        assert!(fx < 0.0);
        // flapping at rest: thrust on either side of the stroke
        for th in [-0.4, 0.4] {
            let (fx, _) = flapping_instantaneous_force(th, 5.0, 0.0, 0.0, 0.028, 0.07, 2.0, 1000.0);
            assert!(fx > 0.0);
        }
    }

    #[test]
    fn sinusoidal_pitch_has_zero_mean_vertical_force() {
        let (r, w) = (0.5, 15.0);
        let period = TAU / w;
        let n = 20_000;
        let (mut sum, mut peak) = (0.0_f64, 0.0_f64);
        for i in 0..n {
            let t = period * i as f64 / n as f64;
            let th = r * (w * t).cos();
            let thd = -r * w * (w * t).sin();
            let (_, fz) = flapping_instantaneous_force(th, thd, 0.0, 0.3, 0.028, 0.07, 2.0, 1000.0);
            sum += fz;
            peak = peak.max(fz.abs());
        }
        assert!((sum / n as f64).abs() < 1e-10 * peak);
    }

    #[test]
    fn averaged_coefficients_examples() {
        let (rho, vf, s) = (1000.0, 0.4, 0.028);
        let q = 0.5 * rho * vf * vf * s;
        let trace: Vec<_> = (0..=400).map(|i| (i as f64 * 0.01, -q, 0.0)).collect();
        let (cx, cz) = time_averaged_coefficients(&trace, 1.0, 4, rho, vf, s).unwrap();
        assert!((cx - 1.0).abs() < 1e-12);
        assert_eq!(cz, 0.0);

        let zeros: Vec<_> = (0..=100).map(|i| (i as f64 * 0.01, 0.0, 0.0)).collect();
        assert_eq!(
            time_averaged_coefficients(&zeros, 0.5, 2, rho, vf, s).unwrap(),
            (0.0, 0.0)
        );
        assert!(matches!(
            time_averaged_coefficients(&zeros, 0.5, 3, rho, vf, s),
            Err(SimError::InsufficientTrace { .. })
        ));
    }

    #[test]
    fn flapping_wrench_examples() {
        let g = WingGeometry {
            lateral: 0.2,
            axial: 0.03,
            tail: 0.22,
        };
        assert_eq!(
            flapping_wrench([0.0; 3], [0.3, -0.2, 1.0], &g),
            Wrench::zero()
        );

        let f = 1.5;
        let w = flapping_wrench([f, f, 0.0], [0.0; 3], &g);
        assert_eq!(w.force, Vec3::new(0.0, 0.0, 2.0 * f));
        assert!((w.moment - Vec3::new(0.0, -2.0 * f * g.axial, 0.0)).norm() < 1e-15);

        let w = flapping_wrench([f, 0.0, 0.0], [FRAC_PI_2, 0.0, 0.0], &g);
        assert!((w.force - Vec3::new(f, 0.0, 0.0)).norm() < 1e-15);
        assert!((w.moment.z + f).abs() < 1e-15);
        assert!(w.moment.x.abs() < 1e-15 && w.moment.y.abs() < 1e-15);
    }
}
