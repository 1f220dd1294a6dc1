//! Mode-dependent controllers and the mode supervisor.
//!
//! Flight modes use a cascaded position/velocity PID whose output is an
//! earth-frame force demand. The demand is offset by the modelled external
//! force, rotated into the body frame and allocated exactly onto the two
//! tilt-rotors; a PD attitude hold supplies the roll and yaw moments.
//! Underwater vectored mode is open loop: a linear mix of pilot inputs.

use serde::{Deserialize, Serialize};

use crate::actuation::{allocate_tilt_rotor, RotorCommand, RotorParams};
use crate::dynamics::{MediumContext, VehicleParams};
use crate::spatial::{rotation_earth_to_body, wrap_angle, RigidBodyState};
use crate::{Result, SimError, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    VerticalFlight,
    HorizontalFlight,
    UnderwaterVectored,
    UnderwaterFlapping,
}

impl ControlMode {
    pub fn requires_water(self) -> bool {
        matches!(
            self,
            ControlMode::UnderwaterVectored | ControlMode::UnderwaterFlapping
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ControlMode::VerticalFlight => "vertical_flight",
            ControlMode::HorizontalFlight => "horizontal_flight",
            ControlMode::UnderwaterVectored => "underwater_vectored",
            ControlMode::UnderwaterFlapping => "underwater_flapping",
        }
    }

    /// Small integer code used in trajectory output.
    pub fn code(self) -> u8 {
        match self {
            ControlMode::VerticalFlight => 0,
            ControlMode::HorizontalFlight => 1,
            ControlMode::UnderwaterVectored => 2,
            ControlMode::UnderwaterFlapping => 3,
        }
    }
}

impl std::fmt::Display for ControlMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    /// Position loop gains, earth axes (1/s, 1/s^2, -).
    pub pos_kp: Vec3,
    pub pos_ki: Vec3,
    pub pos_kd: Vec3,
    /// Velocity loop gains, earth axes (1/s, 1/s^2, -).
    pub vel_kp: Vec3,
    pub vel_ki: Vec3,
    pub vel_kd: Vec3,
    /// Clamp on each integrator state.
    pub integrator_limit: f64,
    /// Clamp on the velocity setpoint magnitude per axis (m/s).
    pub velocity_limit: f64,
    /// Clamp on the commanded acceleration per axis (m/s^2).
    pub accel_limit: f64,
    /// Attitude hold proportional gains for roll and yaw (N m/rad).
    pub roll_kp: f64,
    pub yaw_kp: f64,
    /// Attitude hold rate gains for roll and yaw (N m s/rad).
    pub roll_kd: f64,
    pub yaw_kd: f64,
    /// Largest roll target produced by a lateral force demand (rad).
    pub max_roll: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            pos_kp: Vec3::new(1.0, 1.0, 1.5),
            pos_ki: Vec3::zeros(),
            pos_kd: Vec3::zeros(),
            vel_kp: Vec3::new(2.5, 2.5, 4.0),
            vel_ki: Vec3::new(0.3, 0.3, 0.5),
            vel_kd: Vec3::zeros(),
            integrator_limit: 2.0,
            velocity_limit: 3.0,
            accel_limit: 6.0,
            roll_kp: 0.6,
            yaw_kp: 0.3,
            roll_kd: 0.15,
            yaw_kd: 0.1,
            max_roll: 0.35,
        }
    }
}

impl PidGains {
    /// All gains zero: the controller outputs the trim command.
    pub fn zero() -> Self {
        Self {
            pos_kp: Vec3::zeros(),
            vel_kp: Vec3::zeros(),
            vel_ki: Vec3::zeros(),
            roll_kp: 0.0,
            yaw_kp: 0.0,
            roll_kd: 0.0,
            yaw_kd: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vecs = [
            self.pos_kp,
            self.pos_ki,
            self.pos_kd,
            self.vel_kp,
            self.vel_ki,
            self.vel_kd,
        ];
        let scalars = [self.roll_kp, self.yaw_kp, self.roll_kd, self.yaw_kd];
        if !vecs
            .iter()
            .flat_map(|v| v.iter())
            .chain(&scalars)
            .all(|x| x.is_finite())
        {
            return Err(SimError::Config("controller gains must be finite".into()));
        }
        for (name, v) in [
            ("integrator_limit", self.integrator_limit),
            ("velocity_limit", self.velocity_limit),
            ("accel_limit", self.accel_limit),
            ("max_roll", self.max_roll),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!(
                    "controller {name} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// What the flight controller should track.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlightTarget {
    /// Earth-frame position target (m). In horizontal flight only `y` and
    /// `z` are tracked.
    pub position: Vec3,
    /// Heading target (rad).
    pub yaw: f64,
    /// Earth-frame forward speed for horizontal flight (m/s).
    pub cruise_speed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightOutput {
    pub command: RotorCommand,
    /// Thrust allocated to each rotor (N).
    pub thrust: [f64; 2],
    /// Body-frame force requested from the rotors before saturation (N).
    pub force_demand: Vec3,
}

/// Cascaded position/velocity PID with anti-windup.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightController {
    pub gains: PidGains,
    pos_integral: Vec3,
    vel_integral: Vec3,
    prev_vel_error: Option<Vec3>,
    prev_pos_error: Option<Vec3>,
}

impl FlightController {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            pos_integral: Vec3::zeros(),
            vel_integral: Vec3::zeros(),
            prev_vel_error: None,
            prev_pos_error: None,
        }
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.gains.clone());
    }

    /// One controller update.
    ///
    /// `external_force` is the modelled earth-frame force on the vehicle
    /// from everything except the rotors (gravity, buoyancy, fluid).
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &mut self,
        target: &FlightTarget,
        state: &RigidBodyState,
        external_force: &Vec3,
        params: &VehicleParams,
        rotor: &RotorParams,
        water: f64,
        dt: f64,
    ) -> FlightOutput {
        let g = &self.gains;
        let r_be = crate::spatial::rotation_body_to_earth(state.attitude);
        let vel_earth = r_be * state.velocity;

        // stage 1: position -> velocity setpoint
        let mut pos_err = target.position - state.position;
        if target.cruise_speed.is_some() {
            pos_err.x = 0.0;
        }
        let pos_d = match self.prev_pos_error {
            Some(prev) if dt > 0.0 => (pos_err - prev) / dt,
            _ => Vec3::zeros(),
        };
        self.prev_pos_error = Some(pos_err);
        let lim_i = g.integrator_limit;
        self.pos_integral = (self.pos_integral + pos_err * dt).map(|v| v.clamp(-lim_i, lim_i));
        let mut vel_sp = g.pos_kp.component_mul(&pos_err)
            + g.pos_ki.component_mul(&self.pos_integral)
            + g.pos_kd.component_mul(&pos_d);
        vel_sp = vel_sp.map(|v| v.clamp(-g.velocity_limit, g.velocity_limit));
        if let Some(speed) = target.cruise_speed {
            vel_sp.x = speed;
        }

        // stage 2: velocity -> acceleration
        let vel_err = vel_sp - vel_earth;
        let vel_d = match self.prev_vel_error {
            Some(prev) if dt > 0.0 => (vel_err - prev) / dt,
            _ => Vec3::zeros(),
        };
        self.prev_vel_error = Some(vel_err);
        let unclamped = g.vel_kp.component_mul(&vel_err) + g.vel_kd.component_mul(&vel_d);
        let candidate = (self.vel_integral + vel_err * dt).map(|v| v.clamp(-lim_i, lim_i));
        let accel = unclamped + g.vel_ki.component_mul(&candidate);
        // conditional integration: freeze axes whose output saturates
        for i in 0..3 {
            if accel[i].abs() <= g.accel_limit || accel[i].signum() != vel_err[i].signum() {
                self.vel_integral[i] = candidate[i];
            }
        }
        let accel = (unclamped + g.vel_ki.component_mul(&self.vel_integral))
            .map(|v| v.clamp(-g.accel_limit, g.accel_limit));

        let force_earth = accel * params.mass - external_force;
        let force_body = rotation_earth_to_body(state.attitude) * force_earth;

        // lateral demand becomes a roll target; roll and yaw held by PD
        let lift_ref = force_body.z.max(0.2 * params.weight());
        let roll_target = (-force_body.y)
            .atan2(lift_ref)
            .clamp(-g.max_roll, g.max_roll);
        let mx =
            g.roll_kp * wrap_angle(roll_target - state.attitude.phi) - g.roll_kd * state.rates.x;
        let mz = g.yaw_kp * wrap_angle(target.yaw - state.attitude.psi) - g.yaw_kd * state.rates.z;

        let a = params.rotor_lateral_arm;
        let t_max = rotor.max_thrust(water);
        let (thrust, gamma) = allocate_tilt_rotor(
            force_body.x,
            force_body.z,
            mx,
            mz,
            a,
            t_max,
            rotor.tilt_limit,
        );
        let ct = rotor.thrust_coefficient(water);
        let omega = thrust.map(|t| (t / ct).sqrt().min(rotor.omega_max));
        let command = RotorCommand { omega, gamma }.saturated(rotor);
        FlightOutput {
            command,
            thrust: command.omega.map(|w| ct * w * w),
            force_demand: force_body,
        }
    }
}

/// Normalized pilot sticks, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PilotInput {
    pub throttle: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl PilotInput {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("throttle", self.throttle),
            ("roll", self.roll),
            ("pitch", self.pitch),
            ("yaw", self.yaw),
        ] {
            if !(v.abs() <= 1.0) {
                return Err(SimError::InputOutOfRange(format!(
                    "{name} = {v} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Gains of the open-loop vectored mixer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixGains {
    /// Differential rotor speed per unit yaw, as a fraction of `omega_max`.
    pub yaw: f64,
    /// Common tilt per unit pitch (rad).
    pub pitch: f64,
    /// Differential tilt per unit roll (rad).
    pub roll: f64,
    /// Tilt at zero pitch input (rad).
    pub idle_tilt: f64,
}

impl Default for MixGains {
    fn default() -> Self {
        Self {
            yaw: 0.3,
            pitch: std::f64::consts::FRAC_PI_2,
            roll: 0.3,
            idle_tilt: 0.0,
        }
    }
}

/// Linear pilot mix: throttle sets the common speed, yaw the speed
/// difference, pitch the common tilt and roll the tilt difference.
pub fn vectored_mix(
    pilot: &PilotInput,
    gains: &MixGains,
    rotor: &RotorParams,
) -> Result<RotorCommand> {
    pilot.validate()?;
    let w = rotor.omega_max;
    let cmd = RotorCommand {
        omega: [
            w * (pilot.throttle - gains.yaw * pilot.yaw),
            w * (pilot.throttle + gains.yaw * pilot.yaw),
        ],
        gamma: [
            gains.idle_tilt + gains.pitch * pilot.pitch + gains.roll * pilot.roll,
            gains.idle_tilt + gains.pitch * pilot.pitch - gains.roll * pilot.roll,
        ],
    };
    Ok(cmd.saturated(rotor))
}

/// Time-ordered schedule of demanded modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSchedule {
    /// `(start time, mode)` pairs with increasing start times.
    pub entries: Vec<(f64, ControlMode)>,
}

impl ModeSchedule {
    pub fn constant(mode: ControlMode) -> Self {
        Self {
            entries: vec![(0.0, mode)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(SimError::Config("mode schedule is empty".into()));
        }
        if !self.entries.iter().all(|e| e.0.is_finite())
            || !self.entries.windows(2).all(|w| w[0].0 < w[1].0)
        {
            return Err(SimError::Config(
                "mode schedule times must be finite and increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn mode_at(&self, t: f64) -> ControlMode {
        self.entries
            .iter()
            .rev()
            .find(|e| e.0 <= t)
            .or(self.entries.first())
            .map(|e| e.1)
            .unwrap_or(ControlMode::VerticalFlight)
    }
}

/// Reconciles the scheduled mode with the detected medium.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSupervisor {
    current: Option<ControlMode>,
}

impl Default for ModeSupervisor {
    fn default() -> Self {
        Self::new()
    }
}

impl ModeSupervisor {
    pub fn new() -> Self {
        Self { current: None }
    }

    pub fn current(&self) -> Option<ControlMode> {
        self.current
    }

    /// Returns the active mode. A flight mode demanded while still in water
    /// is held as vectored propulsion until the medium flag clears; a water
    /// mode demanded in air is rejected.
    pub fn update(
        &mut self,
        demanded: ControlMode,
        medium: &MediumContext,
        t: f64,
    ) -> Result<ControlMode> {
        let mode = match (demanded.requires_water(), medium.water) {
            (true, false) => {
                return Err(SimError::IllegalTransition(format!(
                    "{demanded} demanded at t = {t:.3} s while out of water"
                )))
            }
            (false, true) => ControlMode::UnderwaterVectored,
            _ => demanded,
        };
        if self.current != Some(mode) {
            match self.current {
                Some(prev) => log::info!("t = {t:.3} s: mode {prev} -> {mode}"),
                None => log::info!("t = {t:.3} s: initial mode {mode}"),
            }
            self.current = Some(mode);
        }
        Ok(mode)
    }
}

/// Convenience: one supervisor decision without history.
pub fn mode_supervisor(
    schedule: &ModeSchedule,
    medium: &MediumContext,
    t: f64,
) -> Result<ControlMode> {
    ModeSupervisor::new().update(schedule.mode_at(t), medium, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::EulerZXY;
    use std::f64::consts::FRAC_PI_2;

    fn hover_external(p: &VehicleParams) -> Vec3 {
        Vec3::new(0.0, 0.0, -p.weight())
    }

    #[test]
    fn zero_gains_give_trim() {
        let p = VehicleParams::default();
        let rotor = RotorParams::default();
        let mut c = FlightController::new(PidGains::zero());
        let target = FlightTarget {
            position: Vec3::new(3.0, -1.0, 5.0),
            ..Default::default()
        };
        let out = c.step(
            &target,
            &RigidBodyState::default(),
            &hover_external(&p),
            &p,
            &rotor,
            0.0,
            1e-3,
        );
        assert_eq!(out.command.gamma, [FRAC_PI_2; 2]);
        assert!((out.thrust[0] + out.thrust[1] - p.weight()).abs() < 1e-9);
    }

    #[test]
    fn climb_demand_raises_thrust_monotonically() {
        let p = VehicleParams::default();
        let rotor = RotorParams::default();
        let mut last = 0.0;
        for dz in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 50.0] {
            let mut c = FlightController::new(PidGains::default());
            let target = FlightTarget {
                position: Vec3::new(0.0, 0.0, dz),
                ..Default::default()
            };
            let out = c.step(
                &target,
                &RigidBodyState::default(),
                &hover_external(&p),
                &p,
                &rotor,
                0.0,
                1e-3,
            );
            let total = out.thrust[0] + out.thrust[1];
            assert!(total >= last);
            assert!(total <= 2.0 * rotor.max_thrust(0.0) + 1e-9);
            last = total;
        }
    }

    #[test]
    fn outputs_stay_saturated_for_wild_inputs() {
        let p = VehicleParams::default();
        let rotor = RotorParams::default();
        let mut c = FlightController::new(PidGains::default());
        let state = RigidBodyState {
            position: Vec3::new(1e4, -1e4, 1e5),
            attitude: EulerZXY::new(1.2, -3.0, 7.0),
            velocity: Vec3::new(-80.0, 40.0, 10.0),
            rates: Vec3::new(30.0, -20.0, 50.0),
        };
        let out = c.step(
            &FlightTarget::default(),
            &state,
            &hover_external(&p),
            &p,
            &rotor,
            0.0,
            1e-3,
        );
        assert!(out.command.check(&rotor).is_ok());
    }

    #[test]
    fn mix_examples() {
        let rotor = RotorParams::default();
        let g = MixGains::default();
        let idle = vectored_mix(&PilotInput::default(), &g, &rotor).unwrap();
        assert_eq!(idle.omega, [0.0, 0.0]);
        assert_eq!(idle.gamma, [g.idle_tilt; 2]);

        let a = vectored_mix(
            &PilotInput {
                throttle: 0.5,
                yaw: 0.2,
                ..Default::default()
            },
            &g,
            &rotor,
        )
        .unwrap();
        let b = vectored_mix(
            &PilotInput {
                throttle: 0.5,
                yaw: 0.4,
                ..Default::default()
            },
            &g,
            &rotor,
        )
        .unwrap();
        assert!(((b.omega[0] - b.omega[1]) - 2.0 * (a.omega[0] - a.omega[1])).abs() < 1e-9);

        let l = vectored_mix(
            &PilotInput {
                throttle: 0.5,
                roll: 0.3,
                ..Default::default()
            },
            &g,
            &rotor,
        )
        .unwrap();
        let r = vectored_mix(
            &PilotInput {
                throttle: 0.5,
                roll: -0.3,
                ..Default::default()
            },
            &g,
            &rotor,
        )
        .unwrap();
        assert_eq!(l.gamma[0], r.gamma[1]);
        assert_eq!(l.gamma[1], r.gamma[0]);

        assert!(matches!(
            vectored_mix(
                &PilotInput {
                    throttle: 1.5,
                    ..Default::default()
                },
                &g,
                &rotor
            ),
            Err(SimError::InputOutOfRange(_))
        ));
    }

    #[test]
    fn supervisor_rules() {
        let air = MediumContext::air();
        let water = MediumContext::water();
        let s = ModeSchedule::constant(ControlMode::HorizontalFlight);
        assert_eq!(
            mode_supervisor(&s, &air, 0.0).unwrap(),
            ControlMode::HorizontalFlight
        );
        let s = ModeSchedule::constant(ControlMode::UnderwaterFlapping);
        assert!(matches!(
            mode_supervisor(&s, &air, 0.0),
            Err(SimError::IllegalTransition(_))
        ));

        let mut sup = ModeSupervisor::new();
        assert_eq!(
            sup.update(ControlMode::VerticalFlight, &water, 0.0)
                .unwrap(),
            ControlMode::UnderwaterVectored
        );
        assert_eq!(
            sup.update(ControlMode::VerticalFlight, &air, 3.0).unwrap(),
            ControlMode::VerticalFlight
        );
    }

    #[test]
    fn schedule_lookup() {
        let s = ModeSchedule {
            entries: vec![
                (0.0, ControlMode::UnderwaterVectored),
                (2.0, ControlMode::VerticalFlight),
            ],
        };
        s.validate().unwrap();
        assert_eq!(s.mode_at(1.9), ControlMode::UnderwaterVectored);
        assert_eq!(s.mode_at(2.0), ControlMode::VerticalFlight);
        assert_eq!(s.mode_at(-1.0), ControlMode::UnderwaterVectored);
    }
}
