//! Closed-loop scenario engine.
//!
//! The rigid body (12 states) and the CPG network (15 states) are integrated
//! together with one fixed-step RK4 clock. Once per step the medium flag is
//! updated, the supervisor picks the active mode and the controller computes
//! a command that is held constant over the step.

pub mod config;
pub mod metrics;
pub mod output;
pub mod sweep;

use nalgebra::SVector;

pub use config::ScenarioConfig;
pub use metrics::{dominant_frequency, Summary};
pub use output::{Sample, TrajectoryRecord};

use crate::actuation::{
    flapping_instantaneous_force, flapping_wrench, tilt_rotor_wrench_from_thrust, RotorCommand,
    WingGeometry,
};
use crate::control::{vectored_mix, ControlMode, FlightController, FlightTarget, ModeSupervisor};
use crate::cpg::{
    cpg_derivative, cpg_output, cpg_output_rate, set_params, CpgNetworkState, CpgParams,
};
use crate::dynamics::{
    dynamics_derivative_with_centre, flow_angles, fluid_wrench_for_state,
    restoring_wrench_with_centre, FluidCoefficients, MediumContext, Wrench,
};
use crate::integrate::rk4_step;
use crate::spatial::{kinematics_derivative, rotation_body_to_earth, EulerZXY, RigidBodyState};
use crate::{Result, SimError, Vec3};

/// Length of the full ODE state.
pub const FULL_STATE_DIM: usize = 27;
type FullVector = SVector<f64, FULL_STATE_DIM>;

/// Schmitt-trigger medium detection. Water is entered below
/// `surface - h/2` and left above `surface + h/2`.
pub fn detect_medium(z: f64, previous_water: bool, surface: f64, hysteresis: f64) -> bool {
    let half = 0.5 * hysteresis;
    if previous_water {
        z <= surface + half
    } else {
        z < surface - half
    }
}

/// Fraction of the hull below the surface, linear over `height`.
pub fn submergence(z: f64, surface: f64, height: f64) -> f64 {
    ((surface + 0.5 * height - z) / height).clamp(0.0, 1.0)
}

/// What drives the vehicle during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActuatorCommand {
    /// Tilt-rotor speeds and tilts.
    Rotors(RotorCommand),
    /// Wings follow the CPG output.
    Wings,
}

/// Forces of the three wings at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WingForces {
    /// Wing angles after the servo limit (rad).
    pub theta: [f64; 3],
    /// Normal force per wing (N).
    pub normal: [f64; 3],
}

/// Everything that stays fixed over a run.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ScenarioConfig,
    pub coefficients: FluidCoefficients,
}

impl Model {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let coefficients = config.fluid_coefficients()?;
        Ok(Self {
            config,
            coefficients,
        })
    }

    fn wing_geometry(&self) -> WingGeometry {
        let v = &self.config.vehicle;
        WingGeometry {
            lateral: v.wing_lateral_arm,
            axial: v.wing_axial_arm,
            tail: v.tail_arm,
        }
    }

    /// Medium context for a flag and a height.
    pub fn medium_context(&self, water: bool, z: f64) -> MediumContext {
        let m = &self.config.medium;
        MediumContext {
            water,
            rho: if water {
                m.water_density
            } else {
                m.air_density
            },
            rho_water: m.water_density,
            submergence: submergence(z, m.surface, self.config.vehicle.body_height),
        }
    }

    /// Submerged fraction of each rotor disc.
    pub fn rotor_water_fraction(&self, state: &RigidBodyState) -> [f64; 2] {
        let m = &self.config.medium;
        let up = rotation_body_to_earth(state.attitude)
            .column(2)
            .into_owned();
        let z = state.position.z + self.config.vehicle.rotor_height * up.z;
        let f = ((m.surface - z) / m.rotor_transition + 0.5).clamp(0.0, 1.0);
        [f, f]
    }

    /// Wing angles and rates after the servo limit. A wing resting on its
    /// stop has zero rate.
    pub fn wing_kinematics(
        &self,
        cpg: &CpgNetworkState,
        params: &CpgParams,
    ) -> ([f64; 3], [f64; 3]) {
        let lim = self.config.flapping.servo_limit;
        let th = cpg_output(cpg);
        let thd = cpg_output_rate(cpg, params);
        let mut theta = [0.0; 3];
        let mut rate = [0.0; 3];
        for i in 0..3 {
            theta[i] = th[i].clamp(-lim, lim);
            rate[i] = if th[i].abs() > lim { 0.0 } else { thd[i] };
        }
        (theta, rate)
    }

    /// Control wrench for the active mode and command.
    pub fn assemble_wrench(
        &self,
        state: &RigidBodyState,
        mode: ControlMode,
        command: &ActuatorCommand,
        medium: &MediumContext,
        cpg: &CpgNetworkState,
        cpg_params: &CpgParams,
    ) -> Result<(Wrench, WingForces)> {
        match (mode, command) {
            (ControlMode::UnderwaterFlapping, ActuatorCommand::Wings) => {
                let (theta, rate) = self.wing_kinematics(cpg, cpg_params);
                let fl = &self.config.flapping;
                let geom = self.wing_geometry();
                let rho = medium.rho_water * medium.submergence;
                let mut normal = [0.0; 3];
                for (i, r) in geom.stations().iter().enumerate() {
                    // local flow at the wing, so body pitching and heaving
                    // feed back into the incidence
                    let (alpha, _, vf) = flow_angles(&(state.velocity + state.rates.cross(r)));
                    // the wing law takes the flow angle positive nose-up
                    let (fx, fz) = flapping_instantaneous_force(
                        theta[i],
                        rate[i],
                        -alpha,
                        vf,
                        fl.area[i],
                        fl.lever[i],
                        fl.cn_inst,
                        rho,
                    );
                    normal[i] = fx * theta[i].sin() + fz * theta[i].cos();
                }
                Ok((
                    flapping_wrench(normal, theta, &geom),
                    WingForces { theta, normal },
                ))
            }
            (ControlMode::UnderwaterFlapping, ActuatorCommand::Rotors(_)) => Err(
                SimError::ModeCommandMismatch("rotor command in flapping mode".into()),
            ),
            (_, ActuatorCommand::Wings) => Err(SimError::ModeCommandMismatch(format!(
                "wing command in {mode} mode"
            ))),
            (_, ActuatorCommand::Rotors(cmd)) => {
                let rotor = &self.config.rotor;
                let water = self.rotor_water_fraction(state);
                let c = cmd.saturated(rotor);
                let thrust =
                    [0, 1].map(|i| rotor.thrust_coefficient(water[i]) * c.omega[i] * c.omega[i]);
                let v = &self.config.vehicle;
                let w = tilt_rotor_wrench_from_thrust(
                    thrust,
                    c.gamma,
                    v.rotor_lateral_arm,
                    v.rotor_axial_arm,
                );
                let (theta, _) = self.wing_kinematics(cpg, cpg_params);
                Ok((
                    w,
                    WingForces {
                        theta,
                        normal: [0.0; 3],
                    },
                ))
            }
        }
    }

    /// Earth-frame force from gravity, buoyancy and the fluid: everything
    /// the rotors have to work against.
    pub fn external_force_earth(
        &self,
        state: &RigidBodyState,
        medium: &MediumContext,
    ) -> Result<Vec3> {
        let coeffs = self.coefficients.for_medium(medium.water);
        let v = &self.config.vehicle;
        let fluid = fluid_wrench_for_state(&state.velocity, &state.rates, medium, coeffs, v)?;
        let rest = restoring_wrench_with_centre(state.attitude, medium, v, &v.buoyancy_centre);
        Ok(rotation_body_to_earth(state.attitude) * (rest.force - fluid.force))
    }

    /// Derivative of the full 27-entry state for a held command.
    pub fn derivative(
        &self,
        y: &FullVector,
        water: bool,
        mode: ControlMode,
        command: &ActuatorCommand,
        cpg_params: &CpgParams,
    ) -> Result<FullVector> {
        let (state, cpg) = unpack(y);
        let medium = self.medium_context(water, state.position.z);
        let (control, _) =
            self.assemble_wrench(&state, mode, command, &medium, &cpg, cpg_params)?;
        let v = &self.config.vehicle;
        let r_b = v.buoyancy_centre_for_offsets(cpg.x[0], cpg.x[1]);
        let coeffs = self.coefficients.for_medium(water);
        let (vdot, wdot) =
            dynamics_derivative_with_centre(&state, &control, &medium, coeffs, v, &r_b)?;
        let (pdot, tdot) = kinematics_derivative(&state, self.config.integrator.singularity_guard)?;
        let cd = cpg_derivative(&cpg, cpg_params).to_vector();
        let mut out = FullVector::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&pdot);
        out.fixed_rows_mut::<3>(3).copy_from(&tdot);
        out.fixed_rows_mut::<3>(6).copy_from(&vdot);
        out.fixed_rows_mut::<3>(9).copy_from(&wdot);
        out.fixed_rows_mut::<15>(12).copy_from(&cd);
        Ok(out)
    }
}

pub fn pack(state: &RigidBodyState, cpg: &CpgNetworkState) -> FullVector {
    let mut y = FullVector::zeros();
    y.fixed_rows_mut::<3>(0).copy_from(&state.position);
    y.fixed_rows_mut::<3>(3)
        .copy_from(&state.attitude.to_vector());
    y.fixed_rows_mut::<3>(6).copy_from(&state.velocity);
    y.fixed_rows_mut::<3>(9).copy_from(&state.rates);
    y.fixed_rows_mut::<15>(12).copy_from(&cpg.to_vector());
    y
}

pub fn unpack(y: &FullVector) -> (RigidBodyState, CpgNetworkState) {
    let v3 = |o: usize| Vec3::new(y[o], y[o + 1], y[o + 2]);
    (
        RigidBodyState {
            position: v3(0),
            attitude: EulerZXY::from_vector(&v3(3)),
            velocity: v3(6),
            rates: v3(9),
        },
        CpgNetworkState::from_slice(&y.as_slice()[12..]),
    )
}

/// Mutable state of a run between steps.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    model: &'a Model,
    pub t: f64,
    pub step: u64,
    pub y: FullVector,
    pub water: bool,
    pub cpg_params: CpgParams,
    next_cpg_switch: usize,
    supervisor: ModeSupervisor,
    controller: FlightController,
}

/// Result of computing the command for the current step.
#[derive(Debug, Clone, Copy)]
struct StepCommand {
    mode: ControlMode,
    command: ActuatorCommand,
}

impl<'a> Simulation<'a> {
    pub fn new(model: &'a Model) -> Result<Self> {
        let cfg = &model.config;
        let state = cfg.initial.state();
        let water = state.position.z < cfg.medium.surface;
        let cpg_params = cfg.cpg_params()?;
        // start phase-locked: an all-zero start is an unstable equilibrium
        // of the coupling when the biases ask for anti-phase
        let cpg = CpgNetworkState {
            phi: cpg_params.bias[0],
            ..Default::default()
        };
        Ok(Self {
            model,
            t: 0.0,
            step: 0,
            y: pack(&state, &cpg),
            water,
            cpg_params,
            next_cpg_switch: 0,
            supervisor: ModeSupervisor::new(),
            controller: FlightController::new(cfg.controller.gains.clone()),
        })
    }

    pub fn state(&self) -> (RigidBodyState, CpgNetworkState) {
        unpack(&self.y)
    }

    fn update_cpg_targets(&mut self) -> Result<()> {
        let cfg = &self.model.config;
        while let Some(sw) = cfg.cpg.schedule.get(self.next_cpg_switch) {
            if sw.t > self.t + 1e-12 {
                break;
            }
            let new = cfg.cpg_params_after(sw)?;
            let (_, cpg) = unpack(&self.y);
            set_params(&cpg, &mut self.cpg_params, new)?;
            log::debug!("t = {:.3} s: cpg targets switched", self.t);
            self.next_cpg_switch += 1;
        }
        Ok(())
    }

    fn command(&mut self) -> Result<StepCommand> {
        let cfg = &self.model.config;
        let (state, _) = unpack(&self.y);
        let medium = self.model.medium_context(self.water, state.position.z);
        let demanded = cfg.mode_schedule().mode_at(self.t);
        let mode = self.supervisor.update(demanded, &medium, self.t)?;
        let command = match mode {
            ControlMode::UnderwaterFlapping => ActuatorCommand::Wings,
            ControlMode::UnderwaterVectored => ActuatorCommand::Rotors(vectored_mix(
                &cfg.pilot_at(self.t),
                &cfg.controller.mix,
                &cfg.rotor,
            )?),
            ControlMode::VerticalFlight | ControlMode::HorizontalFlight => {
                let c = &cfg.controller;
                let target = FlightTarget {
                    position: c.target_position,
                    yaw: c.target_yaw_deg.to_radians(),
                    cruise_speed: (mode == ControlMode::HorizontalFlight).then_some(c.cruise_speed),
                };
                let ext = self.model.external_force_earth(&state, &medium)?;
                let water = self.model.rotor_water_fraction(&state);
                let out = self.controller.step(
                    &target,
                    &state,
                    &ext,
                    &cfg.vehicle,
                    &cfg.rotor,
                    water[0].max(water[1]),
                    cfg.integrator.dt,
                );
                ActuatorCommand::Rotors(out.command)
            }
        };
        Ok(StepCommand { mode, command })
    }

    fn sample(&self, cmd: &StepCommand) -> Result<Sample> {
        let (state, cpg) = unpack(&self.y);
        let medium = self.model.medium_context(self.water, state.position.z);
        let (wrench, wings) = self.model.assemble_wrench(
            &state,
            cmd.mode,
            &cmd.command,
            &medium,
            &cpg,
            &self.cpg_params,
        )?;
        let (rotor, thrust) = match cmd.command {
            ActuatorCommand::Rotors(c) => {
                let c = c.saturated(&self.model.config.rotor);
                let water = self.model.rotor_water_fraction(&state);
                let r = &self.model.config.rotor;
                (
                    c,
                    [0, 1].map(|i| r.thrust_coefficient(water[i]) * c.omega[i] * c.omega[i]),
                )
            }
            ActuatorCommand::Wings => (RotorCommand::default(), [0.0; 2]),
        };
        Ok(Sample {
            t: self.t,
            state,
            mode: cmd.mode,
            water: self.water,
            rotor,
            thrust,
            wings,
            wrench,
            cpg,
        })
    }

    fn check_divergence(&self) -> Result<()> {
        let (state, cpg) = unpack(&self.y);
        let i = &self.model.config.integrator;
        let reason = if !state.is_finite() || !cpg.is_finite() {
            Some("non-finite state".to_string())
        } else if state.velocity.norm() > i.max_velocity {
            Some(format!(
                "|V| = {:.3e} m/s exceeds {}",
                state.velocity.norm(),
                i.max_velocity
            ))
        } else if state.rates.norm() > i.max_rate {
            Some(format!(
                "|Omega| = {:.3e} rad/s exceeds {}",
                state.rates.norm(),
                i.max_rate
            ))
        } else {
            None
        };
        match reason {
            Some(reason) => Err(SimError::NumericalDivergence {
                t: self.t,
                step: self.step,
                reason,
            }),
            None => Ok(()),
        }
    }

    /// Advances one step and returns the sample describing the start of
    /// the step (state, mode and the command held over it).
    pub fn advance(&mut self) -> Result<Sample> {
        let cfg = &self.model.config;
        let (state, _) = unpack(&self.y);
        self.water = detect_medium(
            state.position.z,
            self.water,
            cfg.medium.surface,
            cfg.medium.hysteresis,
        );
        self.update_cpg_targets()?;
        let cmd = self.command()?;
        let sample = self.sample(&cmd)?;
        let dt = cfg.integrator.dt;
        let (water, params) = (self.water, &self.cpg_params);
        let model = self.model;
        let (t, step) = (self.t, self.step);
        self.y = rk4_step(self.t, &self.y, dt, |_, y| {
            model.derivative(y, water, cmd.mode, &cmd.command, params)
        })
        .map_err(|e| match e {
            SimError::SingularAttitude { .. } | SimError::CoefficientOutOfRange { .. } => {
                SimError::NumericalDivergence {
                    t,
                    step,
                    reason: e.to_string(),
                }
            }
            other => other,
        })?;
        self.step += 1;
        self.t = self.step as f64 * dt;
        self.check_divergence()?;
        Ok(sample)
    }

    /// Sample at the current time without stepping.
    pub fn snapshot(&mut self) -> Result<Sample> {
        let cfg = &self.model.config;
        let (state, _) = unpack(&self.y);
        self.water = detect_medium(
            state.position.z,
            self.water,
            cfg.medium.surface,
            cfg.medium.hysteresis,
        );
        self.update_cpg_targets()?;
        let cmd = self.command()?;
        self.sample(&cmd)
    }
}

/// Number of integration steps for a config.
pub fn step_count(cfg: &ScenarioConfig) -> u64 {
    (cfg.integrator.duration / cfg.integrator.dt).round() as u64
}

/// Runs a scenario to completion, recording every `stride`-th step.
pub fn run_scenario(config: &ScenarioConfig) -> Result<TrajectoryRecord> {
    let model = Model::new(config.clone())?;
    run_model(&model)
}

pub fn run_model(model: &Model) -> Result<TrajectoryRecord> {
    let cfg = &model.config;
    let n = step_count(cfg);
    let stride = cfg.output.stride as u64;
    let mut sim = Simulation::new(model)?;
    let mut samples = Vec::with_capacity((n / stride + 1) as usize);
    for _ in 0..n {
        let record = sim.step % stride == 0;
        let s = sim.advance()?;
        if record {
            samples.push(s);
        }
    }
    if n % stride == 0 {
        samples.push(sim.snapshot()?);
    }
    Ok(TrajectoryRecord {
        name: cfg.name.clone(),
        dt: cfg.integrator.dt,
        stride: cfg.output.stride,
        samples,
    })
}
