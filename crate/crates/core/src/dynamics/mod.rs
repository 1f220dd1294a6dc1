//! Medium-dependent Newton–Euler dynamics.
//!
//! Forces are resolved in the body frame. The translational and rotational
//! accelerations are
//!
//! ```text
//! (M0 + k|Ma|) V'  = Fj - Ff + Fr - [(M0 + k|Ma|) Omega] x V
//! (J0 + k|Ja|) Om' = Mj - Mf + Mr + (k|Ma| V) x V + s_g [(J0 + k|Ja|) Omega] x Omega
//! ```
//!
//! `Ff`, `Mf` are the resistive fluid terms (drag along `+x` at zero
//! incidence, so they are subtracted) and `Fr`, `Mr` the physical
//! gravity/buoyancy wrench. `s_g` is [`VehicleParams::gyroscopic_sign`].
//! All mass matrices are diagonal.

pub mod coefficients;
mod params;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

pub use coefficients::{
    AeroCoefficients, CoefficientSet, CoefficientTable, FluidCoefficients, RateDamping,
};
pub use params::{prolate_spheroid_added_mass, VehicleParams, DEFAULT_FUSELAGE_LENGTH};

use crate::spatial::{rotation_earth_to_body, EulerZXY, RigidBodyState};
use crate::{Result, SimError, Vec3};

pub const AIR_DENSITY: f64 = 1.225;
pub const WATER_DENSITY: f64 = 1000.0;

/// Flow speeds below this are treated as still fluid (m/s).
pub const MIN_FLOW_SPEED: f64 = 1e-6;

/// Medium flag and densities for one evaluation of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumContext {
    /// `true` when `k = 1`.
    pub water: bool,
    /// Density of the surrounding fluid (kg/m^3).
    pub rho: f64,
    /// Water density used for buoyancy (kg/m^3).
    pub rho_water: f64,
    /// Submerged fraction of the hull in `[0, 1]`; scales buoyancy.
    pub submergence: f64,
}

impl MediumContext {
    pub fn air() -> Self {
        Self {
            water: false,
            rho: AIR_DENSITY,
            rho_water: WATER_DENSITY,
            submergence: 0.0,
        }
    }

    pub fn water() -> Self {
        Self {
            water: true,
            rho: WATER_DENSITY,
            rho_water: WATER_DENSITY,
            submergence: 1.0,
        }
    }

    /// Medium flag `k` as a number.
    pub fn k(&self) -> f64 {
        if self.water {
            1.0
        } else {
            0.0
        }
    }
}

/// Force and moment pair in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl Wrench {
    pub fn new(force: Vec3, moment: Vec3) -> Self {
        Self { force, moment }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.force
            .iter()
            .chain(self.moment.iter())
            .all(|x| x.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.force + o.force, self.moment + o.moment)
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, o: Wrench) {
        self.force += o.force;
        self.moment += o.moment;
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, o: Wrench) -> Wrench {
        Wrench::new(self.force - o.force, self.moment - o.moment)
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench::new(-self.force, -self.moment)
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, s: f64) -> Wrench {
        Wrench::new(self.force * s, self.moment * s)
    }
}

/// Angle of attack `atan2(w, u)`, sideslip `asin(v / |V|)` and flow speed.
pub fn flow_angles(v: &Vec3) -> (f64, f64, f64) {
    let vf = v.norm();
    if vf < MIN_FLOW_SPEED {
        return (0.0, 0.0, vf);
    }
    let alpha = v.z.atan2(v.x);
    let beta = (v.y / vf).clamp(-1.0, 1.0).asin();
    (alpha, beta, vf)
}

/// Fluid wrench from the wind-to-body transform of the coefficient forces.
/// The result is resistive: the physical force on the vehicle is its
/// negative.
pub fn fluid_wrench(
    alpha: f64,
    beta: f64,
    vf: f64,
    medium: &MediumContext,
    coeffs: &AeroCoefficients,
    params: &VehicleParams,
) -> Result<Wrench> {
    if vf <= 0.0 {
        return Ok(Wrench::zero());
    }
    let c = coeffs.table.lookup(alpha, beta)?;
    let qs = 0.5 * medium.rho * vf * vf * params.wing_area;
    let (d, y, l) = (qs * c.cd, qs * c.cy, qs * c.cl);
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let force = Vec3::new(
        ca * cb * d - ca * sb * y - sa * l,
        sb * d + cb * y,
        sa * cb * d - sa * sb * y + ca * l,
    );
    let moment = Vec3::new(c.c_roll, c.c_pitch, c.c_yaw) * (qs * params.chord);
    Ok(Wrench::new(force, moment))
}

/// Fluid wrench for a body velocity and rate, including rotational damping.
pub fn fluid_wrench_for_state(
    velocity: &Vec3,
    rates: &Vec3,
    medium: &MediumContext,
    coeffs: &AeroCoefficients,
    params: &VehicleParams,
) -> Result<Wrench> {
    let (alpha, beta, vf) = flow_angles(velocity);
    let mut w = fluid_wrench(alpha, beta, vf, medium, coeffs, params)?;
    w.moment += coeffs.damping.moment(rates);
    Ok(w)
}

/// Gravity and buoyancy wrench with the default centre of buoyancy.
pub fn restoring_wrench(att: EulerZXY, medium: &MediumContext, params: &VehicleParams) -> Wrench {
    restoring_wrench_with_centre(att, medium, params, &params.buoyancy_centre)
}

/// `Fr = R_E^B (f_g + sigma f_b)`, `Mr = r_B x R_E^B (sigma f_b)`.
pub fn restoring_wrench_with_centre(
    att: EulerZXY,
    medium: &MediumContext,
    params: &VehicleParams,
    r_b: &Vec3,
) -> Wrench {
    let r = rotation_earth_to_body(att);
    let f_g = Vec3::new(0.0, 0.0, -params.weight());
    let f_b = Vec3::new(
        0.0,
        0.0,
        medium.submergence * medium.rho_water * params.gravity * params.volume,
    );
    let fb_body = r * f_b;
    Wrench::new(r * f_g + fb_body, r_b.cross(&fb_body))
}

/// Solves the equations of motion for `(V', Omega')` given every wrench.
/// `fluid` is resistive (subtracted), `restoring` and `control` are physical.
pub fn solve_accelerations(
    velocity: &Vec3,
    rates: &Vec3,
    control: &Wrench,
    fluid: &Wrench,
    restoring: &Wrench,
    k: f64,
    params: &VehicleParams,
) -> Result<(Vec3, Vec3)> {
    let m = params.effective_mass(k);
    let j = params.effective_inertia(k);
    if m.iter().any(|&x| !(x > 0.0)) {
        return Err(SimError::NonPositiveDefiniteMass { which: "mass" });
    }
    if j.iter().any(|&x| !(x > 0.0)) {
        return Err(SimError::NonPositiveDefiniteMass { which: "inertia" });
    }
    let coriolis = m.component_mul(rates).cross(velocity);
    let f = control.force - fluid.force + restoring.force - coriolis;
    let munk = (params.added_mass * k)
        .component_mul(velocity)
        .cross(velocity);
    let gyro = j.component_mul(rates).cross(rates) * params.gyroscopic_sign;
    let mo = control.moment - fluid.moment + restoring.moment + munk + gyro;
    Ok((f.component_div(&m), mo.component_div(&j)))
}

/// Full acceleration computation with the default centre of buoyancy.
pub fn dynamics_derivative(
    state: &RigidBodyState,
    control: &Wrench,
    medium: &MediumContext,
    coeffs: &AeroCoefficients,
    params: &VehicleParams,
) -> Result<(Vec3, Vec3)> {
    dynamics_derivative_with_centre(
        state,
        control,
        medium,
        coeffs,
        params,
        &params.buoyancy_centre,
    )
}

pub fn dynamics_derivative_with_centre(
    state: &RigidBodyState,
    control: &Wrench,
    medium: &MediumContext,
    coeffs: &AeroCoefficients,
    params: &VehicleParams,
    r_b: &Vec3,
) -> Result<(Vec3, Vec3)> {
    let fluid = fluid_wrench_for_state(&state.velocity, &state.rates, medium, coeffs, params)?;
    let restoring = restoring_wrench_with_centre(state.attitude, medium, params, r_b);
    solve_accelerations(
        &state.velocity,
        &state.rates,
        control,
        &fluid,
        &restoring,
        medium.k(),
        params,
    )
}
