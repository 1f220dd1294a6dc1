//! Independent reference computations.
//!
//! Nothing here reuses the production formulas. Attitude goes through unit
//! quaternions, and the equations of motion are assembled as a dense 6x6
//! system with skew-symmetric cross-product matrices and solved by Gaussian
//! elimination. The invariant suite compares the production code against
//! these.

use nalgebra::{Matrix6, Rotation3, UnitQuaternion, Vector6};

use crate::dynamics::{AeroCoefficients, MediumContext, VehicleParams, MIN_FLOW_SPEED};
use crate::spatial::{EulerZXY, RigidBodyState};
use crate::{Mat3, Vec3};

/// `qz(psi) * qx(phi) * qy(theta)`.
pub fn attitude_quaternion(att: EulerZXY) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vec3::z_axis(), att.psi)
        * UnitQuaternion::from_axis_angle(&Vec3::x_axis(), att.phi)
        * UnitQuaternion::from_axis_angle(&Vec3::y_axis(), att.theta)
}

pub fn rotation_matrix(att: EulerZXY) -> Mat3 {
    attitude_quaternion(att).to_rotation_matrix().into_inner()
}

/// Matrix `E` with `Omega = E * [phi', theta', psi']`, built column by
/// column from the body rate `2 q^-1 q'` of the composed quaternion.
pub fn euler_rate_to_body_rate(att: EulerZXY) -> Mat3 {
    let qz = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), att.psi).into_inner();
    let qx = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), att.phi).into_inner();
    let qy = UnitQuaternion::from_axis_angle(&Vec3::y_axis(), att.theta).into_inner();
    // derivative of each elementary quaternion with respect to its angle
    let d = |axis: usize, a: f64| {
        let (s, c) = (0.5 * a).sin_cos();
        let mut v = Vec3::zeros();
        v[axis] = 0.5 * c;
        nalgebra::Quaternion::from_parts(-0.5 * s, v)
    };
    let dx = d(0, att.phi);
    let dy = d(1, att.theta);
    let dz = d(2, att.psi);
    let q = qz * qx * qy;
    let qinv = q.conjugate();
    let col = |qd: nalgebra::Quaternion<f64>| (qinv * qd).vector() * 2.0;
    let mut e = Mat3::zeros();
    e.set_column(0, &col(qz * dx * qy));
    e.set_column(1, &col(qz * qx * dy));
    e.set_column(2, &col(dz * qx * qy));
    e
}

/// Euler rates implied by a constant body rate over `[-h, h]`, by central
/// differences of the propagated quaternion.
pub fn euler_rates_by_propagation(att: EulerZXY, rates: &Vec3, h: f64) -> Vec3 {
    let q = attitude_quaternion(att);
    let step = |t: f64| {
        let qt = q * UnitQuaternion::from_scaled_axis(rates * t);
        EulerZXY::from_rotation(qt.to_rotation_matrix().matrix())
    };
    let (a, b) = (step(h), step(-h));
    let unwrap = |x: f64, y: f64| crate::spatial::wrap_angle(x - y);
    Vec3::new(
        unwrap(a.phi, b.phi),
        unwrap(a.theta, b.theta),
        unwrap(a.psi, b.psi),
    ) / (2.0 * h)
}

fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting. Returns
/// `None` for a numerically singular matrix.
pub fn gauss_solve(mut a: Matrix6<f64>, mut b: Vector6<f64>) -> Option<Vector6<f64>> {
    let n = 6;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))?;
        if a[(piv, col)].abs() < 1e-300 {
            return None;
        }
        a.swap_rows(col, piv);
        b.swap_rows(col, piv);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            if f != 0.0 {
                for c in col..n {
                    a[(row, c)] -= f * a[(col, c)];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = Vector6::zeros();
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[(row, c)] * x[c]).sum();
        x[row] = (b[row] - s) / a[(row, row)];
    }
    Some(x)
}

/// Resistive fluid force and moment, with the wind-to-body transform built
/// as `Ry(-alpha) Rz(beta)`.
fn fluid_terms(
    velocity: &Vec3,
    rates: &Vec3,
    medium: &MediumContext,
    coeffs: &AeroCoefficients,
    params: &VehicleParams,
) -> Option<(Vec3, Vec3)> {
    let vf = velocity.norm();
    let damping = Vec3::from_fn(|i, _| {
        coeffs.damping.linear[i] * rates[i]
            + coeffs.damping.quadratic[i] * rates[i] * rates[i].abs()
    });
    if vf < MIN_FLOW_SPEED {
        return Some((Vec3::zeros(), damping));
    }
    let alpha = velocity.z.atan2(velocity.x);
    let beta = (velocity.y / vf).asin();
    let c = coeffs.table.lookup(alpha, beta).ok()?;
    let q = 0.5 * medium.rho * vf * vf * params.wing_area;
    let wind_to_body = Rotation3::from_axis_angle(&Vec3::y_axis(), -alpha)
        * Rotation3::from_axis_angle(&Vec3::z_axis(), beta);
    let force = wind_to_body * Vec3::new(c.cd, c.cy, c.cl) * q;
    let moment = Vec3::new(c.c_roll, c.c_pitch, c.c_yaw) * (q * params.chord) + damping;
    Some((force, moment))
}

/// Body accelerations `(V', Omega')` from a dense solve of the assembled
/// equations of motion. The gyroscopic term follows
/// `params.gyroscopic_sign`.
pub fn dense_accelerations(
    state: &RigidBodyState,
    control_force: &Vec3,
    control_moment: &Vec3,
    medium: &MediumContext,
    coeffs: &AeroCoefficients,
    params: &VehicleParams,
    buoyancy_centre: &Vec3,
) -> Option<(Vec3, Vec3)> {
    let k = medium.k();
    let mass =
        Mat3::from_diagonal_element(params.mass) + Mat3::from_diagonal(&params.added_mass) * k;
    let inertia =
        Mat3::from_diagonal(&params.inertia) + Mat3::from_diagonal(&params.added_inertia) * k;
    let mut a = Matrix6::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&mass);
    a.fixed_view_mut::<3, 3>(3, 3).copy_from(&inertia);

    let v = state.velocity;
    let w = state.rates;
    let to_body = rotation_matrix(state.attitude).transpose();
    let gravity = to_body * Vec3::new(0.0, 0.0, -params.mass * params.gravity);
    let buoyancy = to_body
        * Vec3::new(
            0.0,
            0.0,
            medium.submergence * medium.rho_water * params.gravity * params.volume,
        );
    let (ff, mf) = fluid_terms(&v, &w, medium, coeffs, params)?;

    let added = Mat3::from_diagonal(&params.added_mass) * k;
    let f = control_force - ff + gravity + buoyancy - skew(&(mass * w)) * v;
    let m = control_moment - mf
        + skew(buoyancy_centre) * buoyancy
        + skew(&(added * v)) * v
        + skew(&(inertia * w)) * w * params.gyroscopic_sign;
    let mut b = Vector6::zeros();
    b.fixed_rows_mut::<3>(0).copy_from(&f);
    b.fixed_rows_mut::<3>(3).copy_from(&m);
    let x = gauss_solve(a, b)?;
    Some((
        x.fixed_rows::<3>(0).into_owned(),
        x.fixed_rows::<3>(3).into_owned(),
    ))
}

/// Height of a body released from rest under gravity alone.
pub fn ballistic_height(z0: f64, g: f64, t: f64) -> f64 {
    z0 - 0.5 * g * t * t
}
