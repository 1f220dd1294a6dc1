//! Frames, ZXY Euler attitude and rigid-body kinematics.
//!
//! The inertial frame has its origin on the water surface with `z` pointing
//! up. The body frame sits at the centre of mass with `x` toward the nose and
//! `z` up through the canopy. Attitude is the ZXY sequence: yaw `psi` about
//! `z`, then roll `phi` about the new `x`, then pitch `theta` about the new
//! `y`, so `R = Rz(psi) * Rx(phi) * Ry(theta)`. The Euler-rate transform is
//! singular at `phi = +-pi/2` and well conditioned at `theta = +-pi/2`, which
//! is the attitude a belly-sitter passes through in transition.

use serde::{Deserialize, Serialize};

use crate::{Mat3, Result, SimError, Vec3};

/// Default guard band around `phi = +-pi/2` (rad).
pub const DEFAULT_SINGULARITY_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerZXY {
    /// Roll (rad).
    pub phi: f64,
    /// Pitch (rad).
    pub theta: f64,
    /// Yaw (rad).
    pub psi: f64,
}

impl EulerZXY {
    pub const fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    /// `[phi, theta, psi]`.
    pub fn to_vector(self) -> Vec3 {
        Vec3::new(self.phi, self.theta, self.psi)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.theta.is_finite() && self.psi.is_finite()
    }

    /// Copy with every angle wrapped to `(-pi, pi]`. Only used for output;
    /// integrated attitudes stay unwrapped.
    pub fn wrapped(self) -> Self {
        Self::new(
            wrap_angle(self.phi),
            wrap_angle(self.theta),
            wrap_angle(self.psi),
        )
    }

    /// Recovers ZXY angles from a body-to-earth rotation matrix. The
    /// returned roll lies in `[-pi/2, pi/2]`.
    pub fn from_rotation(r: &Mat3) -> Self {
        let phi = r[(2, 1)].clamp(-1.0, 1.0).asin();
        let theta = (-r[(2, 0)]).atan2(r[(2, 2)]);
        let psi = (-r[(0, 1)]).atan2(r[(1, 1)]);
        Self::new(phi, theta, psi)
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Position, attitude, body velocity and body angular rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidBodyState {
    /// Position in the inertial frame (m).
    pub position: Vec3,
    pub attitude: EulerZXY,
    /// Linear velocity `[u, v, w]` in the body frame (m/s).
    pub velocity: Vec3,
    /// Angular rate `[p, q, r]` in the body frame (rad/s).
    pub rates: Vec3,
}

impl RigidBodyState {
    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.attitude.is_finite()
            && self.velocity.iter().all(|x| x.is_finite())
            && self.rates.iter().all(|x| x.is_finite())
    }
}

/// Body-to-earth rotation matrix `R_B^E` for a ZXY attitude.
pub fn rotation_body_to_earth(att: EulerZXY) -> Mat3 {
    let (sf, cf) = att.phi.sin_cos();
    let (st, ct) = att.theta.sin_cos();
    let (sp, cp) = att.psi.sin_cos();
    Mat3::new(
        ct * cp - sf * st * sp,
        -cf * sp,
        st * cp + sf * ct * sp,
        ct * sp + sf * st * cp,
        cf * cp,
        st * sp - sf * ct * cp,
        -cf * st,
        sf,
        cf * ct,
    )
}

/// Earth-to-body rotation `R_E^B`, the transpose of [`rotation_body_to_earth`].
pub fn rotation_earth_to_body(att: EulerZXY) -> Mat3 {
    rotation_body_to_earth(att).transpose()
}

/// Matrix `W` with `d/dt [phi, theta, psi] = W * [p, q, r]`.
///
/// Fails with [`SimError::SingularAttitude`] when `|phi| >= pi/2 - guard`.
pub fn angular_rate_transform(att: EulerZXY, guard: f64) -> Result<Mat3> {
    if !(att.phi.abs() < std::f64::consts::FRAC_PI_2 - guard) {
        return Err(SimError::SingularAttitude {
            phi: att.phi.abs(),
            guard,
        });
    }
    let (st, ct) = att.theta.sin_cos();
    let cf = att.phi.cos();
    let tf = att.phi.tan();
    Ok(Mat3::new(
        ct,
        0.0,
        st,
        st * tf,
        1.0,
        -ct * tf,
        -st / cf,
        0.0,
        ct / cf,
    ))
}

/// Position and attitude rates: `P' = R_B^E V`, `Theta' = W Omega`.
pub fn kinematics_derivative(state: &RigidBodyState, guard: f64) -> Result<(Vec3, Vec3)> {
    let w = angular_rate_transform(state.attitude, guard)?;
    let pdot = rotation_body_to_earth(state.attitude) * state.velocity;
    Ok((pdot, w * state.rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn max_abs(m: &Mat3) -> f64 {
        m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    #[test]
    fn zero_attitude_is_identity() {
        let z = EulerZXY::default();
        assert_eq!(rotation_body_to_earth(z), Mat3::identity());
        assert_eq!(rotation_earth_to_body(z), Mat3::identity());
        assert_eq!(
            angular_rate_transform(z, DEFAULT_SINGULARITY_GUARD).unwrap(),
            Mat3::identity()
        );
    }

    #[test]
    fn pure_pitch_quarter_turn() {
        let att = EulerZXY::new(0.0, FRAC_PI_2, 0.0);
        let expected = Mat3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        assert!(max_abs(&(rotation_body_to_earth(att) - expected)) < 1e-15);
        assert!(max_abs(&(rotation_earth_to_body(att) - expected.transpose())) < 1e-15);
    }

    #[test]
    fn rate_transform_is_regular_at_vertical_pitch() {
        let expected = Mat3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        for psi in [0.0, 0.7, -2.5, PI] {
            let w = angular_rate_transform(EulerZXY::new(0.0, FRAC_PI_2, psi), 1e-3).unwrap();
            assert!(max_abs(&(w - expected)) < 1e-15);
        }
    }

    #[test]
    fn rate_transform_guards_roll_singularity() {
        let att = EulerZXY::new(FRAC_PI_2 - 1e-9, 0.0, 0.0);
        assert!(matches!(
            angular_rate_transform(att, DEFAULT_SINGULARITY_GUARD),
            Err(SimError::SingularAttitude { .. })
        ));
        let att = EulerZXY::new(-(FRAC_PI_2 - 5e-4), 0.0, 0.0);
        assert!(angular_rate_transform(att, DEFAULT_SINGULARITY_GUARD).is_err());
        let att = EulerZXY::new(FRAC_PI_2 - 2e-3, 0.0, 0.0);
        assert!(angular_rate_transform(att, DEFAULT_SINGULARITY_GUARD).is_ok());
    }

    #[test]
    fn rotation_matches_elementary_composition() {
        let rz = |a: f64| Mat3::new(a.cos(), -a.sin(), 0.0, a.sin(), a.cos(), 0.0, 0.0, 0.0, 1.0);
        let rx = |a: f64| Mat3::new(1.0, 0.0, 0.0, 0.0, a.cos(), -a.sin(), 0.0, a.sin(), a.cos());
        let ry = |a: f64| Mat3::new(a.cos(), 0.0, a.sin(), 0.0, 1.0, 0.0, -a.sin(), 0.0, a.cos());
        for &(f, t, p) in &[(0.3, -1.1, 2.0), (-1.2, 2.9, -0.4), (0.01, 0.02, 0.03)] {
            let composed = rz(p) * rx(f) * ry(t);
            let r = rotation_body_to_earth(EulerZXY::new(f, t, p));
            assert!(max_abs(&(composed - r)) < 1e-14);
        }
    }

    #[test]
    fn kinematics_trivial_cases() {
        let s = RigidBodyState::default();
        let (pd, td) = kinematics_derivative(&s, 1e-3).unwrap();
        assert_eq!(pd, Vec3::zeros());
        assert_eq!(td, Vec3::zeros());

        let s = RigidBodyState {
            velocity: Vec3::new(1.0, 0.0, 0.0),
            ..Default::default()
        };
        let (pd, _) = kinematics_derivative(&s, 1e-3).unwrap();
        assert_eq!(pd, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn euler_extraction_round_trip() {
        let att = EulerZXY::new(0.4, -2.0, 1.3);
        let back = EulerZXY::from_rotation(&rotation_body_to_earth(att));
        assert!((back.to_vector() - att.to_vector()).norm() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }
}
