use serde::{Deserialize, Serialize};

use crate::{Result, SimError, Vec3};

/// Geometric, inertial and hydrostatic constants of the vehicle.
///
/// Added-mass entries are stored as positive magnitudes. The effective mass
/// is `m + k*|Ma|`, which is `M0 - k*Ma` under the usual negative-derivative
/// sign convention for `X_udot`, `Y_vdot`, ... .
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Mass (kg).
    pub mass: f64,
    /// Diagonal inertia `[Ixx, Iyy, Izz]` (kg m^2).
    pub inertia: Vec3,
    /// Added-mass magnitudes `[|X_udot|, |Y_vdot|, |Z_wdot|]` (kg).
    pub added_mass: Vec3,
    /// Added-inertia magnitudes `[|K_pdot|, |M_qdot|, |N_rdot|]` (kg m^2).
    pub added_inertia: Vec3,
    /// Reference wing area (m^2).
    pub wing_area: f64,
    /// Characteristic length for moment coefficients (m).
    pub chord: f64,
    /// Displaced volume when fully submerged (m^3).
    pub volume: f64,
    /// Centre of buoyancy in the body frame when fully submerged (m).
    pub buoyancy_centre: Vec3,
    /// Lateral shift of the centre of buoyancy per unit of
    /// `sin^2(x1) - sin^2(x2)` of the outer-wing offsets (m). Positive shifts
    /// buoyancy away from the wing that is rotated toward vertical.
    pub buoyancy_shift: f64,
    /// Height over which buoyancy ramps from zero to full at the surface (m).
    pub body_height: f64,
    /// Rotor lateral arm `a` (m).
    pub rotor_lateral_arm: f64,
    /// Rotor longitudinal arm `b`: x-offset of the rotor thrust points
    /// ahead of the centre of mass (m).
    pub rotor_axial_arm: f64,
    /// Height of the rotor discs above the centre of mass; decides whether a
    /// rotor is in air or water near the surface (m).
    pub rotor_height: f64,
    /// Lateral arm of the outer wings W1/W2 (m).
    pub wing_lateral_arm: f64,
    /// Longitudinal arm of thrust axis 1 (outer wing pivots) ahead of the
    /// centre of mass (m).
    pub wing_axial_arm: f64,
    /// Arm from the centre of mass to thrust axis 2 (tail wing W3) (m).
    pub tail_arm: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
    /// Sign applied to the `[(J0 - kJa) Omega] x Omega` term. `+1` keeps the
    /// term as written in the equations of motion.
    pub gyroscopic_sign: f64,
}

/// Fuselage length used for the default added-mass estimate (m).
pub const DEFAULT_FUSELAGE_LENGTH: f64 = 0.58;

/// Chord and spans of the wing plates W1, W2, W3 used for the default heave
/// added mass (m).
pub const DEFAULT_WING_CHORD: f64 = 0.1;
pub const DEFAULT_WING_SPANS: [f64; 3] = [0.28, 0.28, 0.2];

/// Two-dimensional flat-plate added mass `rho pi c^2 s / 4` of a plate of
/// chord `c` and span `s` moving normal to itself.
pub fn flat_plate_added_mass(chord: f64, span: f64, rho: f64) -> f64 {
    rho * std::f64::consts::PI * chord * chord * span / 4.0
}

impl Default for VehicleParams {
    fn default() -> Self {
        let volume = 1.65e-3;
        let (mut added_mass, added_inertia) =
            prolate_spheroid_added_mass(DEFAULT_FUSELAGE_LENGTH, volume, 1000.0);
        // the wings lie flat in the x-y plane and dominate the heave term
        added_mass.z += DEFAULT_WING_SPANS
            .iter()
            .map(|&s| flat_plate_added_mass(DEFAULT_WING_CHORD, s, 1000.0))
            .sum::<f64>();
        Self {
            mass: 1.61,
            inertia: Vec3::new(0.035, 0.008, 0.060),
            added_mass,
            added_inertia,
            wing_area: 0.076,
            chord: 0.11,
            volume,
            buoyancy_centre: Vec3::new(0.0, 0.0, 0.015),
            buoyancy_shift: 0.0015,
            body_height: 0.05,
            rotor_lateral_arm: 0.16,
            rotor_axial_arm: 0.0,
            rotor_height: 0.04,
            wing_lateral_arm: 0.20,
            wing_axial_arm: 0.03,
            tail_arm: 0.22,
            gravity: 9.81,
            gyroscopic_sign: 1.0,
        }
    }
}

impl VehicleParams {
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Effective translational mass diagonal `M0 - k*Ma` for flag `k`.
    pub fn effective_mass(&self, k: f64) -> Vec3 {
        Vec3::repeat(self.mass) + self.added_mass * k
    }

    /// Effective inertia diagonal `J0 - k*Ja` for flag `k`.
    pub fn effective_inertia(&self, k: f64) -> Vec3 {
        self.inertia + self.added_inertia * k
    }

    /// Centre of buoyancy with the lateral shift from the outer-wing offsets.
    pub fn buoyancy_centre_for_offsets(&self, offset1: f64, offset2: f64) -> Vec3 {
        let s1 = offset1.sin();
        let s2 = offset2.sin();
        let mut r = self.buoyancy_centre;
        r.y -= self.buoyancy_shift * (s1 * s1 - s2 * s2);
        r
    }

    pub fn validate(&self, water_density: f64) -> Result<()> {
        let all_finite = [
            self.mass,
            self.wing_area,
            self.chord,
            self.volume,
            self.buoyancy_shift,
            self.body_height,
            self.rotor_lateral_arm,
            self.rotor_axial_arm,
            self.rotor_height,
            self.wing_lateral_arm,
            self.wing_axial_arm,
            self.tail_arm,
            self.gravity,
            self.gyroscopic_sign,
        ]
        .iter()
        .chain(self.inertia.iter())
        .chain(self.added_mass.iter())
        .chain(self.added_inertia.iter())
        .chain(self.buoyancy_centre.iter())
        .all(|x| x.is_finite());
        if !all_finite {
            return Err(SimError::Config("vehicle parameters must be finite".into()));
        }
        if self.mass <= 0.0 || self.inertia.iter().any(|&i| i <= 0.0) {
            return Err(SimError::Config("mass and inertia must be positive".into()));
        }
        for k in [0.0, 1.0] {
            if self.effective_mass(k).iter().any(|&x| x <= 0.0) {
                return Err(SimError::NonPositiveDefiniteMass { which: "mass" });
            }
            if self.effective_inertia(k).iter().any(|&x| x <= 0.0) {
                return Err(SimError::NonPositiveDefiniteMass { which: "inertia" });
            }
        }
        if self.wing_area <= 0.0 || self.chord <= 0.0 || self.body_height <= 0.0 {
            return Err(SimError::Config(
                "wing area, chord and body height must be positive".into(),
            ));
        }
        if self.gravity <= 0.0 {
            return Err(SimError::Config("gravity must be positive".into()));
        }
        if water_density * self.volume <= self.mass {
            return Err(SimError::Config(format!(
                "vehicle must be positively buoyant: displaced mass {:.4} kg <= mass {:.4} kg",
                water_density * self.volume,
                self.mass
            )));
        }
        Ok(())
    }
}

/// Added mass and inertia of a prolate spheroid of the given length and
/// volume, from Lamb's k-factors:
///
/// ```text
/// e   = sqrt(1 - (b/a)^2),  L = ln((1+e)/(1-e))
/// a0  = 2(1-e^2)/e^3 * (L/2 - e)
/// b0  = 1/e^2 - (1-e^2)/(2e^3) * L
/// k1  = a0/(2-a0),  k2 = b0/(2-b0)
/// k'  = e^4 (b0-a0) / ((2-e^2) (2e^2 - (2-e^2)(b0-a0)))
/// X_udot = k1 m_f,  Y_vdot = Z_wdot = k2 m_f,  K_pdot = 0,
/// M_qdot = N_rdot = k' m_f (a^2+b^2)/5
/// ```
///
/// with `a` the semi-length, `b` the equivalent-volume semi-diameter and
/// `m_f` the displaced fluid mass. Returns positive magnitudes.
pub fn prolate_spheroid_added_mass(length: f64, volume: f64, rho: f64) -> (Vec3, Vec3) {
    let a = 0.5 * length;
    let b = (volume / (4.0 / 3.0 * std::f64::consts::PI * a)).sqrt();
    let e = (1.0 - (b / a).powi(2)).sqrt();
    let l = ((1.0 + e) / (1.0 - e)).ln();
    let e2 = e * e;
    let e3 = e2 * e;
    let a0 = 2.0 * (1.0 - e2) / e3 * (0.5 * l - e);
    let b0 = 1.0 / e2 - (1.0 - e2) / (2.0 * e3) * l;
    let k1 = a0 / (2.0 - a0);
    let k2 = b0 / (2.0 - b0);
    let kr = e2 * e2 * (b0 - a0) / ((2.0 - e2) * (2.0 * e2 - (2.0 - e2) * (b0 - a0)));
    let mf = rho * volume;
    let iy = mf * (a * a + b * b) / 5.0;
    (
        Vec3::new(k1 * mf, k2 * mf, k2 * mf),
        Vec3::new(0.0, kr * iy, kr * iy),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_slightly_buoyant() {
        let p = VehicleParams::default();
        p.validate(1000.0).unwrap();
        let reserve = 1000.0 * p.volume / p.mass - 1.0;
        assert!(reserve > 0.0 && reserve < 0.05, "reserve {reserve}");
    }

    #[test]
    fn spheroid_factors_in_known_range() {
        let (ma, ja) = prolate_spheroid_added_mass(0.58, 1.65e-3, 1000.0);
        let mf = 1.65;
        // slender body: k1 -> 0, k2 -> 1
        assert!(ma.x / mf > 0.0 && ma.x / mf < 0.1);
        assert!(ma.y / mf > 0.85 && ma.y / mf < 1.0);
        assert_eq!(ma.y, ma.z);
        assert_eq!(ja.x, 0.0);
        assert!(ja.y > 0.0);
    }

    #[test]
    fn sphere_limit_matches_half_displaced_mass() {
        // b -> a gives k1 = k2 = 1/2
        let a = 0.1;
        let vol = 4.0 / 3.0 * std::f64::consts::PI * a * a * a * 0.9999;
        let (ma, _) = prolate_spheroid_added_mass(2.0 * a, vol, 1000.0);
        let mf = 1000.0 * vol;
        assert!((ma.x / mf - 0.5).abs() < 1e-3);
        assert!((ma.y / mf - 0.5).abs() < 1e-3);
    }

    #[test]
    fn validation_rejects_sinker_and_bad_added_mass() {
        let mut p = VehicleParams::default();
        p.volume = 1.0e-3;
        assert!(p.validate(1000.0).is_err());
        let mut p = VehicleParams::default();
        p.added_mass.z = -5.0;
        assert_eq!(
            p.validate(1000.0),
            Err(SimError::NonPositiveDefiniteMass { which: "mass" })
        );
    }

    #[test]
    fn buoyancy_shift_moves_away_from_vertical_wing() {
        let p = VehicleParams::default();
        let r = p.buoyancy_centre_for_offsets(std::f64::consts::FRAC_PI_2, 0.0);
        assert!(r.y < 0.0);
        let r = p.buoyancy_centre_for_offsets(0.0, std::f64::consts::FRAC_PI_2);
        assert!(r.y > 0.0);
        assert_eq!(p.buoyancy_centre_for_offsets(0.3, 0.3), p.buoyancy_centre);
    }
}
