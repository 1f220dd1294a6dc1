//! # amphisim-core
//!
//! Deterministic multi-modal rigid-body simulator for a hybrid aerial-aquatic
//! vehicle: a belly-sitter with two tilt-rotors and three pitching wings that
//! flies on its rotors and swims either on its rotors (vectored mode) or by
//! flapping its wings under a central-pattern-generator controller.
//!
//! ## Modules
//!
//! - [`spatial`]: ZXY Euler attitude, rotation and angular-rate transforms, kinematics
//! - [`dynamics`]: medium-dependent Newton–Euler dynamics, fluid and restoring wrenches
//! - [`actuation`]: tilt-rotor thrust and flapping-wing force models
//! - [`cpg`]: coupled amplitude-controlled phase oscillators and behavior presets
//! - [`control`]: cascaded PID flight control, vectored mixing, mode supervisor
//! - [`sim`]: scenario configuration, closed-loop integration, trajectory output
//! - [`validation`]: built-in invariant suite used by `amphisim validate`
//! - [`oracle`]: independent reference computations used by the invariant suite

pub mod actuation;
pub mod control;
pub mod cpg;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod oracle;
pub mod sim;
pub mod spatial;
pub mod validation;

pub use error::{Result, SimError};

use nalgebra::{Matrix3, Vector3};

/// 3-vector in SI units.
pub type Vec3 = Vector3<f64>;

/// 3x3 real matrix.
pub type Mat3 = Matrix3<f64>;
