//! Scenario configuration.
//!
//! A scenario file is TOML. Every key is optional: the file is merged over
//! the serialized [`ScenarioConfig::default`] and the result deserialized
//! with unknown keys rejected. Dotted overrides (`cpg.R=0.2`) are applied to
//! the merged document before deserialization and validation, so an
//! invalid override never leaves a half-applied config behind.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Value;

use crate::actuation::{FlappingParams, RotorParams};
use crate::control::{ControlMode, MixGains, ModeSchedule, PidGains, PilotInput};
use crate::cpg::{all_to_all, behavior_preset, CpgParams, REFERENCE_AMPLITUDE, REFERENCE_OMEGA};
use crate::dynamics::coefficients::{AnalyticCoefficients, CoefficientTable, RateDamping};
use crate::dynamics::{
    AeroCoefficients, FluidCoefficients, VehicleParams, AIR_DENSITY, WATER_DENSITY,
};
use crate::spatial::{EulerZXY, RigidBodyState, DEFAULT_SINGULARITY_GUARD};
use crate::{Result, SimError, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub vehicle: VehicleParams,
    pub rotor: RotorParams,
    pub flapping: FlappingParams,
    pub fluid: FluidConfig,
    pub initial: InitialConfig,
    pub medium: MediumConfig,
    pub integrator: IntegratorConfig,
    pub output: OutputConfig,
    pub schedule: Vec<ScheduleEntry>,
    pub controller: ControllerConfig,
    pub cpg: CpgConfig,
    pub pilot: Vec<PilotSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidConfig {
    pub air: FluidMediumConfig,
    pub water: FluidMediumConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidMediumConfig {
    /// Model used to generate the coefficient table when `table` is unset.
    pub analytic: AnalyticCoefficients,
    /// CSV coefficient table; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    pub damping: RateDamping,
}

impl FluidMediumConfig {
    pub fn build(&self) -> Result<AeroCoefficients> {
        let table = match &self.table {
            Some(path) => CoefficientTable::from_csv_path(path)?,
            None => self.analytic.table(),
        };
        Ok(AeroCoefficients {
            table,
            damping: self.damping,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Earth-frame position (m).
    pub position: Vec3,
    /// `[phi, theta, psi]` in degrees.
    pub attitude_deg: Vec3,
    /// Body-frame velocity (m/s).
    pub velocity: Vec3,
    /// Body-frame angular rate (rad/s).
    pub rates: Vec3,
}

impl InitialConfig {
    pub fn state(&self) -> RigidBodyState {
        let a = self.attitude_deg.map(f64::to_radians);
        RigidBodyState {
            position: self.position,
            attitude: EulerZXY::from_vector(&a),
            velocity: self.velocity,
            rates: self.rates,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub air_density: f64,
    pub water_density: f64,
    /// Height of the water surface (m).
    pub surface: f64,
    /// Width of the Schmitt-trigger band around the surface (m).
    pub hysteresis: f64,
    /// Depth band over which a rotor disc changes medium (m).
    pub rotor_transition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub duration: f64,
    /// Divergence bound on `|V|` (m/s).
    pub max_velocity: f64,
    /// Divergence bound on `|Omega|` (rad/s).
    pub max_rate: f64,
    pub singularity_guard: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Record every `stride`-th step.
    pub stride: usize,
    /// Start of the window used for summary metrics (s).
    pub metrics_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub t: f64,
    pub mode: ControlMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub gains: PidGains,
    pub mix: MixGains,
    /// Earth-frame position target (m).
    pub target_position: Vec3,
    /// Heading target (deg).
    pub target_yaw_deg: f64,
    /// Forward speed held in horizontal flight (m/s).
    pub cruise_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpgConfig {
    /// Flapping frequency (Hz).
    pub f: f64,
    /// Flapping amplitude (rad).
    #[serde(rename = "R")]
    pub amplitude: f64,
    pub preset: String,
    /// Offset magnitude for the roll and pitch presets (rad).
    pub magnitude: f64,
    pub a_r: f64,
    pub a_x: f64,
    /// All-to-all coupling weight (1/s).
    pub coupling: f64,
    /// Phase of W3 relative to W1/W2 (rad); overrides the preset's value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_phase: Option<f64>,
    /// Timed target switches.
    pub schedule: Vec<CpgSwitch>,
}

/// A timed change of CPG targets. Unset fields keep their current values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpgSwitch {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PilotSample {
    pub t: f64,
    #[serde(default)]
    pub throttle: f64,
    #[serde(default)]
    pub roll: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl PilotSample {
    pub fn input(&self) -> PilotInput {
        PilotInput {
            throttle: self.throttle,
            roll: self.roll,
            pitch: self.pitch,
            yaw: self.yaw,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            vehicle: VehicleParams::default(),
            rotor: RotorParams::default(),
            flapping: FlappingParams::default(),
            fluid: FluidConfig {
                air: FluidMediumConfig {
                    analytic: AnalyticCoefficients::air(),
                    table: None,
                    damping: RateDamping::air(),
                },
                water: FluidMediumConfig {
                    analytic: AnalyticCoefficients::water(),
                    table: None,
                    damping: RateDamping::water(),
                },
            },
            initial: InitialConfig {
                position: Vec3::new(0.0, 0.0, 1.0),
                attitude_deg: Vec3::zeros(),
                velocity: Vec3::zeros(),
                rates: Vec3::zeros(),
            },
            medium: MediumConfig {
                air_density: AIR_DENSITY,
                water_density: WATER_DENSITY,
                surface: 0.0,
                hysteresis: 0.05,
                rotor_transition: 0.02,
            },
            integrator: IntegratorConfig {
                dt: 1e-3,
                duration: 10.0,
                max_velocity: 100.0,
                max_rate: 100.0,
                singularity_guard: DEFAULT_SINGULARITY_GUARD,
            },
            output: OutputConfig {
                stride: 10,
                metrics_start: 10.0,
                path: None,
            },
            schedule: vec![ScheduleEntry {
                t: 0.0,
                mode: ControlMode::VerticalFlight,
            }],
            controller: ControllerConfig {
                gains: PidGains::default(),
                mix: MixGains::default(),
                target_position: Vec3::new(0.0, 0.0, 1.0),
                target_yaw_deg: 0.0,
                cruise_speed: 0.0,
            },
            cpg: CpgConfig {
                f: REFERENCE_OMEGA / (2.0 * std::f64::consts::PI),
                amplitude: REFERENCE_AMPLITUDE,
                preset: "forward".into(),
                magnitude: 0.3,
                a_r: 20.0,
                a_x: 20.0,
                coupling: 4.0,
                tail_phase: None,
                schedule: Vec::new(),
            },
            pilot: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    /// Loads a scenario file, applies overrides and validates.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, overrides, Some(base)).map_err(|e| match e {
            SimError::Config(msg) => SimError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses scenario TOML. Relative coefficient-table paths are resolved
    /// against `base_dir` when given.
    pub fn from_toml_str(
        text: &str,
        overrides: &[String],
        base_dir: Option<&Path>,
    ) -> Result<Self> {
        let user: Value = text
            .parse::<toml::Table>()
            .map(Value::Table)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let mut doc = Value::try_from(ScenarioConfig::default())
            .map_err(|e| SimError::Config(format!("serializing defaults: {e}")))?;
        merge(&mut doc, user);
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut cfg: ScenarioConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| SimError::Config(e.to_string()))?;
        if let Some(dir) = base_dir {
            for m in [&mut cfg.fluid.air, &mut cfg.fluid.water] {
                if let Some(t) = &m.table {
                    if t.is_relative() {
                        m.table = Some(dir.join(t));
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.medium;
        if !(m.air_density > 0.0 && m.water_density > 0.0) {
            return Err(SimError::Config("medium densities must be positive".into()));
        }
        if !(m.hysteresis >= 0.0 && m.surface.is_finite() && m.rotor_transition > 0.0) {
            return Err(SimError::Config(
                "medium: hysteresis must be >= 0, rotor_transition > 0, surface finite".into(),
            ));
        }
        self.vehicle.validate(m.water_density)?;
        self.rotor.validate()?;
        self.flapping.validate()?;
        self.controller.gains.validate()?;
        let i = &self.integrator;
        if !(i.dt > 0.0 && i.dt.is_finite()) {
            return Err(SimError::Config("integrator.dt must be positive".into()));
        }
        if !(i.duration >= 0.0 && i.duration.is_finite()) {
            return Err(SimError::Config(
                "integrator.duration must be non-negative".into(),
            ));
        }
        if i.duration > 0.0 && i.duration < i.dt {
            return Err(SimError::Config(
                "integrator.duration must be at least dt".into(),
            ));
        }
        if !(i.max_velocity > 0.0 && i.max_rate > 0.0 && i.singularity_guard > 0.0) {
            return Err(SimError::Config(
                "integrator bounds and singularity_guard must be positive".into(),
            ));
        }
        if self.output.stride == 0 {
            return Err(SimError::Config("output.stride must be at least 1".into()));
        }
        let s = &self.initial;
        if !s
            .position
            .iter()
            .chain(s.attitude_deg.iter())
            .chain(s.velocity.iter())
            .chain(s.rates.iter())
            .all(|x| x.is_finite())
        {
            return Err(SimError::Config("initial state must be finite".into()));
        }
        self.mode_schedule().validate()?;
        for p in &self.pilot {
            p.input().validate()?;
        }
        if !self.pilot.windows(2).all(|w| w[0].t < w[1].t) {
            return Err(SimError::Config(
                "pilot samples must have increasing times".into(),
            ));
        }
        if !self.cpg.schedule.windows(2).all(|w| w[0].t < w[1].t) {
            return Err(SimError::Config(
                "cpg.schedule times must be increasing".into(),
            ));
        }
        self.cpg_params()?;
        for sw in &self.cpg.schedule {
            self.cpg_params_after(sw)?;
        }
        Ok(())
    }

    pub fn mode_schedule(&self) -> ModeSchedule {
        ModeSchedule {
            entries: self.schedule.iter().map(|e| (e.t, e.mode)).collect(),
        }
    }

    pub fn fluid_coefficients(&self) -> Result<FluidCoefficients> {
        Ok(FluidCoefficients {
            air: self.fluid.air.build()?,
            water: self.fluid.water.build()?,
        })
    }

    /// Pilot input in effect at `t` (zero-order hold, zero before the
    /// first sample).
    pub fn pilot_at(&self, t: f64) -> PilotInput {
        self.pilot
            .iter()
            .rev()
            .find(|p| p.t <= t)
            .map(PilotSample::input)
            .unwrap_or_default()
    }

    fn base_cpg(&self) -> CpgParams {
        CpgParams {
            a_r: self.cpg.a_r,
            a_x: self.cpg.a_x,
            weight: all_to_all(self.cpg.coupling),
            ..CpgParams::default()
        }
    }

    fn build_cpg(
        &self,
        preset: &str,
        f: f64,
        r: f64,
        mag: f64,
        tail: Option<f64>,
    ) -> Result<CpgParams> {
        let mut p = behavior_preset(preset, f, r, mag, &self.base_cpg())?;
        if let Some(tp) = tail {
            p.bias = crate::cpg::tail_bias(tp);
        }
        p.validate()?;
        Ok(p)
    }

    /// CPG parameters at the start of the run.
    pub fn cpg_params(&self) -> Result<CpgParams> {
        let c = &self.cpg;
        self.build_cpg(&c.preset, c.f, c.amplitude, c.magnitude, c.tail_phase)
    }

    /// Resolved CPG settings after applying every switch up to `sw`.
    pub fn cpg_params_after(&self, sw: &CpgSwitch) -> Result<CpgParams> {
        let c = &self.cpg;
        let (mut preset, mut f, mut r, mut mag, mut tail) = (
            c.preset.clone(),
            c.f,
            c.amplitude,
            c.magnitude,
            c.tail_phase,
        );
        for s in c.schedule.iter().take_while(|s| s.t <= sw.t) {
            if let Some(p) = &s.preset {
                preset = p.clone();
                // a new preset brings its own phase relation unless given
                tail = None;
            }
            f = s.f.unwrap_or(f);
            r = s.amplitude.unwrap_or(r);
            mag = s.magnitude.unwrap_or(mag);
            if s.tail_phase.is_some() {
                tail = s.tail_phase;
            }
        }
        self.build_cpg(&preset, f, r, mag, tail)
    }
}

/// Recursively merges `over` into `base`; tables merge, everything else is
/// replaced.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(existing) => merge(existing, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Applies one `dotted.key=value` override to a TOML document.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| {
        SimError::Config(format!("override `{spec}` is not of the form key=value"))
    })?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(SimError::Config(format!(
            "override `{spec}` has an empty key"
        )));
    }
    let value = parse_override_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = doc;
    for part in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            SimError::Config(format!("override `{key}`: `{part}` is not inside a table"))
        })?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(toml::Table::new()));
    }
    let table = node.as_table_mut().ok_or_else(|| {
        SimError::Config(format!("override `{key}` does not address a table entry"))
    })?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses an override value as a TOML value, a `pi` expression such as
/// `pi/2` or `-2*pi`, or failing both as a bare string.
pub fn parse_override_value(raw: &str) -> Value {
    if let Some(x) = parse_pi_expr(raw) {
        return Value::Float(x);
    }
    if let Ok(t) = format!("v = {raw}").parse::<toml::Table>() {
        if let Some(v) = t.get("v") {
            return v.clone();
        }
    }
    Value::String(raw.to_string())
}

/// Evaluates a product/quotient of numbers and `pi`, e.g. `3*pi/4`.
pub fn parse_pi_expr(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if !s.contains("pi") {
        return None;
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut acc = 1.0;
    let mut op = '*';
    let mut token = String::new();
    let apply = |acc: f64, op: char, tok: &str| -> Option<f64> {
        let v = match tok.trim() {
            "pi" => std::f64::consts::PI,
            t => t.parse::<f64>().ok()?,
        };
        Some(if op == '*' { acc * v } else { acc / v })
    };
    for ch in body.chars() {
        if ch == '*' || ch == '/' {
            acc = apply(acc, op, &token)?;
            token.clear();
            op = ch;
        } else {
            token.push(ch);
        }
    }
    acc = apply(acc, op, &token)?;
    Some(if neg { -acc } else { acc })
}
