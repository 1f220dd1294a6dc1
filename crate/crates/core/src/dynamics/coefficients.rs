//! Whole-vehicle force and moment coefficient tables over `(alpha, beta)`.
//!
//! Tables are sampled on a rectangular grid in degrees and interpolated
//! bilinearly. Defaults are generated from a thin-airfoil / flat-plate blend
//! for a symmetric section: `C_L = slope * alpha` up to stall, blending into
//! the flat-plate law `C_L = cd90/2 * sin(2 alpha)`, `C_D = cd0 + K C_L^2`
//! blending into `cd0 + cd90 sin^2(alpha)`. The air lift slope is calibrated
//! so that lift balances weight at the 10 degree / 18.6 m/s cruise point.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Result, SimError, Vec3};

/// Cruise speed used for the air lift-slope calibration (m/s).
pub const CRUISE_SPEED: f64 = 18.6;
/// Angle of attack at the cruise calibration point (deg).
pub const CRUISE_ALPHA_DEG: f64 = 10.0;

/// One row of coefficients at a given `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoefficientSet {
    pub cd: f64,
    pub cy: f64,
    pub cl: f64,
    /// Rolling moment coefficient.
    pub c_roll: f64,
    /// Pitching moment coefficient.
    pub c_pitch: f64,
    /// Yawing moment coefficient.
    pub c_yaw: f64,
}

impl CoefficientSet {
    fn to_array(self) -> [f64; 6] {
        [
            self.cd,
            self.cy,
            self.cl,
            self.c_roll,
            self.c_pitch,
            self.c_yaw,
        ]
    }

    fn from_array(a: [f64; 6]) -> Self {
        Self {
            cd: a[0],
            cy: a[1],
            cl: a[2],
            c_roll: a[3],
            c_pitch: a[4],
            c_yaw: a[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    alpha_deg: Vec<f64>,
    beta_deg: Vec<f64>,
    /// Row-major in alpha: index `ia * beta_deg.len() + ib`.
    values: Vec<[f64; 6]>,
}

impl CoefficientTable {
    pub fn new(alpha_deg: Vec<f64>, beta_deg: Vec<f64>, values: Vec<[f64; 6]>) -> Result<Self> {
        let strictly_increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if alpha_deg.len() < 2 || beta_deg.len() < 2 {
            return Err(SimError::Config(
                "coefficient table needs at least two alpha and two beta samples".into(),
            ));
        }
        if !strictly_increasing(&alpha_deg) || !strictly_increasing(&beta_deg) {
            return Err(SimError::Config(
                "coefficient grid axes must be strictly increasing".into(),
            ));
        }
        if values.len() != alpha_deg.len() * beta_deg.len() {
            return Err(SimError::Config(format!(
                "coefficient table has {} rows, grid needs {}",
                values.len(),
                alpha_deg.len() * beta_deg.len()
            )));
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(SimError::Config(
                "coefficient table contains non-finite values".into(),
            ));
        }
        Ok(Self {
            alpha_deg,
            beta_deg,
            values,
        })
    }

    /// Samples `f(alpha_rad, beta_rad)` on a uniform grid covering
    /// `alpha in [-180, 180]`, `beta in [-90, 90]` degrees.
    pub fn sample(
        alpha_step_deg: f64,
        beta_step_deg: f64,
        f: impl Fn(f64, f64) -> CoefficientSet,
    ) -> Self {
        let axis = |lim: f64, step: f64| {
            let n = (2.0 * lim / step).round() as i64;
            (0..=n)
                .map(|i| -lim + 2.0 * lim * i as f64 / n as f64)
                .collect::<Vec<_>>()
        };
        let alpha_deg = axis(180.0, alpha_step_deg);
        let beta_deg = axis(90.0, beta_step_deg);
        let mut values = Vec::with_capacity(alpha_deg.len() * beta_deg.len());
        for &a in &alpha_deg {
            for &b in &beta_deg {
                values.push(f(a.to_radians(), b.to_radians()).to_array());
            }
        }
        Self {
            alpha_deg,
            beta_deg,
            values,
        }
    }

    pub fn alpha_range_deg(&self) -> (f64, f64) {
        (self.alpha_deg[0], *self.alpha_deg.last().unwrap())
    }

    pub fn beta_range_deg(&self) -> (f64, f64) {
        (self.beta_deg[0], *self.beta_deg.last().unwrap())
    }

    /// Iterates `(alpha_deg, beta_deg, coefficients)` over every grid node.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, CoefficientSet)> + '_ {
        let nb = self.beta_deg.len();
        self.values.iter().enumerate().map(move |(i, v)| {
            (
                self.alpha_deg[i / nb],
                self.beta_deg[i % nb],
                CoefficientSet::from_array(*v),
            )
        })
    }

    /// Bilinear lookup at `(alpha, beta)` in radians.
    pub fn lookup(&self, alpha: f64, beta: f64) -> Result<CoefficientSet> {
        // small tolerance so that atan2 returning exactly +-pi stays in range
        const EDGE_TOL: f64 = 1e-9;
        let a = alpha.to_degrees();
        let b = beta.to_degrees();
        let (amin, amax) = self.alpha_range_deg();
        let (bmin, bmax) = self.beta_range_deg();
        if !(a >= amin - EDGE_TOL
            && a <= amax + EDGE_TOL
            && b >= bmin - EDGE_TOL
            && b <= bmax + EDGE_TOL)
        {
            return Err(SimError::CoefficientOutOfRange { alpha, beta });
        }
        let (ia, ta) = bracket(&self.alpha_deg, a);
        let (ib, tb) = bracket(&self.beta_deg, b);
        let nb = self.beta_deg.len();
        let v00 = &self.values[ia * nb + ib];
        let v01 = &self.values[ia * nb + ib + 1];
        let v10 = &self.values[(ia + 1) * nb + ib];
        let v11 = &self.values[(ia + 1) * nb + ib + 1];
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate() {
            let lo = v00[k] + (v01[k] - v00[k]) * tb;
            let hi = v10[k] + (v11[k] - v10[k]) * tb;
            *o = lo + (hi - lo) * ta;
        }
        Ok(CoefficientSet::from_array(out))
    }

    /// Reads a table from CSV with header
    /// `alpha_deg,beta_deg,CD,CY,CL,Cl,Cm,Cn`. Rows may come in any order but
    /// must fill a complete rectangular grid.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SimError::io(path, e))?;
        Self::from_csv_reader(file).map_err(|e| match e {
            SimError::Config(msg) => SimError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self> {
        const HEADER: [&str; 8] = ["alpha_deg", "beta_deg", "CD", "CY", "CL", "Cl", "Cm", "Cn"];
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| SimError::Config(format!("coefficient table header: {e}")))?
            .clone();
        let mut cols = [0usize; 8];
        for (slot, name) in cols.iter_mut().zip(HEADER) {
            *slot = headers.iter().position(|h| h == name).ok_or_else(|| {
                SimError::Config(format!("coefficient table missing column `{name}`"))
            })?;
        }
        let mut rows: Vec<(f64, f64, [f64; 6])> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| {
                SimError::Config(format!("coefficient table row {}: {e}", line + 2))
            })?;
            let mut vals = [0.0; 8];
            for (v, &c) in vals.iter_mut().zip(&cols) {
                let field = rec.get(c).unwrap_or("");
                *v = field.parse::<f64>().map_err(|_| {
                    SimError::Config(format!(
                        "coefficient table row {}: bad number `{field}`",
                        line + 2
                    ))
                })?;
            }
            rows.push((
                vals[0],
                vals[1],
                [vals[2], vals[3], vals[4], vals[5], vals[6], vals[7]],
            ));
        }
        let mut alpha: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut beta: Vec<f64> = rows.iter().map(|r| r.1).collect();
        alpha.sort_by(f64::total_cmp);
        alpha.dedup();
        beta.sort_by(f64::total_cmp);
        beta.dedup();
        let nb = beta.len();
        let mut values = vec![None; alpha.len() * nb];
        for (a, b, v) in rows {
            let ia = alpha.partition_point(|&x| x < a);
            let ib = beta.partition_point(|&x| x < b);
            let slot = &mut values[ia * nb + ib];
            if slot.is_some() {
                return Err(SimError::Config(format!(
                    "duplicate coefficient row at ({a}, {b})"
                )));
            }
            *slot = Some(v);
        }
        let values = values
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                SimError::Config("coefficient table does not fill a rectangular grid".into())
            })?;
        Self::new(alpha, beta, values)
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| SimError::Config(format!("writing coefficient table: {e}"));
        w.write_record(["alpha_deg", "beta_deg", "CD", "CY", "CL", "Cl", "Cm", "Cn"])
            .map_err(err)?;
        for (a, b, c) in self.nodes() {
            let mut rec = vec![a.to_string(), b.to_string()];
            rec.extend(c.to_array().iter().map(|x| format!("{x:.12e}")));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| SimError::Config(e.to_string()))
    }

    /// Checks the physical invariants a table must satisfy: non-negative
    /// drag, zero lift at zero angle of attack and full angular coverage.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let (amin, amax) = self.alpha_range_deg();
        let (bmin, bmax) = self.beta_range_deg();
        if amin > -180.0 || amax < 180.0 || bmin > -90.0 || bmax < 90.0 {
            return Err(format!(
                "table domain alpha [{amin}, {amax}] x beta [{bmin}, {bmax}] does not cover [-180, 180] x [-90, 90]"
            ));
        }
        for (a, b, c) in self.nodes() {
            if c.cd < 0.0 {
                return Err(format!(
                    "negative drag coefficient CD = {} at alpha {a}, beta {b}",
                    c.cd
                ));
            }
        }
        for &b in &self.beta_deg {
            let c = self
                .lookup(0.0, b.to_radians())
                .map_err(|e| e.to_string())?;
            if c.cl.abs() > 1e-12 {
                return Err(format!(
                    "nonzero lift CL = {} at zero angle of attack (beta {b})",
                    c.cl
                ));
            }
        }
        Ok(())
    }
}

/// Index of the lower grid node and the fractional position within the cell.
fn bracket(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    let i = axis.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let t = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, t)
}

/// Parameters of the analytic coefficient model used to build default tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticCoefficients {
    /// Attached-flow lift slope (1/rad).
    pub lift_slope: f64,
    /// Stall angle (deg).
    pub stall_deg: f64,
    /// Width of the blend from attached flow to the flat-plate law (deg).
    pub blend_deg: f64,
    pub cd0: f64,
    /// Induced-drag factor `K` in `cd0 + K C_L^2`.
    pub induced_drag: f64,
    /// Broadside drag coefficient of the flat-plate law.
    pub cd90: f64,
    /// Side-force coefficient scale: `C_Y = side_force * sin(beta) cos(beta)`.
    pub side_force: f64,
    /// Extra drag in sideslip: `sideslip_drag * sin^2(beta)`.
    pub sideslip_drag: f64,
    /// Static pitch stability from the tail wing: `C_m = pitch_stiffness *
    /// sin(alpha) cos(alpha)`, resistive sign.
    pub pitch_stiffness: f64,
    /// Weathervane stability: `C_n = -yaw_stiffness * sin(beta)`.
    pub yaw_stiffness: f64,
    pub alpha_step_deg: f64,
    pub beta_step_deg: f64,
}

impl Default for AnalyticCoefficients {
    fn default() -> Self {
        Self::air()
    }
}

impl AnalyticCoefficients {
    /// Lift slope that makes `0.5 rho V^2 S C_L(alpha) = weight`.
    pub fn calibrated_lift_slope(
        weight: f64,
        rho: f64,
        speed: f64,
        area: f64,
        alpha_deg: f64,
    ) -> f64 {
        weight / (0.5 * rho * speed * speed * area * alpha_deg.to_radians())
    }

    /// Air defaults for the 1.61 kg, 0.076 m^2 vehicle.
    pub fn air() -> Self {
        Self {
            lift_slope: Self::calibrated_lift_slope(
                1.61 * 9.81,
                1.225,
                CRUISE_SPEED,
                0.076,
                CRUISE_ALPHA_DEG,
            ),
            stall_deg: 15.0,
            blend_deg: 10.0,
            cd0: 0.03,
            induced_drag: 0.06,
            cd90: 1.2,
            side_force: 0.6,
            sideslip_drag: 0.6,
            pitch_stiffness: 0.0,
            yaw_stiffness: 0.0,
            alpha_step_deg: 1.0,
            beta_step_deg: 5.0,
        }
    }

    /// Water defaults. `cd0` carries the hull and appendage drag referenced
    /// to the wing area and is the main speed-calibration knob underwater.
    pub fn water() -> Self {
        Self {
            cd0: 0.16,
            cd90: 1.6,
            side_force: 0.8,
            sideslip_drag: 0.8,
            // must outweigh the Munk moment of the flat wings
            pitch_stiffness: 2.5,
            yaw_stiffness: 0.8,
            ..Self::air()
        }
    }

    pub fn evaluate(&self, alpha: f64, beta: f64) -> CoefficientSet {
        let stall = self.stall_deg.to_radians();
        let blend = self.blend_deg.to_radians().max(1e-9);
        let w = ((alpha.abs() - stall) / blend).clamp(0.0, 1.0);
        let cl_attached = self.lift_slope * alpha.clamp(-stall, stall);
        let cd_attached = self.cd0 + self.induced_drag * cl_attached * cl_attached;
        let sa = alpha.sin();
        let cl_plate = 0.5 * self.cd90 * (2.0 * alpha).sin();
        let cd_plate = self.cd0 + self.cd90 * sa * sa;
        let (sb, cb) = beta.sin_cos();
        CoefficientSet {
            cd: (1.0 - w) * cd_attached + w * cd_plate + self.sideslip_drag * sb * sb,
            cy: self.side_force * sb * cb,
            cl: (1.0 - w) * cl_attached + w * cl_plate,
            c_pitch: self.pitch_stiffness * sa * alpha.cos(),
            c_yaw: -self.yaw_stiffness * sb,
            ..Default::default()
        }
    }

    pub fn table(&self) -> CoefficientTable {
        CoefficientTable::sample(self.alpha_step_deg, self.beta_step_deg, |a, b| {
            self.evaluate(a, b)
        })
    }
}

/// Rotational damping moment `linear * Omega + quadratic * |Omega| Omega`
/// per body axis, in the same resistive sign convention as the tabulated
/// fluid moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateDamping {
    /// N m s.
    pub linear: Vec3,
    /// N m s^2.
    pub quadratic: Vec3,
}

impl Default for RateDamping {
    fn default() -> Self {
        Self::air()
    }
}

impl RateDamping {
    pub fn air() -> Self {
        Self {
            linear: Vec3::repeat(0.002),
            quadratic: Vec3::repeat(0.0005),
        }
    }

    pub fn water() -> Self {
        Self {
            linear: Vec3::new(0.03, 0.03, 0.05),
            quadratic: Vec3::new(0.05, 0.05, 0.3),
        }
    }

    pub fn moment(&self, rates: &Vec3) -> Vec3 {
        Vec3::from_fn(|i, _| {
            self.linear[i] * rates[i] + self.quadratic[i] * rates[i].abs() * rates[i]
        })
    }
}

/// Coefficient table plus rotational damping for one medium.
#[derive(Debug, Clone, PartialEq)]
pub struct AeroCoefficients {
    pub table: CoefficientTable,
    pub damping: RateDamping,
}

impl AeroCoefficients {
    pub fn air() -> Self {
        Self {
            table: AnalyticCoefficients::air().table(),
            damping: RateDamping::air(),
        }
    }

    pub fn water() -> Self {
        Self {
            table: AnalyticCoefficients::water().table(),
            damping: RateDamping::water(),
        }
    }

    /// Table of all-zero coefficients and no damping.
    pub fn zero() -> Self {
        Self {
            table: CoefficientTable::sample(90.0, 90.0, |_, _| CoefficientSet::default()),
            damping: RateDamping {
                linear: Vec3::zeros(),
                quadratic: Vec3::zeros(),
            },
        }
    }
}

/// Air and water coefficient sets.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidCoefficients {
    pub air: AeroCoefficients,
    pub water: AeroCoefficients,
}

impl Default for FluidCoefficients {
    fn default() -> Self {
        Self {
            air: AeroCoefficients::air(),
            water: AeroCoefficients::water(),
        }
    }
}

impl FluidCoefficients {
    pub fn for_medium(&self, water: bool) -> &AeroCoefficients {
        if water {
            &self.water
        } else {
            &self.air
        }
    }
}
