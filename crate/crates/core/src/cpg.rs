//! Three coupled amplitude-controlled phase oscillators driving the wing
//! pitch servos.
//!
//! ```text
//! phi_i'  = 2 pi f_i + sum_j w_ij sin(phi_j - phi_i - phi_ij)
//! r_i''   = a_r (a_r/4 (R_i - r_i) - r_i')
//! x_i''   = a_x (a_x/4 (X_i - x_i) - x_i')
//! theta_i = x_i + r_i cos(phi_i)
//! ```
//!
//! `phi_ij` is the desired lead of oscillator `j` over `i`. Amplitude and
//! offset follow critically damped second-order responses, so changing
//! `R_i` or `X_i` never makes the output jump.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::integrate::rk4_step;
use crate::{Result, SimError};

/// Flapping angular frequency used in the reference experiments (rad/s).
pub const REFERENCE_OMEGA: f64 = 15.0;
/// Reference amplitude (rad).
pub const REFERENCE_AMPLITUDE: f64 = 0.5;

/// Number of scalar state entries of the network.
pub const CPG_STATE_DIM: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpgParams {
    /// Frequencies (Hz).
    pub freq: [f64; 3],
    /// Target amplitudes (rad).
    pub amplitude: [f64; 3],
    /// Target offsets (rad).
    pub offset: [f64; 3],
    /// Amplitude convergence gain (1/s).
    pub a_r: f64,
    /// Offset convergence gain (1/s).
    pub a_x: f64,
    /// Coupling weights `w[i][j]` (1/s).
    pub weight: [[f64; 3]; 3],
    /// Phase biases `bias[i][j]`: target `phi_j - phi_i` (rad).
    pub bias: [[f64; 3]; 3],
}

impl Default for CpgParams {
    fn default() -> Self {
        Self {
            freq: [REFERENCE_OMEGA / (2.0 * PI); 3],
            amplitude: [REFERENCE_AMPLITUDE; 3],
            offset: [0.0; 3],
            a_r: 20.0,
            a_x: 20.0,
            weight: all_to_all(4.0),
            bias: tail_bias(0.0),
        }
    }
}

/// Symmetric all-to-all coupling with weight `w`.
pub fn all_to_all(w: f64) -> [[f64; 3]; 3] {
    let mut m = [[w; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    m
}

/// Biases locking W1 and W2 together and W3 at `tail_phase` behind them.
pub fn tail_bias(tail_phase: f64) -> [[f64; 3]; 3] {
    let mut b = [[0.0; 3]; 3];
    b[0][2] = tail_phase;
    b[1][2] = tail_phase;
    b[2][0] = -tail_phase;
    b[2][1] = -tail_phase;
    b
}

impl CpgParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self
            .freq
            .iter()
            .chain(&self.amplitude)
            .chain(&self.offset)
            .chain(self.weight.iter().flatten())
            .chain(self.bias.iter().flatten())
            .all(|x| x.is_finite());
        if !finite {
            return Err(SimError::Config("cpg parameters must be finite".into()));
        }
        if !(self.a_r > 0.0 && self.a_x > 0.0) {
            return Err(SimError::Config(
                "cpg gains a_r and a_x must be positive".into(),
            ));
        }
        if self.freq.iter().any(|&f| f < 0.0) || self.weight.iter().flatten().any(|&w| w < 0.0) {
            return Err(SimError::Config(
                "cpg frequencies and coupling weights must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn max_frequency(&self) -> f64 {
        self.freq.iter().cloned().fold(0.0, f64::max)
    }
}

/// Named flapping behaviors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// All wings in phase, no offsets.
    Forward,
    /// Outer wings in phase, tail in anti-phase, no offsets.
    ForwardAntiphase,
    /// `X1 = -X2 = m`, `X3 = 0`.
    Roll,
    /// `X1 = X2 = m`, `X3 = -m`.
    Pitch,
    /// `X1 = pi/2`.
    YawPos,
    /// `X2 = pi/2`.
    YawNeg,
}

impl Behavior {
    pub const ALL: [Behavior; 6] = [
        Behavior::Forward,
        Behavior::ForwardAntiphase,
        Behavior::Roll,
        Behavior::Pitch,
        Behavior::YawPos,
        Behavior::YawNeg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Forward => "forward",
            Behavior::ForwardAntiphase => "forward_antiphase",
            Behavior::Roll => "roll",
            Behavior::Pitch => "pitch",
            Behavior::YawPos => "yaw_pos",
            Behavior::YawNeg => "yaw_neg",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| SimError::UnknownPreset(name.to_string()))
    }

    /// Offsets and tail phase for this behavior with offset magnitude `m`.
    pub fn targets(self, m: f64) -> ([f64; 3], f64) {
        match self {
            Behavior::Forward => ([0.0; 3], 0.0),
            Behavior::ForwardAntiphase => ([0.0; 3], PI),
            Behavior::Roll => ([m, -m, 0.0], 0.0),
            Behavior::Pitch => ([m, m, -m], 0.0),
            Behavior::YawPos => ([FRAC_PI_2, 0.0, 0.0], 0.0),
            Behavior::YawNeg => ([0.0, FRAC_PI_2, 0.0], 0.0),
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Behavior::Forward => "X1=X2=X3=0, phi1=phi2=phi3 (in phase)",
            Behavior::ForwardAntiphase => "X1=X2=X3=0, phi1=phi2=-phi3 (tail in anti-phase)",
            Behavior::Roll => "X1=-X2=m, X3=0",
            Behavior::Pitch => "X1=X2=-X3=m",
            Behavior::YawPos => "X1=pi/2, X2=X3=0",
            Behavior::YawNeg => "X2=pi/2, X1=X3=0",
        }
    }
}

/// Parameters for a named behavior at flapping frequency `freq` (Hz),
/// amplitude `amplitude` and offset magnitude `magnitude`. Gains and
/// coupling weights come from `base`.
pub fn behavior_preset(
    name: &str,
    freq: f64,
    amplitude: f64,
    magnitude: f64,
    base: &CpgParams,
) -> Result<CpgParams> {
    let behavior = Behavior::from_name(name)?;
    let (offset, tail) = behavior.targets(magnitude);
    Ok(CpgParams {
        freq: [freq; 3],
        amplitude: [amplitude; 3],
        offset,
        bias: tail_bias(tail),
        ..base.clone()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CpgNetworkState {
    pub phi: [f64; 3],
    pub r: [f64; 3],
    pub rdot: [f64; 3],
    pub x: [f64; 3],
    pub xdot: [f64; 3],
}

impl CpgNetworkState {
    /// State sitting on the limit cycle of `params` with the given phases.
    pub fn converged(params: &CpgParams, phi: [f64; 3]) -> Self {
        Self {
            phi,
            r: params.amplitude,
            rdot: [0.0; 3],
            x: params.offset,
            xdot: [0.0; 3],
        }
    }

    pub fn to_vector(&self) -> SVector<f64, CPG_STATE_DIM> {
        let mut v = SVector::zeros();
        for i in 0..3 {
            v[i] = self.phi[i];
            v[3 + i] = self.r[i];
            v[6 + i] = self.rdot[i];
            v[9 + i] = self.x[i];
            v[12 + i] = self.xdot[i];
        }
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let g = |o: usize| [v[o], v[o + 1], v[o + 2]];
        Self {
            phi: g(0),
            r: g(3),
            rdot: g(6),
            x: g(9),
            xdot: g(12),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

/// Time derivative of the network state. The `rdot`/`xdot` slots of the
/// result hold the second derivatives.
pub fn cpg_derivative(s: &CpgNetworkState, p: &CpgParams) -> CpgNetworkState {
    let mut d = CpgNetworkState::default();
    for i in 0..3 {
        let mut coupling = 0.0;
        for j in 0..3 {
            if j != i {
                coupling += p.weight[i][j] * (s.phi[j] - s.phi[i] - p.bias[i][j]).sin();
            }
        }
        d.phi[i] = 2.0 * PI * p.freq[i] + coupling;
        d.r[i] = s.rdot[i];
        d.rdot[i] = p.a_r * (p.a_r / 4.0 * (p.amplitude[i] - s.r[i]) - s.rdot[i]);
        d.x[i] = s.xdot[i];
        d.xdot[i] = p.a_x * (p.a_x / 4.0 * (p.offset[i] - s.x[i]) - s.xdot[i]);
    }
    d
}

/// One RK4 step of the network alone.
pub fn cpg_step(s: &CpgNetworkState, p: &CpgParams, dt: f64) -> CpgNetworkState {
    let y = s.to_vector();
    let out = rk4_step(0.0, &y, dt, |_, y| {
        let st = CpgNetworkState::from_slice(y.as_slice());
        Ok::<_, std::convert::Infallible>(cpg_derivative(&st, p).to_vector())
    });
    match out {
        Ok(v) => CpgNetworkState::from_slice(v.as_slice()),
        Err(e) => match e {},
    }
}

/// Wing angles `x_i + r_i cos(phi_i)`.
pub fn cpg_output(s: &CpgNetworkState) -> [f64; 3] {
    std::array::from_fn(|i| s.x[i] + s.r[i] * s.phi[i].cos())
}

/// Time derivative of [`cpg_output`] given the phase rates.
pub fn cpg_output_rate(s: &CpgNetworkState, p: &CpgParams) -> [f64; 3] {
    let d = cpg_derivative(s, p);
    std::array::from_fn(|i| {
        s.xdot[i] + s.rdot[i] * s.phi[i].cos() - s.r[i] * s.phi[i].sin() * d.phi[i]
    })
}

/// Swaps the targets of a running network. The state is deliberately not
/// touched, which keeps the output continuous across the switch.
pub fn set_params(
    _state: &CpgNetworkState,
    current: &mut CpgParams,
    new_params: CpgParams,
) -> Result<()> {
    new_params.validate()?;
    *current = new_params;
    Ok(())
}

/// Critically damped response of `r` from rest at `r0` toward `target`.
pub fn critically_damped(target: f64, r0: f64, gain: f64, t: f64) -> f64 {
    let h = 0.5 * gain * t;
    target + (r0 - target) * (1.0 + h) * (-h).exp()
}

/// Writes `t, theta1..3, r1..3, x1..3, phi1..3` rows of a CPG trace.
pub fn write_cpg_trace(
    samples: &[(f64, CpgNetworkState)],
    writer: impl std::io::Write,
) -> Result<()> {
    let err = |e: csv::Error| SimError::Io {
        path: "<cpg trace>".into(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "t", "theta1", "theta2", "theta3", "r1", "r2", "r3", "x1", "x2", "x3", "phi1", "phi2",
        "phi3",
    ])
    .map_err(err)?;
    for (t, s) in samples {
        let th = cpg_output(s);
        let mut rec = vec![format!("{t:.8e}")];
        for v in th.iter().chain(&s.r).chain(&s.x).chain(&s.phi) {
            rec.push(format!("{v:.8e}"));
        }
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| SimError::Io {
        path: "<cpg trace>".into(),
        message: e.to_string(),
    })
}
