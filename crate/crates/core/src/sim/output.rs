use std::io::Write;
use std::path::Path;

use super::WingForces;
use crate::actuation::RotorCommand;
use crate::control::ControlMode;
use crate::cpg::CpgNetworkState;
use crate::dynamics::Wrench;
use crate::spatial::RigidBodyState;
use crate::{Result, SimError};

/// Column order of the trajectory CSV.
pub const CSV_COLUMNS: [&str; 28] = [
    "t", "x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r", "mode", "k", "omega1",
    "omega2", "gamma1", "gamma2", "theta_w1", "theta_w2", "theta_w3", "Fx", "Fy", "Fz", "Mx", "My",
    "Mz",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: RigidBodyState,
    pub mode: ControlMode,
    /// Medium flag `k`.
    pub water: bool,
    pub rotor: RotorCommand,
    /// Thrust of each rotor (N).
    pub thrust: [f64; 2],
    pub wings: WingForces,
    /// Control wrench applied over the step.
    pub wrench: Wrench,
    pub cpg: CpgNetworkState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub name: String,
    pub dt: f64,
    pub stride: usize,
    pub samples: Vec<Sample>,
}

impl TrajectoryRecord {
    /// Time between recorded samples (s).
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Samples with `t >= start`.
    pub fn window(&self, start: f64) -> &[Sample] {
        let i = self.samples.partition_point(|s| s.t < start - 1e-9);
        &self.samples[i..]
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let err = |e: std::io::Error| SimError::Io {
            path: "<trajectory>".into(),
            message: e.to_string(),
        };
        writeln!(w, "{}", CSV_COLUMNS.join(",")).map_err(err)?;
        let mut line = String::with_capacity(512);
        for s in &self.samples {
            line.clear();
            let a = s.state.attitude.wrapped();
            let st = &s.state;
            let lead = [
                s.t,
                st.position.x,
                st.position.y,
                st.position.z,
                a.phi,
                a.theta,
                a.psi,
                st.velocity.x,
                st.velocity.y,
                st.velocity.z,
                st.rates.x,
                st.rates.y,
                st.rates.z,
            ];
            for v in lead {
                line.push_str(&format!("{v:.8e},"));
            }
            line.push_str(s.mode.name());
            line.push(',');
            line.push(if s.water { '1' } else { '0' });
            let tail = [
                s.rotor.omega[0],
                s.rotor.omega[1],
                s.rotor.gamma[0],
                s.rotor.gamma[1],
                s.wings.theta[0],
                s.wings.theta[1],
                s.wings.theta[2],
                s.wrench.force.x,
                s.wrench.force.y,
                s.wrench.force.z,
                s.wrench.moment.x,
                s.wrench.moment.y,
                s.wrench.moment.z,
            ];
            for v in tail {
                line.push_str(&format!(",{v:.8e}"));
            }
            writeln!(w, "{line}").map_err(err)?;
        }
        w.flush().map_err(err)
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| SimError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| match e {
                SimError::Io { message, .. } => SimError::io(path, message),
                other => other,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario, ScenarioConfig};

    #[test]
    fn csv_layout() {
        let mut cfg = ScenarioConfig::default();
        cfg.integrator.duration = 0.05;
        let rec = run_scenario(&cfg).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let rows: Vec<_> = lines.collect();
        assert_eq!(rows.len(), 50 / 10 + 1);
        for row in rows {
            let cols: Vec<_> = row.split(',').collect();
            assert_eq!(cols.len(), CSV_COLUMNS.len());
            assert_eq!(cols[13], "vertical_flight");
            // 9 significant digits
            assert_eq!(
                cols[1]
                    .split('e')
                    .next()
                    .unwrap()
                    .trim_start_matches('-')
                    .len(),
                10
            );
        }
    }
}
