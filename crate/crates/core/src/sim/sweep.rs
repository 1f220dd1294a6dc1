//! Parameter sweeps: one scenario run per point of a Cartesian grid.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::metrics::Summary;
use super::run_scenario;
use crate::{Result, SimError};

/// One grid axis: a dotted key and its values as written.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<String>,
}

/// Parses `key=v1,v2;key2=a,b`. An empty or blank spec is an empty grid.
pub fn parse_grid(spec: &str) -> Result<Vec<GridAxis>> {
    let mut axes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, vals) = part.split_once('=').ok_or_else(|| {
            SimError::Config(format!("grid axis `{part}` is not of the form key=v1,v2"))
        })?;
        let values: Vec<String> = vals
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(SimError::Config(format!(
                "grid axis `{part}` needs a key and at least one value"
            )));
        }
        axes.push(GridAxis {
            key: key.trim().to_string(),
            values,
        });
    }
    Ok(axes)
}

/// Cartesian product of the axes as override lists, last axis fastest.
/// An empty grid has no points.
pub fn grid_points(axes: &[GridAxis]) -> Vec<Vec<String>> {
    if axes.is_empty() {
        return Vec::new();
    }
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p: Vec<String>| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(format!("{}={}", axis.key, v));
                    q
                })
            })
            .collect();
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub overrides: Vec<String>,
    pub outcome: std::result::Result<Summary, String>,
    pub csv: Option<PathBuf>,
}

/// Runs every grid point on a pool of `jobs` threads. Each point is an
/// independent deterministic run; failures are recorded, not propagated.
pub fn run_sweep(
    config_text: &str,
    base_dir: Option<&Path>,
    base_overrides: &[String],
    axes: &[GridAxis],
    jobs: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepPoint>> {
    let points = grid_points(axes);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))?;
    let results = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, extra)| {
                let overrides: Vec<String> = base_overrides.iter().chain(extra).cloned().collect();
                let run = || -> Result<(Summary, Option<PathBuf>)> {
                    let cfg = ScenarioConfig::from_toml_str(config_text, &overrides, base_dir)?;
                    let rec = run_scenario(&cfg)?;
                    let csv = match out_dir {
                        Some(dir) => {
                            let p = dir.join(format!("point_{index:04}.csv"));
                            rec.write_csv_path(&p)?;
                            Some(p)
                        }
                        None => None,
                    };
                    Ok((Summary::from_record(&rec, cfg.output.metrics_start), csv))
                };
                let (outcome, csv) = match run() {
                    Ok((s, csv)) => (Ok(s), csv),
                    Err(e) => (Err(e.to_string()), None),
                };
                SweepPoint {
                    index,
                    overrides: extra.clone(),
                    outcome,
                    csv,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(results)
}

/// Writes the sweep summary table.
pub fn write_summary(points: &[SweepPoint], axes: &[GridAxis], mut w: impl Write) -> Result<()> {
    let err = |e: std::io::Error| SimError::Io {
        path: "<summary>".into(),
        message: e.to_string(),
    };
    let mut header = vec!["point".to_string()];
    header.extend(axes.iter().map(|a| a.key.clone()));
    header.extend(
        [
            "status",
            "mean_surge",
            "pitch_peak_to_peak",
            "yaw_rate_frequency",
            "mean_roll",
            "error",
        ]
        .map(String::from),
    );
    writeln!(w, "{}", header.join(",")).map_err(err)?;
    for p in points {
        let mut row = vec![p.index.to_string()];
        row.extend(
            p.overrides
                .iter()
                .map(|o| o.split_once('=').map(|x| x.1).unwrap_or("").to_string()),
        );
        match &p.outcome {
            Ok(s) => {
                row.push("ok".into());
                for v in [
                    s.mean_surge,
                    s.pitch_peak_to_peak,
                    s.yaw_rate_frequency,
                    s.mean_roll,
                ] {
                    row.push(format!("{v:.8e}"));
                }
                row.push(String::new());
            }
            Err(e) => {
                row.push("failed".into());
                row.extend(std::iter::repeat(String::new()).take(4));
                row.push(format!("\"{}\"", e.replace('"', "'")));
            }
        }
        writeln!(w, "{}", row.join(",")).map_err(err)?;
    }
    w.flush().map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_and_product() {
        assert!(parse_grid("").unwrap().is_empty());
        assert!(grid_points(&[]).is_empty());
        let axes = parse_grid("cpg.tail_phase=0,pi; cpg.f=2.0,2.5,3").unwrap();
        assert_eq!(axes.len(), 2);
        let pts = grid_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec!["cpg.tail_phase=0", "cpg.f=2.0"]);
        assert_eq!(pts[5], vec!["cpg.tail_phase=pi", "cpg.f=3"]);
        assert!(parse_grid("cpg.f").is_err());
        assert!(parse_grid("cpg.f=").is_err());
    }

    #[test]
    fn failed_points_are_marked() {
        let axes = parse_grid("integrator.dt=0.001,-1").unwrap();
        let pts = run_sweep("[integrator]\nduration = 0.01\n", None, &[], &axes, 2, None).unwrap();
        assert!(pts[0].outcome.is_ok());
        assert!(pts[1].outcome.is_err());
        let mut buf = Vec::new();
        write_summary(&pts, &axes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().contains("failed"));
    }
}
