use std::fs;
use std::path::Path;

use patternlq::TrajectoryRecord;

use crate::config::Scenario;
use crate::error::{CliError, Failure, Stage};
use crate::pipeline::{Outcome, Summary};
use crate::snapshot::render_snapshot;

/// Header `t, x_1..x_n, z_1..z_m` plus `e_norm_1..e_norm_m` when the record
/// carries observer errors. Rows hold the plant part of every stored state.
pub fn write_trajectory_csv(
    path: &Path,
    rec: &TrajectoryRecord,
    n: usize,
    m: usize,
) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let with_errors = !rec.error_norms.is_empty();
    let mut header = vec!["t".to_owned()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.extend((1..=m).map(|j| format!("z_{j}")));
    if with_errors {
        header.extend((1..=m).map(|j| format!("e_norm_{j}")));
    }
    w.write_record(&header).map_err(io)?;
    for (k, (t, state)) in rec.times.iter().zip(&rec.states).enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(state.iter().take(n + m).map(f64::to_string));
        if with_errors {
            row.extend(rec.error_norms[k].iter().map(f64::to_string));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Writes the trajectory, snapshots and finally the summary into `dir`.
/// An artifact that cannot be written turns a successful outcome into an
/// output failure; the summary is attempted regardless.
pub fn write_outcome(outcome: &mut Outcome, scenario: &Scenario, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    if let Err(e) = write_artifacts(outcome, scenario, dir) {
        if outcome.failure.is_none() {
            let failure = Failure::new(Stage::Output, e);
            outcome.summary.record_failure(&failure);
            outcome.failure = Some(failure);
        }
    }
    outcome.summary.artifacts.push("summary.json".into());
    write_summary(&dir.join("summary.json"), &outcome.summary)
}

fn write_artifacts(outcome: &mut Outcome, scenario: &Scenario, dir: &Path) -> Result<(), CliError> {
    let Some(rec) = &outcome.trajectory else {
        return Ok(());
    };
    let n = outcome.data.x0.len();
    let m = outcome.data.z0.len();
    write_trajectory_csv(&dir.join("trajectory.csv"), rec, n, m)?;
    outcome.summary.artifacts.push("trajectory.csv".into());
    if scenario.output.snapshots {
        let grid = scenario.graph.grid_dims();
        let initial = outcome.data.x0.as_slice().to_vec();
        let last: Vec<f64> = rec.limit_estimate.iter().take(n).copied().collect();
        for (stem, x) in [("snapshot_initial", initial), ("snapshot_final", last)] {
            for path in render_snapshot(&x, grid, &dir.join(stem))? {
                let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                outcome.summary.artifacts.push(name);
            }
        }
    }
    Ok(())
}
