//! Artifact emission: CSV trajectories and orbits with fixed schemas, and
//! pretty-printed JSON reports. Float formatting uses the shortest
//! round-trip representation, so identical numbers always serialize to
//! identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nlcomp_core::domain::Grid;
use nlcomp_core::dynamics::Trajectory;
use nlcomp_core::fields::SampledField;

use crate::error::{CliError, CliResult};

/// Provenance header shared by every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportMeta {
    pub command: String,
    pub scenario_path: String,
    pub scenario_sha256: String,
}

/// Creates the output directory (default: current directory) and returns
/// the path of `name` inside it.
pub fn artifact_path(out: Option<&Path>, name: &str) -> CliResult<PathBuf> {
    let dir = out.unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn write_file(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, report: &T) -> CliResult<()> {
    write_file(path, &render_json(report)?)
}

/// The exact bytes `write_json` would emit.
pub fn render_json<T: Serialize>(report: &T) -> CliResult<String> {
    let mut body = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Validation(format!("serialization: {e}")))?;
    body.push('\n');
    Ok(body)
}

/// Writes a trajectory as CSV with schema `t,node_index,x,u,v`; `x` is
/// the first coordinate of the node. Returns the number of data rows.
pub fn write_trajectory_csv(
    path: &Path,
    grid: &Grid<f64>,
    trajectory: &Trajectory<f64>,
) -> CliResult<usize> {
    let mut body = String::from("t,node_index,x,u,v\n");
    let mut rows = 0usize;
    for state in trajectory.states() {
        for i in 0..grid.len() {
            let _ = writeln!(
                body,
                "{},{},{},{},{}",
                state.time,
                i,
                grid.coord(i)[0],
                state.u[i],
                state.v[i]
            );
            rows += 1;
        }
    }
    write_file(path, &body)?;
    Ok(rows)
}

/// Writes a periodic orbit as CSV with schema `slice,t,node_index,x,u,v`;
/// slice `k` of `M` is the state at `t = k T / M`. Returns the number of
/// data rows.
pub fn write_orbit_csv(
    path: &Path,
    grid: &Grid<f64>,
    u: &SampledField<f64>,
    v: &SampledField<f64>,
) -> CliResult<usize> {
    let mut body = String::from("slice,t,node_index,x,u,v\n");
    let period = u.period();
    let slices = u.len_time();
    let mut rows = 0usize;
    for k in 0..slices {
        let t = period * k as f64 / slices as f64;
        let us = u.slice(k);
        let vs = v.slice(k);
        for i in 0..grid.len() {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{}",
                k,
                t,
                i,
                grid.coord(i)[0],
                us[i],
                vs[i]
            );
            rows += 1;
        }
    }
    write_file(path, &body)?;
    Ok(rows)
}
