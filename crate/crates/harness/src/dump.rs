//! Trajectory dumps for plotting.
//!
//! `<stem>.csv` holds one row per knot `k = 0..=N`:
//!
//! ```text
//! # hilqr-trajectory v1
//! t,x0,...,x{n-1},u0,...,u{m-1},mode
//! ```
//!
//! The input columns of the final row are empty (there is no `u_N`).
//! `<stem>.events.csv` lists every transition:
//!
//! ```text
//! # hilqr-events v1
//! step,t_event,transition,kind,from,to,x_pre0,...,x_post0,...
//! ```
//!
//! Numbers are printed with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::io::write_atomic;
use crate::record::{EventRecord, TrajectoryData};
use crate::HarnessError;

pub const TRAJECTORY_HEADER: &str = "# hilqr-trajectory v1";
pub const EVENTS_HEADER: &str = "# hilqr-events v1";

/// Path of the event sidecar belonging to a trajectory CSV.
pub fn events_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.events.csv"))
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn trajectory_csv(data: &TrajectoryData) -> String {
    let n = data.states.first().map_or(0, |x| x.len());
    let m = data.inputs.first().map_or(0, |u| u.len());
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("x{i}")));
    cols.extend((0..m).map(|i| format!("u{i}")));
    cols.push("mode".into());
    out.push_str(&cols.join(","));
    out.push('\n');
    for (k, x) in data.states.iter().enumerate() {
        let u = data
            .inputs
            .get(k)
            .map(|u| join(u))
            .unwrap_or_else(|| vec![""; m].join(","));
        let mode = data.modes.get(k).copied().unwrap_or_default();
        let _ = write!(out, "{},{}", data.time(k), join(x));
        if m > 0 {
            let _ = write!(out, ",{u}");
        }
        let _ = writeln!(out, ",{mode}");
    }
    out
}

pub fn events_csv(events: &[EventRecord], n: usize) -> String {
    let mut out = String::new();
    out.push_str(EVENTS_HEADER);
    out.push('\n');
    let mut cols: Vec<String> = ["step", "t_event", "transition", "kind", "from", "to"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((0..n).map(|i| format!("x_pre{i}")));
    cols.extend((0..n).map(|i| format!("x_post{i}")));
    out.push_str(&cols.join(","));
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            e.step,
            e.t_event,
            e.transition,
            e.kind.as_str(),
            e.from,
            e.to,
            join(&e.x_pre),
            join(&e.x_post)
        );
    }
    out
}

/// Writes the trajectory CSV and its event sidecar; returns the sidecar path.
pub fn dump_trajectory(
    data: &TrajectoryData,
    events: &[EventRecord],
    path: &Path,
) -> Result<PathBuf, HarnessError> {
    let n = data.states.first().map_or(0, |x| x.len());
    write_atomic(path, trajectory_csv(data).as_bytes())?;
    let side = events_path(path);
    write_atomic(&side, events_csv(events, n).as_bytes())?;
    Ok(side)
}

/// Parses a trajectory CSV written by [`dump_trajectory`].
pub fn read_trajectory(path: &Path) -> Result<TrajectoryData, HarnessError> {
    let bad = |m: String| HarnessError::Io(format!("{}: {m}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(bad("missing trajectory format header".into()));
    }
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("missing column header".into()))?
        .split(',')
        .collect();
    let n = header.iter().filter(|c| c.starts_with('x')).count();
    let m = header.iter().filter(|c| c.starts_with('u')).count();
    let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let mut times = Vec::new();
    let mut data = TrajectoryData {
        t0: 0.0,
        dt: 0.0,
        states: vec![],
        inputs: vec![],
        modes: vec![],
    };
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 2 + n + m {
            return Err(bad(format!("expected {} columns, got {}", 2 + n + m, f.len())));
        }
        times.push(parse(f[0])?);
        data.states
            .push(f[1..1 + n].iter().map(|s| parse(s)).collect::<Result<_, _>>()?);
        if f[1 + n..1 + n + m].iter().all(|s| !s.is_empty()) {
            data.inputs.push(
                f[1 + n..1 + n + m]
                    .iter()
                    .map(|s| parse(s))
                    .collect::<Result<_, _>>()?,
            );
        }
        data.modes
            .push(f[1 + n + m].parse().map_err(|e| bad(format!("mode: {e}")))?);
    }
    data.t0 = times.first().copied().unwrap_or(0.0);
    if times.len() > 1 {
        data.dt = (times[times.len() - 1] - data.t0) / (times.len() - 1) as f64;
    }
    Ok(data)
}
