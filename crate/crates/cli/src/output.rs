//! Artifact writers. Outputs are byte-stable: floats carry 17 significant
//! digits, lines end with '\n', and JSON field order follows the structs.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use belldyn::channels::Channel;
use belldyn::dephasing::{PulseSequence, TemperatureRegime};
use belldyn::phenomena::{CorrelationTrajectory, RegionScan, Scenario, TransitionReport};

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One trajectory CSV row.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub p_or_nu: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub mutual_info: f64,
    pub classical: f64,
    pub discord: f64,
    pub entanglement: f64,
}

/// 17 significant digits, locale-independent.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::File::create(path)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_trajectory(
    path: &Path,
    scenario: &Scenario,
    traj: &CorrelationTrajectory,
) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(traj.times.len());
    for (i, &t) in traj.times.iter().enumerate() {
        rows.push(TrajectoryRecord {
            t,
            p_or_nu: scenario.channel.native_time(t),
            c1: traj.coefficients[i][0],
            c2: traj.coefficients[i][1],
            c3: traj.coefficients[i][2],
            mutual_info: traj.triples[i].mutual_info,
            classical: traj.triples[i].classical,
            discord: traj.triples[i].discord,
            entanglement: traj.entanglement[i],
        });
    }

    let mut file = create(path)?;
    let io = |e: std::io::Error| CliError::io(format!("write {}: {e}", path.display()));
    file.write_all(b"t,p_or_nu,c1,c2,c3,I,C,Q,E\n").map_err(io)?;
    for r in rows {
        let line = [
            fmt(r.t),
            fmt(r.p_or_nu),
            fmt(r.c1),
            fmt(r.c2),
            fmt(r.c3),
            fmt(r.mutual_info),
            fmt(r.classical),
            fmt(r.discord),
            fmt(r.entanglement),
        ]
        .join(",");
        file.write_all(line.as_bytes()).map_err(io)?;
        file.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TransitionsDoc<'a> {
    tool_version: &'static str,
    channel: &'static str,
    native_time_label: &'static str,
    report: &'a TransitionReport,
}

pub fn write_transitions(
    path: &Path,
    scenario: &Scenario,
    report: &TransitionReport,
) -> Result<(), CliError> {
    let doc = TransitionsDoc {
        tool_version: TOOL_VERSION,
        channel: match scenario.channel {
            Channel::Markov(_) => "markov",
            Channel::Rtn(_) => "rtn",
            Channel::Spectral(_) => "spectral",
        },
        native_time_label: scenario.channel.native_time_label(),
        report,
    };
    let mut file = create(path)?;
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::io(format!("serialize {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| CliError::io(format!("write {}: {e}", path.display())))
}

#[derive(Serialize)]
struct PulseMeta {
    count: usize,
    final_pulse: f64,
    interval: Option<f64>,
}

#[derive(Serialize)]
struct ScanMeta<'a> {
    tool_version: &'static str,
    horizon: f64,
    side: &'a belldyn::channels::NoiseSide,
    /// True when invariance is claimed within the horizon window only.
    windowed: bool,
    temperature: TemperatureRegime,
    omega_c: f64,
    pulses: Option<PulseMeta>,
}

/// Long-format CSV (s, c, flag) plus a JSON metadata sidecar at
/// `<path>.meta.json`.
pub fn write_region_scan(path: &Path, scan: &RegionScan) -> Result<(), CliError> {
    let mut file = create(path)?;
    let io = |e: std::io::Error| CliError::io(format!("write {}: {e}", path.display()));
    file.write_all(b"s,c,flag\n").map_err(io)?;
    for (i_s, &s) in scan.s_values.iter().enumerate() {
        for (i_c, &c) in scan.c_values.iter().enumerate() {
            let line = format!("{},{},{}\n", fmt(s), fmt(c), scan.flag(i_s, i_c).as_str());
            file.write_all(line.as_bytes()).map_err(io)?;
        }
    }

    let meta = ScanMeta {
        tool_version: TOOL_VERSION,
        horizon: scan.horizon,
        side: &scan.side,
        windowed: scan.windowed,
        temperature: scan.temperature,
        omega_c: scan.omega_c,
        pulses: scan.pulses.as_ref().map(|p: &PulseSequence| PulseMeta {
            count: p.instants().len(),
            final_pulse: p.final_pulse(),
            interval: p.interval(),
        }),
    };
    let meta_path = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.meta.json", ext.to_string_lossy()),
        None => "meta.json".into(),
    });
    let mut file = create(&meta_path)?;
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| CliError::io(format!("serialize {}: {e}", meta_path.display())))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| CliError::io(format!("write {}: {e}", meta_path.display())))
}
