//! Trajectory logs as CSV.
//!
//! One header line, one row per step with 9 significant digits, then
//! trailing `#` lines: mission events, run metadata and the scenario the
//! log came from (compact JSON) so that a log can be checked on its own.

use std::fs;
use std::path::Path;

use ibvs_core::geometry::Vec3;
use ibvs_core::mission::{MissionEvents, Mode};
use ibvs_core::sim::{Termination, TrajectoryLog, TrajectoryRecord};

use crate::error::SimError;
use crate::scenario_file::ScenarioFile;

pub const COLUMNS: [&str; 48] = [
    "t", "mode", "xi_x", "xi_y", "xi_z", "v_x", "v_y", "v_z", "roll", "pitch", "yaw", "omega_x", "omega_y",
    "omega_z", "F_x", "F_y", "F_z", "F_T", "Gamma_x", "Gamma_y", "Gamma_z", "q_t_x", "q_t_y", "q_t_z", "q_w_x",
    "q_w_y", "q_w_z", "qbar_w_x", "qbar_w_y", "qbar_w_z", "alpha_w", "phi_t_x", "phi_t_y", "phi_t_z", "phi_w_x",
    "phi_w_y", "phi_w_z", "d_t", "d_o", "d_e", "eta_w_x", "eta_w_y", "eta_w_z", "pad_visible", "window_visible",
    "L1", "L2", "L3",
];

fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), num)
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Duration => "duration",
        Termination::ShutdownComplete => "shutdown_complete",
        Termination::MissionAbort => "mission_abort",
        Termination::CrossingComplete => "crossing_complete",
    }
}

fn termination_from(name: &str) -> Option<Termination> {
    Some(match name {
        "duration" => Termination::Duration,
        "shutdown_complete" => Termination::ShutdownComplete,
        "mission_abort" => Termination::MissionAbort,
        "crossing_complete" => Termination::CrossingComplete,
        _ => return None,
    })
}

fn row(r: &TrajectoryRecord) -> Vec<String> {
    let mut out = Vec::with_capacity(COLUMNS.len());
    out.push(num(r.t));
    out.push(r.mode.number().to_string());
    let mut vec = |v: &Vec3| out.extend(v.iter().map(|x| num(*x)));
    vec(&r.position);
    vec(&r.velocity);
    vec(&Vec3::from(r.euler));
    vec(&r.angular_rate);
    vec(&r.force);
    out.push(num(r.thrust));
    let mut vec = |v: &Vec3| out.extend(v.iter().map(|x| num(*x)));
    vec(&r.torque);
    vec(&r.q_t);
    vec(&r.q_w);
    vec(&r.qbar_w);
    out.push(num(r.alpha_w));
    let mut vec = |v: &Vec3| out.extend(v.iter().map(|x| num(*x)));
    vec(&r.phi_t);
    vec(&r.phi_w);
    out.extend([r.d_t, r.d_o, r.d_e].map(num));
    out.extend(r.eta_w.iter().map(|x| num(*x)));
    out.push(u8::from(r.pad_visible).to_string());
    out.push(u8::from(r.window_visible).to_string());
    out.extend([r.l1, r.l2, r.l3].map(num));
    out
}

/// Serialises a log, with `scenario` embedded as a trailing comment.
pub fn log_to_csv(log: &TrajectoryLog, scenario: Option<&ScenarioFile>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for r in &log.records {
        w.write_record(row(r)).expect("in-memory write");
    }
    let mut text = String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii");
    let e = &log.events;
    text.push_str(&format!(
        "# events: T1={}, T2={}, T3={}, T4={}\n",
        opt(e.t1),
        opt(e.t2),
        opt(e.t3),
        opt(e.t4)
    ));
    text.push_str(&format!(
        "# run: dt={}, abort={}, contact={}, termination={}\n",
        num(log.dt),
        opt(e.abort),
        opt(log.contact),
        termination_name(log.termination)
    ));
    if let Some(s) = scenario {
        text.push_str(&format!("# scenario: {}\n", serde_json::to_string(s).expect("scenario serialises")));
    }
    text
}

pub fn write_log_csv(log: &TrajectoryLog, scenario: Option<&ScenarioFile>, path: &Path) -> Result<(), SimError> {
    fs::write(path, log_to_csv(log, scenario)).map_err(|e| SimError::io(path, e))
}

fn log_error(line: usize, message: impl Into<String>) -> SimError {
    SimError::Log { file: None, line, message: message.into() }
}

/// Parses `key=value` pairs of a trailing comment line.
fn fields(body: &str) -> impl Iterator<Item = (&str, &str)> {
    body.split(',').filter_map(|kv| kv.trim().split_once('='))
}

fn parse_opt(value: &str, line: usize) -> Result<Option<f64>, SimError> {
    if value == "none" {
        return Ok(None);
    }
    value.parse().map(Some).map_err(|_| log_error(line, format!("bad number `{value}`")))
}

fn parse_row(record: &csv::StringRecord, line: usize) -> Result<TrajectoryRecord, SimError> {
    if record.len() != COLUMNS.len() {
        return Err(log_error(line, format!("expected {} fields, found {}", COLUMNS.len(), record.len())));
    }
    let mut x = [0.0; 48];
    for (k, field) in record.iter().enumerate() {
        x[k] = field.trim().parse().map_err(|_| log_error(line, format!("column {}: bad number `{field}`", COLUMNS[k])))?;
    }
    let v = |k: usize| Vec3::new(x[k], x[k + 1], x[k + 2]);
    let mode = Mode::from_number(x[1] as u8)
        .filter(|_| x[1].fract() == 0.0)
        .ok_or_else(|| log_error(line, format!("invalid mode {}", x[1])))?;
    Ok(TrajectoryRecord {
        t: x[0],
        mode,
        position: v(2),
        velocity: v(5),
        euler: [x[8], x[9], x[10]],
        angular_rate: v(11),
        force: v(14),
        thrust: x[17],
        torque: v(18),
        q_t: v(21),
        q_w: v(24),
        qbar_w: v(27),
        alpha_w: x[30],
        phi_t: v(31),
        phi_w: v(34),
        d_t: x[37],
        d_o: x[38],
        d_e: x[39],
        eta_w: v(40),
        pad_visible: x[43] != 0.0,
        window_visible: x[44] != 0.0,
        l1: x[45],
        l2: x[46],
        l3: x[47],
    })
}

/// A log read back from disk, with the embedded scenario when present.
#[derive(Debug, Clone)]
pub struct LoadedLog {
    pub log: TrajectoryLog,
    pub scenario: Option<ScenarioFile>,
}

pub fn parse_log_csv(text: &str) -> Result<LoadedLog, SimError> {
    let mut data = String::new();
    let mut comments = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(c) = line.strip_prefix('#') {
            comments.push((i + 1, c.trim()));
        } else {
            data.push_str(line);
            data.push('\n');
        }
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(data.as_bytes());
    let header = reader.headers().map_err(|e| log_error(1, e.to_string()))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(log_error(1, "header does not match the documented column list"));
    }
    let mut records = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| log_error(line, e.to_string()))?;
        records.push(parse_row(&rec, line)?);
    }

    let mut events = MissionEvents::default();
    let mut dt = None;
    let mut contact = None;
    let mut termination = Termination::Duration;
    let mut scenario = None;
    for (line, c) in comments {
        if let Some(body) = c.strip_prefix("events:") {
            for (k, v) in fields(body) {
                let t = parse_opt(v, line)?;
                match k {
                    "T1" => events.t1 = t,
                    "T2" => events.t2 = t,
                    "T3" => events.t3 = t,
                    "T4" => events.t4 = t,
                    _ => return Err(log_error(line, format!("unknown event `{k}`"))),
                }
            }
        } else if let Some(body) = c.strip_prefix("run:") {
            for (k, v) in fields(body) {
                match k {
                    "dt" => dt = parse_opt(v, line)?,
                    "abort" => events.abort = parse_opt(v, line)?,
                    "contact" => contact = parse_opt(v, line)?,
                    "termination" => {
                        termination = termination_from(v).ok_or_else(|| log_error(line, format!("unknown termination `{v}`")))?
                    }
                    _ => return Err(log_error(line, format!("unknown run field `{k}`"))),
                }
            }
        } else if let Some(body) = c.strip_prefix("scenario:") {
            let parsed = ScenarioFile::parse(body.trim()).map_err(|e| log_error(line, format!("embedded scenario: {e}")))?;
            scenario = Some(parsed);
        }
    }
    let dt = match dt {
        Some(dt) => dt,
        None if records.len() > 1 => records[1].t - records[0].t,
        None => return Err(log_error(text.lines().count(), "missing `# run: dt=` line")),
    };
    Ok(LoadedLog { log: TrajectoryLog { dt, records, events, contact, termination }, scenario })
}

pub fn read_log_csv(path: &Path) -> Result<LoadedLog, SimError> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_log_csv(&text).map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use ibvs_core::sim::run_scenario;

    fn short_log() -> (TrajectoryLog, ScenarioFile) {
        let mut s = presets::nominal();
        s.sim.duration = 0.05;
        (run_scenario(&s).unwrap(), ScenarioFile::from_scenario(&s))
    }

    #[test]
    fn header_is_the_documented_list() {
        let (log, _) = short_log();
        let text = log_to_csv(&log, None);
        let first = text.lines().next().unwrap();
        assert_eq!(first, COLUMNS.join(","));
        assert!(first.starts_with("t,mode,xi_x,"));
        assert!(first.ends_with(",L1,L2,L3"));
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(num(1.0 / 3.0), "3.33333333e-1");
        assert_eq!(num(-1820.0), "-1.82000000e3");
    }

    #[test]
    fn round_trip_within_format_precision() {
        let (log, file) = short_log();
        let back = parse_log_csv(&log_to_csv(&log, Some(&file))).unwrap();
        assert_eq!(back.scenario.as_ref(), Some(&file));
        assert_eq!(back.log.records.len(), log.records.len());
        assert_eq!(back.log.events, log.events);
        assert_eq!(back.log.termination, log.termination);
        for (a, b) in log.records.iter().zip(&back.log.records) {
            assert_eq!(a.mode, b.mode);
            assert!((a.position - b.position).norm() <= 1e-8 * a.position.norm());
            assert!((a.t - b.t).abs() <= 1e-8 * a.t.abs());
        }
    }

    #[test]
    fn events_line_lists_all_four() {
        let (log, _) = short_log();
        let text = log_to_csv(&log, None);
        let events = text.lines().find(|l| l.starts_with("# events:")).unwrap();
        assert_eq!(events, "# events: T1=0.00000000e0, T2=none, T3=none, T4=none");
    }

    #[test]
    fn bad_field_reports_line() {
        let (log, _) = short_log();
        let text = log_to_csv(&log, None).replacen("0.00000000e0,1,", "zero,1,", 1);
        let err = parse_log_csv(&text).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        assert!(err.contains("column t"), "{err}");
    }
}
