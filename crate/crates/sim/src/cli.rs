//! The `ibvs` command line.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ibvs_core::control::{validate_gains, DisturbanceBound};
use ibvs_core::geometry::Vec3;
use ibvs_core::perception::{flow_from_sphere_samples, FlowCalibration};
use ibvs_core::sim::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checks::{evaluate, format_report, CheckSettings};
use crate::error::SimError;
use crate::log_csv::read_log_csv;
use crate::presets;
use crate::runner::{run_and_write, RunOptions};
use crate::scenario_file::{read_scenario, ScenarioFile};
use crate::sweep::{format_summary, load_sweep, run_sweep};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ibvs", version, about = "Visual-servo window crossing and landing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write SVG plots next to the log.
    #[arg(long)]
    pub plots: bool,
    /// Exit 0 whatever the checks say; the report is still written.
    #[arg(long)]
    pub no_checks: bool,
    /// Apply the crossing force exactly as written, without weight compensation.
    #[arg(long)]
    pub mode2_literal: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its log, report and plots.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a batch of initial positions.
    Sweep {
        sweep: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check the crossing and landing gain conditions of a scenario.
    ValidateGains {
        scenario: PathBuf,
        /// Window width to check against instead of the scenario's.
        #[arg(long)]
        r_w: Option<f64>,
    },
    /// Compare the sampled flow estimate with v/d.
    FlowOracle {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Cap half-angle, degrees.
        #[arg(long, default_value_t = 30.0)]
        cap_deg: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest accepted relative error.
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Re-run the analysis checks on a written log.
    Check {
        log: PathBuf,
        /// Scenario to check against; defaults to the one embedded in the log.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Print a built-in scenario as JSON.
    Preset {
        /// nominal, horizontal-disturbance, vertical-disturbance, crossing, landing
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn input_error(err: impl std::fmt::Display, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "error: {err}");
    EXIT_INPUT
}

fn apply_flags(s: &mut Scenario, flags: &RunFlags) {
    if let Some(seed) = flags.seed {
        s.sim.seed = seed;
    }
    if flags.mode2_literal {
        s.gains.mission.mode2_literal = true;
    }
}

fn cmd_run(path: &Path, flags: &RunFlags, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut scenario = match read_scenario(path) {
        Ok(s) => s,
        Err(e) => return input_error(e, err),
    };
    apply_flags(&mut scenario, flags);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
    let opts = RunOptions { plots: flags.plots };
    let outcome = match run_and_write(&scenario, &flags.out, &stem, opts) {
        Ok(o) => o,
        Err(e @ SimError::Io { .. }) => return input_error(e, err),
        Err(e) => return input_error(e, err),
    };
    let e = &outcome.log.events;
    let _ = writeln!(
        out,
        "events: T1={:?} T2={:?} T3={:?} T4={:?} abort={:?} termination={:?}",
        e.t1, e.t2, e.t3, e.t4, e.abort, outcome.log.termination
    );
    let _ = write!(out, "{}", format_report(&outcome.evaluation));
    for f in &outcome.files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    if outcome.evaluation.passed() || flags.no_checks {
        EXIT_OK
    } else {
        let _ = writeln!(err, "checks failed: {}", failed_names(&outcome.evaluation));
        EXIT_CHECK_FAILED
    }
}

fn failed_names(ev: &crate::checks::Evaluation) -> String {
    ev.failures().map(|a| a.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn cmd_sweep(path: &Path, flags: &RunFlags, jobs: usize, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut sweep = match load_sweep(path) {
        Ok(s) => s,
        Err(e) => return input_error(e, err),
    };
    for s in &mut sweep.runs {
        apply_flags(s, flags);
    }
    let rows = match run_sweep(&sweep, &flags.out, jobs.max(1), RunOptions { plots: flags.plots }) {
        Ok(r) => r,
        Err(e) => return input_error(e, err),
    };
    let _ = write!(out, "{}", format_summary(&rows));
    if rows.iter().all(|r| r.passed) || flags.no_checks {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn cmd_validate_gains(path: &Path, r_w: Option<f64>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let s = match read_scenario(path) {
        Ok(s) => s,
        Err(e) => return input_error(e, err),
    };
    let width = match (r_w, &s.scene.window) {
        (Some(r), _) => r,
        (None, Some(w)) => w.clearance(),
        (None, None) => return input_error("scene has no window; pass --r-w", err),
    };
    let m = s.vehicle.mass;
    let bound = DisturbanceBound {
        along_window_normal: s.scene.window.as_ref().map_or(0.0, |w| s.disturbance.max_along(&w.normal)) / m,
        along_pad_normal: s.disturbance.max_along(&s.scene.pad.normal) / m,
    };
    let report = validate_gains(&s.gains.window, &s.gains.landing, width, &bound);
    let _ = writeln!(out, "r_w = {width:.2} m");
    for c in &report.conditions {
        let _ = writeln!(out, "{c}");
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Relative error of the sampled flow for one `(v, d)` pair.
pub fn flow_error(v: &Vec3, d: f64, cal: &FlowCalibration, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let position = Vec3::new(0.0, 0.0, -d);
    let exact = v / d;
    let est = flow_from_sphere_samples(&position, v, &Vec3::z_axis(), 0.0, cal, samples, rng).expect("camera above the plane");
    (est - exact).norm() / exact.norm()
}

fn cmd_flow_oracle(samples: usize, cap_deg: f64, trials: usize, seed: u64, tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(cap_deg > 0.0 && cap_deg < 90.0) || samples == 0 || trials == 0 {
        return input_error("need 0 < cap-deg < 90, samples > 0 and trials > 0", err);
    }
    let cal = FlowCalibration::new(cap_deg.to_radians());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_ok = true;
    let mut improved = 0;
    let _ = writeln!(out, "trial\tv_x\tv_y\tv_z\td\terror\terror_x4\tresult");
    for k in 0..trials {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let d = rng.random_range(0.5..3.0);
        let e1 = flow_error(&v, d, &cal, samples, &mut rng);
        let e4 = flow_error(&v, d, &cal, 4 * samples, &mut rng);
        let ok = e1 <= tol;
        all_ok &= ok;
        improved += usize::from(e4 < e1);
        let _ = writeln!(
            out,
            "{k}\t{:.3}\t{:.3}\t{:.3}\t{d:.3}\t{e1:.3e}\t{e4:.3e}\t{}",
            v.x,
            v.y,
            v.z,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(out, "relative error <= {:.0}% in all trials: {}", tol * 100.0, if all_ok { "PASS" } else { "FAIL" });
    let _ = writeln!(out, "error decreased with 4x samples in {improved}/{trials} trials");
    if all_ok {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn cmd_check(log_path: &Path, scenario_path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = match read_log_csv(log_path) {
        Ok(l) => l,
        Err(e) => return input_error(e, err),
    };
    let scenario = match (scenario_path, &loaded.scenario) {
        (Some(p), _) => match read_scenario(p) {
            Ok(s) => s,
            Err(e) => return input_error(e, err),
        },
        (None, Some(file)) => file.to_scenario(),
        (None, None) => return input_error("log has no embedded scenario; pass --scenario", err),
    };
    let ev = evaluate(&scenario, &loaded.log, &CheckSettings::default());
    let _ = write!(out, "{}", format_report(&ev));
    if ev.passed() {
        EXIT_OK
    } else {
        let _ = writeln!(err, "checks failed: {}", failed_names(&ev));
        EXIT_CHECK_FAILED
    }
}

pub fn preset_by_name(name: &str) -> Option<Scenario> {
    Some(match name {
        "nominal" => presets::nominal(),
        "horizontal-disturbance" => presets::horizontal_disturbance(),
        "vertical-disturbance" => presets::vertical_disturbance(),
        "crossing" => presets::random_crossing(0),
        "landing" => presets::random_landing(0),
        _ => return None,
    })
}

fn cmd_preset(name: &str, path: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(s) = preset_by_name(name) else {
        return input_error(format!("unknown preset `{name}`"), err);
    };
    let text = ScenarioFile::from_scenario(&s).to_json() + "\n";
    match path {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                return input_error(SimError::io(p, e), err);
            }
        }
        None => {
            let _ = write!(out, "{text}");
        }
    }
    EXIT_OK
}

/// Dispatches a parsed command line and returns the exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Run { scenario, flags } => cmd_run(scenario, flags, out, err),
        Command::Sweep { sweep, flags, jobs } => cmd_sweep(sweep, flags, *jobs, out, err),
        Command::ValidateGains { scenario, r_w } => cmd_validate_gains(scenario, *r_w, out, err),
        Command::FlowOracle { samples, cap_deg, trials, seed, tolerance } => {
            cmd_flow_oracle(*samples, *cap_deg, *trials, *seed, *tolerance, out, err)
        }
        Command::Check { log, scenario } => cmd_check(log, scenario.as_deref(), out, err),
        Command::Preset { name, out: path } => cmd_preset(name, path.as_deref(), out, err),
    }
}
