//! Post-run checks for a scenario and the `.report` format.

use ibvs_core::analysis::{
    blended_distance, check_crossing, check_landing, l3_validity_limit, max_increment, ultimate_bound, Assertion,
    CrossingReport, CrossingTolerances, LandingReport, LandingTolerances, UltimateBound,
};
use ibvs_core::dynamics::DisturbanceKind;
use ibvs_core::geometry::{normalize, orthogonal_projector};
use ibvs_core::mission::{MissionProfile, Mode};
use ibvs_core::sim::{Scenario, Termination, TrajectoryLog, TrajectoryRecord};

/// Thresholds applied by [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckSettings {
    pub landing: LandingTolerances,
    pub edge_margin: f64,
    pub approach_rate: f64,
    /// Per-step increase allowed for `L2` (mode 3) and `L3` (mode 1) when
    /// the scenario has no disturbance.
    pub lyapunov_increment: f64,
    /// Slack on the ultimate bound for the terminal lateral offset.
    pub bound_slack: f64,
    /// `sup ‖ξ_t‖` must stay below this multiple of `‖ξ_t(0)‖`.
    pub growth_limit: f64,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            landing: LandingTolerances::default(),
            edge_margin: 0.05,
            approach_rate: -0.05,
            lyapunov_increment: 1e-6,
            bound_slack: 1.10,
            growth_limit: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub assertions: Vec<Assertion>,
    pub crossing: Option<CrossingReport>,
    pub landing: Option<LandingReport>,
    pub bound: Option<UltimateBound>,
    /// Diagnostics for checks that could not be evaluated.
    pub notes: Vec<String>,
}

impl Evaluation {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }
}

fn flag(name: &str, ok: bool) -> Assertion {
    Assertion { name: name.to_string(), value: f64::from(u8::from(ok)), threshold: 1.0, passed: ok }
}

fn finite(r: &TrajectoryRecord, window: bool) -> bool {
    let mut values = vec![r.t, r.thrust, r.d_t, r.l1, r.l2, r.alpha_w];
    values.extend(r.euler);
    for v in [&r.position, &r.velocity, &r.angular_rate, &r.force, &r.torque, &r.q_t, &r.phi_t] {
        values.extend(v.iter());
    }
    if window {
        values.extend([r.d_o, r.d_e, r.l3]);
        values.extend(r.q_w.iter().chain(r.qbar_w.iter()).chain(r.phi_w.iter()));
    }
    values.iter().all(|x| x.is_finite())
}

/// Runs every check that applies to the scenario's profile and disturbance.
pub fn evaluate(s: &Scenario, log: &TrajectoryLog, settings: &CheckSettings) -> Evaluation {
    let mut ev = Evaluation::default();
    let profile = s.gains.mission.profile;
    let undisturbed = s.disturbance.kind == DisturbanceKind::Zero || s.disturbance.max_norm() == 0.0;
    let window = s.scene.window.as_ref();

    ev.assertions.push(flag("run.no_abort", log.events.abort.is_none()));
    let bad = log.records.iter().filter(|r| !finite(r, window.is_some())).count();
    ev.assertions.push(Assertion::at_most("run.non_finite_samples", bad as f64, 0.0));
    if profile == MissionProfile::Full && s.gains.mission.shutdown {
        ev.assertions.push(flag("run.shutdown_complete", log.termination == Termination::ShutdownComplete));
    }

    if window.is_some() && profile != MissionProfile::LandingOnly {
        let tol = CrossingTolerances {
            epsilon: s.gains.window.epsilon,
            edge_margin: settings.edge_margin,
            approach_rate: settings.approach_rate,
        };
        match check_crossing(log, &tol) {
            Ok(report) => {
                ev.assertions.extend(report.assertions.iter().cloned());
                ev.crossing = Some(report);
            }
            Err(e) => {
                ev.assertions.push(flag("crossing.completed", false));
                ev.notes.push(e.to_string());
            }
        }
        if undisturbed {
            let limit = l3_validity_limit(&s.gains.window, s.vehicle.mass);
            let seg: Vec<_> = log.segment(Mode::ApproachWindow).copied().collect();
            let inside = |r: &TrajectoryRecord| {
                let d_w = blended_distance(r.alpha_w, r.d_o, r.d_e);
                d_w > 0.0 && d_w < limit
            };
            let inc = max_increment(&seg, |r| r.l3, |a, b| inside(a) && b.t - a.t < 1.5 * log.dt);
            if inc.is_finite() {
                ev.assertions.push(Assertion::at_most("window.max_l3_increment", inc, settings.lyapunov_increment));
            }
        }
    }

    if profile != MissionProfile::WindowOnly {
        let mut tol = settings.landing;
        if undisturbed {
            tol.l2_increment = Some(settings.lyapunov_increment);
        }
        match check_landing(log, &s.scene.pad, &tol) {
            Ok(report) => {
                ev.assertions.extend(report.assertions.iter().cloned());
                let pad = &s.scene.pad;
                let lateral = orthogonal_projector(&pad.normal) * s.disturbance.amplitude / s.vehicle.mass;
                if !undisturbed && lateral.norm() > 1e-12 {
                    let dir = normalize(&lateral).expect("non-zero lateral disturbance");
                    match ultimate_bound(pad, lateral.norm(), &dir, &s.gains.landing, s.vehicle.mass) {
                        Ok(b) => {
                            ev.assertions.push(Assertion::at_most(
                                "landing.lateral_within_bound",
                                report.terminal_lateral,
                                b.larger() * settings.bound_slack,
                            ));
                            ev.bound = Some(b);
                        }
                        Err(e) => {
                            ev.assertions.push(flag("landing.bound_exists", false));
                            ev.notes.push(e.to_string());
                        }
                    }
                }
                if !undisturbed && s.disturbance.max_along(&pad.normal) > 0.0 {
                    let c = pad.center();
                    let sup = log.records.iter().map(|r| (r.position - c).norm()).fold(0.0, f64::max);
                    let start = (s.initial.position - c).norm();
                    ev.assertions.push(Assertion::below("landing.sup_offset", sup, settings.growth_limit * start));
                }
                ev.landing = Some(report);
            }
            Err(e) => {
                ev.assertions.push(flag("landing.completed", false));
                ev.notes.push(e.to_string());
            }
        }
    }
    ev
}

/// One line per assertion: name, value, threshold, verdict (tab separated).
pub fn format_report(ev: &Evaluation) -> String {
    let mut out = String::from("name\tvalue\tthreshold\tresult\n");
    for a in &ev.assertions {
        let verdict = if a.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{}\t{:.9e}\t{:.9e}\t{}\n", a.name, a.value, a.threshold, verdict));
    }
    for n in &ev.notes {
        out.push_str(&format!("# {n}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use ibvs_core::sim::run_scenario;

    #[test]
    fn truncated_run_fails_crossing_and_landing() {
        let mut s = presets::nominal();
        s.sim.duration = 1.0;
        let log = run_scenario(&s).unwrap();
        let ev = evaluate(&s, &log, &CheckSettings::default());
        assert!(!ev.passed());
        let failed: Vec<_> = ev.failures().map(|a| a.name.as_str()).collect();
        assert!(failed.contains(&"crossing.completed"));
        assert!(failed.contains(&"landing.completed"));
        assert!(failed.contains(&"run.shutdown_complete"));
        assert_eq!(ev.notes.len(), 2);
    }

    #[test]
    fn report_lines_match_assertions() {
        let mut s = presets::nominal();
        s.sim.duration = 0.5;
        let log = run_scenario(&s).unwrap();
        let ev = evaluate(&s, &log, &CheckSettings::default());
        let text = format_report(&ev);
        let lines: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines.len(), ev.assertions.len() + 1);
        assert!(lines[1].starts_with("run.no_abort\t1.000000000e0\t1.000000000e0\tPASS"));
    }
}
