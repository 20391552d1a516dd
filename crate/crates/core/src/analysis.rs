//! Checks of the stability and crossing guarantees on logged trajectories.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::control::{LandingGains, WindowGains};
use crate::error::AnalysisError;
use crate::geometry::{orthogonal_projector, UnitVec3, Vec3};
use crate::mission::Mode;
use crate::perception::{pad_centroid, LandingPad};
use crate::sim::{TrajectoryLog, TrajectoryRecord};

/// `L1(ξ_t) = (1/n) Σ (‖s_i − c − ξ_t‖ − ‖s_i − c‖)`; its gradient is `q_tᵀ`.
pub fn lyapunov_l1(xi_t: &Vec3, pad: &LandingPad) -> f64 {
    let c = pad.center();
    let n = pad.markers.len() as f64;
    pad.markers.iter().map(|s| (s - c - xi_t).norm() - (s - c).norm()).sum::<f64>() / n
}

/// `L2 = L1 + ½ m vᵀ K_p⁻¹ v`.
///
/// The mass weight makes `L2` a storage function of `m v̇ = −K_p q_t − K_d φ_t`,
/// whose derivative is `−vᵀ K_p⁻¹ K_d v / d_t ≤ 0`.
pub fn lyapunov_l2(xi_t: &Vec3, v: &Vec3, pad: &LandingPad, gains: &LandingGains, mass: f64) -> f64 {
    let eta = &pad.normal;
    let along = eta.dot(v);
    let lateral = (v - eta.into_inner() * along).norm_squared();
    lyapunov_l1(xi_t, pad) + 0.5 * mass * (lateral / gains.k_p12 + along * along / gains.k_p3)
}

/// `L3 = ½‖z‖² + ½ (k_p/k_d)² ‖π ξ_w‖²` with `z = π v + (k_p/k_d) π ξ_w`.
pub fn lyapunov_l3(xi_w: &Vec3, v: &Vec3, eta_w: &UnitVec3, gains: &WindowGains) -> f64 {
    let pi = orthogonal_projector(eta_w);
    let ratio = gains.k_p / gains.k_d;
    let lateral = pi * xi_w;
    let z = pi * v + lateral * ratio;
    0.5 * z.norm_squared() + 0.5 * ratio * ratio * lateral.norm_squared()
}

/// Blended distance with `1/d_w = α/d_o + (1 − α)/d_e`.
pub fn blended_distance(alpha: f64, d_o: f64, d_e: f64) -> f64 {
    1.0 / (alpha / d_o + (1.0 - alpha) / d_e)
}

/// Upper limit of `d_w` under which `L3` is non-increasing, `k_d²/(m k_p)`.
pub fn l3_validity_limit(gains: &WindowGains, mass: f64) -> f64 {
    gains.k_d * gains.k_d / (mass * gains.k_p)
}

/// Largest per-step increase of a series over the records accepted by `keep`.
pub fn max_increment(records: &[TrajectoryRecord], value: impl Fn(&TrajectoryRecord) -> f64, keep: impl Fn(&TrajectoryRecord, &TrajectoryRecord) -> bool) -> f64 {
    records
        .windows(2)
        .filter(|w| keep(&w[0], &w[1]))
        .map(|w| value(&w[1]) - value(&w[0]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `(L1, L2)` along the log.
pub fn lyapunov_landing(log: &TrajectoryLog, pad: &LandingPad, gains: &LandingGains, mass: f64) -> Vec<(f64, f64)> {
    let c = pad.center();
    log.records
        .iter()
        .map(|r| {
            let xi_t = r.position - c;
            (lyapunov_l1(&xi_t, pad), lyapunov_l2(&xi_t, &r.velocity, pad, gains, mass))
        })
        .collect()
}

pub fn lyapunov_window(log: &TrajectoryLog, gains: &WindowGains, center: &Vec3, eta_w: &UnitVec3) -> Vec<f64> {
    log.records.iter().map(|r| lyapunov_l3(&(r.position - center), &r.velocity, eta_w, gains)).collect()
}

/// One line of a report: name, measured value, threshold, verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.to_string(), value, threshold, passed: value < threshold }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.to_string(), value, threshold, passed: value > threshold }
    }

    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.to_string(), value, threshold, passed: value <= threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandingTolerances {
    pub d_t: f64,
    pub speed: f64,
    pub lateral: f64,
    /// Largest accepted per-step increase of `L2`; `None` skips the check.
    pub l2_increment: Option<f64>,
}

impl Default for LandingTolerances {
    fn default() -> Self {
        Self { d_t: 0.02, speed: 0.05, lateral: 0.05, l2_increment: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandingReport {
    pub min_d_t: f64,
    /// First sample with `d_t ≤ 0`.
    pub first_violation: Option<f64>,
    /// Time of the evaluated sample: last sample of mode 3.
    pub terminal_t: f64,
    pub terminal_d_t: f64,
    pub terminal_speed: f64,
    pub terminal_lateral: f64,
    pub terminal_offset: f64,
    pub min_beta: f64,
    pub max_l2_increment: f64,
    pub assertions: Vec<Assertion>,
}

impl LandingReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Landing checks on the mode-3 segment, evaluated at its last sample.
pub fn check_landing(log: &TrajectoryLog, pad: &LandingPad, tol: &LandingTolerances) -> Result<LandingReport, AnalysisError> {
    let seg: Vec<TrajectoryRecord> = log.segment(Mode::Land).copied().collect();
    let last = *seg.last().ok_or(AnalysisError::SegmentMissing { mode: 3 })?;
    let c = pad.center();
    let pi = orthogonal_projector(&pad.normal);
    let min_d_t = seg.iter().map(|r| r.d_t).fold(f64::INFINITY, f64::min);
    let first_violation = seg.iter().find(|r| r.d_t <= 0.0).map(|r| r.t);
    let min_beta = seg
        .iter()
        .map(|r| pad_centroid(&r.position, pad).map_or(f64::NAN, |q| -pad.normal.dot(&q)))
        .fold(f64::INFINITY, f64::min);
    let max_l2_increment = max_increment(&seg, |r| r.l2, |a, b| b.t - a.t < 1.5 * log.dt);
    let xi_t = last.position - c;
    let mut report = LandingReport {
        min_d_t,
        first_violation,
        terminal_t: last.t,
        terminal_d_t: last.d_t,
        terminal_speed: last.velocity.norm(),
        terminal_lateral: (pi * xi_t).norm(),
        terminal_offset: xi_t.norm(),
        min_beta,
        max_l2_increment,
        assertions: Vec::new(),
    };
    let a = &mut report.assertions;
    a.push(Assertion::above("landing.min_d_t", min_d_t, 0.0));
    a.push(Assertion::above("landing.min_beta", min_beta, 0.0));
    a.push(Assertion::below("landing.terminal_d_t", report.terminal_d_t, tol.d_t));
    a.push(Assertion::below("landing.terminal_speed", report.terminal_speed, tol.speed));
    a.push(Assertion::below("landing.terminal_lateral", report.terminal_lateral, tol.lateral));
    if let Some(limit) = tol.l2_increment {
        a.push(Assertion::at_most("landing.max_l2_increment", max_l2_increment, limit));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingTolerances {
    pub epsilon: f64,
    /// `min d_e` over `[t_w, t_lim)` must exceed this, m.
    pub edge_margin: f64,
    /// `ḋ_o(t_lim)` must be below this, m/s.
    pub approach_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub t_w: f64,
    pub t_lim: f64,
    pub in_w_held: bool,
    /// First sample in `[t_w, t_lim)` with `‖q_w‖ > ε`.
    pub first_exit: Option<f64>,
    pub max_q_w_after_entry: f64,
    pub d_o_rate: f64,
    pub min_d_o: f64,
    pub min_d_e: f64,
    pub assertions: Vec<Assertion>,
}

impl CrossingReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Entry into the safety region, containment, and a forward crossing.
///
/// `t_lim` is the linear-interpolated zero of `d_o`; the rate there is the
/// central difference across the two bracketing samples.
pub fn check_crossing(log: &TrajectoryLog, tol: &CrossingTolerances) -> Result<CrossingReport, AnalysisError> {
    let r = &log.records;
    let min_all = r.iter().map(|x| x.d_o).fold(f64::INFINITY, f64::min);
    let k = r.iter().position(|x| x.d_o <= 0.0).filter(|&k| k > 0).ok_or(AnalysisError::NeverCrossed { min_d_o: min_all })?;
    let before = &r[..k];
    let (a, b) = (&r[k - 1], &r[k]);
    let t_lim = a.t + (b.t - a.t) * a.d_o / (a.d_o - b.d_o);
    let d_o_rate = (b.d_o - a.d_o) / (b.t - a.t);
    let entry = before.iter().position(|x| x.q_w.norm() <= tol.epsilon).ok_or(AnalysisError::NeverEntered {
        min_q_w: before.iter().map(|x| x.q_w.norm()).fold(f64::INFINITY, f64::min),
    })?;
    let inside = &before[entry..];
    let first_exit = inside.iter().find(|x| x.q_w.norm() > tol.epsilon).map(|x| x.t);
    let max_q_w_after_entry = inside.iter().map(|x| x.q_w.norm()).fold(0.0, f64::max);
    let min_d_o = before.iter().map(|x| x.d_o).fold(f64::INFINITY, f64::min);
    let min_d_e = inside.iter().map(|x| x.d_e).fold(f64::INFINITY, f64::min);
    let mut report = CrossingReport {
        t_w: before[entry].t,
        t_lim,
        in_w_held: first_exit.is_none(),
        first_exit,
        max_q_w_after_entry,
        d_o_rate,
        min_d_o,
        min_d_e,
        assertions: Vec::new(),
    };
    let asr = &mut report.assertions;
    asr.push(Assertion::at_most("crossing.max_q_w_after_entry", max_q_w_after_entry, tol.epsilon));
    asr.push(Assertion::above("crossing.min_d_o_before_t_lim", min_d_o, 0.0));
    asr.push(Assertion::below("crossing.d_o_rate_at_t_lim", d_o_rate, tol.approach_rate));
    asr.push(Assertion::above("crossing.min_d_e", min_d_e, tol.edge_margin));
    Ok(report)
}

/// Candidate radii of the ultimate bound, from the `k_p12` and `k_d12` forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltimateBound {
    pub from_kp: f64,
    pub from_kd: f64,
}

impl UltimateBound {
    pub fn larger(&self) -> f64 {
        self.from_kp.max(self.from_kd)
    }
}

/// Height above the pad at which the bound is evaluated, m.
pub const BOUND_HEIGHT: f64 = 1e-4;

/// `‖π_η q_t‖` at lateral distance `r` along `direction`, just above the pad.
pub fn lateral_centroid_norm(pad: &LandingPad, direction: &UnitVec3, r: f64) -> f64 {
    let position = pad.center() + direction.into_inner() * r - pad.normal.into_inner() * BOUND_HEIGHT;
    pad_centroid(&position, pad).map_or(f64::NAN, |q| (orthogonal_projector(&pad.normal) * q).norm())
}

/// Smallest lateral offset along `direction` at which `‖π_η q_t‖` reaches
/// `ratio`: a geometric scan brackets the first crossing, bisection refines it.
pub fn bound_for_ratio(pad: &LandingPad, direction: &UnitVec3, ratio: f64) -> Result<f64, AnalysisError> {
    if ratio <= 0.0 {
        return Ok(0.0);
    }
    // ‖π q_t‖ → 1 only as the offset grows without bound
    if ratio >= 1.0 {
        return Err(AnalysisError::NoRoot { target: ratio, supremum: 1.0 });
    }
    let size = pad.markers.iter().map(|s| (s - pad.center()).norm()).fold(0.0, f64::max).max(1e-3);
    let f = |r: f64| lateral_centroid_norm(pad, direction, r);
    let mut lo = 0.0;
    let mut hi = size * 1e-3;
    let limit = size * 1e9;
    while f(hi) < ratio {
        lo = hi;
        hi = (hi * 1.05).max(hi + size * 1e-3);
        if hi > limit {
            return Err(AnalysisError::NoRoot { target: ratio, supremum: f(limit) });
        }
    }
    while hi - lo > 1e-9 * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if f(mid) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Radii solving `‖π_η q_t‖ = m ‖Δ/m‖ / k` for `k ∈ {k_p12, k_d12}`.
///
/// The feature equilibrates the force `K q_t = Δ`, so the acceleration bound
/// is scaled by the mass.
pub fn ultimate_bound(
    pad: &LandingPad,
    accel_bound: f64,
    direction: &UnitVec3,
    gains: &LandingGains,
    mass: f64,
) -> Result<UltimateBound, AnalysisError> {
    let force = mass * accel_bound;
    Ok(UltimateBound {
        from_kp: bound_for_ratio(pad, direction, force / gains.k_p12)?,
        from_kd: bound_for_ratio(pad, direction, force / gains.k_d12)?,
    })
}
