//! Four-mode supervisor: approach the window, cross it open-loop, land,
//! shut the motors down.

use libm::acos;

use crate::control::{landing_force, window_force, yaw_aligning, ControllerConfig, ForceCommand};
use crate::dynamics::VehicleParams;
use crate::error::ScenarioError;
use crate::geometry::{e3, orthogonal_projector, UnitVec3, Vec3};
use crate::perception::FeatureSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    ApproachWindow = 1,
    CrossWindow = 2,
    Land = 3,
    Shutdown = 4,
}

impl Mode {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Mode::ApproachWindow),
            2 => Some(Mode::CrossWindow),
            3 => Some(Mode::Land),
            4 => Some(Mode::Shutdown),
            _ => None,
        }
    }
}

/// Which part of the mission a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MissionProfile {
    #[default]
    Full,
    /// Modes 1 and 2 only; the pad is never handed over.
    WindowOnly,
    /// Starts in mode 3.
    LandingOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MissionSettings {
    pub profile: MissionProfile,
    /// Mode-2 force without weight compensation, as written in the source law.
    pub mode2_literal: bool,
    /// Frame-to-frame corner bearing jump treated as a window loss, rad.
    pub window_loss_jump: f64,
    /// Touchdown proximity: `β_t = −η_tᵀq_t` at or below this value.
    pub land_beta: f64,
    /// Touchdown centring: `‖π_{η_t} q_t‖` at or below this value.
    pub land_lateral: f64,
    /// Time both touchdown conditions must hold, s.
    pub land_hold: f64,
    pub shutdown_ramp: f64,
    /// Enter mode 4 when the touchdown conditions hold; off keeps the
    /// landing law active for the whole run.
    pub shutdown: bool,
    /// Longest feature dropout bridged by holding the last command, s.
    pub grace: f64,
}

impl Default for MissionSettings {
    fn default() -> Self {
        Self {
            profile: MissionProfile::Full,
            mode2_literal: false,
            window_loss_jump: 5f64.to_radians(),
            land_beta: 0.2,
            land_lateral: 0.05,
            land_hold: 0.2,
            shutdown_ramp: 1.0,
            shutdown: true,
            grace: 0.1,
        }
    }
}

impl MissionSettings {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fields = [
            ("window_loss_jump", self.window_loss_jump),
            ("land_beta", self.land_beta),
            ("land_lateral", self.land_lateral),
            ("shutdown_ramp", self.shutdown_ramp),
        ];
        for (name, x) in fields {
            if !(x > 0.0) {
                return Err(ScenarioError::invalid(alloc::format!("gains.mission.{name}"), "must be positive"));
            }
        }
        if !(self.land_hold >= 0.0) || !(self.grace >= 0.0) {
            return Err(ScenarioError::invalid("gains.mission", "hold and grace times must be non-negative"));
        }
        Ok(())
    }
}

/// Times at which each mode was entered.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MissionEvents {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub t4: Option<f64>,
    pub abort: Option<f64>,
}

impl MissionEvents {
    pub fn entry(&self, mode: Mode) -> Option<f64> {
        match mode {
            Mode::ApproachWindow => self.t1,
            Mode::CrossWindow => self.t2,
            Mode::Land => self.t3,
            Mode::Shutdown => self.t4,
        }
    }

    fn set(&mut self, mode: Mode, t: f64) {
        let slot = match mode {
            Mode::ApproachWindow => &mut self.t1,
            Mode::CrossWindow => &mut self.t2,
            Mode::Land => &mut self.t3,
            Mode::Shutdown => &mut self.t4,
        };
        slot.get_or_insert(t);
    }
}

/// Fixed quantities the supervisor needs besides the gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionContext {
    pub params: VehicleParams,
    pub pad_normal: UnitVec3,
    /// Forward camera optical axis in body axes.
    pub forward_boresight: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionState {
    pub mode: Mode,
    /// Open-loop crossing force, set on entry to mode 2.
    pub f_memo: Vec3,
    pub land_triggered_once: bool,
    pub shutdown_entry_time: Option<f64>,
    /// Thrust at mode-4 entry, N.
    pub shutdown_thrust: f64,
    pub yaw_hold: f64,
    pub events: MissionEvents,
    last_command: Option<ForceCommand>,
    last_window_force: Option<(Vec3, UnitVec3)>,
    prev_bearings: Option<[UnitVec3; 4]>,
    missing_since: Option<f64>,
    touchdown_since: Option<f64>,
}

impl MissionState {
    pub fn new(settings: &MissionSettings, initial_yaw: f64, t0: f64) -> Self {
        let mode = match settings.profile {
            MissionProfile::LandingOnly => Mode::Land,
            _ => Mode::ApproachWindow,
        };
        let mut events = MissionEvents::default();
        events.set(mode, t0);
        Self {
            mode,
            f_memo: Vec3::zeros(),
            land_triggered_once: false,
            shutdown_entry_time: None,
            shutdown_thrust: 0.0,
            yaw_hold: initial_yaw,
            events,
            last_command: None,
            last_window_force: None,
            prev_bearings: None,
            missing_since: None,
            touchdown_since: None,
        }
    }

    fn enter(&mut self, mode: Mode, t: f64) {
        debug_assert!(mode > self.mode);
        self.mode = mode;
        self.events.set(mode, t);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MissionOutput {
    Command(ForceCommand),
    /// Features missing beyond the grace time.
    Abort,
}

/// True when any corner bearing moved more than `jump` rad between frames.
pub fn window_loss_detector(prev: &[UnitVec3; 4], curr: &[UnitVec3; 4], jump: f64) -> bool {
    prev.iter().zip(curr).any(|(a, b)| acos(a.dot(b).clamp(-1.0, 1.0)) > jump)
}

/// Crossing force memorised at window loss.
///
/// Keeps the magnitude of the last window force along `η̂_w`.
///
/// `literal` returns `η̂_w |η̂_wᵀF|` as written, which pushes the vehicle
/// back from the window since the applied acceleration is `−F/m + g e3`.
/// Otherwise the push is directed through the window and the part of the
/// weight compensation orthogonal to `η̂_w` is added, so that
/// `π_η̂ (F_memo − m g e3) = 0`.
pub fn memorised_force(last_force: &Vec3, eta_hat: &UnitVec3, params: &VehicleParams, literal: bool) -> Vec3 {
    let magnitude = eta_hat.dot(last_force).abs();
    if literal {
        eta_hat.into_inner() * magnitude
    } else {
        -eta_hat.into_inner() * magnitude + orthogonal_projector(eta_hat) * e3() * params.weight()
    }
}

/// One supervisor update. Pure: returns the next state.
pub fn mission_step(
    state: &MissionState,
    snap: &FeatureSnapshot,
    config: &ControllerConfig,
    ctx: &MissionContext,
    t: f64,
) -> (MissionState, MissionOutput) {
    let mut ms = *state;
    let settings = &config.mission;

    if ms.mode == Mode::ApproachWindow {
        let jumped = match (&ms.prev_bearings, &snap.window) {
            (Some(prev), Some(w)) => window_loss_detector(prev, &w.bearings, settings.window_loss_jump),
            _ => false,
        };
        match (&snap.window, jumped) {
            (Some(w), false) => {
                ms.prev_bearings = Some(w.bearings);
                let force = window_force(&w.qbar_w, &w.phi_w, &w.q_w, &w.eta_hat, &config.window, &ctx.params);
                let yaw = yaw_aligning(&ctx.forward_boresight, &w.eta_hat);
                ms.last_window_force = Some((force, w.eta_hat));
                ms.yaw_hold = yaw;
                let cmd = ForceCommand { force, yaw };
                ms.last_command = Some(cmd);
                return (ms, MissionOutput::Command(cmd));
            }
            _ => match ms.last_window_force {
                Some((force, eta)) => {
                    ms.f_memo = memorised_force(&force, &eta, &ctx.params, settings.mode2_literal);
                    ms.enter(Mode::CrossWindow, t);
                }
                None => return hold_or_abort(ms, settings, t),
            },
        }
    }

    if ms.mode == Mode::CrossWindow {
        if snap.pad_visible() && settings.profile != MissionProfile::WindowOnly {
            ms.land_triggered_once = true;
            ms.enter(Mode::Land, t);
        } else {
            let cmd = ForceCommand { force: ms.f_memo, yaw: ms.yaw_hold };
            ms.last_command = Some(cmd);
            return (ms, MissionOutput::Command(cmd));
        }
    }

    if ms.mode == Mode::Land {
        let Some(pad) = &snap.pad else {
            return hold_or_abort(ms, settings, t);
        };
        ms.missing_since = None;
        let force = landing_force(&pad.q_t, &pad.phi_t, &config.landing, &ctx.pad_normal, &ctx.params);
        let beta = pad.beta(&ctx.pad_normal);
        let lateral = (orthogonal_projector(&ctx.pad_normal) * pad.q_t).norm();
        if settings.shutdown && beta <= settings.land_beta && lateral <= settings.land_lateral {
            let since = *ms.touchdown_since.get_or_insert(t);
            if t - since >= settings.land_hold - 1e-12 {
                ms.shutdown_entry_time = Some(t);
                ms.shutdown_thrust = force.norm();
                ms.enter(Mode::Shutdown, t);
            }
        } else {
            ms.touchdown_since = None;
        }
        if ms.mode == Mode::Land {
            let cmd = ForceCommand { force, yaw: ms.yaw_hold };
            ms.last_command = Some(cmd);
            return (ms, MissionOutput::Command(cmd));
        }
    }

    // Shutdown: level attitude, thrust ramped to zero.
    let entry = ms.shutdown_entry_time.unwrap_or(t);
    let scale = (1.0 - (t - entry) / settings.shutdown_ramp).max(0.0);
    let cmd = ForceCommand { force: ctx.pad_normal.into_inner() * (ms.shutdown_thrust * scale), yaw: ms.yaw_hold };
    ms.last_command = Some(cmd);
    (ms, MissionOutput::Command(cmd))
}

fn hold_or_abort(mut ms: MissionState, settings: &MissionSettings, t: f64) -> (MissionState, MissionOutput) {
    let since = *ms.missing_since.get_or_insert(t);
    match ms.last_command {
        Some(cmd) if t - since <= settings.grace + 1e-12 => (ms, MissionOutput::Command(cmd)),
        _ => {
            ms.events.abort.get_or_insert(t);
            (ms, MissionOutput::Abort)
        }
    }
}
