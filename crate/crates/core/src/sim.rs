//! Fixed-step closed-loop simulation and the trajectory log.

use alloc::vec::Vec;

use crate::analysis::{lyapunov_l1, lyapunov_l2, lyapunov_l3};
use crate::control::{attitude_setpoint, attitude_torque, ControllerConfig};
use crate::dynamics::{
    angular_acceleration, disturbance_at, DisturbanceModel, VehicleParams, VehicleState, Wrench,
};
use crate::error::ScenarioError;
use crate::geometry::{e3, euler_zyx, exp_so3, polar_project, Rot3, Vec3};
use crate::mission::{mission_step, Mode, MissionContext, MissionEvents, MissionOutput, MissionProfile, MissionState};
use crate::perception::{
    snapshot, window_centroid, CameraRig, FeatureNoise, FeatureSnapshot, PerceptionConfig, PerceptionState,
    SceneGeometry, WindowSpec,
};

/// How the commanded attitude reaches the airframe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AttitudeLoop {
    /// Torque from the geometric PD, integrated through the rigid body.
    #[default]
    Dynamic,
    /// Attitude set to the setpoint at each control update, rate zero.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SimOptions {
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    /// Ignore the camera field-of-view cones.
    pub ideal_visibility: bool,
    /// Upper limit on thrust, N; `None` leaves it unbounded.
    pub thrust_clamp: Option<f64>,
    /// Physics steps per control update.
    pub control_decimation: usize,
    /// Steps between polar re-orthonormalisations of `R`.
    pub reorthonormalize_every: usize,
    pub attitude_loop: AttitudeLoop,
    /// With the window-only profile, stop this long after crossing, s.
    pub stop_after_crossing: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 30.0,
            seed: 0,
            ideal_visibility: false,
            thrust_clamp: None,
            control_decimation: 1,
            reorthonormalize_every: 1000,
            attitude_loop: AttitudeLoop::Dynamic,
            stop_after_crossing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scene: SceneGeometry,
    pub vehicle: VehicleParams,
    pub cameras: CameraRig,
    pub initial: VehicleState,
    pub gains: ControllerConfig,
    pub disturbance: DisturbanceModel,
    pub noise: FeatureNoise,
    pub sim: SimOptions,
}

/// Largest `‖ξ_w‖` on the level set `‖q_w‖ = ε`, found by bisection along
/// a fixed set of directions around the window centre.
pub fn safety_region_extent(w: &WindowSpec, epsilon: f64) -> f64 {
    let u = w.u_axis.into_inner();
    let r = w.rho_axis();
    let n = w.normal.into_inner();
    let scale = w.width.max(w.height);
    let norm_at = |dir: &Vec3, s: f64| window_centroid(&(w.center + dir * s), w).map(|q| q.norm()).unwrap_or(1.0);
    let mut extent: f64 = 0.0;
    let steps = 24;
    for i in 0..=steps {
        let polar = core::f64::consts::PI * i as f64 / steps as f64;
        for j in 0..(2 * steps) {
            let az = core::f64::consts::PI * j as f64 / steps as f64;
            let dir = n * libm::cos(polar) + (u * libm::cos(az) + r * libm::sin(az)) * libm::sin(polar);
            // first bracket where the norm reaches ε
            let mut lo = 0.0;
            let mut hi = scale * 1e-3;
            while norm_at(&dir, hi) < epsilon && hi < 100.0 * scale {
                lo = hi;
                hi *= 1.2;
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if norm_at(&dir, mid) < epsilon {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            extent = extent.max(hi);
        }
    }
    extent
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.scene.validate()?;
        self.vehicle.validate()?;
        self.cameras.down.validate("vehicle.cameras.down")?;
        self.cameras.forward.validate("vehicle.cameras.forward")?;
        self.gains.validate()?;
        self.disturbance.validate()?;
        self.noise.validate()?;
        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt <= 0.02) {
            return Err(ScenarioError::invalid("sim.dt", "must lie in (0, 0.02] s"));
        }
        if !(s.duration >= 0.0) || !s.duration.is_finite() {
            return Err(ScenarioError::invalid("sim.duration", "must be non-negative"));
        }
        if s.control_decimation == 0 {
            return Err(ScenarioError::invalid("sim.control_decimation", "must be at least 1"));
        }
        if s.reorthonormalize_every == 0 {
            return Err(ScenarioError::invalid("sim.reorthonormalize_every", "must be at least 1"));
        }
        if let Some(c) = s.thrust_clamp {
            if !(c > 0.0) {
                return Err(ScenarioError::invalid("sim.thrust_clamp", "must be positive"));
            }
        }
        let xi = self.initial.position;
        if !(self.scene.pad.height(&xi) > 0.0) {
            return Err(ScenarioError::invalid("initial.position", "d_t(0) > 0 required: start above the pad plane"));
        }
        let profile = self.gains.mission.profile;
        if profile != MissionProfile::LandingOnly {
            let Some(w) = &self.scene.window else {
                return Err(ScenarioError::invalid("scene.window", "required unless the profile is landing_only"));
            };
            if !(w.wall_distance(&xi) > 0.0) {
                return Err(ScenarioError::invalid(
                    "initial.position",
                    "d_o(0) > 0 required: start in front of the window wall",
                ));
            }
            let eps = self.gains.window.epsilon;
            let extent = safety_region_extent(w, eps);
            let limit = 0.5 * w.width.min(w.height) - eps;
            if !(extent < limit) {
                return Err(ScenarioError::invalid(
                    "gains.window.epsilon",
                    alloc::format!(
                        "safety region reaches ‖ξ_w‖ = {extent:.4} m, not below r_w/2 − ε = {limit:.4} m"
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn initial_yaw(&self) -> f64 {
        euler_zyx(&self.initial.attitude)[2]
    }
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub mode: Mode,
    pub position: Vec3,
    pub velocity: Vec3,
    /// `[roll, pitch, yaw]`, Z-Y-X convention.
    pub euler: [f64; 3],
    pub angular_rate: Vec3,
    /// Commanded inertial force.
    pub force: Vec3,
    /// Applied thrust magnitude.
    pub thrust: f64,
    pub torque: Vec3,
    /// Noise-free centroids.
    pub q_t: Vec3,
    pub q_w: Vec3,
    /// Measured window features, zero when unavailable.
    pub qbar_w: Vec3,
    pub alpha_w: f64,
    pub phi_t: Vec3,
    pub phi_w: Vec3,
    pub d_t: f64,
    pub d_o: f64,
    pub d_e: f64,
    pub eta_w: Vec3,
    pub pad_visible: bool,
    pub window_visible: bool,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Duration,
    ShutdownComplete,
    MissionAbort,
    CrossingComplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub records: Vec<TrajectoryRecord>,
    pub events: MissionEvents,
    /// First time the vehicle reached the pad plane.
    pub contact: Option<f64>,
    pub termination: Termination,
}

impl TrajectoryLog {
    pub fn segment(&self, mode: Mode) -> impl Iterator<Item = &TrajectoryRecord> {
        self.records.iter().filter(move |r| r.mode == mode)
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }
}

/// Advances the rigid body by one step with the wrench and disturbance held.
///
/// `(ξ, v, Ω)` follow classical RK4. The attitude stages are
/// `R_k = R_0 exp(θ_k)` with `θ` integrated by the same tableau through
/// `θ̇ = Ω + ½ θ × Ω + (1/12) θ × (θ × Ω)`, which keeps `R` on SO(3) and the
/// coupled scheme fourth order.
pub fn rk4_step(state: &VehicleState, wrench: &Wrench, disturbance: &Vec3, params: &VehicleParams, dt: f64) -> VehicleState {
    let r0 = state.attitude;
    let accel = |r: &Rot3| (-(r * (e3() * wrench.thrust)) + e3() * params.weight() + disturbance) / params.mass;
    let dtheta = |theta: &Vec3, omega: &Vec3| {
        omega + theta.cross(omega) * 0.5 + theta.cross(&theta.cross(omega)) / 12.0
    };

    let (x1, v1, w1) = (state.position, state.velocity, state.angular_rate);
    let th1 = Vec3::zeros();
    let (kx1, kv1, kw1, kt1) = (v1, accel(&r0), angular_acceleration(&w1, &wrench.torque, params), dtheta(&th1, &w1));

    let h = 0.5 * dt;
    let (v2, w2, th2) = (v1 + kv1 * h, w1 + kw1 * h, th1 + kt1 * h);
    let r2 = r0 * exp_so3(&th2);
    let (kx2, kv2, kw2, kt2) = (v2, accel(&r2), angular_acceleration(&w2, &wrench.torque, params), dtheta(&th2, &w2));

    let (v3, w3, th3) = (v1 + kv2 * h, w1 + kw2 * h, th1 + kt2 * h);
    let r3 = r0 * exp_so3(&th3);
    let (kx3, kv3, kw3, kt3) = (v3, accel(&r3), angular_acceleration(&w3, &wrench.torque, params), dtheta(&th3, &w3));

    let (v4, w4, th4) = (v1 + kv3 * dt, w1 + kw3 * dt, th1 + kt3 * dt);
    let r4 = r0 * exp_so3(&th4);
    let (kx4, kv4, kw4, kt4) = (v4, accel(&r4), angular_acceleration(&w4, &wrench.torque, params), dtheta(&th4, &w4));

    let sixth = dt / 6.0;
    VehicleState {
        position: x1 + (kx1 + kx2 * 2.0 + kx3 * 2.0 + kx4) * sixth,
        velocity: v1 + (kv1 + kv2 * 2.0 + kv3 * 2.0 + kv4) * sixth,
        angular_rate: w1 + (kw1 + kw2 * 2.0 + kw3 * 2.0 + kw4) * sixth,
        attitude: r0 * exp_so3(&((kt1 + kt2 * 2.0 + kt3 * 2.0 + kt4) * sixth)),
    }
}

fn record(
    t: f64,
    mode: Mode,
    state: &VehicleState,
    snap: &FeatureSnapshot,
    force: Vec3,
    wrench: &Wrench,
    scenario: &Scenario,
) -> TrajectoryRecord {
    let pad = &scenario.scene.pad;
    let xi_t = state.position - pad.center();
    let l1 = lyapunov_l1(&xi_t, pad);
    let l2 = lyapunov_l2(&xi_t, &state.velocity, pad, &scenario.gains.landing, scenario.vehicle.mass);
    let l3 = scenario
        .scene
        .window
        .as_ref()
        .map_or(0.0, |w| lyapunov_l3(&w.relative(&state.position), &state.velocity, &w.normal, &scenario.gains.window));
    let d = &snap.distances;
    let (qbar_w, alpha_w, phi_w, eta_w) = match &snap.window {
        Some(w) => (w.qbar_w, w.alpha, w.phi_w, w.eta_hat.into_inner()),
        None => (Vec3::zeros(), 0.0, Vec3::zeros(), Vec3::zeros()),
    };
    let zero_nan = |x: f64| if x.is_nan() { 0.0 } else { x };
    TrajectoryRecord {
        t,
        mode,
        position: state.position,
        velocity: state.velocity,
        euler: euler_zyx(&state.attitude),
        angular_rate: state.angular_rate,
        force,
        thrust: wrench.thrust,
        torque: wrench.torque,
        q_t: snap.true_q_t,
        q_w: snap.true_q_w,
        qbar_w,
        alpha_w,
        phi_t: snap.pad.map_or(Vec3::zeros(), |p| p.phi_t),
        phi_w,
        d_t: d.d_t,
        d_o: zero_nan(d.d_o),
        d_e: zero_nan(d.d_e),
        eta_w,
        pad_visible: snap.pad_visible(),
        window_visible: snap.window_visible(),
        l1,
        l2,
        l3,
    }
}

/// Runs a validated scenario to completion.
///
/// Each step: snapshot, supervisor, attitude setpoint, torque, integration.
/// The vehicle rests on the pad plane once it reaches it.
pub fn run_scenario(scenario: &Scenario) -> Result<TrajectoryLog, ScenarioError> {
    scenario.validate()?;
    let opts = &scenario.sim;
    let params = scenario.vehicle;
    let pad = &scenario.scene.pad;
    let ctx = MissionContext {
        params,
        pad_normal: pad.normal,
        forward_boresight: scenario.cameras.forward.boresight_body(),
    };
    let perception_cfg = PerceptionConfig {
        epsilon: scenario.gains.window.epsilon,
        delta: scenario.gains.window.delta,
        ideal_visibility: opts.ideal_visibility,
    };
    let mut perception = PerceptionState::new(opts.seed ^ scenario.noise.seed);
    let mut mission = MissionState::new(&scenario.gains.mission, scenario.initial_yaw(), 0.0);
    let mut state = scenario.initial;
    let mut desired = state.attitude;
    let mut force = Vec3::zeros();
    let mut thrust = 0.0;
    let mut contact = None;
    let mut crossed_at: Option<f64> = None;
    let n_steps = libm::round(opts.duration / opts.dt) as usize;
    let mut records = Vec::with_capacity(n_steps + 1);
    let mut termination = Termination::Duration;

    for step in 0..=n_steps {
        let t = step as f64 * opts.dt;
        let snap = snapshot(&state, &scenario.scene, &scenario.cameras, &scenario.noise, &perception_cfg, &mut perception);

        let mut aborted = false;
        if step % opts.control_decimation == 0 {
            let (next, out) = mission_step(&mission, &snap, &scenario.gains, &ctx, t);
            mission = next;
            match out {
                MissionOutput::Command(cmd) => {
                    force = cmd.force;
                    match attitude_setpoint(&cmd.force, cmd.yaw) {
                        Ok((f_t, r_d)) => {
                            thrust = opts.thrust_clamp.map_or(f_t, |c| f_t.min(c));
                            desired = r_d;
                        }
                        // hold the previous attitude with the motors off
                        Err(_) => thrust = 0.0,
                    }
                }
                MissionOutput::Abort => aborted = true,
            }
            if opts.attitude_loop == AttitudeLoop::Ideal {
                state.attitude = desired;
                state.angular_rate = Vec3::zeros();
            }
        }
        let torque = match opts.attitude_loop {
            AttitudeLoop::Dynamic => attitude_torque(&state, &desired, &scenario.gains.attitude, &params),
            AttitudeLoop::Ideal => Vec3::zeros(),
        };
        let wrench = Wrench { thrust, torque };
        records.push(record(t, mission.mode, &state, &snap, force, &wrench, scenario));

        if aborted {
            termination = Termination::MissionAbort;
            break;
        }
        if let Some(t4) = mission.events.t4 {
            if t >= t4 + scenario.gains.mission.shutdown_ramp - 1e-9 {
                termination = Termination::ShutdownComplete;
                break;
            }
        }
        if scenario.gains.mission.profile == MissionProfile::WindowOnly {
            if crossed_at.is_none() && snap.distances.d_o <= 0.0 {
                crossed_at = Some(t);
            }
            if crossed_at.is_some_and(|tc| t >= tc + opts.stop_after_crossing) {
                termination = Termination::CrossingComplete;
                break;
            }
        }
        if step == n_steps {
            break;
        }

        let disturbance = disturbance_at(&scenario.disturbance, t);
        state = rk4_step(&state, &wrench, &disturbance, &params, opts.dt);
        if opts.attitude_loop == AttitudeLoop::Ideal {
            state.attitude = desired;
            state.angular_rate = Vec3::zeros();
        }
        if (step + 1) % opts.reorthonormalize_every == 0 {
            state.attitude = polar_project(state.attitude.matrix());
        }
        let height = pad.height(&state.position);
        if height < 0.0 {
            // ground contact: rest on the plane
            state.position += pad.normal.into_inner() * height;
            state.velocity = Vec3::zeros();
            contact.get_or_insert((step + 1) as f64 * opts.dt);
        }
    }

    Ok(TrajectoryLog { dt: opts.dt, records, events: mission.events, contact, termination })
}
