//! Built-in scenarios: the nominal mission, the disturbance cases and the
//! randomized suites used by the acceptance tests.

use ibvs_core::control::{AttitudeGains, ControllerConfig};
use ibvs_core::dynamics::{DisturbanceModel, VehicleParams, VehicleState};
use ibvs_core::geometry::{from_euler_zyx, Vec3};
use ibvs_core::mission::MissionProfile;
use ibvs_core::perception::{CameraRig, FeatureNoise, LandingPad, SceneGeometry, WindowSpec};
use ibvs_core::sim::{Scenario, SimOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Half-span of the cross-shaped pad, m.
pub const PAD_HALF_SPAN: f64 = 0.09;

/// Inner loop near 400 rad/s. Close to the pad the landing law damps at
/// `k_d / (m d_t)`, above 100 1/s below 2 cm, so the attitude has to settle
/// faster than that.
pub const INNER_LOOP: AttitudeGains = AttitudeGains { k_r: 1600.0, k_omega: 6.0 };

pub const NOMINAL_START: [f64; 3] = [-2.0, 0.1, -1.82];

/// Heading that points the forward camera along `+e1`.
pub const NOMINAL_YAW: f64 = 3.0 * core::f64::consts::FRAC_PI_4;

/// 1 m × 1 m window in the wall `x = −1`, centred 1.8 m above the pad plane.
pub fn nominal_window() -> WindowSpec {
    WindowSpec {
        center: Vec3::new(-1.0, 0.0, -1.8),
        normal: Vec3::x_axis(),
        u_axis: Vec3::y_axis(),
        width: 1.0,
        height: 1.0,
    }
}

pub fn nominal_scene() -> SceneGeometry {
    SceneGeometry { window: Some(nominal_window()), pad: LandingPad::cross(PAD_HALF_SPAN) }
}

pub fn start_state(position: Vec3, yaw: f64) -> VehicleState {
    let mut s = VehicleState::at_rest(position);
    s.attitude = from_euler_zyx([0.0, 0.0, yaw]);
    s
}

pub fn nominal() -> Scenario {
    Scenario {
        scene: nominal_scene(),
        vehicle: VehicleParams::default(),
        cameras: CameraRig::default(),
        initial: start_state(Vec3::from(NOMINAL_START), NOMINAL_YAW),
        gains: ControllerConfig { attitude: INNER_LOOP, ..ControllerConfig::default() },
        disturbance: DisturbanceModel::zero(),
        noise: FeatureNoise::default(),
        sim: SimOptions::default(),
    }
}

/// Five starts behind the wall spanning ±1 m laterally and ±0.5 m vertically
/// around the window centre line.
pub fn sweep_starts() -> Vec<Vec3> {
    vec![
        Vec3::new(-2.0, 0.1, -1.82),
        Vec3::new(-2.0, 1.0, -1.8),
        Vec3::new(-2.0, -1.0, -1.8),
        Vec3::new(-2.2, 0.5, -2.3),
        Vec3::new(-2.2, -0.5, -1.3),
    ]
}

pub fn nominal_from(position: Vec3) -> Scenario {
    let mut s = nominal();
    s.initial = start_state(position, NOMINAL_YAW);
    s
}

/// Landing law alone: cameras without field-of-view limits and no shutdown,
/// so the run shows the asymptotic behaviour up to the horizon.
fn landing_law_only(position: Vec3) -> Scenario {
    let mut s = landing_only(position, 0.0);
    s.sim.ideal_visibility = true;
    s.gains.mission.shutdown = false;
    s.sim.duration = 40.0;
    s
}

fn landing_only(position: Vec3, yaw: f64) -> Scenario {
    let mut s = nominal();
    s.scene.window = None;
    s.gains.mission.profile = MissionProfile::LandingOnly;
    s.initial = start_state(position, yaw);
    s
}

/// Obstacle-free landing from a random start with `d_t(0) ∈ [0.5, 3]` m.
pub fn random_landing(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let height = rng.random_range(0.5..=3.0);
    // keep the pad inside the downward cone at the start
    let reach = 0.6 * height;
    let x = rng.random_range(-reach..=reach);
    let y = rng.random_range(-reach..=reach);
    let yaw = rng.random_range(-core::f64::consts::PI..core::f64::consts::PI);
    let mut s = landing_only(Vec3::new(x, y, -height), yaw);
    s.sim.seed = seed;
    s
}

/// Landing under a constant horizontal push of 0.2 m/s² with `φ*_t = 0`.
pub fn horizontal_disturbance() -> Scenario {
    let mut s = landing_law_only(Vec3::new(0.3, -0.2, -1.5));
    let params = s.vehicle;
    let push = Vec3::new(0.6, 0.8, 0.0) * (0.2 * params.mass);
    s.disturbance = DisturbanceModel::horizontal_constant(push, s.scene.pad.normal);
    s
}

/// Landing under a constant push with a 0.3 m/s² component along `η_t`
/// and `φ*_t = 1.25 · 0.3 / k_d3`.
pub fn vertical_disturbance() -> Scenario {
    let mut s = landing_law_only(Vec3::new(0.3, -0.2, -1.5));
    let params = s.vehicle;
    let accel = 0.3;
    // upward push, opposing the descent
    s.disturbance = DisturbanceModel::constant(Vec3::new(0.1, 0.0, -accel) * params.mass);
    s.gains.landing.phi_star = 1.25 * accel / s.gains.landing.k_d3;
    s
}

/// Window approach from a random start with `d_o(0) ∈ [1, 3]` m and a
/// lateral offset up to 0.8 m; the run stops shortly after crossing.
pub fn random_crossing(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = nominal_window();
    let d_o = rng.random_range(1.0..=3.0);
    let offset = rng.random_range(0.0..=0.8);
    let angle = rng.random_range(0.0..core::f64::consts::TAU);
    let lateral = Vec3::new(0.0, offset * angle.cos(), offset * angle.sin());
    let position = w.center - w.normal.into_inner() * d_o + lateral;
    let mut s = nominal_from(position);
    s.gains.mission.profile = MissionProfile::WindowOnly;
    s.sim.seed = seed;
    s
}
