use libm::{cos, sin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::VehicleState;
use crate::geometry::{normalize, UnitVec3, Vec3};

use super::features::{
    bearings_to, centroid, closest_edge_direction, corner_bearings, distances, edge_normals_from_bearings,
    translational_flow, weight_alpha, weighted_window_centroid, window_flow, window_frame_from_lines, Distances,
};
use super::scene::{CameraRig, FeatureNoise, SceneGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadFeatures {
    pub q_t: Vec3,
    pub phi_t: Vec3,
}

impl PadFeatures {
    /// `β_t = −η_tᵀ q_t`.
    pub fn beta(&self, normal: &UnitVec3) -> f64 {
        -normal.dot(&self.q_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeatures {
    pub q_w: Vec3,
    pub qbar_w: Vec3,
    pub eta_hat: UnitVec3,
    pub l_e: UnitVec3,
    pub closest_edge: usize,
    pub alpha: f64,
    pub phi_w: Vec3,
    /// Corner bearings, inertial axes, as measured.
    pub bearings: [UnitVec3; 4],
}

/// What the two cameras report at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSnapshot {
    pub pad: Option<PadFeatures>,
    pub window: Option<WindowFeatures>,
    /// Noise-free centroids for logging; zero when undefined.
    pub true_q_t: Vec3,
    pub true_q_w: Vec3,
    pub distances: Distances,
}

impl FeatureSnapshot {
    pub fn pad_visible(&self) -> bool {
        self.pad.is_some()
    }

    pub fn window_visible(&self) -> bool {
        self.window.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerceptionConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Skip the field-of-view cone tests (side-of-plane tests still apply).
    pub ideal_visibility: bool,
}

/// Mutable perception context carried across frames.
#[derive(Debug, Clone)]
pub struct PerceptionState {
    rng: ChaCha8Rng,
    /// `q_w` at first window detection, which fixes the sign of `η̂_w`.
    pub q_w_initial: Option<Vec3>,
}

impl PerceptionState {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), q_w_initial: None }
    }
}

fn perturb_bearing(p: UnitVec3, sigma: f64, rng: &mut ChaCha8Rng) -> UnitVec3 {
    if sigma == 0.0 {
        return p;
    }
    let r = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
    let angle: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
    let Ok(axis) = normalize(&p.cross(&r)) else {
        return p;
    };
    // rotation about an axis orthogonal to p
    let tangent = axis.cross(&p);
    UnitVec3::new_normalize(p.into_inner() * cos(angle) + tangent * sin(angle))
}

fn perturb_flow(phi: Vec3, sigma: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    if sigma == 0.0 {
        return phi;
    }
    phi.map(|c| c * (1.0 + sigma * rng.sample::<f64, _>(StandardNormal)))
}

/// Evaluates both virtual cameras at `state`.
///
/// The pad is visible when every marker lies in the downward cone, the
/// vehicle is above the pad plane and, if a wall exists, past it. The
/// window is visible when every corner lies in the forward cone and the
/// vehicle is in front of the wall. Failed constructions count as not
/// visible.
pub fn snapshot(
    state: &VehicleState,
    scene: &SceneGeometry,
    cameras: &CameraRig,
    noise: &FeatureNoise,
    config: &PerceptionConfig,
    perception: &mut PerceptionState,
) -> FeatureSnapshot {
    let position = state.position;
    let dist = distances(&position, scene);
    let rng = &mut perception.rng;

    let pad_bearings = bearings_to(&position, &scene.pad.markers).ok();
    let true_q_t = pad_bearings.as_deref().map(centroid).unwrap_or_else(Vec3::zeros);
    let behind_wall = scene.window.is_none() || dist.d_o < 0.0;
    let pad = match pad_bearings {
        Some(b)
            if dist.d_t > 0.0
                && behind_wall
                && (config.ideal_visibility || b.iter().all(|p| cameras.down.sees(&state.attitude, p))) =>
        {
            let noisy: alloc::vec::Vec<UnitVec3> =
                b.into_iter().map(|p| perturb_bearing(p, noise.bearing_sigma, rng)).collect();
            translational_flow(&state.velocity, dist.d_t).ok().map(|phi| PadFeatures {
                q_t: centroid(&noisy),
                phi_t: perturb_flow(phi, noise.flow_relative_sigma, rng),
            })
        }
        _ => None,
    };

    let mut true_q_w = Vec3::zeros();
    let mut window = None;
    if let Some(w) = &scene.window {
        if let Ok(b) = corner_bearings(&position, w) {
            true_q_w = centroid(&b);
            let in_view = config.ideal_visibility || b.iter().all(|p| cameras.forward.sees(&state.attitude, p));
            if dist.d_o > 0.0 && in_view {
                let noisy = b.map(|p| perturb_bearing(p, noise.bearing_sigma, rng));
                let q_w = centroid(&noisy);
                let reference = *perception.q_w_initial.get_or_insert(q_w);
                window = (|| {
                    let h = edge_normals_from_bearings(&noisy).ok()?;
                    let frame = window_frame_from_lines(&h, &reference).ok()?;
                    let (l_e, closest_edge) = closest_edge_direction(&noisy, &h, &frame).ok()?;
                    let alpha = weight_alpha(q_w.norm(), config.epsilon, config.delta);
                    let qbar_w = weighted_window_centroid(&noisy, &frame.eta, &l_e, alpha).ok()?;
                    let phi = window_flow(&state.velocity, dist.d_o, dist.d_e, alpha).ok()?;
                    Some(WindowFeatures {
                        q_w,
                        qbar_w,
                        eta_hat: frame.eta,
                        l_e,
                        closest_edge,
                        alpha,
                        phi_w: phi,
                        bearings: noisy,
                    })
                })();
                if let Some(f) = &mut window {
                    f.phi_w = perturb_flow(f.phi_w, noise.flow_relative_sigma, rng);
                }
            }
        }
    }

    FeatureSnapshot { pad, window, true_q_t, true_q_w, distances: dist }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{from_euler_zyx, Rot3};
    use crate::perception::{pad_centroid, CameraModel, LandingPad, WindowSpec};
    use approx::assert_relative_eq;

    fn scene() -> SceneGeometry {
        SceneGeometry {
            window: Some(WindowSpec {
                center: Vec3::new(-1.0, 0.0, -1.8),
                normal: Vec3::x_axis(),
                u_axis: Vec3::y_axis(),
                width: 1.0,
                height: 1.0,
            }),
            pad: LandingPad::cross(0.5),
        }
    }

    fn config() -> PerceptionConfig {
        PerceptionConfig { epsilon: 0.18, delta: 0.05, ideal_visibility: false }
    }

    fn facing_window(position: Vec3) -> VehicleState {
        let mut s = VehicleState::at_rest(position);
        s.attitude = from_euler_zyx([0.0, 0.0, 3.0 * core::f64::consts::FRAC_PI_4]);
        s
    }

    #[test]
    fn in_front_of_window_sees_window_only() {
        let state = facing_window(Vec3::new(-3.0, 0.0, -1.8));
        let snap = snapshot(&state, &scene(), &CameraRig::default(), &FeatureNoise::default(), &config(), &mut PerceptionState::new(0));
        assert!(snap.window_visible());
        assert!(!snap.pad_visible());
        let w = snap.window.unwrap();
        assert_relative_eq!(w.eta_hat.into_inner(), Vec3::x(), epsilon = 1e-12);
        assert_eq!(w.alpha, 1.0);
    }

    #[test]
    fn facing_away_hides_window() {
        let mut state = facing_window(Vec3::new(-3.0, 0.0, -1.8));
        state.attitude = Rot3::identity();
        let snap = snapshot(&state, &scene(), &CameraRig::default(), &FeatureNoise::default(), &config(), &mut PerceptionState::new(0));
        assert!(!snap.window_visible());
    }

    #[test]
    fn over_pad_cone_test() {
        let scene = SceneGeometry { window: None, pad: LandingPad::cross(0.5) };
        let cameras = CameraRig { down: CameraModel::downward(core::f64::consts::FRAC_PI_3), ..CameraRig::default() };
        let state = VehicleState::at_rest(Vec3::new(0.0, 0.0, -1.0));
        let snap = snapshot(&state, &scene, &cameras, &FeatureNoise::default(), &config(), &mut PerceptionState::new(0));
        assert!(snap.pad_visible());
        assert!(libm::atan(0.5) < core::f64::consts::FRAC_PI_3);
        let narrow = CameraRig { down: CameraModel::downward(0.4), ..CameraRig::default() };
        let snap = snapshot(&state, &scene, &narrow, &FeatureNoise::default(), &config(), &mut PerceptionState::new(0));
        assert!(!snap.pad_visible());
    }

    #[test]
    fn zero_noise_is_exact() {
        let scene = SceneGeometry { window: None, pad: LandingPad::cross(0.5) };
        let mut state = VehicleState::at_rest(Vec3::new(0.2, -0.1, -1.3));
        state.velocity = Vec3::new(0.1, 0.0, 0.2);
        let snap = snapshot(&state, &scene, &CameraRig::default(), &FeatureNoise::default(), &config(), &mut PerceptionState::new(9));
        let pad = snap.pad.unwrap();
        assert_eq!(pad.q_t, pad_centroid(&state.position, &scene.pad).unwrap());
        assert_eq!(pad.phi_t, state.velocity / 1.3);
    }

    #[test]
    fn noise_is_seeded() {
        let noise = FeatureNoise { bearing_sigma: 1e-3, flow_relative_sigma: 0.05, seed: 0 };
        let state = facing_window(Vec3::new(-2.5, 0.2, -1.7));
        let run = |seed| {
            let mut p = PerceptionState::new(seed);
            snapshot(&state, &scene(), &CameraRig::default(), &noise, &config(), &mut p)
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
        let w = run(4).window.unwrap();
        assert!((w.eta_hat.into_inner() - Vec3::x()).norm() < 0.05);
    }

    #[test]
    fn bearing_perturbation_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = UnitVec3::new_normalize(Vec3::new(0.3, 0.1, 1.0));
        let mut sum = 0.0;
        let n = 2000;
        for _ in 0..n {
            let q = perturb_bearing(p, 0.01, &mut rng);
            assert_relative_eq!(q.norm(), 1.0, epsilon = 1e-12);
            let a = libm::acos(p.dot(&q).min(1.0));
            sum += a * a;
        }
        let rms = libm::sqrt(sum / n as f64);
        assert!((rms - 0.01).abs() < 0.001, "rms {rms}");
    }
}
