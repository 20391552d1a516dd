//! Image features built from unit bearings: centroids, window frame
//! recovery from edge lines, the weighted centroid and the flow cues.

use crate::error::PerceptionError;
use crate::geometry::{normalize, UnitVec3, Vec3, DEGENERATE_FLOOR};

use super::scene::{LandingPad, SceneGeometry, WindowSpec};

/// Distances below this are rejected by the flow constructions, m.
pub const FLOW_DISTANCE_FLOOR: f64 = 1e-6;

/// Bearing `P/‖P‖` of a point expressed relative to the camera centre.
pub fn spherical_project(p: &Vec3) -> Result<UnitVec3, PerceptionError> {
    Ok(normalize(p)?)
}

/// `−(1/n) Σ p_i`.
pub fn centroid(bearings: &[UnitVec3]) -> Vec3 {
    let sum: Vec3 = bearings.iter().map(|p| p.into_inner()).sum();
    -sum / bearings.len() as f64
}

pub fn bearings_to(position: &Vec3, points: &[Vec3]) -> Result<alloc::vec::Vec<UnitVec3>, PerceptionError> {
    points.iter().map(|s| spherical_project(&(s - position))).collect()
}

pub fn corner_bearings(position: &Vec3, w: &WindowSpec) -> Result<[UnitVec3; 4], PerceptionError> {
    let c = w.corners();
    Ok([
        spherical_project(&(c[0] - position))?,
        spherical_project(&(c[1] - position))?,
        spherical_project(&(c[2] - position))?,
        spherical_project(&(c[3] - position))?,
    ])
}

pub fn pad_centroid(position: &Vec3, pad: &LandingPad) -> Result<Vec3, PerceptionError> {
    Ok(centroid(&bearings_to(position, &pad.markers)?))
}

pub fn window_centroid(position: &Vec3, w: &WindowSpec) -> Result<Vec3, PerceptionError> {
    Ok(centroid(&corner_bearings(position, w)?))
}

/// Normals `h_i = p_i × p_{i+1}` of the planes through the camera centre
/// and each window edge.
pub fn edge_normals_from_bearings(p: &[UnitVec3; 4]) -> Result<[UnitVec3; 4], PerceptionError> {
    let h = |i: usize| normalize(&p[i].cross(&p[(i + 1) % 4]));
    Ok([h(0)?, h(1)?, h(2)?, h(3)?])
}

pub fn edge_plane_normals(position: &Vec3, w: &WindowSpec) -> Result<[UnitVec3; 4], PerceptionError> {
    edge_normals_from_bearings(&corner_bearings(position, w)?)
}

/// Window axes recovered from the four edge-plane normals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFrame {
    pub u: UnitVec3,
    pub rho: UnitVec3,
    pub eta: UnitVec3,
}

/// `ρ_w ∝ h_1 × h_3`, `u_w ∝ h_2 × h_4`, `η̂_w ∝ u_w × ρ_w`, with the sign of
/// `η̂_w` chosen so that `η̂_wᵀ q_w(0) < 0`.
pub fn window_frame_from_lines(h: &[UnitVec3; 4], q_w_initial: &Vec3) -> Result<WindowFrame, PerceptionError> {
    let rho = normalize(&h[0].cross(&h[2])).map_err(|_| PerceptionError::ParallelLines { first: 0, second: 2 })?;
    let u = normalize(&h[1].cross(&h[3])).map_err(|_| PerceptionError::ParallelLines { first: 1, second: 3 })?;
    let mut eta = normalize(&u.cross(&rho))?;
    if eta.dot(q_w_initial) > 0.0 {
        eta = -eta;
    }
    Ok(WindowFrame { u, rho, eta })
}

/// Unit direction `l^e` towards the closest window edge line.
///
/// Each candidate lies in its edge plane and is orthogonal to the edge
/// direction, so it points at the foot of the perpendicular from the camera
/// to that line. The closest line maximises `|η̂ᵀ l_i|`, since every foot lies
/// in the wall plane at the same depth `d_o`. Ties go to the lowest index.
pub fn closest_edge_direction(
    bearings: &[UnitVec3; 4],
    h: &[UnitVec3; 4],
    frame: &WindowFrame,
) -> Result<(UnitVec3, usize), PerceptionError> {
    let mut best: Option<(UnitVec3, usize, f64)> = None;
    for i in 0..4 {
        let axis = if i % 2 == 0 { frame.rho } else { frame.u };
        let mut l = normalize(&h[i].cross(&axis))?;
        if l.dot(&(bearings[i].into_inner() + bearings[(i + 1) % 4].into_inner())) < 0.0 {
            l = -l;
        }
        let score = frame.eta.dot(&l).abs();
        if best.is_none_or(|(_, _, s)| score > s) {
            best = Some((l, i, score));
        }
    }
    let (l, i, _) = best.expect("four candidates");
    Ok((l, i))
}

/// Piecewise-linear blend: 0 inside the safety region, 1 outside `ε + δ`.
pub fn weight_alpha(q_w_norm: f64, epsilon: f64, delta: f64) -> f64 {
    if q_w_norm <= epsilon {
        0.0
    } else if q_w_norm >= epsilon + delta {
        1.0
    } else {
        (q_w_norm - epsilon) / delta
    }
}

/// `q̄_w = −¼ Σ p_i [α/(η̂ᵀp_i) + (1−α)(η̂ᵀl^e)/(η̂ᵀp_i)]`.
pub fn weighted_window_centroid(
    bearings: &[UnitVec3; 4],
    eta: &UnitVec3,
    l_e: &UnitVec3,
    alpha: f64,
) -> Result<Vec3, PerceptionError> {
    let eta_l = eta.dot(l_e);
    let mut sum = Vec3::zeros();
    for (i, p) in bearings.iter().enumerate() {
        let eta_p = eta.dot(p);
        if eta_p.abs() < DEGENERATE_FLOOR {
            return Err(PerceptionError::WindowPlaneSingularity { corner: i });
        }
        sum += p.into_inner() * ((alpha + (1.0 - alpha) * eta_l) / eta_p);
    }
    Ok(-sum / 4.0)
}

/// `φ = v/d`.
pub fn translational_flow(v: &Vec3, d: f64) -> Result<Vec3, PerceptionError> {
    if !(d > FLOW_DISTANCE_FLOOR) {
        return Err(PerceptionError::DegenerateDistance { distance: d });
    }
    Ok(v / d)
}

/// `φ_w = α v/d_o + (1−α) v/d_e`. `d_o` is only required when `α > 0`.
pub fn window_flow(v: &Vec3, d_o: f64, d_e: f64, alpha: f64) -> Result<Vec3, PerceptionError> {
    let edge = translational_flow(v, d_e)?;
    if alpha == 0.0 {
        return Ok(edge);
    }
    Ok(translational_flow(v, d_o)? * alpha + edge * (1.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    pub d_t: f64,
    /// `NaN` when the scene has no window; likewise `d_e`.
    pub d_o: f64,
    pub d_e: f64,
    /// Index of the closest edge line.
    pub closest_edge: usize,
    /// `L^e`, vector from the vehicle to the foot on the closest edge line.
    pub to_edge: Vec3,
}

/// Vector from `position` to the closest point on edge line `i`.
pub fn to_edge_line(position: &Vec3, w: &WindowSpec, i: usize) -> Vec3 {
    let c = w.corners();
    let a = c[i];
    let dir = (c[(i + 1) % 4] - a).normalize();
    let foot = a + dir * dir.dot(&(position - a));
    foot - position
}

pub fn window_distances(position: &Vec3, w: &WindowSpec) -> (f64, f64, usize, Vec3) {
    let d_o = w.wall_distance(position);
    let mut best = (f64::INFINITY, 0, Vec3::zeros());
    for i in 0..4 {
        let l = to_edge_line(position, w, i);
        let n = l.norm();
        if n < best.0 {
            best = (n, i, l);
        }
    }
    (d_o, best.0, best.1, best.2)
}

pub fn distances(position: &Vec3, scene: &SceneGeometry) -> Distances {
    let d_t = scene.pad.height(position);
    match &scene.window {
        Some(w) => {
            let (d_o, d_e, closest_edge, to_edge) = window_distances(position, w);
            Distances { d_t, d_o, d_e, closest_edge, to_edge }
        }
        None => Distances { d_t, d_o: f64::NAN, d_e: f64::NAN, closest_edge: 0, to_edge: Vec3::zeros() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{from_euler_zyx, orthogonal_projector};
    use crate::perception::CameraModel;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn square_window() -> WindowSpec {
        WindowSpec {
            center: Vec3::new(-1.0, 0.0, -1.8),
            normal: Vec3::x_axis(),
            u_axis: Vec3::y_axis(),
            width: 1.0,
            height: 1.0,
        }
    }

    fn oblique_window() -> WindowSpec {
        let normal = normalize(&Vec3::new(1.0, 0.3, -0.2)).unwrap();
        let u = normalize(&normal.cross(&Vec3::new(0.1, 0.2, 1.0))).unwrap();
        WindowSpec { center: Vec3::new(0.4, -0.2, -1.5), normal, u_axis: u, width: 1.2, height: 0.7 }
    }

    #[test]
    fn spherical_projection() {
        assert_eq!(spherical_project(&Vec3::new(0.0, 0.0, 2.0)).unwrap().into_inner(), Vec3::z());
        assert!(matches!(spherical_project(&Vec3::zeros()), Err(PerceptionError::Geometry(_))));
    }

    #[test]
    fn projection_through_camera_matches_inertial() {
        let cam = CameraModel::forward(1.0);
        let attitude = from_euler_zyx([0.3, -0.2, 2.0]);
        let position = Vec3::new(0.2, -0.5, -1.0);
        let s = Vec3::new(-1.0, 0.4, -2.0);
        let in_camera = cam.to_camera(&attitude, &(s - position));
        let bar = spherical_project(&in_camera).unwrap();
        let derotated = attitude * (cam.mount() * bar.into_inner());
        let inertial = spherical_project(&(s - position)).unwrap();
        assert_relative_eq!(derotated, inertial.into_inner(), epsilon = 1e-14);
    }

    #[test]
    fn pad_centroid_above_center() {
        let pad = LandingPad::cross(0.5);
        let q = pad_centroid(&Vec3::new(0.0, 0.0, -1.0), &pad).unwrap();
        let expected = -1.0 / (1.25f64).sqrt();
        assert_relative_eq!(q, Vec3::new(0.0, 0.0, expected), epsilon = 1e-15);
        // β_t = d_t · mean(1/‖P_i‖)
        assert_relative_eq!(-q.z, 1.0 / 1.25f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn window_centroid_on_centerline() {
        let w = square_window();
        let position = w.center - w.normal.into_inner() * 2.0;
        let q = window_centroid(&position, &w).unwrap();
        assert_relative_eq!(q, -w.normal.into_inner() * (2.0 / 4.5f64.sqrt()), epsilon = 1e-15);
        assert_relative_eq!(q.norm(), 0.9428090415820634, epsilon = 1e-12);
    }

    #[test]
    fn edge_normals_are_orthogonal_to_endpoints() {
        let w = oblique_window();
        let position = Vec3::new(-1.0, 0.3, -1.2);
        let h = edge_plane_normals(&position, &w).unwrap();
        let c = w.corners();
        for i in 0..4 {
            assert!(h[i].dot(&(c[i] - position)).abs() < 1e-12);
            assert!(h[i].dot(&(c[(i + 1) % 4] - position)).abs() < 1e-12);
            assert_relative_eq!(h[i].norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn edge_normals_symmetric_on_centerline() {
        let w = WindowSpec { center: Vec3::zeros(), ..square_window() };
        let h = edge_plane_normals(&Vec3::new(-2.0, 0.0, 0.0), &w).unwrap();
        // edges 0 and 2 mirror each other through the plane y = 0
        assert_relative_eq!(h[0].x, h[2].x, epsilon = 1e-15);
        assert_relative_eq!(h[0].y, -h[2].y, epsilon = 1e-15);
        assert_relative_eq!(h[0].z, h[2].z, epsilon = 1e-15);
    }

    #[test]
    fn frame_in_window_plane_is_parallel_lines() {
        let w = square_window();
        let position = w.center + Vec3::new(0.0, 2.0, 0.3);
        let h = edge_plane_normals(&position, &w).unwrap();
        let q0 = Vec3::new(-1.0, 0.0, 0.0);
        assert!(matches!(
            window_frame_from_lines(&h, &q0),
            Err(PerceptionError::ParallelLines { .. })
        ));
    }

    #[test]
    fn frame_sign_rule() {
        let w = oblique_window();
        let position = w.center - w.normal.into_inner() * 1.5 + w.u_axis.into_inner() * 0.3;
        let q0 = window_centroid(&position, &w).unwrap();
        let frame = window_frame_from_lines(&edge_plane_normals(&position, &w).unwrap(), &q0).unwrap();
        assert!(frame.eta.dot(&q0) < 0.0);
        assert_relative_eq!(frame.eta.into_inner(), w.normal.into_inner(), epsilon = 1e-12);
    }

    #[test]
    fn closest_edge_tie_on_centerline() {
        let w = square_window();
        let position = w.center - w.normal.into_inner() * 1.3;
        let p = corner_bearings(&position, &w).unwrap();
        let h = edge_normals_from_bearings(&p).unwrap();
        let frame = window_frame_from_lines(&h, &centroid(&p)).unwrap();
        let (_, i) = closest_edge_direction(&p, &h, &frame).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn closest_edge_reconstructs_foot() {
        let w = square_window();
        // towards edge 0, the edge at −u (y = −0.5)
        let position = w.center - w.normal.into_inner() * 0.8 - w.u_axis.into_inner() * 0.3;
        let p = corner_bearings(&position, &w).unwrap();
        let h = edge_normals_from_bearings(&p).unwrap();
        let frame = window_frame_from_lines(&h, &centroid(&p)).unwrap();
        let (l, i) = closest_edge_direction(&p, &h, &frame).unwrap();
        assert_eq!(i, 0);
        let (_, d_e, edge, to_edge) = window_distances(&position, &w);
        assert_eq!(edge, 0);
        assert_relative_eq!(l.into_inner() * d_e, to_edge, epsilon = 1e-12);
        assert_relative_eq!(l.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn alpha_ramp() {
        assert_eq!(weight_alpha(0.18, 0.18, 0.05), 0.0);
        assert_relative_eq!(weight_alpha(0.205, 0.18, 0.05), 0.5, epsilon = 1e-12);
        assert_eq!(weight_alpha(1.0, 0.18, 0.05), 1.0);
    }

    #[test]
    fn weighted_centroid_on_centerline_is_minus_normal() {
        let w = square_window();
        let position = w.center - w.normal.into_inner() * 2.0;
        let p = corner_bearings(&position, &w).unwrap();
        let h = edge_normals_from_bearings(&p).unwrap();
        let frame = window_frame_from_lines(&h, &centroid(&p)).unwrap();
        let (l, _) = closest_edge_direction(&p, &h, &frame).unwrap();
        let q = weighted_window_centroid(&p, &frame.eta, &l, 1.0).unwrap();
        assert_relative_eq!(q, Vec3::new(-1.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn weighted_centroid_singular_in_plane() {
        let w = square_window();
        let p = corner_bearings(&(w.center + Vec3::new(0.0, 3.0, 0.0)), &w).unwrap();
        let eta = w.normal;
        assert!(matches!(
            weighted_window_centroid(&p, &eta, &Vec3::y_axis(), 0.5),
            Err(PerceptionError::WindowPlaneSingularity { .. })
        ));
    }

    #[test]
    fn flows() {
        assert_eq!(translational_flow(&Vec3::zeros(), 1.0).unwrap(), Vec3::zeros());
        assert_eq!(translational_flow(&Vec3::new(0.0, 0.0, 1.0), 2.0).unwrap(), Vec3::new(0.0, 0.0, 0.5));
        assert!(matches!(
            translational_flow(&Vec3::x(), FLOW_DISTANCE_FLOOR),
            Err(PerceptionError::DegenerateDistance { .. })
        ));
        let v = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(window_flow(&v, 2.0, 1.0, 1.0).unwrap(), v / 2.0);
        assert_eq!(window_flow(&v, 2.0, 1.0, 0.0).unwrap(), v);
        assert_relative_eq!(window_flow(&v, 2.0, 1.0, 0.5).unwrap(), Vec3::new(0.75, 0.0, 0.0));
    }

    #[test]
    fn distance_examples() {
        let w = WindowSpec { center: Vec3::zeros(), ..square_window() };
        let (d_o, d_e, _, _) = window_distances(&Vec3::zeros(), &w);
        assert_eq!(d_o, 0.0);
        assert_relative_eq!(d_e, 0.5, epsilon = 1e-15);
        let (d_o, d_e, _, _) = window_distances(&Vec3::new(-2.0, 0.0, 0.0), &w);
        assert_relative_eq!(d_o, 2.0);
        assert_relative_eq!(d_e, 4.25f64.sqrt(), epsilon = 1e-15);
        let scene = SceneGeometry { window: None, pad: LandingPad::cross(0.5) };
        assert_eq!(distances(&Vec3::new(0.3, 0.2, 0.0), &scene).d_t, 0.0);
    }

    fn vantage(w: &WindowSpec, a: f64, b: f64, d: f64) -> Vec3 {
        w.center - w.normal.into_inner() * d + w.u_axis.into_inner() * a + w.rho_axis() * b
    }

    proptest! {
        #[test]
        fn centroid_bounded_and_attitude_free(x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..-0.05f64,
                                              r in -3.0..3.0f64, p in -1.5..1.5f64, yw in -3.0..3.0f64) {
            let pad = LandingPad::cross(0.3);
            let position = Vec3::new(x, y, z);
            let q = pad_centroid(&position, &pad).unwrap();
            prop_assert!(q.norm() <= 1.0 + 1e-15);
            prop_assert!(-pad.normal.dot(&q) > 0.0);
            let attitude = from_euler_zyx([r, p, yw]);
            let cam = CameraModel::downward(1.0);
            let through_camera: alloc::vec::Vec<UnitVec3> = pad.markers.iter()
                .map(|s| {
                    let bar = spherical_project(&cam.to_camera(&attitude, &(s - position))).unwrap();
                    UnitVec3::new_normalize(attitude * (cam.mount() * bar.into_inner()))
                })
                .collect();
            prop_assert!((centroid(&through_camera) - q).norm() < 1e-12);
        }

        #[test]
        fn frame_recovery_exact(a in -1.5..1.5f64, b in -1.5..1.5f64, d in 0.01..4.0f64) {
            let w = oblique_window();
            let position = vantage(&w, a, b, d);
            let p = corner_bearings(&position, &w).unwrap();
            let h = edge_normals_from_bearings(&p).unwrap();
            let frame = window_frame_from_lines(&h, &centroid(&p)).unwrap();
            prop_assert!((frame.eta.into_inner() - w.normal.into_inner()).norm() < 1e-9);
        }

        #[test]
        fn weighted_centroid_matches_distances(a in -1.5..1.5f64, b in -1.0..1.0f64, d in 0.05..4.0f64,
                                               alpha in 0.0..1.0f64) {
            let w = oblique_window();
            let position = vantage(&w, a, b, d);
            let p = corner_bearings(&position, &w).unwrap();
            let h = edge_normals_from_bearings(&p).unwrap();
            let frame = window_frame_from_lines(&h, &centroid(&p)).unwrap();
            let (l, _) = closest_edge_direction(&p, &h, &frame).unwrap();
            let q = weighted_window_centroid(&p, &frame.eta, &l, alpha).unwrap();
            let (d_o, d_e, _, _) = window_distances(&position, &w);
            let xi = w.relative(&position);
            let oracle = xi * (alpha / d_o + (1.0 - alpha) / d_e);
            prop_assert!((q - oracle).norm() < 1e-9 * (1.0 + oracle.norm()));
        }

        #[test]
        fn edge_distance_decomposition(a in -1.5..1.5f64, b in -1.0..1.0f64, d in -2.0..4.0f64) {
            let w = oblique_window();
            let position = vantage(&w, a, b, d);
            let (d_o, d_e, _, to_edge) = window_distances(&position, &w);
            let lateral = orthogonal_projector(&w.normal) * to_edge;
            prop_assert!((d_e - (d_o * d_o + lateral.norm_squared()).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn alpha_continuous(x in 0.0..1.0f64) {
            let step = 1e-6;
            prop_assert!((weight_alpha(x + step, 0.18, 0.05) - weight_alpha(x, 0.18, 0.05)).abs() <= step / 0.05 + 1e-12);
        }
    }
}
