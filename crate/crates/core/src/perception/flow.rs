//! Flow recovered by integrating the spherical image velocity over a cap.
//!
//! For a camera at distance `d` from a textured plane with normal `η`, a ray
//! `p` that hits the plane sees the image velocity `ṗ = −(ηᵀp/d) π_p v`
//! (translation only). Integrating over a cap around `η` gives `−(1/d) M v`
//! with `M` a constant matrix that depends only on the cap half-angle. `M`
//! is computed once by quadrature (the calibration) and the measurement is
//! a stratified Monte-Carlo estimate of the integral, so `−M⁻¹ ∫ṗ ≈ v/d`.

use libm::{cos, sin, sqrt};
use rand::Rng;

use crate::error::PerceptionError;
use crate::geometry::{orthogonal_projector, Mat3, UnitVec3, Vec3};

/// Quadrature nodes per axis used by [`FlowCalibration::new`].
const CALIBRATION_NODES: usize = 400;

/// Rotation taking `e3` to `eta`, built from an arbitrary orthonormal completion.
fn frame_for(eta: &UnitVec3) -> Mat3 {
    let helper = if eta.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let a = eta.cross(&helper).normalize();
    let b = eta.cross(&a);
    Mat3::from_columns(&[a, b, eta.into_inner()])
}

/// Image velocity of a static point on the plane seen along `p`.
pub fn image_velocity(p: &UnitVec3, eta: &UnitVec3, v: &Vec3, d: f64) -> Vec3 {
    -(eta.dot(p) / d) * (orthogonal_projector(p) * v)
}

/// Ray in the cap frame for `u = cos θ` and azimuth `ψ`.
fn ray(u: f64, psi: f64) -> Vec3 {
    let s = sqrt((1.0 - u * u).max(0.0));
    Vec3::new(s * cos(psi), s * sin(psi), u)
}

/// Diagonal of `M` in the cap frame (`e3` along the plane normal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCalibration {
    pub cap_half_angle: f64,
    pub lateral: f64,
    pub normal: f64,
}

impl FlowCalibration {
    /// Composite Simpson rule in `u = cos θ` and midpoint rule in azimuth,
    /// applied to `∫ (ηᵀp) π_p e_k dΩ` for unit velocities along each axis.
    pub fn new(cap_half_angle: f64) -> Self {
        let n = CALIBRATION_NODES;
        let u0 = cos(cap_half_angle);
        let hu = (1.0 - u0) / n as f64;
        let hpsi = 2.0 * core::f64::consts::PI / n as f64;
        let mut m = Mat3::zeros();
        for i in 0..=n {
            let w_u = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let u = u0 + hu * i as f64;
            for j in 0..n {
                let psi = hpsi * (j as f64 + 0.5);
                let p = ray(u, psi);
                let proj = Mat3::identity() - p * p.transpose();
                m += proj * (u * w_u);
            }
        }
        m *= hu / 3.0 * hpsi;
        Self { cap_half_angle, lateral: 0.5 * (m[(0, 0)] + m[(1, 1)]), normal: m[(2, 2)] }
    }

    /// `M` expressed in inertial axes for a plane with normal `eta`.
    pub fn matrix(&self, eta: &UnitVec3) -> Mat3 {
        let r = frame_for(eta);
        r * Mat3::from_diagonal(&Vec3::new(self.lateral, self.lateral, self.normal)) * r.transpose()
    }
}

/// Closed-form entries of `M` for a cap of half-angle `θ_c`, used to check
/// the quadrature calibration.
pub fn calibration_closed_form(cap_half_angle: f64) -> (f64, f64) {
    let c = cos(cap_half_angle);
    let pi = core::f64::consts::PI;
    // ∫ u du and ∫ u(1 − u²) du over [c, 1]
    let i1 = 0.5 * (1.0 - c * c);
    let i3 = i1 - 0.25 * (1.0 - c * c * c * c);
    let normal = 2.0 * pi * i3;
    let lateral = 2.0 * pi * i1 - pi * i3;
    (lateral, normal)
}

/// Monte-Carlo flow estimate `−M⁻¹ ∫_cap ṗ dΩ`.
///
/// The plane is `{x : ηᵀx = offset}` and the camera sits on the side where
/// `d = offset − ηᵀξ > 0`. Samples are stratified on an `m × m` grid in
/// `(cos θ, ψ)` with `m = ⌊√n⌋`; the remaining samples are drawn uniformly.
#[allow(clippy::too_many_arguments)]
pub fn flow_from_sphere_samples<R: Rng + ?Sized>(
    position: &Vec3,
    v: &Vec3,
    eta: &UnitVec3,
    offset: f64,
    calibration: &FlowCalibration,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec3, PerceptionError> {
    let d = offset - eta.dot(position);
    let theta = calibration.cap_half_angle;
    if !(d > 0.0) || !(theta > 0.0 && theta < core::f64::consts::FRAC_PI_2) || n_samples == 0 {
        return Err(PerceptionError::CapOutsidePlane);
    }
    let frame = frame_for(eta);
    let u0 = cos(theta);
    let tau = 2.0 * core::f64::consts::PI;
    let local_v = frame.transpose() * v;
    let sample = |u: f64, psi: f64| {
        let p = ray(u, psi);
        -(p.z / d) * (local_v - p * p.dot(&local_v))
    };

    let strata = sqrt(n_samples as f64) as usize;
    let mut sum = Vec3::zeros();
    let mut count = 0usize;
    // Each stratified cell and each leftover sample estimates the integral
    // as (cap area) × (integrand); averaging keeps the weights equal.
    for i in 0..strata {
        for j in 0..strata {
            let u = u0 + (1.0 - u0) * (i as f64 + rng.random::<f64>()) / strata as f64;
            let psi = tau * (j as f64 + rng.random::<f64>()) / strata as f64;
            sum += sample(u, psi);
            count += 1;
        }
    }
    while count < n_samples {
        let u = u0 + (1.0 - u0) * rng.random::<f64>();
        let psi = tau * rng.random::<f64>();
        sum += sample(u, psi);
        count += 1;
    }
    let area = tau * (1.0 - u0);
    let integral = sum * (area / count as f64);
    let estimate = Vec3::new(
        -integral.x / calibration.lateral,
        -integral.y / calibration.lateral,
        -integral.z / calibration.normal,
    );
    Ok(frame * estimate)
}
