//! Outer-loop force laws, gain conditions and the attitude inner loop.

use alloc::vec::Vec;
use core::fmt;

use libm::{atan2, cos, sin};

use crate::dynamics::{VehicleParams, VehicleState};
use crate::error::{ControlError, ScenarioError};
use crate::geometry::{e3, normalize_with_floor, orthogonal_projector, vee, Mat3, Rot3, UnitVec3, Vec3};
use crate::mission::MissionSettings;

/// Commanded force below this norm is treated as zero, N.
pub const THRUST_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LandingGains {
    pub k_p12: f64,
    pub k_p3: f64,
    pub k_d12: f64,
    pub k_d3: f64,
    /// Descent flow offset `φ*_t`; zero gives the nominal law.
    #[cfg_attr(feature = "serde", serde(default))]
    pub phi_star: f64,
}

impl Default for LandingGains {
    fn default() -> Self {
        Self { k_p12: 4.0, k_p3: 1.75, k_d12: 4.0, k_d3: 4.0, phi_star: 0.0 }
    }
}

impl LandingGains {
    /// `K_p = k_p12 π_η + k_p3 η ηᵀ`.
    pub fn k_p(&self, eta_t: &UnitVec3) -> Mat3 {
        split_gain(self.k_p12, self.k_p3, eta_t)
    }

    pub fn k_d(&self, eta_t: &UnitVec3) -> Mat3 {
        split_gain(self.k_d12, self.k_d3, eta_t)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, g) in [("k_p12", self.k_p12), ("k_p3", self.k_p3), ("k_d12", self.k_d12), ("k_d3", self.k_d3)] {
            if !(g > 0.0) {
                return Err(ScenarioError::invalid(alloc::format!("gains.landing.{name}"), "must be positive"));
            }
        }
        if !(self.phi_star >= 0.0) {
            return Err(ScenarioError::invalid("gains.landing.phi_star", "must be non-negative"));
        }
        Ok(())
    }
}

fn split_gain(lateral: f64, normal: f64, eta: &UnitVec3) -> Mat3 {
    orthogonal_projector(eta) * lateral + eta.as_ref() * eta.transpose() * normal
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct WindowGains {
    pub k_p: f64,
    pub k_d: f64,
    pub k_phi: f64,
    pub phi_star: f64,
    /// Safety-region radius on `‖q_w‖`.
    pub epsilon: f64,
    /// Width of the blending ramp beyond `epsilon`.
    pub delta: f64,
}

impl Default for WindowGains {
    fn default() -> Self {
        Self { k_p: 1.0, k_d: 0.8, k_phi: 1.0, phi_star: 0.3, epsilon: 0.18, delta: 0.05 }
    }
}

impl WindowGains {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fields = [
            ("k_p", self.k_p),
            ("k_d", self.k_d),
            ("k_phi", self.k_phi),
            ("phi_star", self.phi_star),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
        ];
        for (name, g) in fields {
            if !(g > 0.0) {
                return Err(ScenarioError::invalid(alloc::format!("gains.window.{name}"), "must be positive"));
            }
        }
        if self.epsilon + self.delta >= 1.0 {
            return Err(ScenarioError::invalid("gains.window.epsilon", "epsilon + delta must be below 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct AttitudeGains {
    pub k_r: f64,
    pub k_omega: f64,
}

impl Default for AttitudeGains {
    fn default() -> Self {
        Self { k_r: 5.0, k_omega: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ControllerConfig {
    #[cfg_attr(feature = "serde", serde(default))]
    pub landing: LandingGains,
    #[cfg_attr(feature = "serde", serde(default))]
    pub window: WindowGains,
    #[cfg_attr(feature = "serde", serde(default))]
    pub attitude: AttitudeGains,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mission: MissionSettings,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.landing.validate()?;
        self.window.validate()?;
        if !(self.attitude.k_r > 0.0 && self.attitude.k_omega > 0.0) {
            return Err(ScenarioError::invalid("gains.attitude", "gains must be positive"));
        }
        self.mission.validate()
    }
}

/// Outer-loop output: inertial force and desired heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceCommand {
    pub force: Vec3,
    pub yaw: f64,
}

/// `F = K_p q_t + K_d (φ_t − η_t φ*_t) + m g e3`.
pub fn landing_force(q_t: &Vec3, phi_t: &Vec3, gains: &LandingGains, eta_t: &UnitVec3, params: &VehicleParams) -> Vec3 {
    gains.k_p(eta_t) * q_t + gains.k_d(eta_t) * (phi_t - eta_t.into_inner() * gains.phi_star) + e3() * params.weight()
}

/// Gate of the window law: 0 once `η̂ᵀ q_w ≥ 0` (window plane crossed).
pub fn sigma(q_w: &Vec3, eta_hat: &UnitVec3) -> f64 {
    if eta_hat.dot(q_w) >= 0.0 {
        0.0
    } else {
        1.0
    }
}

/// `F = σ (k_p π q̄_w + k_d π φ_w + k_φ η̂ (η̂ᵀφ_w − φ*_w) + m g e3)`.
pub fn window_force(
    qbar_w: &Vec3,
    phi_w: &Vec3,
    q_w: &Vec3,
    eta_hat: &UnitVec3,
    gains: &WindowGains,
    params: &VehicleParams,
) -> Vec3 {
    if sigma(q_w, eta_hat) == 0.0 {
        return Vec3::zeros();
    }
    let pi = orthogonal_projector(eta_hat);
    pi * (qbar_w * gains.k_p + phi_w * gains.k_d)
        + eta_hat.into_inner() * (gains.k_phi * (eta_hat.dot(phi_w) - gains.phi_star))
        + e3() * params.weight()
}

/// Heading that puts a body-frame boresight (horizontal part) along `target`.
pub fn yaw_aligning(boresight_body: &Vec3, target: &Vec3) -> f64 {
    atan2(target.y, target.x) - atan2(boresight_body.y, boresight_body.x)
}

/// One inequality of the gain report.
#[derive(Debug, Clone, PartialEq)]
pub struct GainCondition {
    pub name: &'static str,
    pub inequality: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Inclusive (`≥`) rather than strict (`>`).
    pub inclusive: bool,
}

impl GainCondition {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn passed(&self) -> bool {
        if self.inclusive {
            self.lhs >= self.rhs
        } else {
            self.lhs > self.rhs
        }
    }
}

impl fmt::Display for GainCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (verdict, op) = match (self.passed(), self.inclusive) {
            (true, false) => ("PASS", ">"),
            (true, true) => ("PASS", "≥"),
            (false, false) => ("FAIL", "≤"),
            (false, true) => ("FAIL", "<"),
        };
        write!(
            f,
            "{verdict} {} = {:.2} {op} {:.2} (requires {}, margin {:+.4})",
            self.name,
            self.lhs,
            self.rhs,
            self.inequality,
            self.margin()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub conditions: Vec<GainCondition>,
}

impl GainReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(GainCondition::passed)
    }
}

/// Bounds on the disturbance acceleration `Δ/m` along the plane normals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceBound {
    pub along_window_normal: f64,
    pub along_pad_normal: f64,
}

/// Crossing conditions `k_d²/k_p > r_w/2` and `φ*_w > |η_wᵀΔ|/k_φ + ε`,
/// and the landing condition `φ*_t ≥ |η_tᵀΔ|/k_d3`.
pub fn validate_gains(window: &WindowGains, landing: &LandingGains, r_w: f64, bound: &DisturbanceBound) -> GainReport {
    let conditions = alloc::vec![
        GainCondition {
            name: "k_d²/k_p",
            inequality: "k_d²/k_p > r_w/2",
            lhs: window.k_d * window.k_d / window.k_p,
            rhs: 0.5 * r_w,
            inclusive: false,
        },
        GainCondition {
            name: "φ*_w",
            inequality: "φ*_w > |η_wᵀΔ|/k_φ + ε",
            lhs: window.phi_star,
            rhs: bound.along_window_normal.abs() / window.k_phi + window.epsilon,
            inclusive: false,
        },
        GainCondition {
            name: "φ*_t",
            inequality: "φ*_t ≥ |η_tᵀΔ|/k_d3",
            lhs: landing.phi_star,
            rhs: bound.along_pad_normal.abs() / landing.k_d3,
            inclusive: true,
        },
    ];
    GainReport { conditions }
}

/// Thrust magnitude and desired attitude for an inertial force.
///
/// The third column of `R_d` is `F/‖F‖`; the first is the heading
/// `(cos ψ, sin ψ, 0)` projected onto the plane orthogonal to it.
pub fn attitude_setpoint(force: &Vec3, yaw: f64) -> Result<(f64, Rot3), ControlError> {
    let thrust = force.norm();
    if !(thrust > THRUST_FLOOR) {
        return Err(ControlError::ZeroForce { norm: thrust });
    }
    let b3 = force / thrust;
    let heading = Vec3::new(cos(yaw), sin(yaw), 0.0);
    let b1 = normalize_with_floor(&(heading - b3 * b3.dot(&heading)), 1e-6)
        .map_err(|_| ControlError::YawSingularity)?
        .into_inner();
    let b2 = b3.cross(&b1);
    Ok((thrust, Rot3::from_matrix_unchecked(Mat3::from_columns(&[b1, b2, b3]))))
}

/// Geometric PD on SO(3) with gyroscopic feed-forward, zero desired rate.
pub fn attitude_torque(state: &VehicleState, desired: &Rot3, gains: &AttitudeGains, params: &VehicleParams) -> Vec3 {
    let r = state.attitude.matrix();
    let rd = desired.matrix();
    let e_r = vee(&(rd.transpose() * r - r.transpose() * rd)) * 0.5;
    let omega = state.angular_rate;
    -e_r * gains.k_r - omega * gains.k_omega + omega.cross(&(params.inertia * omega))
}
