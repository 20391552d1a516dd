//! Rigid-body quadrotor model.
//!
//! Inertial frame with `e3` pointing down, so gravity is `+m g e3` and
//! altitude above the pad plane is `-ξ_z`. Thrust acts along `-R e3`.
//! The disturbance enters as a force in newtons.

use core::f64::consts::PI;

use crate::error::ScenarioError;
use crate::geometry::{e3, Mat3, Rot3, UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// kg·m², body frame
    #[cfg_attr(feature = "serde", serde(default = "default_inertia"))]
    pub inertia: Mat3,
    /// m/s²
    #[cfg_attr(feature = "serde", serde(default = "default_gravity"))]
    pub gravity: f64,
}

pub fn default_inertia() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(0.01, 0.01, 0.02))
}

pub fn default_gravity() -> f64 {
    9.81
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { mass: 1.676, inertia: default_inertia(), gravity: default_gravity() }
    }
}

impl VehicleParams {
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(ScenarioError::invalid("vehicle.mass", "must be positive"));
        }
        if !(self.gravity > 0.0) {
            return Err(ScenarioError::invalid("vehicle.gravity", "must be positive"));
        }
        let i = &self.inertia;
        if (i - i.transpose()).abs().max() > 1e-12 {
            return Err(ScenarioError::invalid("vehicle.inertia", "must be symmetric"));
        }
        if i.cholesky().is_none() {
            return Err(ScenarioError::invalid("vehicle.inertia", "must be positive definite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// body → inertial
    pub attitude: Rot3,
    /// body frame, rad/s
    pub angular_rate: Vec3,
}

impl VehicleState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            attitude: Rot3::identity(),
            angular_rate: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    /// N, non-negative
    pub thrust: f64,
    /// N·m, body frame
    pub torque: Vec3,
}

impl Wrench {
    pub fn hover(params: &VehicleParams) -> Self {
        Self { thrust: params.weight(), torque: Vec3::zeros() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DisturbanceKind {
    Zero,
    Constant,
    Sinusoid,
    /// Constant force confined to the pad plane.
    HorizontalConstant,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DisturbanceModel {
    pub kind: DisturbanceKind,
    /// N
    #[cfg_attr(feature = "serde", serde(default = "Vec3::zeros"))]
    pub amplitude: Vec3,
    /// Hz
    #[cfg_attr(feature = "serde", serde(default))]
    pub frequency: f64,
    /// rad
    #[cfg_attr(feature = "serde", serde(default))]
    pub phase: f64,
    #[cfg_attr(feature = "serde", serde(default = "Vec3::z_axis"))]
    pub horizontal_reference: UnitVec3,
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        Self::zero()
    }
}

impl DisturbanceModel {
    pub fn zero() -> Self {
        Self {
            kind: DisturbanceKind::Zero,
            amplitude: Vec3::zeros(),
            frequency: 0.0,
            phase: 0.0,
            horizontal_reference: Vec3::z_axis(),
        }
    }

    pub fn constant(amplitude: Vec3) -> Self {
        Self { kind: DisturbanceKind::Constant, amplitude, ..Self::zero() }
    }

    pub fn sinusoid(amplitude: Vec3, frequency: f64, phase: f64) -> Self {
        Self { kind: DisturbanceKind::Sinusoid, amplitude, frequency, phase, ..Self::zero() }
    }

    /// Constant force in the plane orthogonal to `normal`; the out-of-plane
    /// part of `amplitude` is removed.
    pub fn horizontal_constant(amplitude: Vec3, normal: UnitVec3) -> Self {
        let n = normal.into_inner();
        let mut a = amplitude - n * n.dot(&amplitude);
        // Snap residual round-off so the invariant holds exactly for axis normals.
        for k in 0..3 {
            if n[k].abs() == 1.0 {
                a[k] = 0.0;
            }
        }
        Self {
            kind: DisturbanceKind::HorizontalConstant,
            amplitude: a,
            horizontal_reference: normal,
            ..Self::zero()
        }
    }

    /// Largest force magnitude the model can produce, N.
    pub fn max_norm(&self) -> f64 {
        match self.kind {
            DisturbanceKind::Zero => 0.0,
            _ => self.amplitude.norm(),
        }
    }

    /// Largest `|ηᵀΔ(t)|` over time for a given plane normal.
    pub fn max_along(&self, direction: &UnitVec3) -> f64 {
        match self.kind {
            DisturbanceKind::Zero => 0.0,
            _ => direction.dot(&self.amplitude).abs(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !self.amplitude.iter().all(|a| a.is_finite()) {
            return Err(ScenarioError::invalid("disturbance.amplitude", "must be finite"));
        }
        if self.kind == DisturbanceKind::HorizontalConstant
            && self.horizontal_reference.dot(&self.amplitude).abs() > 1e-12
        {
            return Err(ScenarioError::invalid(
                "disturbance.amplitude",
                "horizontal_constant amplitude must be orthogonal to horizontal_reference",
            ));
        }
        if self.kind == DisturbanceKind::Sinusoid && !(self.frequency >= 0.0) {
            return Err(ScenarioError::invalid("disturbance.frequency", "must be non-negative"));
        }
        Ok(())
    }
}

/// Disturbance force at time `t`, N.
pub fn disturbance_at(model: &DisturbanceModel, t: f64) -> Vec3 {
    match model.kind {
        DisturbanceKind::Zero => Vec3::zeros(),
        DisturbanceKind::Constant | DisturbanceKind::HorizontalConstant => model.amplitude,
        DisturbanceKind::Sinusoid => {
            model.amplitude * libm::sin(2.0 * PI * model.frequency * t + model.phase)
        }
    }
}

/// `(ξ̇, v̇)` with `m v̇ = −F_T R e3 + m g e3 + Δ`.
pub fn translational_derivative(
    state: &VehicleState,
    thrust: f64,
    disturbance: &Vec3,
    params: &VehicleParams,
) -> (Vec3, Vec3) {
    let thrust_force = state.attitude * (e3() * thrust);
    let accel = (-thrust_force + e3() * params.weight() + disturbance) / params.mass;
    (state.velocity, accel)
}

/// `Ω̇ = I⁻¹(−Ω × IΩ + Γ)`.
pub fn rotational_derivative(state: &VehicleState, torque: &Vec3, params: &VehicleParams) -> Vec3 {
    angular_acceleration(&state.angular_rate, torque, params)
}

pub(crate) fn angular_acceleration(omega: &Vec3, torque: &Vec3, params: &VehicleParams) -> Vec3 {
    let i = &params.inertia;
    let rhs = -omega.cross(&(i * omega)) + torque;
    // Inertia is validated SPD, so the solve cannot fail for loaded scenarios.
    i.cholesky().map(|c| c.solve(&rhs)).unwrap_or_else(Vec3::zeros)
}
