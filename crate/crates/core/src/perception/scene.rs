use alloc::vec::Vec;

use libm::{cos, tan};

use crate::error::ScenarioError;
use crate::geometry::{from_euler_zyx, Rot3, UnitVec3, Vec3};

/// Landing pad: coplanar markers on the target plane.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LandingPad {
    pub markers: Vec<Vec3>,
    /// Target-plane normal `η_t`, pointing from the vehicle side into the plane.
    pub normal: UnitVec3,
}

impl LandingPad {
    /// Four markers at `(±a, 0, 0)` and `(0, ±a, 0)` on the plane `z = 0`.
    pub fn cross(a: f64) -> Self {
        Self {
            markers: alloc::vec![
                Vec3::new(a, 0.0, 0.0),
                Vec3::new(0.0, a, 0.0),
                Vec3::new(-a, 0.0, 0.0),
                Vec3::new(0.0, -a, 0.0),
            ],
            normal: Vec3::z_axis(),
        }
    }

    pub fn center(&self) -> Vec3 {
        let sum: Vec3 = self.markers.iter().sum();
        sum / self.markers.len() as f64
    }

    /// Height of `position` above the pad plane, `d_t = −η_tᵀ(ξ − c)`.
    pub fn height(&self, position: &Vec3) -> f64 {
        -self.normal.dot(&(position - self.center()))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.markers.len() < 3 {
            return Err(ScenarioError::invalid("scene.pad.markers", "need at least 3 markers"));
        }
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::invalid("scene.pad.normal", "must be a unit vector"));
        }
        let c = self.center();
        for (i, s) in self.markers.iter().enumerate() {
            if self.normal.dot(&(s - c)).abs() > 1e-9 {
                return Err(ScenarioError::invalid(
                    "scene.pad.markers",
                    alloc::format!("marker {i} is not in the pad plane"),
                ));
            }
        }
        let base = self.markers[1] - self.markers[0];
        let spans = self.markers[2..].iter().any(|s| base.cross(&(s - self.markers[0])).norm() > 1e-9);
        if !spans {
            return Err(ScenarioError::invalid("scene.pad.markers", "markers are collinear"));
        }
        Ok(())
    }
}

/// Rectangular window in a planar wall.
///
/// Corners are generated in cyclic order so that edges 0 and 2 run along
/// `ρ_w = u_w × η_w` (length `height`) and edges 1 and 3 run along `u_w`
/// (length `width`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct WindowSpec {
    pub center: Vec3,
    /// Wall normal `η_w`, pointing from the approach side through the window.
    pub normal: UnitVec3,
    /// In-plane axis `u_w` along the width.
    pub u_axis: UnitVec3,
    pub width: f64,
    pub height: f64,
}

impl WindowSpec {
    pub fn rho_axis(&self) -> Vec3 {
        self.u_axis.cross(&self.normal)
    }

    pub fn corners(&self) -> [Vec3; 4] {
        let u = self.u_axis.into_inner() * (0.5 * self.width);
        let r = self.rho_axis() * (0.5 * self.height);
        let c = self.center;
        [c - u - r, c - u + r, c + u + r, c + u - r]
    }

    /// `r_w`, the known window width.
    pub fn clearance(&self) -> f64 {
        self.width
    }

    /// Position relative to the window centre, `ξ_w`.
    pub fn relative(&self, position: &Vec3) -> Vec3 {
        position - self.center
    }

    /// Signed distance in front of the wall, `d_o = −η_wᵀξ_w`.
    pub fn wall_distance(&self, position: &Vec3) -> f64 {
        -self.normal.dot(&self.relative(position))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if (self.normal.norm() - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::invalid("scene.window.normal", "must be a unit vector"));
        }
        if (self.u_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::invalid("scene.window.u_axis", "must be a unit vector"));
        }
        if self.normal.dot(&self.u_axis).abs() > 1e-9 {
            return Err(ScenarioError::invalid("scene.window.u_axis", "must be orthogonal to the normal"));
        }
        if !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(ScenarioError::invalid("scene.window", "width and height must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SceneGeometry {
    /// Wall with the window; `None` for an obstacle-free landing scene.
    #[cfg_attr(feature = "serde", serde(default))]
    pub window: Option<WindowSpec>,
    pub pad: LandingPad,
}

impl SceneGeometry {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.pad.validate()?;
        if let Some(w) = &self.window {
            w.validate()?;
        }
        Ok(())
    }
}

/// Pinhole camera rigidly mounted at the centre of mass.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CameraModel {
    /// Camera → body rotation as Z-Y-X Euler `[roll, pitch, yaw]`, rad.
    pub mount_euler: [f64; 3],
    /// Half-angle of the visibility cone around the optical axis, rad.
    pub fov_half_angle: f64,
}

impl CameraModel {
    /// Camera frame coincides with the body frame, optical axis along body `e3`.
    pub fn downward(fov_half_angle: f64) -> Self {
        Self { mount_euler: [0.0, 0.0, 0.0], fov_half_angle }
    }

    /// Forward mount `R_Z(−π/4) R_X(π/2)`.
    pub fn forward(fov_half_angle: f64) -> Self {
        Self {
            mount_euler: [core::f64::consts::FRAC_PI_2, 0.0, -core::f64::consts::FRAC_PI_4],
            fov_half_angle,
        }
    }

    pub fn mount(&self) -> Rot3 {
        from_euler_zyx(self.mount_euler)
    }

    /// Optical axis expressed in the body frame.
    pub fn boresight_body(&self) -> Vec3 {
        self.mount() * Vec3::z()
    }

    /// Bearing (inertial) expressed in camera coordinates.
    pub fn to_camera(&self, attitude: &Rot3, bearing: &Vec3) -> Vec3 {
        self.mount().inverse() * (attitude.inverse() * bearing)
    }

    pub fn sees(&self, attitude: &Rot3, bearing: &UnitVec3) -> bool {
        self.to_camera(attitude, bearing).z >= cos(self.fov_half_angle)
    }

    /// Radius of the visible disc on a plane at `distance` along the axis.
    pub fn footprint_radius(&self, distance: f64) -> f64 {
        distance * tan(self.fov_half_angle)
    }

    pub fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle < core::f64::consts::FRAC_PI_2) {
            return Err(ScenarioError::invalid(
                alloc::format!("{field}.fov_half_angle"),
                "must lie in (0, π/2)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CameraRig {
    pub down: CameraModel,
    pub forward: CameraModel,
}

impl Default for CameraRig {
    fn default() -> Self {
        Self { down: CameraModel::downward(1.45), forward: CameraModel::forward(1.2) }
    }
}

/// Sensor noise applied by [`snapshot`](super::snapshot).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct FeatureNoise {
    /// Std-dev of the angular perturbation of each bearing, rad.
    #[cfg_attr(feature = "serde", serde(default))]
    pub bearing_sigma: f64,
    /// Std-dev of the multiplicative flow error.
    #[cfg_attr(feature = "serde", serde(default))]
    pub flow_relative_sigma: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl Default for FeatureNoise {
    fn default() -> Self {
        Self { bearing_sigma: 0.0, flow_relative_sigma: 0.0, seed: 0 }
    }
}

impl FeatureNoise {
    pub fn is_zero(&self) -> bool {
        self.bearing_sigma == 0.0 && self.flow_relative_sigma == 0.0
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.bearing_sigma >= 0.0) || !(self.flow_relative_sigma >= 0.0) {
            return Err(ScenarioError::invalid("noise", "sigmas must be non-negative"));
        }
        Ok(())
    }
}
