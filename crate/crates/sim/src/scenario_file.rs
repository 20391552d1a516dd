//! JSON scenario files.
//!
//! The file mirrors [`Scenario`] section by section. Two sections differ
//! from the in-memory layout: `vehicle` carries the inertia as three rows
//! and the camera rig, and `initial` gives the attitude as Z-Y-X Euler
//! angles.

use std::fs;
use std::path::Path;

use ibvs_core::control::ControllerConfig;
use ibvs_core::dynamics::{default_gravity, DisturbanceModel, VehicleParams, VehicleState};
use ibvs_core::geometry::{euler_zyx, from_euler_zyx, Mat3, Vec3};
use ibvs_core::perception::{CameraRig, FeatureNoise, SceneGeometry};
use ibvs_core::sim::{Scenario, SimOptions};
use serde::{Deserialize, Serialize};

use crate::error::SimError;

fn default_inertia_rows() -> [[f64; 3]; 3] {
    [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.02]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub mass: f64,
    #[serde(default = "default_inertia_rows")]
    pub inertia: [[f64; 3]; 3],
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub cameras: CameraRig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
    /// `[roll, pitch, yaw]`, rad
    #[serde(default)]
    pub euler_zyx: [f64; 3],
    #[serde(default)]
    pub angular_rate: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scene: SceneGeometry,
    pub vehicle: VehicleSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub gains: ControllerConfig,
    #[serde(default)]
    pub disturbance: DisturbanceModel,
    #[serde(default)]
    pub noise: FeatureNoise,
    #[serde(default)]
    pub sim: SimOptions,
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Scenario {
        let rows = &self.vehicle.inertia;
        let inertia = Mat3::from_fn(|i, j| rows[i][j]);
        let i = &self.initial;
        Scenario {
            scene: self.scene.clone(),
            vehicle: VehicleParams { mass: self.vehicle.mass, inertia, gravity: self.vehicle.gravity },
            cameras: self.vehicle.cameras.clone(),
            initial: VehicleState {
                position: Vec3::from(i.position),
                velocity: Vec3::from(i.velocity),
                attitude: from_euler_zyx(i.euler_zyx),
                angular_rate: Vec3::from(i.angular_rate),
            },
            gains: self.gains.clone(),
            disturbance: self.disturbance.clone(),
            noise: self.noise.clone(),
            sim: self.sim,
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let m = &s.vehicle.inertia;
        Self {
            scene: s.scene.clone(),
            vehicle: VehicleSection {
                mass: s.vehicle.mass,
                inertia: [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]]),
                gravity: s.vehicle.gravity,
                cameras: s.cameras.clone(),
            },
            initial: InitialSection {
                position: s.initial.position.into(),
                velocity: s.initial.velocity.into(),
                euler_zyx: euler_zyx(&s.initial.attitude),
                angular_rate: s.initial.angular_rate.into(),
            },
            gains: s.gains.clone(),
            disturbance: s.disturbance.clone(),
            noise: s.noise.clone(),
            sim: s.sim,
        }
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let mut key = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.to_string();
            // serde reports a missing field at its parent; name the field itself
            if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
                key = if key == "." { field.to_string() } else { format!("{key}.{field}") };
            }
            SimError::Parse { file: None, key, line: inner.line(), column: inner.column(), message }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }
}

/// Reads, converts and validates a scenario file.
pub fn read_scenario(path: &Path) -> Result<Scenario, SimError> {
    let file = read_scenario_file(path)?;
    let scenario = file.to_scenario();
    scenario.validate()?;
    Ok(scenario)
}

pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile, SimError> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    ScenarioFile::parse(&text).map_err(|e| e.in_file(path))
}

pub fn write_scenario(scenario: &Scenario, path: &Path) -> Result<(), SimError> {
    let text = ScenarioFile::from_scenario(scenario).to_json();
    fs::write(path, text + "\n").map_err(|e| SimError::io(path, e))
}
