//! Virtual cameras and the image features derived from them.

mod features;
pub mod flow;
mod scene;
mod snapshot;

pub use features::*;
pub use flow::{flow_from_sphere_samples, FlowCalibration};
pub use scene::{CameraModel, CameraRig, FeatureNoise, LandingPad, SceneGeometry, WindowSpec};
pub use snapshot::{snapshot, FeatureSnapshot, PadFeatures, PerceptionConfig, PerceptionState, WindowFeatures};
