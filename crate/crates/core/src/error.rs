use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate vector (norm {norm:e} below floor)")]
    DegenerateVector { norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    /// Opposite window edges project to parallel interpretation planes,
    /// which happens when the camera sits in the window plane.
    #[error("edge lines {first} and {second} are parallel in the image")]
    ParallelLines { first: usize, second: usize },
    #[error("corner bearing {corner} lies in the window plane")]
    WindowPlaneSingularity { corner: usize },
    #[error("distance {distance:e} m is below the flow floor")]
    DegenerateDistance { distance: f64 },
    #[error("sampled rays do not reach the textured plane")]
    CapOutsidePlane,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("commanded force {norm:e} N is below the thrust floor")]
    ZeroForce { norm: f64 },
    #[error("yaw heading is parallel to the thrust direction")]
    YawSingularity,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ScenarioError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::Invalid { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("log has no samples in mode {mode}")]
    SegmentMissing { mode: u8 },
    #[error("no root: target ratio {target} is not below the attainable supremum {supremum}")]
    NoRoot { target: f64, supremum: f64 },
    #[error("vehicle never entered the safety region (min |q_w| = {min_q_w})")]
    NeverEntered { min_q_w: f64 },
    #[error("vehicle never crossed the window plane (min d_o = {min_d_o} m)")]
    NeverCrossed { min_d_o: f64 },
}
