//! Desk-scale rigid-body engine over convex primitives: integration with
//! plane contact, scenario setup, episode rollout, and the visual channel.

pub mod body;
pub mod contact;
pub mod episode;
pub mod sampler;
pub mod scenario;
pub mod visual;

pub use body::{Pose, RigidBody, Shape};
pub use contact::{step, StepInfo, StepParams, SupportPlane};
pub use episode::{run_episode, EpisodeParams, EpisodeRecord, Frame, SensorGeometry, SensorRig};
pub use sampler::{sample_episode, ScenarioConfig, ShapeKind};
pub use scenario::{detect_rest, incline_outcome, InclineOutcome, Perturbation, RestState, Scenario, ScenarioKind};
pub use visual::render_visual;
