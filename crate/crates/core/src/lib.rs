//! Visuotactile gel-sensor simulation and multimodal resting-state
//! prediction.
//!
//! The crate simulates a flat optical gel sensor: rigid bodies interact with
//! the sensor plane in three scenarios (freefall, incline, perturbation), the
//! gel response is solved with a per-pixel spring model, and tactile images
//! are rendered with a Phong reflectance kernel. On top of the generated
//! datasets, a multimodal variational autoencoder with Product-of-Experts
//! fusion predicts the resting configuration from initial observations.
//!
//! Numeric kernels are generic over the scalar type (see [`scalar::Real`]);
//! `f64` aliases are exported at the crate root.

pub mod compliance;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod heightfield;
pub mod mvae;
pub mod render;
pub mod scalar;
pub mod scene;

pub use error::{Error, Result};
pub use scalar::Real;

/// Concrete `f64` aliases for the common types.
pub type Vec3f = geom::Vec3<f64>;
pub type Quatf = geom::Quat<f64>;
pub type HeightMapF = heightfield::HeightMap<f64>;
pub type ScalarFieldF = heightfield::ScalarField<f64>;
pub type NormalFieldF = heightfield::NormalField<f64>;
pub type ImageRgbF = render::ImageRgb<f64>;
pub type PhongParamsF = render::PhongParams<f64>;
pub type SpringFieldF = compliance::SpringField<f64>;
pub type RigidBodyF = scene::RigidBody<f64>;
pub type ScenarioF = scene::Scenario<f64>;
pub type ScenarioConfigF = scene::ScenarioConfig<f64>;
pub type SensorRigF = scene::SensorRig<f64>;
pub type EpisodeRecordF = scene::EpisodeRecord<f64>;
pub type SampleF = dataset::Sample<f64>;
pub type TrainingPairF = dataset::TrainingPair<f64>;
pub type MvaeModelF = mvae::MvaeModel<f64>;
pub type GaussianBeliefF = mvae::GaussianBelief<f64>;
