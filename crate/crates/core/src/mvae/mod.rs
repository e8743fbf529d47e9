//! Multimodal VAE with Product-of-Experts fusion, trained with hand-derived
//! gradients.

pub mod adam;
pub mod eval;
pub mod gauss;
pub mod mlp;
pub mod model;
pub mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use eval::{evaluate, mean_tactile_baseline, standard_rows, EvalRow, EvalTable};
pub use gauss::{
    bce_logits, bce_probs, gaussian_kl, poe_fuse, reparameterize, sigmoid, softplus, GaussianBelief,
};
pub use train::{
    curve_to_csv, load_checkpoint, save_checkpoint, standard_normal, train, validate, Checkpoint,
    EpochStats, TrainParams,
};
pub use model::{
    beta_schedule, gradient_check, mask_contains, ElboTerms, Modality, ModalityMask, ModelSpec,
    MvaeModel, Prediction, MASK_ALL, MODALITIES, N_MODALITIES,
};
