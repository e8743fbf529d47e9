//! Dataset persistence and preprocessing: the tns tensor container, episode
//! directories, train/validation splits, resolution changes, and
//! (input, target) pair extraction.

pub mod episode_io;
pub mod pairs;
pub mod tns;

pub use episode_io::{
    episode_dir, list_ids, next_id, read_episode, write_episode, write_episode_with_id,
};
pub use pairs::{
    crop_to_mask, downsample, make_pairs, pair_indices, resize_bilinear, split, PairMode, Sample,
    SamplePrep, TrainingPair,
};
pub use tns::Tensor;
