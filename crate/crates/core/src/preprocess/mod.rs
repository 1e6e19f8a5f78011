//! Cross-scenario preprocessing: zero-padding to the global maximum
//! dimensions, the three augmentations (antenna deactivation, subcarrier
//! band removal, additive noise), delay-domain truncation, and the two
//! input representations (unit-norm magnitude features and raw re/im
//! vectors).
//!
//! Stages compose in a fixed order:
//! pad → deactivate → band-remove → noise → truncate → features.

mod augment;
mod features;
mod pad;

pub use augment::{
    add_noise, augment, deactivate_antennas, remove_subcarrier_band, AugmentConfig,
};
pub use features::{delay_truncate, extract_features, extract_raw, FeatureExtractor};
pub use pad::{zero_pad, MaxDims, PaddedCsi};
