//! Static image to event stream conversion.
//!
//! An RGB image becomes a `T x 2 x H x W` binary event volume by simulating
//! one-pixel eye movements: the intensity map is correlated with eight
//! sparse 3x3 difference kernels and thresholded against a per-image
//! sensitivity. The crate also provides the on-disk containers, rate and
//! entropy statistics, sensitivity calibration, a first-layer energy model
//! and a LIF neuron with surrogate gradients for downstream checks.

pub mod convert;
pub mod energy;
pub mod error;
pub mod formats;
pub mod kernels;
pub mod naive;
pub mod spiking;
pub mod stats;
pub mod synth;

pub use convert::{
    convert, convert_batch, convert_seeded, delta_v, dynamic_threshold, fire, rgb_to_value,
    sample_seed, Augment, ConversionConfig, DeltaVolume, EventVolume, IntensityMap, Padding,
    Polarity, RgbImage,
};
pub use error::{Error, Result};
pub use formats::{CompressionReport, FileMeta, Layout};
pub use kernels::{
    build_canonical_kernels, equivalent_pairs, sample_kernel_set, DirectionPair, GridPosition,
    MotionKernelSet, TimestepOrder,
};
pub use stats::{calibrate_s_th0, event_rate, Calibration, EntropyReport, EventRateStats};

/// Library version, shared by the CLI and any bindings.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
