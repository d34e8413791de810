use thiserror::Error;

/// Errors produced by the conversion library.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("image must be at least 3x3, got {width}x{height}")]
    ImageTooSmall { width: usize, height: usize },

    #[error("pixel buffer has {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },

    #[error("grid index {0} is outside 1..=9")]
    GridIndex(u8),

    #[error("pair {from}->{to} is not one of the canonical direction pairs")]
    NotCanonical { from: u8, to: u8 },

    #[error("invalid timestep order {0:?}: expected a permutation of the three groups")]
    InvalidOrder(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("batch images have mixed dimensions: {expected:?} vs {found:?} at index {index}")]
    MixedDimensions {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("bad magic bytes")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("unexpected layout tag {0}")]
    LayoutTag(u8),

    #[error("truncated file: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },

    #[error("inconsistent header: {0}")]
    Header(String),

    #[error("event records are not strictly increasing at record {0}")]
    Unsorted(usize),

    #[error("event record {index} out of range: {field}={value}")]
    CoordinateRange {
        index: usize,
        field: &'static str,
        value: usize,
    },

    #[error("target event rate {target} is unreachable (max achievable {max_rate})")]
    UnreachableTarget { target: f64, max_rate: f64 },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
