//! Image to event conversion.
//!
//! The pipeline takes the per-pixel channel maximum as intensity, correlates
//! it with one sparse 3x3 kernel per timestep, and fires ON/OFF events where
//! the signed response exceeds a per-image threshold proportional to the
//! intensity range.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    build_canonical_kernels, sample_kernel_set, Kernel, MotionKernelSet, TimestepOrder, DIRECTIONS,
};

/// Interleaved 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image from a per-pixel `(x, y) -> [r, g, b]` function.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 3 || height < 3 {
        return Err(Error::ImageTooSmall { width, height });
    }
    Ok(())
}

/// Single-channel intensity map (HSV value channel).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityMap {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl IntensityMap {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::BufferLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    /// `(min, max)` over all pixels.
    pub fn range(&self) -> (u8, u8) {
        self.data
            .iter()
            .fold((u8::MAX, u8::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// Per-timestep intensity change maps, values in −255..=255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaVolume {
    width: usize,
    height: usize,
    planes: Vec<i16>,
}

impl DeltaVolume {
    pub fn from_planes(width: usize, height: usize, planes: Vec<i16>) -> Result<Self> {
        let plane = width * height;
        if plane == 0 || planes.len() % plane != 0 {
            return Err(Error::BufferLength {
                expected: plane * DIRECTIONS,
                actual: planes.len(),
            });
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn timesteps(&self) -> usize {
        self.planes.len() / (self.width * self.height)
    }

    pub fn plane(&self, t: usize) -> &[i16] {
        let n = self.width * self.height;
        &self.planes[t * n..(t + 1) * n]
    }

    pub fn get(&self, t: usize, x: usize, y: usize) -> i16 {
        self.plane(t)[y * self.width + x]
    }
}

/// Event polarity. ON is channel 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    On = 0,
    Off = 1,
}

impl Polarity {
    /// Event fired by a single intensity change against threshold `s_th`.
    pub fn from_delta(delta: f64, s_th: f64) -> Option<Polarity> {
        if delta > s_th {
            Some(Polarity::On)
        } else if -delta > s_th {
            Some(Polarity::Off)
        } else {
            None
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Dense binary events, shape `T x 2 x H x W`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventVolume {
    timesteps: usize,
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl EventVolume {
    pub fn zeros(timesteps: usize, height: usize, width: usize) -> Self {
        Self {
            timesteps,
            height,
            width,
            bits: vec![false; timesteps * 2 * height * width],
        }
    }

    pub fn from_bits(timesteps: usize, height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        let expected = timesteps * 2 * height * width;
        if bits.len() != expected {
            return Err(Error::BufferLength {
                expected,
                actual: bits.len(),
            });
        }
        Ok(Self {
            timesteps,
            height,
            width,
            bits,
        })
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `[T, 2, H, W]`.
    pub fn shape(&self) -> [usize; 4] {
        [self.timesteps, 2, self.height, self.width]
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn offset(&self, t: usize, p: Polarity, x: usize, y: usize) -> usize {
        ((t * 2 + p.index()) * self.height + y) * self.width + x
    }

    pub fn get(&self, t: usize, p: Polarity, x: usize, y: usize) -> bool {
        self.bits[self.offset(t, p, x, y)]
    }

    pub fn set(&mut self, t: usize, p: Polarity, x: usize, y: usize, value: bool) {
        let i = self.offset(t, p, x, y);
        self.bits[i] = value;
    }

    /// One `H x W` channel plane.
    pub fn plane(&self, t: usize, p: Polarity) -> &[bool] {
        let n = self.height * self.width;
        let start = (t * 2 + p.index()) * n;
        &self.bits[start..start + n]
    }

    pub fn plane_mut(&mut self, t: usize, p: Polarity) -> &mut [bool] {
        let n = self.height * self.width;
        let start = (t * 2 + p.index()) * n;
        &mut self.bits[start..start + n]
    }

    /// All bits in `(t, p, y, x)` order.
    pub fn as_bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Events as `(t, p, x, y)` in `(t, p, y, x)` order.
    pub fn events(&self) -> impl Iterator<Item = (usize, Polarity, usize, usize)> + '_ {
        let (h, w) = (self.height, self.width);
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| {
            let x = i % w;
            let y = (i / w) % h;
            let c = i / (w * h);
            let p = if c % 2 == 0 { Polarity::On } else { Polarity::Off };
            (c / 2, p, x, y)
        })
    }
}

/// Border handling for the 3x3 correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Zero,
    #[default]
    Replicate,
}

impl std::str::FromStr for Padding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Padding::Zero),
            "replicate" => Ok(Padding::Replicate),
            _ => Err(Error::InvalidConfig(format!("unknown padding {s:?}"))),
        }
    }
}

/// Kernel selection: fixed canonical pairs or a seeded draw per image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Augment {
    #[default]
    Canonical,
    Random,
}

impl std::str::FromStr for Augment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Augment::Canonical),
            "random" => Ok(Augment::Random),
            _ => Err(Error::InvalidConfig(format!("unknown augment mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionConfig {
    pub s_th0: f64,
    pub timesteps: usize,
    pub order: TimestepOrder,
    pub padding: Padding,
    pub augment: Augment,
    pub seed: u64,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        Self {
            s_th0: 0.12,
            timesteps: DIRECTIONS,
            order: TimestepOrder::default(),
            padding: Padding::Replicate,
            augment: Augment::Canonical,
            seed: 2024,
        }
    }
}

impl ConversionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_th0.is_finite() && self.s_th0 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "s_th0 must be positive and finite, got {}",
                self.s_th0
            )));
        }
        if !(1..=DIRECTIONS).contains(&self.timesteps) {
            return Err(Error::InvalidConfig(format!(
                "timesteps must be in 1..=8, got {}",
                self.timesteps
            )));
        }
        Ok(())
    }

    /// Kernel set used for an image whose RNG stream is `kernel_seed`.
    pub fn kernel_set(&self, kernel_seed: u64) -> MotionKernelSet {
        match self.augment {
            Augment::Canonical => build_canonical_kernels(),
            Augment::Random => sample_kernel_set(kernel_seed),
        }
    }
}

/// Per-sample seed derived from a base seed and a stream index.
pub fn sample_seed(base: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-pixel maximum over R, G and B.
pub fn rgb_to_value(img: &RgbImage) -> IntensityMap {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| px[0].max(px[1]).max(px[2]))
        .collect();
    IntensityMap {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Intensity map with a one-pixel border, widened to i16.
fn pad_map(v: &IntensityMap, padding: Padding) -> Vec<i16> {
    let (w, h) = (v.width, v.height);
    let pw = w + 2;
    let mut out = vec![0i16; pw * (h + 2)];
    for y in 0..h {
        let dst = &mut out[(y + 1) * pw..(y + 2) * pw];
        let src = &v.data[y * w..(y + 1) * w];
        for (d, &s) in dst[1..=w].iter_mut().zip(src) {
            *d = s as i16;
        }
        if padding == Padding::Replicate {
            dst[0] = src[0] as i16;
            dst[w + 1] = src[w - 1] as i16;
        }
    }
    if padding == Padding::Replicate {
        out.copy_within(pw..2 * pw, 0);
        out.copy_within(h * pw..(h + 1) * pw, (h + 1) * pw);
    }
    out
}

/// Correlates the padded map with `kernel` into `out` (one `H x W` plane).
fn correlate_plane(padded: &[i16], width: usize, height: usize, kernel: &Kernel, out: &mut [i16]) {
    let pw = width + 2;
    out.fill(0);
    for (r, c, w) in kernel.taps() {
        let w = w as i16;
        for y in 0..height {
            let src = &padded[(y + r) * pw + c..][..width];
            let dst = &mut out[y * width..(y + 1) * width];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
}

/// All eight change maps, in kernel-set (label) order.
pub fn delta_v(v: &IntensityMap, kernels: &MotionKernelSet, padding: Padding) -> DeltaVolume {
    let n = v.width * v.height;
    let padded = pad_map(v, padding);
    let mut planes = vec![0i16; n * DIRECTIONS];
    for (t, out) in planes.chunks_exact_mut(n).enumerate() {
        correlate_plane(&padded, v.width, v.height, &kernels.kernel(t), out);
    }
    DeltaVolume {
        width: v.width,
        height: v.height,
        planes,
    }
}

/// Firing threshold in intensity units: `s_th0 * (max - min)`.
pub fn dynamic_threshold(v: &IntensityMap, s_th0: f64) -> f64 {
    let (lo, hi) = v.range();
    s_th0 * f64::from(hi - lo)
}

/// Largest integer change that does not fire at threshold `s_th`.
///
/// For integer `d`, `d > s_th` holds exactly when `d > floor(s_th)`.
pub fn integer_cutoff(s_th: f64) -> i16 {
    if s_th >= 256.0 {
        256
    } else {
        s_th.floor() as i16
    }
}

fn fire_plane(delta: &[i16], cutoff: i16, on: &mut [bool], off: &mut [bool]) {
    for ((&d, on), off) in delta.iter().zip(on.iter_mut()).zip(off.iter_mut()) {
        *on = d > cutoff;
        *off = -d > cutoff;
    }
}

/// Thresholds every plane of `dv`. Strict inequalities: a change equal to
/// `s_th` fires nothing.
pub fn fire(dv: &DeltaVolume, s_th: f64) -> EventVolume {
    let cutoff = integer_cutoff(s_th);
    let t_count = dv.timesteps();
    let mut vol = EventVolume::zeros(t_count, dv.height, dv.width);
    let n = dv.width * dv.height;
    for (t, chunk) in vol.bits.chunks_exact_mut(2 * n).enumerate() {
        let (on, off) = chunk.split_at_mut(n);
        fire_plane(dv.plane(t), cutoff, on, off);
    }
    vol
}

/// Converts one image using kernel stream `kernel_seed` (ignored in
/// canonical mode). Planes come out in `cfg.order`, truncated to
/// `cfg.timesteps`.
pub fn convert_seeded(img: &RgbImage, cfg: &ConversionConfig, kernel_seed: u64) -> Result<EventVolume> {
    cfg.validate()?;
    let v = rgb_to_value(img);
    let kernels = cfg.kernel_set(kernel_seed);
    let cutoff = integer_cutoff(dynamic_threshold(&v, cfg.s_th0));
    let padded = pad_map(&v, cfg.padding);
    let (w, h) = (v.width, v.height);
    let n = w * h;
    let mut delta = vec![0i16; n];
    let mut vol = EventVolume::zeros(cfg.timesteps, h, w);
    for (i, chunk) in vol.bits.chunks_exact_mut(2 * n).enumerate() {
        let t = cfg.order.storage_index(i);
        correlate_plane(&padded, w, h, &kernels.kernel(t), &mut delta);
        let (on, off) = chunk.split_at_mut(n);
        fire_plane(&delta, cutoff, on, off);
    }
    Ok(vol)
}

/// Converts one image. A lone image uses RNG stream 0 of `cfg.seed`.
pub fn convert(img: &RgbImage, cfg: &ConversionConfig) -> Result<EventVolume> {
    convert_seeded(img, cfg, sample_seed(cfg.seed, 0))
}

/// Converts a batch in parallel. Image `i` uses RNG stream `i` of
/// `cfg.seed`, so results do not depend on `workers`. `None` uses the
/// global rayon pool.
pub fn convert_batch(
    imgs: &[RgbImage],
    cfg: &ConversionConfig,
    workers: Option<usize>,
) -> Result<Vec<EventVolume>> {
    cfg.validate()?;
    if let Some(first) = imgs.first() {
        let expected = first.dims();
        if let Some((index, img)) = imgs.iter().enumerate().find(|(_, im)| im.dims() != expected) {
            return Err(Error::MixedDimensions {
                index,
                expected,
                found: img.dims(),
            });
        }
    }
    let run = || {
        imgs.par_iter()
            .enumerate()
            .map(|(i, img)| convert_seeded(img, cfg, sample_seed(cfg.seed, i as u64)))
            .collect::<Result<Vec<_>>>()
    };
    match workers {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run),
    }
}

/// Change maps for the planes `convert_seeded` would emit, in output order.
pub(crate) fn output_deltas(
    img: &RgbImage,
    cfg: &ConversionConfig,
    kernel_seed: u64,
) -> (IntensityMap, Vec<Vec<i16>>) {
    let v = rgb_to_value(img);
    let kernels = cfg.kernel_set(kernel_seed);
    let padded = pad_map(&v, cfg.padding);
    let planes = (0..cfg.timesteps)
        .map(|i| {
            let mut out = vec![0i16; v.width * v.height];
            correlate_plane(
                &padded,
                v.width,
                v.height,
                &kernels.kernel(cfg.order.storage_index(i)),
                &mut out,
            );
            out
        })
        .collect();
    (v, planes)
}
