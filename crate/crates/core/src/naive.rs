//! Reference conversion by explicit image translation and subtraction.
//!
//! Each timestep materializes two translated copies of the intensity map and
//! subtracts them, then thresholds with a real-valued comparison. It shares no
//! code with the correlation path in [`crate::convert`] and serves as the
//! baseline for equivalence checks and benchmarks.

use crate::convert::{
    sample_seed, ConversionConfig, DeltaVolume, EventVolume, IntensityMap, Padding, Polarity,
    RgbImage,
};
use crate::error::Result;
use crate::kernels::{DirectionPair, MotionKernelSet, DIRECTIONS};

/// Map sampled at `(x + dx, y + dy)`, with out-of-range reads resolved by
/// `padding`.
pub fn translate(v: &IntensityMap, dx: isize, dy: isize, padding: Padding) -> Vec<i32> {
    let (w, h) = (v.width() as isize, v.height() as isize);
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = (x + dx, y + dy);
            let inside = (0..w).contains(&sx) && (0..h).contains(&sy);
            let value = match (inside, padding) {
                (true, _) => v.get(sx as usize, sy as usize) as i32,
                (false, Padding::Zero) => 0,
                (false, Padding::Replicate) => {
                    v.get(sx.clamp(0, w - 1) as usize, sy.clamp(0, h - 1) as usize) as i32
                }
            };
            out.push(value);
        }
    }
    out
}

/// Translated-to-`to` minus translated-to-`from`, offsets relative to the
/// grid centre.
pub fn shift_subtract(v: &IntensityMap, pair: DirectionPair, padding: Padding) -> Vec<i32> {
    let offset = |row: u8, col: u8| (col as isize - 1, row as isize - 1);
    let (tx, ty) = offset(pair.to.row(), pair.to.col());
    let (fx, fy) = offset(pair.from.row(), pair.from.col());
    let plus = translate(v, tx, ty, padding);
    let minus = translate(v, fx, fy, padding);
    plus.iter().zip(&minus).map(|(a, b)| a - b).collect()
}

pub fn value_map(img: &RgbImage) -> IntensityMap {
    let mut data = Vec::with_capacity(img.width() * img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let [r, g, b] = img.pixel(x, y);
            let mut m = r;
            if g > m {
                m = g;
            }
            if b > m {
                m = b;
            }
            data.push(m);
        }
    }
    IntensityMap::new(img.width(), img.height(), data).expect("dimensions come from a valid image")
}

/// All eight change maps via shift-subtract.
pub fn delta_v(v: &IntensityMap, kernels: &MotionKernelSet, padding: Padding) -> DeltaVolume {
    let planes: Vec<i16> = (0..DIRECTIONS)
        .flat_map(|t| shift_subtract(v, kernels.pair(t), padding))
        .map(|d| d as i16)
        .collect();
    DeltaVolume::from_planes(v.width(), v.height(), planes).expect("eight full planes")
}

/// Full reference pipeline; same contract as
/// [`crate::convert::convert_seeded`].
pub fn convert_seeded(img: &RgbImage, cfg: &ConversionConfig, kernel_seed: u64) -> Result<EventVolume> {
    cfg.validate()?;
    let v = value_map(img);
    let mut lo = u8::MAX;
    let mut hi = u8::MIN;
    for &p in v.as_raw() {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let s_th = cfg.s_th0 * (hi as f64 - lo as f64);
    let kernels = cfg.kernel_set(kernel_seed);
    let mut vol = EventVolume::zeros(cfg.timesteps, v.height(), v.width());
    for i in 0..cfg.timesteps {
        let pair = kernels.pair(cfg.order.storage_index(i));
        let delta = shift_subtract(&v, pair, cfg.padding);
        for y in 0..v.height() {
            for x in 0..v.width() {
                if let Some(p) = Polarity::from_delta(delta[y * v.width() + x] as f64, s_th) {
                    vol.set(i, p, x, y, true);
                }
            }
        }
    }
    Ok(vol)
}

pub fn convert(img: &RgbImage, cfg: &ConversionConfig) -> Result<EventVolume> {
    convert_seeded(img, cfg, sample_seed(cfg.seed, 0))
}
