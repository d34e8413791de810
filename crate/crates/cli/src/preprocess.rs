//! Resize and training-time augmentation ahead of conversion.
//!
//! Resizing is bilinear with pixel-centre alignment; every output sample is
//! computed in f64 and rounded half away from zero, so results do not depend
//! on the platform or on an external resampler.

use std::path::Path;

use i2e_core::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Output is `size x size`.
    pub size: usize,
    /// Enables flip and crop.
    pub train: bool,
    pub flip_prob: f64,
    pub crop_padding: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            size: 224,
            train: false,
            flip_prob: 0.5,
            crop_padding: 0,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 3 {
            return Err(PipelineError::Config(format!(
                "target size must be at least 3, got {}",
                self.size
            )));
        }
        if !(0.0..=1.0).contains(&self.flip_prob) {
            return Err(PipelineError::Config(format!(
                "flip probability must be in [0, 1], got {}",
                self.flip_prob
            )));
        }
        Ok(())
    }
}

/// Bilinear resize of an interleaved RGB buffer.
pub fn resize_bilinear(
    src: &[u8],
    src_w: usize,
    src_h: usize,
    dst_w: usize,
    dst_h: usize,
) -> Vec<u8> {
    let axis = |dst: usize, src_len: usize| -> Vec<(usize, usize, f64)> {
        let scale = src_len as f64 / dst as f64;
        (0..dst)
            .map(|i| {
                let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
                let i0 = pos.floor() as usize;
                let i1 = (i0 + 1).min(src_len - 1);
                (i0, i1, pos - i0 as f64)
            })
            .collect()
    };
    let xs = axis(dst_w, src_w);
    let ys = axis(dst_h, src_h);
    let px = |x: usize, y: usize, c: usize| src[(y * src_w + x) * 3 + c] as f64;
    let mut out = Vec::with_capacity(dst_w * dst_h * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let top = px(x0, y0, c) * (1.0 - fx) + px(x1, y0, c) * fx;
                let bottom = px(x0, y1, c) * (1.0 - fx) + px(x1, y1, c) * fx;
                let v = top * (1.0 - fy) + bottom * fy;
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

pub fn flip_horizontal(img: &RgbImage) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        img.pixel(img.width() - 1 - x, y)
    })
    .expect("same dimensions as a valid image")
}

/// Zero-pads by `padding` on every side and crops back to the original size
/// with the window's top-left corner at `(ox, oy)` in the padded frame.
pub fn pad_crop(img: &RgbImage, padding: usize, ox: usize, oy: usize) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let sx = (x + ox) as isize - padding as isize;
        let sy = (y + oy) as isize - padding as isize;
        if (0..img.width() as isize).contains(&sx) && (0..img.height() as isize).contains(&sy) {
            img.pixel(sx as usize, sy as usize)
        } else {
            [0, 0, 0]
        }
    })
    .expect("same dimensions as a valid image")
}

/// Resizes to `cfg.size` and, in training mode, applies a seeded random
/// flip and random crop.
pub fn preprocess(src: &image::RgbImage, cfg: &PreprocessConfig, seed: u64) -> Result<RgbImage> {
    cfg.validate()?;
    let (w, h) = src.dimensions();
    let data = resize_bilinear(src.as_raw(), w as usize, h as usize, cfg.size, cfg.size);
    let mut img = RgbImage::new(cfg.size, cfg.size, data)?;
    if cfg.train {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if rng.random::<f64>() < cfg.flip_prob {
            img = flip_horizontal(&img);
        }
        if cfg.crop_padding > 0 {
            let span = 2 * cfg.crop_padding;
            let (ox, oy) = (rng.random_range(0..=span), rng.random_range(0..=span));
            img = pad_crop(&img, cfg.crop_padding, ox, oy);
        }
    }
    Ok(img)
}

pub fn load_rgb(path: &Path) -> Result<image::RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    decode_rgb(&bytes, path)
}

/// Decodes an in-memory file; `path` is used for error reporting only.
pub fn decode_rgb(bytes: &[u8], path: &Path) -> Result<image::RgbImage> {
    let reader = image::ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| PipelineError::io(path, e))?;
    let img = reader.decode().map_err(|source| PipelineError::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}
