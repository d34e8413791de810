//! Procedural test images: gradients, geometric shapes and fractal-noise
//! scenes with natural-image-like spectra and colour.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convert::{sample_seed, RgbImage};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Linear colour ramp in a random direction plus mild pixel noise.
pub fn gradient(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let angle: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = (angle.cos(), angle.sin());
    let c0: [f64; 3] = std::array::from_fn(|_| r.random_range(0.0..255.0));
    let c1: [f64; 3] = std::array::from_fn(|_| r.random_range(0.0..255.0));
    let noise = r.random_range(2.0..12.0);
    let span = (width as f64).hypot(height as f64);
    let mut noise_rng = rng(seed ^ 0x5eed);
    RgbImage::from_fn(width, height, |x, y| {
        let s = ((x as f64 - width as f64 / 2.0) * dx + (y as f64 - height as f64 / 2.0) * dy) / span + 0.5;
        std::array::from_fn(|c| {
            let n: f64 = noise_rng.random_range(-noise..noise);
            to_u8(c0[c] + (c1[c] - c0[c]) * s + n)
        })
    })
    .expect("synthetic images are at least 3x3")
}

/// Filled rectangle (`class` 0) or disc (`class` 1) at a random position on a
/// flat background.
pub fn shape(width: usize, height: usize, class: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let bg: [u8; 3] = std::array::from_fn(|_| r.random_range(0..100));
    let fg: [u8; 3] = std::array::from_fn(|_| r.random_range(150..=255));
    let size = (width.min(height) as f64 * r.random_range(0.3..0.5)) as i64;
    let span = |extent: usize| size / 2 + 1..=(extent as i64 - size / 2 - 1).max(size / 2 + 1);
    let cx = r.random_range(span(width));
    let cy = r.random_range(span(height));
    RgbImage::from_fn(width, height, |x, y| {
        let (dx, dy) = (x as i64 - cx, y as i64 - cy);
        let half = size / 2;
        let inside = match class {
            0 => dx.abs() <= half && dy.abs() <= half / 3,
            _ => dx * dx + dy * dy <= half * half,
        };
        if inside {
            fg
        } else {
            bg
        }
    })
    .expect("synthetic images are at least 3x3")
}

struct ValueNoise {
    cells: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(cells: usize, r: &mut ChaCha8Rng) -> Self {
        let n = cells + 1;
        Self {
            cells,
            lattice: (0..n * n).map(|_| r.random_range(-1.0..1.0)).collect(),
        }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let n = self.cells + 1;
        let (fx, fy) = (u * self.cells as f64, v * self.cells as f64);
        let (x0, y0) = ((fx as usize).min(self.cells - 1), (fy as usize).min(self.cells - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (sx, sy) = (smooth(tx), smooth(ty));
        let l = |x: usize, y: usize| self.lattice[y * n + x];
        let top = l(x0, y0) * (1.0 - sx) + l(x0 + 1, y0) * sx;
        let bottom = l(x0, y0 + 1) * (1.0 - sx) + l(x0 + 1, y0 + 1) * sx;
        top * (1.0 - sy) + bottom * sy
    }
}

struct Fractal {
    octaves: Vec<(ValueNoise, f64)>,
}

impl Fractal {
    fn new(r: &mut ChaCha8Rng, base_cells: usize, octaves: usize, persistence: f64) -> Self {
        let mut amp = 1.0;
        let octaves = (0..octaves)
            .map(|o| {
                let layer = (ValueNoise::new(base_cells << o, r), amp);
                amp *= persistence;
                layer
            })
            .collect();
        Self { octaves }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let norm: f64 = self.octaves.iter().map(|(_, a)| a).sum();
        self.octaves.iter().map(|(n, a)| a * n.at(u, v)).sum::<f64>() / norm
    }
}

/// Multi-octave noise scene: a luminance field with weaker, smoother
/// chroma fields, random contrast and exposure.
pub fn natural(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    let (cells, persistence) = (r.random_range(2..5), r.random_range(0.45..0.65));
    let lum = Fractal::new(&mut r, cells, 5, persistence);
    let chroma_a = Fractal::new(&mut r, 2, 3, 0.5);
    let chroma_b = Fractal::new(&mut r, 2, 3, 0.5);
    let mean = r.random_range(70.0..180.0);
    let contrast = r.random_range(90.0..220.0);
    let saturation = r.random_range(10.0..45.0);
    let tint: [f64; 3] = std::array::from_fn(|_| r.random_range(-15.0..15.0));
    let grain = r.random_range(1.0..4.0);
    let mut noise_rng = rng(seed ^ 0x9a1);
    RgbImage::from_fn(width, height, |x, y| {
        let (u, v) = (x as f64 / width as f64, y as f64 / height as f64);
        let l = mean + contrast * lum.at(u, v);
        let a = saturation * chroma_a.at(u, v);
        let b = saturation * chroma_b.at(u, v);
        let n: f64 = noise_rng.random_range(-grain..grain);
        [
            to_u8(l + a + tint[0] + n),
            to_u8(l - 0.5 * a + b + tint[1] + n),
            to_u8(l - 0.5 * a - b + tint[2] + n),
        ]
    })
    .expect("synthetic images are at least 3x3")
}

pub fn uniform(width: usize, height: usize, rgb: [u8; 3]) -> RgbImage {
    RgbImage::from_fn(width, height, |_, _| rgb).expect("synthetic images are at least 3x3")
}

/// Uniformly random pixels.
pub fn noise(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut r = rng(seed);
    RgbImage::from_fn(width, height, |_, _| r.random()).expect("synthetic images are at least 3x3")
}

pub fn natural_corpus(n: usize, width: usize, height: usize, seed: u64) -> Vec<RgbImage> {
    (0..n)
        .map(|i| natural(width, height, sample_seed(seed, i as u64)))
        .collect()
}

pub fn gradient_corpus(n: usize, width: usize, height: usize, seed: u64) -> Vec<RgbImage> {
    (0..n)
        .map(|i| gradient(width, height, sample_seed(seed, i as u64)))
        .collect()
}

/// Alternating rectangle/disc images with their class labels.
pub fn shape_corpus(n: usize, width: usize, height: usize, seed: u64) -> Vec<(RgbImage, usize)> {
    (0..n)
        .map(|i| {
            let class = i % 2;
            (shape(width, height, class, sample_seed(seed, i as u64)), class)
        })
        .collect()
}
