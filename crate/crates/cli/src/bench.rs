//! Timing of the convolution path against the shift-subtract reference.

use std::time::Instant;

use i2e_core::{convert_seeded, naive, sample_seed, ConversionConfig, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTiming {
    /// Median over repeats of the per-sample latency of one corpus pass.
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub samples_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub samples: usize,
    pub repeats: usize,
    pub total_events: u64,
    pub convolution: PathTiming,
    pub naive: PathTiming,
    /// Naive median latency over convolution median latency.
    pub speedup: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn time_path<F>(images: &[RgbImage], repeats: usize, f: F) -> Result<PathTiming>
where
    F: Fn(&RgbImage, u64) -> i2e_core::Result<i2e_core::EventVolume>,
{
    let mut per_sample = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        for (i, img) in images.iter().enumerate() {
            std::hint::black_box(f(std::hint::black_box(img), i as u64)?);
        }
        per_sample.push(start.elapsed().as_secs_f64() * 1e3 / images.len() as f64);
    }
    per_sample.sort_by(f64::total_cmp);
    let median_ms = median(&per_sample);
    Ok(PathTiming {
        median_ms,
        min_ms: per_sample[0],
        max_ms: per_sample[repeats - 1],
        samples_per_second: 1e3 / median_ms.max(f64::MIN_POSITIVE),
    })
}

/// Checks that both paths agree on every image, then times each path
/// single-threaded over `repeats` passes.
pub fn bench(images: &[RgbImage], cfg: &ConversionConfig, repeats: usize) -> Result<BenchReport> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(PipelineError::Config("benchmark corpus is empty".into()));
    }
    if repeats == 0 {
        return Err(PipelineError::Config("repeats must be at least 1".into()));
    }
    let seed = |i: u64| sample_seed(cfg.seed, i);
    let mut total_events = 0;
    for (i, img) in images.iter().enumerate() {
        let fast = convert_seeded(img, cfg, seed(i as u64))?;
        let slow = naive::convert_seeded(img, cfg, seed(i as u64))?;
        if fast != slow {
            return Err(PipelineError::Validation(format!(
                "image {i}: convolution and reference outputs differ"
            )));
        }
        total_events += fast.count() as u64;
    }
    let convolution = time_path(images, repeats, |img, i| convert_seeded(img, cfg, seed(i)))?;
    let naive = time_path(images, repeats, |img, i| naive::convert_seeded(img, cfg, seed(i)))?;
    Ok(BenchReport {
        samples: images.len(),
        repeats,
        total_events,
        speedup: naive.median_ms / convolution.median_ms.max(f64::MIN_POSITIVE),
        convolution,
        naive,
    })
}
