//! Event-rate measurement, sensitivity calibration and Shannon entropy.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convert::{
    integer_cutoff, output_deltas, rgb_to_value, sample_seed, convert_seeded, ConversionConfig,
    EventVolume, Polarity, RgbImage,
};
use crate::error::{Error, Result};

/// Fraction of set bits, `count / (T * 2 * H * W)`.
pub fn event_rate(vol: &EventVolume) -> f64 {
    if vol.is_empty() {
        return 0.0;
    }
    vol.count() as f64 / vol.len() as f64
}

/// Population mean and standard deviation with extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("summary of no values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
            min,
            max,
        })
    }
}

/// Corpus event-rate statistics with a histogram over `[0, 0.5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRateStats {
    pub rates: Vec<f64>,
    pub summary: Summary,
    pub bin_width: f64,
    pub histogram: Vec<u64>,
}

impl EventRateStats {
    pub const BINS: usize = 50;

    pub fn from_rates(rates: Vec<f64>) -> Result<Self> {
        let summary = Summary::of(&rates)?;
        let bin_width = 0.5 / Self::BINS as f64;
        let mut histogram = vec![0u64; Self::BINS];
        for &r in &rates {
            let bin = ((r / bin_width) as usize).min(Self::BINS - 1);
            histogram[bin] += 1;
        }
        Ok(Self {
            rates,
            summary,
            bin_width,
            histogram,
        })
    }

    /// Converts every image (stream `i` of `cfg.seed` for image `i`) and
    /// summarizes the rates.
    pub fn measure(corpus: &[RgbImage], cfg: &ConversionConfig) -> Result<Self> {
        cfg.validate()?;
        let rates = corpus
            .par_iter()
            .enumerate()
            .map(|(i, img)| {
                convert_seeded(img, cfg, sample_seed(cfg.seed, i as u64)).map(|v| event_rate(&v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rates(rates)
    }
}

/// Per-image response histograms, from which the event rate at any
/// sensitivity follows without reconverting.
#[derive(Debug, Clone)]
pub struct RateCurve {
    samples: Vec<SampleResponse>,
}

#[derive(Debug, Clone)]
struct SampleResponse {
    range: u8,
    total_bits: u64,
    // above[k] = number of (t, x, y) with |delta| > k
    above: Box<[u64; 256]>,
}

impl SampleResponse {
    fn events_at(&self, s_th0: f64) -> u64 {
        let cutoff = integer_cutoff(s_th0 * f64::from(self.range));
        if cutoff >= 256 {
            0
        } else {
            self.above[cutoff.max(0) as usize]
        }
    }
}

impl RateCurve {
    /// Precomputes responses with the same kernel streams as
    /// [`crate::convert::convert_batch`].
    pub fn build(corpus: &[RgbImage], cfg: &ConversionConfig) -> Result<Self> {
        cfg.validate()?;
        if corpus.is_empty() {
            return Err(Error::Empty("calibration corpus"));
        }
        let samples = corpus
            .par_iter()
            .enumerate()
            .map(|(i, img)| {
                let (v, planes) = output_deltas(img, cfg, sample_seed(cfg.seed, i as u64));
                let (lo, hi) = v.range();
                let mut hist = [0u64; 256];
                for d in planes.iter().flatten() {
                    hist[d.unsigned_abs().min(255) as usize] += 1;
                }
                let mut above = Box::new([0u64; 256]);
                let mut acc = 0;
                for k in (0..256).rev() {
                    above[k] = acc;
                    acc += hist[k];
                }
                SampleResponse {
                    range: hi - lo,
                    total_bits: 2 * acc,
                    above,
                }
            })
            .collect();
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rates_at(&self, s_th0: f64) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s.events_at(s_th0) as f64 / s.total_bits as f64)
            .collect()
    }

    /// Mean per-sample event rate at sensitivity `s_th0`.
    pub fn mean_rate(&self, s_th0: f64) -> f64 {
        let rates = self.rates_at(s_th0);
        rates.iter().sum::<f64>() / rates.len() as f64
    }

    /// Rate as `s_th0 -> 0+`: every non-zero change fires.
    pub fn max_rate(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.above[0] as f64 / s.total_bits as f64)
            .sum::<f64>()
            / self.samples.len() as f64
    }
}

/// One row of a rate-versus-sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s_th0: f64,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub min_rate: f64,
    pub max_rate: f64,
}

pub fn sweep(curve: &RateCurve, grid: &[f64]) -> Vec<SweepPoint> {
    grid.iter()
        .map(|&s| {
            let rates = curve.rates_at(s);
            let sum = Summary::of(&rates).expect("curve is non-empty");
            SweepPoint {
                s_th0: s,
                mean_rate: sum.mean,
                std_rate: sum.std,
                min_rate: sum.min,
                max_rate: sum.max,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub s_th0: f64,
    pub achieved_rate: f64,
    pub target_rate: f64,
    pub iterations: usize,
}

/// Stop conditions for [`calibrate_s_th0`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Accepted absolute error on the mean rate.
    pub tolerance: f64,
    /// Bracket width below which bisection stops.
    pub min_bracket: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.0025,
            min_bracket: 1e-4,
        }
    }
}

/// Bisects `s_th0` over `(0, 1]` until the corpus mean rate is within
/// tolerance of `target_rate`. The mean rate is non-increasing in `s_th0`.
pub fn calibrate_s_th0(
    corpus: &[RgbImage],
    target_rate: f64,
    cfg: &ConversionConfig,
    opts: CalibrationOptions,
) -> Result<Calibration> {
    let curve = RateCurve::build(corpus, cfg)?;
    calibrate_curve(&curve, target_rate, opts)
}

pub fn calibrate_curve(
    curve: &RateCurve,
    target_rate: f64,
    opts: CalibrationOptions,
) -> Result<Calibration> {
    if !(target_rate > 0.0 && target_rate < 0.5) {
        return Err(Error::InvalidConfig(format!(
            "target rate must be in (0, 0.5), got {target_rate}"
        )));
    }
    let max_rate = curve.max_rate();
    if max_rate < target_rate {
        return Err(Error::UnreachableTarget {
            target: target_rate,
            max_rate,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = (hi, curve.mean_rate(hi));
    let mut iterations = 0;
    while hi - lo >= opts.min_bracket {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let rate = curve.mean_rate(mid);
        if (rate - target_rate).abs() < (best.1 - target_rate).abs() {
            best = (mid, rate);
        }
        if (rate - target_rate).abs() <= opts.tolerance {
            break;
        }
        if rate > target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Calibration {
        s_th0: best.0,
        achieved_rate: best.1,
        target_rate,
        iterations,
    })
}

/// Plug-in entropy in bits of a histogram. Zero counts contribute nothing.
pub fn entropy_from_counts(counts: &[u64]) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("entropy of an empty stream"));
    }
    let n = total as f64;
    let h = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Entropy in bits of the empirical distribution of `symbols`.
pub fn shannon_entropy<T: Hash + Eq>(symbols: impl IntoIterator<Item = T>) -> Result<f64> {
    let mut counts: HashMap<T, u64> = HashMap::new();
    for s in symbols {
        *counts.entry(s).or_default() += 1;
    }
    let mut values: Vec<u64> = counts.into_values().collect();
    // fixed summation order
    values.sort_unstable();
    entropy_from_counts(&values)
}

pub fn byte_entropy(bytes: &[u8]) -> Result<f64> {
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    entropy_from_counts(&counts)
}

/// Symbol model used for per-sample entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// 8-bit luma, `round(0.299 R + 0.587 G + 0.114 B)`.
    Grayscale,
    /// 8-bit channel maximum.
    ValueMap,
    /// One ternary symbol per `(t, x, y)`: none, ON or OFF.
    EventStream,
}

impl Representation {
    pub fn alphabet_size(self) -> usize {
        match self {
            Representation::Grayscale | Representation::ValueMap => 256,
            Representation::EventStream => 3,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Representation::Grayscale => "per-pixel 8-bit luma (ITU-R BT.601 weights)",
            Representation::ValueMap => "per-pixel 8-bit max(R, G, B)",
            Representation::EventStream => "per-pixel per-timestep ternary {none, ON, OFF}",
        }
    }
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Representation::Grayscale => "grayscale",
            Representation::ValueMap => "value_map",
            Representation::EventStream => "event_stream",
        })
    }
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grayscale" | "gray" => Ok(Representation::Grayscale),
            "value_map" | "value" => Ok(Representation::ValueMap),
            "event_stream" | "events" => Ok(Representation::EventStream),
            _ => Err(Error::InvalidConfig(format!("unknown representation {s:?}"))),
        }
    }
}

pub fn luma(img: &RgbImage) -> Vec<u8> {
    img.as_raw()
        .chunks_exact(3)
        .map(|px| {
            let y = 299 * px[0] as u32 + 587 * px[1] as u32 + 114 * px[2] as u32;
            ((y + 500) / 1000) as u8
        })
        .collect()
}

/// Ternary symbol counts `[none, ON, OFF]` over all `(t, x, y)`.
pub fn event_symbol_counts(vol: &EventVolume) -> [u64; 3] {
    let mut counts = [0u64; 3];
    for t in 0..vol.timesteps() {
        let on = vol.plane(t, Polarity::On);
        let off = vol.plane(t, Polarity::Off);
        for (&a, &b) in on.iter().zip(off) {
            let sym = match (a, b) {
                (false, false) => 0,
                (true, _) => 1,
                (false, true) => 2,
            };
            counts[sym] += 1;
        }
    }
    counts
}

pub fn sample_entropy(
    img: &RgbImage,
    representation: Representation,
    cfg: &ConversionConfig,
    kernel_seed: u64,
) -> Result<f64> {
    match representation {
        Representation::Grayscale => byte_entropy(&luma(img)),
        Representation::ValueMap => byte_entropy(rgb_to_value(img).as_raw()),
        Representation::EventStream => {
            entropy_from_counts(&event_symbol_counts(&convert_seeded(img, cfg, kernel_seed)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub representation: Representation,
    pub alphabet_size: usize,
    pub symbol_model: String,
    pub per_sample: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Per-image entropies (empirical histogram of each image) and their mean
/// and standard deviation.
pub fn entropy_report(
    corpus: &[RgbImage],
    representation: Representation,
    cfg: &ConversionConfig,
) -> Result<EntropyReport> {
    if corpus.is_empty() {
        return Err(Error::Empty("entropy corpus"));
    }
    let per_sample = corpus
        .par_iter()
        .enumerate()
        .map(|(i, img)| sample_entropy(img, representation, cfg, sample_seed(cfg.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let summary = Summary::of(&per_sample)?;
    Ok(EntropyReport {
        representation,
        alphabet_size: representation.alphabet_size(),
        symbol_model: representation.describe().to_string(),
        per_sample,
        mean: summary.mean,
        std: summary.std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_simple_volumes() {
        let vol = EventVolume::zeros(8, 224, 224);
        assert_eq!(event_rate(&vol), 0.0);

        let mut half = EventVolume::zeros(2, 3, 4);
        for t in 0..2 {
            for y in 0..3 {
                for x in 0..4 {
                    let p = if (x + y + t) % 2 == 0 { Polarity::On } else { Polarity::Off };
                    half.set(t, p, x, y, true);
                }
            }
        }
        assert_eq!(event_rate(&half), 0.5);

        let mut sparse = EventVolume::zeros(8, 224, 224);
        for i in 0..401 {
            sparse.set(i % 8, Polarity::On, i % 224, i / 224, true);
        }
        assert_eq!(event_rate(&sparse), 401.0 / 802_816.0);
    }

    #[test]
    fn entropy_closed_forms() {
        let uniform: Vec<u8> = (0..=255).collect();
        assert_eq!(byte_entropy(&uniform).unwrap(), 8.0);
        assert_eq!(byte_entropy(&[7; 100]).unwrap(), 0.0);
        let h = entropy_from_counts(&[95, 5]).unwrap();
        let oracle = -0.05 * 0.05f64.log2() - 0.95 * 0.95f64.log2();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.28640).abs() < 1e-5);
        assert!(entropy_from_counts(&[0, 0]).is_err());
    }

    #[test]
    fn generic_entropy_matches_byte_path() {
        let data: Vec<u8> = (0..1000u32).map(|i| (i * i % 37) as u8).collect();
        let a = byte_entropy(&data).unwrap();
        let b = shannon_entropy(data.iter().copied()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn luma_weights() {
        let img = RgbImage::from_fn(3, 3, |x, _| match x {
            0 => [255, 0, 0],
            1 => [0, 255, 0],
            _ => [10, 10, 10],
        })
        .unwrap();
        let y = luma(&img);
        assert_eq!(y[0], 76);
        assert_eq!(y[1], 150);
        assert_eq!(y[2], 10);
    }

    #[test]
    fn symbol_counts_cover_every_site() {
        let mut vol = EventVolume::zeros(2, 3, 3);
        vol.set(0, Polarity::On, 0, 0, true);
        vol.set(1, Polarity::Off, 2, 2, true);
        assert_eq!(event_symbol_counts(&vol), [16, 1, 1]);
    }

    #[test]
    fn histogram_bins() {
        let s = EventRateStats::from_rates(vec![0.0, 0.052, 0.055, 0.5]).unwrap();
        assert_eq!(s.histogram.iter().sum::<u64>(), 4);
        assert_eq!(s.histogram[0], 1);
        assert_eq!(s.histogram[5], 2);
        assert_eq!(s.histogram[49], 1);
        assert!(EventRateStats::from_rates(vec![]).is_err());
    }
}
