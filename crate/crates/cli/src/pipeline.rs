//! Sharded batch conversion of an image directory into an event dataset.
//!
//! Output layout:
//!
//! ```text
//! OUT/manifest.json
//! OUT/shard-00000/shard.json
//! OUT/shard-00000/000000.dense.i2e
//! OUT/shard-00000/000000.sparse.i2e
//! ```
//!
//! A shard is assembled in `shard-NNNNN.tmp`, validated, and renamed into
//! place, so a shard directory without the suffix is always complete. A
//! re-run skips shards whose `shard.json` matches the current configuration
//! and whose files still hash correctly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use i2e_core::formats::{self, FileMeta};
use i2e_core::stats::{event_rate, EventRateStats, Summary};
use i2e_core::{convert_seeded, sample_seed, ConversionConfig, EventVolume};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};
use crate::ingest::{ingest, Sample, SampleIndex, Skipped};
use crate::preprocess::{decode_rgb, preprocess, PreprocessConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SHARD_FILE: &str = "shard.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputLayout {
    Dense,
    Sparse,
    #[default]
    Both,
}

impl OutputLayout {
    pub fn dense(self) -> bool {
        matches!(self, OutputLayout::Dense | OutputLayout::Both)
    }

    pub fn sparse(self) -> bool {
        matches!(self, OutputLayout::Sparse | OutputLayout::Both)
    }
}

impl FromStr for OutputLayout {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(OutputLayout::Dense),
            "sparse" => Ok(OutputLayout::Sparse),
            "both" => Ok(OutputLayout::Both),
            _ => Err(PipelineError::Config(format!("unknown layout {s:?}"))),
        }
    }
}

impl fmt::Display for OutputLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputLayout::Dense => "dense",
            OutputLayout::Sparse => "sparse",
            OutputLayout::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub preprocess: PreprocessConfig,
    /// `conversion.seed` is the run seed.
    pub conversion: ConversionConfig,
    pub shard_size: usize,
    pub layout: OutputLayout,
    /// Thread count; `None` uses the global pool. Does not affect output.
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output: output.into(),
            preprocess: PreprocessConfig::default(),
            conversion: ConversionConfig::default(),
            shard_size: 1000,
            layout: OutputLayout::Both,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.conversion.validate()?;
        if self.shard_size == 0 {
            return Err(PipelineError::Config("shard size must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(PipelineError::Config("worker count must be at least 1".into()));
        }
        Ok(())
    }

    /// Digest of every setting that influences output bytes.
    fn output_digest(&self) -> String {
        let relevant = serde_json::json!({
            "preprocess": self.preprocess,
            "conversion": self.conversion,
            "shard_size": self.shard_size,
            "layout": self.layout,
        });
        sha256_hex(relevant.to_string().as_bytes())
    }
}

/// Seed for one sample, from the run seed and the sample's relative path.
pub fn path_seed(seed: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Kernel-sampling and augmentation seeds for a sample.
pub fn sample_streams(seed: u64, id: &str) -> (u64, u64) {
    let s = path_seed(seed, id);
    (sample_seed(s, 0), sample_seed(s, 1))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub id: String,
    pub label: u32,
    pub shard: String,
    pub files: Vec<String>,
    pub events: u64,
    pub event_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardRecord {
    pub name: String,
    pub config_digest: String,
    pub samples: Vec<SampleRecord>,
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_seconds: f64,
    /// Samples converted in this run (resumed shards excluded).
    pub converted: usize,
    pub resumed_shards: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p90_ms: f64,
    pub p99_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub tool_version: String,
    pub config: PipelineConfig,
    pub labels: std::collections::BTreeMap<String, u32>,
    pub samples: Vec<SampleRecord>,
    pub shards: Vec<ShardRecord>,
    pub skipped: Vec<Skipped>,
    pub event_rate: Summary,
    pub timings: Timings,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|source| PipelineError::Manifest { path, source })
    }
}

pub fn shard_name(k: usize) -> String {
    format!("shard-{k:05}")
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

struct Converted {
    volume: EventVolume,
    source_hash: [u8; 32],
    latency_ms: f64,
}

/// Loads, preprocesses and converts one sample.
fn convert_sample(sample: &Sample, cfg: &PipelineConfig) -> Result<Converted> {
    let bytes = std::fs::read(&sample.path).map_err(|e| PipelineError::io(&sample.path, e))?;
    let source_hash: [u8; 32] = Sha256::digest(&bytes).into();
    let decoded = decode_rgb(&bytes, &sample.path)?;
    let (kernel_seed, aug_seed) = sample_streams(cfg.conversion.seed, &sample.id);
    let img = preprocess(&decoded, &cfg.preprocess, aug_seed)?;
    let start = Instant::now();
    let volume = convert_seeded(&img, &cfg.conversion, kernel_seed)?;
    let latency_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(Converted {
        volume,
        source_hash,
        latency_ms,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileRecord> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
    Ok(FileRecord {
        name: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

/// Decodes every file of a shard from disk and checks hashes, the stored
/// volumes, and dense/sparse agreement.
fn verify_shard_dir(dir: &Path, record: &ShardRecord) -> Result<Vec<EventVolume>> {
    for file in &record.files {
        let path = dir.join(&file.name);
        let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let actual = sha256_hex(&bytes);
        if actual != file.sha256 || bytes.len() as u64 != file.bytes {
            return Err(PipelineError::HashMismatch {
                path,
                expected: file.sha256.clone(),
                actual,
            });
        }
    }
    record
        .samples
        .iter()
        .map(|s| {
            let mut decoded: Option<(EventVolume, Vec<u8>)> = None;
            for name in &s.files {
                let path = dir.join(name);
                let bytes = std::fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
                let (vol, _) = formats::decode(&bytes).map_err(|e| {
                    PipelineError::Validation(format!("{}: {e}", path.display()))
                })?;
                let other = match formats::peek_layout(&bytes)? {
                    formats::Layout::Dense => formats::dense_to_sparse(&bytes)?,
                    formats::Layout::Sparse => formats::sparse_to_dense(&bytes)?,
                };
                if formats::decode(&other)?.0 != vol {
                    return Err(PipelineError::Validation(format!(
                        "{}: cross-converted volume differs",
                        path.display()
                    )));
                }
                if let Some((prev, prev_other)) = &decoded {
                    if *prev != vol || *prev_other != bytes {
                        return Err(PipelineError::Validation(format!(
                            "{}: dense and sparse files disagree",
                            path.display()
                        )));
                    }
                }
                decoded = Some((vol, other));
            }
            let (vol, _) = decoded
                .ok_or_else(|| PipelineError::Validation(format!("sample {} has no files", s.id)))?;
            if vol.count() as u64 != s.events || event_rate(&vol) != s.event_rate {
                return Err(PipelineError::Validation(format!(
                    "sample {}: recorded statistics do not match the stored events",
                    s.id
                )));
            }
            Ok(vol)
        })
        .collect()
}

fn load_shard_record(dir: &Path) -> Option<ShardRecord> {
    let text = std::fs::read_to_string(dir.join(SHARD_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

fn build_shard(
    name: &str,
    samples: &[(usize, &Sample)],
    cfg: &PipelineConfig,
    digest: &str,
) -> Result<(ShardRecord, Vec<f64>)> {
    let converted: Vec<Converted> = samples
        .par_iter()
        .map(|(_, s)| convert_sample(s, cfg))
        .collect::<Result<_>>()?;

    let final_dir = cfg.output.join(name);
    let tmp = cfg.output.join(format!("{name}.tmp"));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
    }
    std::fs::create_dir_all(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;

    let mut records = Vec::with_capacity(samples.len());
    let mut files = Vec::new();
    for ((index, sample), c) in samples.iter().zip(&converted) {
        let meta = FileMeta::from_config(&cfg.conversion, c.source_hash);
        let mut names = Vec::new();
        if cfg.layout.dense() {
            let bytes = formats::encode_dense(&c.volume, &meta)?;
            let f = write_file(&tmp, &format!("{index:06}.dense.i2e"), &bytes)?;
            names.push(f.name.clone());
            files.push(f);
        }
        if cfg.layout.sparse() {
            let bytes = formats::encode_sparse(&c.volume, &meta)?;
            let f = write_file(&tmp, &format!("{index:06}.sparse.i2e"), &bytes)?;
            names.push(f.name.clone());
            files.push(f);
        }
        records.push(SampleRecord {
            index: *index,
            id: sample.id.clone(),
            label: sample.label,
            shard: name.to_string(),
            files: names,
            events: c.volume.count() as u64,
            event_rate: event_rate(&c.volume),
        });
    }
    let record = ShardRecord {
        name: name.to_string(),
        config_digest: digest.to_string(),
        samples: records,
        files,
    };

    let stored = verify_shard_dir(&tmp, &record)?;
    for (vol, c) in stored.iter().zip(&converted) {
        if *vol != c.volume {
            return Err(PipelineError::Validation(format!(
                "{name}: stored volume differs from the converted one"
            )));
        }
    }

    let json = serde_json::to_vec_pretty(&record).expect("shard record serializes");
    let shard_path = tmp.join(SHARD_FILE);
    std::fs::write(&shard_path, json).map_err(|e| PipelineError::io(&shard_path, e))?;
    if final_dir.exists() {
        std::fs::remove_dir_all(&final_dir).map_err(|e| PipelineError::io(&final_dir, e))?;
    }
    std::fs::rename(&tmp, &final_dir).map_err(|e| PipelineError::io(&final_dir, e))?;
    Ok((record, converted.iter().map(|c| c.latency_ms).collect()))
}

fn remove_partial_shards(output: &Path) -> Result<()> {
    let entries = std::fs::read_dir(output).map_err(|e| PipelineError::io(output, e))?;
    for entry in entries {
        let path = entry.map_err(|e| PipelineError::io(output, e))?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        if path.is_dir() && name.starts_with("shard-") && name.ends_with(".tmp") {
            std::fs::remove_dir_all(&path).map_err(|e| PipelineError::io(&path, e))?;
        }
    }
    Ok(())
}

/// Converts every readable image under `cfg.input` and writes the dataset.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let index = ingest(&cfg.input)?;
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .install(|| run_indexed(cfg, index)),
        None => run_indexed(cfg, index),
    }
}

fn run_indexed(cfg: &PipelineConfig, index: SampleIndex) -> Result<RunManifest> {
    let wall = Instant::now();
    std::fs::create_dir_all(&cfg.output).map_err(|e| PipelineError::io(&cfg.output, e))?;
    let digest = cfg.output_digest();
    remove_partial_shards(&cfg.output)?;

    let numbered: Vec<(usize, &Sample)> = index.samples.iter().enumerate().collect();
    let chunks: Vec<_> = numbered.chunks(cfg.shard_size).enumerate().collect();

    let results: Vec<(ShardRecord, Option<Vec<f64>>)> = chunks
        .into_par_iter()
        .map(|(k, chunk)| {
            let name = shard_name(k);
            let dir = cfg.output.join(&name);
            if let Some(existing) = load_shard_record(&dir) {
                let same_samples = existing.samples.len() == chunk.len()
                    && existing
                        .samples
                        .iter()
                        .zip(chunk)
                        .all(|(r, (i, s))| r.index == *i && r.id == s.id && r.label == s.label);
                if existing.config_digest == digest
                    && same_samples
                    && verify_shard_dir(&dir, &existing).is_ok()
                {
                    return Ok((existing, None));
                }
            }
            let (record, latencies) = build_shard(&name, chunk, cfg, &digest)?;
            Ok((record, Some(latencies)))
        })
        .collect::<Result<_>>()?;

    // stale shards from a previous, larger run
    let mut k = results.len();
    while cfg.output.join(shard_name(k)).exists() {
        let dir = cfg.output.join(shard_name(k));
        std::fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        k += 1;
    }

    let mut latencies = Vec::new();
    let mut resumed = 0;
    let mut shards = Vec::with_capacity(results.len());
    for (record, lat) in results {
        match lat {
            Some(l) => latencies.extend(l),
            None => resumed += 1,
        }
        shards.push(record);
    }
    let samples: Vec<SampleRecord> = shards.iter().flat_map(|s| s.samples.clone()).collect();
    let rates: Vec<f64> = samples.iter().map(|s| s.event_rate).collect();
    let event_rate = EventRateStats::from_rates(rates)?.summary;

    let mut sorted = latencies.clone();
    sorted.sort_by(f64::total_cmp);
    let mean_ms = if sorted.is_empty() {
        0.0
    } else {
        sorted.iter().sum::<f64>() / sorted.len() as f64
    };
    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        labels: index.labels,
        samples,
        shards,
        skipped: index.skipped,
        event_rate,
        timings: Timings {
            wall_seconds: wall.elapsed().as_secs_f64(),
            converted: sorted.len(),
            resumed_shards: resumed,
            mean_ms,
            p50_ms: percentile(&sorted, 50.0),
            p90_ms: percentile(&sorted, 90.0),
            p99_ms: percentile(&sorted, 99.0),
        },
    };
    let path = cfg.output.join(MANIFEST_FILE);
    let tmp = cfg.output.join(format!("{MANIFEST_FILE}.tmp"));
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&tmp, json).map_err(|e| PipelineError::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| PipelineError::io(&path, e))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub shards: usize,
    pub files: usize,
    pub samples: usize,
    pub events: u64,
    /// Mean event rate recomputed from the decoded files.
    pub mean_event_rate: f64,
}

/// Re-reads a dataset directory: hashes, decoding, dense/sparse agreement,
/// and per-sample statistics against the manifest.
pub fn validate_dataset(dir: &Path) -> Result<ValidationReport> {
    let manifest = RunManifest::load(dir)?;
    let per_shard = manifest
        .shards
        .par_iter()
        .map(|shard| verify_shard_dir(&dir.join(&shard.name), shard))
        .collect::<Result<Vec<_>>>()?;
    let volumes: Vec<&EventVolume> = per_shard.iter().flatten().collect();
    let listed: Vec<&SampleRecord> = manifest.shards.iter().flat_map(|s| &s.samples).collect();
    if listed.len() != manifest.samples.len()
        || listed.iter().zip(&manifest.samples).any(|(a, b)| *a != b)
    {
        return Err(PipelineError::Validation(
            "manifest sample list disagrees with shard records".into(),
        ));
    }
    let rates: Vec<f64> = volumes.iter().map(|v| event_rate(v)).collect();
    let summary = EventRateStats::from_rates(rates)?.summary;
    if summary != manifest.event_rate {
        return Err(PipelineError::Validation(format!(
            "event-rate summary {:?} differs from recomputed {:?}",
            manifest.event_rate, summary
        )));
    }
    Ok(ValidationReport {
        shards: manifest.shards.len(),
        files: manifest.shards.iter().map(|s| s.files.len()).sum(),
        samples: volumes.len(),
        events: volumes.iter().map(|v| v.count() as u64).sum(),
        mean_event_rate: summary.mean,
    })
}
