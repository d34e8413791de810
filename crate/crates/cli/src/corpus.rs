//! Loading an image directory as an in-memory corpus for reports.

use std::path::Path;

use i2e_core::RgbImage;
use rayon::prelude::*;

use crate::error::Result;
use crate::ingest::{ingest, SampleIndex};
use crate::preprocess::{load_rgb, preprocess, PreprocessConfig};

/// Ingests `root` and resizes every readable image to `size x size`
/// (eval mode). Images that fail to decode are moved to the skip list.
pub fn load_corpus(root: &Path, size: usize) -> Result<(SampleIndex, Vec<RgbImage>)> {
    let mut index = ingest(root)?;
    let cfg = PreprocessConfig {
        size,
        ..Default::default()
    };
    cfg.validate()?;
    let loaded: Vec<_> = index
        .samples
        .par_iter()
        .map(|s| load_rgb(&s.path).and_then(|img| preprocess(&img, &cfg, 0)))
        .collect();

    let mut kept = Vec::with_capacity(loaded.len());
    let mut images = Vec::with_capacity(loaded.len());
    for (sample, result) in index.samples.drain(..).zip(loaded) {
        match result {
            Ok(img) => {
                kept.push(sample);
                images.push(img);
            }
            Err(e) => index.skipped.push(crate::ingest::Skipped {
                id: sample.id,
                reason: e.to_string(),
            }),
        }
    }
    index.samples = kept;
    index.skipped.sort_by(|a, b| a.id.cmp(&b.id));
    if images.is_empty() {
        return Err(crate::error::PipelineError::EmptyCorpus(root.to_path_buf()));
    }
    Ok((index, images))
}
