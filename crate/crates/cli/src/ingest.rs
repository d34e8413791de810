//! Class-per-directory corpus discovery.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

const EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub path: PathBuf,
    /// Path relative to the corpus root with `/` separators.
    pub id: String,
    pub class: String,
    pub label: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleIndex {
    pub samples: Vec<Sample>,
    pub skipped: Vec<Skipped>,
    /// Class name to label, labels assigned in sorted name order.
    pub labels: BTreeMap<String, u32>,
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else if has_image_extension(&path) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative_id(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Scans `root/<class>/**/*.{png,jpg,jpeg,bmp}`. Files whose header cannot
/// be read are reported in `skipped`. Samples are sorted by id.
pub fn ingest(root: &Path) -> Result<SampleIndex> {
    let mut classes: Vec<(String, PathBuf)> = Vec::new();
    let entries = std::fs::read_dir(root).map_err(|e| PipelineError::io(root, e))?;
    for entry in entries {
        let path = entry.map_err(|e| PipelineError::io(root, e))?.path();
        if path.is_dir() {
            classes.push((path.file_name().unwrap().to_string_lossy().into_owned(), path));
        }
    }
    classes.sort();

    let mut candidates = Vec::new();
    for (class, dir) in &classes {
        let mut files = Vec::new();
        collect_files(dir, &mut files)?;
        candidates.extend(files.into_iter().map(|p| (class.clone(), p)));
    }

    let checked: Vec<_> = candidates
        .into_par_iter()
        .map(|(class, path)| {
            let id = relative_id(root, &path);
            let readable = image::ImageReader::open(&path)
                .map_err(|e| e.to_string())
                .and_then(|r| r.with_guessed_format().map_err(|e| e.to_string()))
                .and_then(|r| r.into_dimensions().map_err(|e| e.to_string()));
            (class, path, id, readable)
        })
        .collect();

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (class, path, id, readable) in checked {
        match readable {
            Ok(_) => samples.push((class, path, id)),
            Err(reason) => skipped.push(Skipped { id, reason }),
        }
    }
    samples.sort_by(|a, b| a.2.cmp(&b.2));
    skipped.sort_by(|a, b| a.id.cmp(&b.id));

    let labels: BTreeMap<String, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, (c, _))| (c.clone(), i as u32))
        .collect();
    if samples.is_empty() {
        return Err(PipelineError::EmptyCorpus(root.to_path_buf()));
    }
    let samples = samples
        .into_iter()
        .map(|(class, path, id)| Sample {
            label: labels[&class],
            path,
            id,
            class,
        })
        .collect();
    Ok(SampleIndex {
        samples,
        skipped,
        labels,
    })
}
