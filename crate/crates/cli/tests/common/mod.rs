#![allow(dead_code)]

use std::path::{Path, PathBuf};

use i2e_core::synth;

pub fn save_png(img: &i2e_core::RgbImage, path: &Path) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, img.as_raw().to_vec())
        .unwrap();
    buf.save(path).unwrap();
}

/// `classes x per_class` natural-looking PNGs of varying size under `root`.
pub fn write_corpus(root: &Path, classes: usize, per_class: usize, size: usize, seed: u64) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for c in 0..classes {
        for i in 0..per_class {
            let k = (c * per_class + i) as u64;
            let w = size + (k as usize * 7) % 13;
            let h = size + (k as usize * 5) % 11;
            let img = synth::natural(w, h, seed.wrapping_add(k));
            let path = root.join(format!("class{c}")).join(format!("img{i:03}.png"));
            save_png(&img, &path);
            paths.push(path);
        }
    }
    paths
}

/// Relative path to file bytes for every file below `root`.
pub fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

/// Shard contents only; the run manifest carries timings and paths.
pub fn shard_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    tree_bytes(root)
        .into_iter()
        .filter(|(name, _)| name.starts_with("shard-"))
        .collect()
}
