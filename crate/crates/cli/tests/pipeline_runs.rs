mod common;

use std::path::Path;
use std::process::Command;

use i2e_cli::pipeline::{
    path_seed, run_pipeline, sample_streams, validate_dataset, OutputLayout, PipelineConfig,
    RunManifest,
};
use i2e_cli::preprocess::{load_rgb, preprocess, PreprocessConfig};
use i2e_cli::PipelineError;
use i2e_core::formats;
use i2e_core::{Augment, ConversionConfig};

fn config(input: &Path, output: &Path, workers: usize) -> PipelineConfig {
    PipelineConfig {
        input: input.to_path_buf(),
        output: output.to_path_buf(),
        preprocess: PreprocessConfig {
            size: 32,
            train: true,
            flip_prob: 0.5,
            crop_padding: 3,
        },
        conversion: ConversionConfig {
            augment: Augment::Random,
            ..Default::default()
        },
        shard_size: 3,
        layout: OutputLayout::Both,
        workers: Some(workers),
    }
}

#[test]
fn one_and_eight_workers_write_identical_shards() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 2, 5, 36, 10);
    let one = root.path().join("w1");
    let eight = root.path().join("w8");
    let m1 = run_pipeline(&config(&input, &one, 1)).unwrap();
    let m8 = run_pipeline(&config(&input, &eight, 8)).unwrap();
    assert_eq!(m1.samples, m8.samples);
    assert_eq!(m1.shards, m8.shards);
    assert_eq!(m1.shards.len(), 4);
    let a = common::shard_bytes(&one);
    assert_eq!(a.len(), 4 + 10 * 2);
    assert_eq!(a, common::shard_bytes(&eight));
    assert!(!root.path().join("w1/shard-00000.tmp").exists());
}

#[test]
fn dense_and_sparse_outputs_cross_convert() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 2, 3, 20, 11);
    let out = root.path().join("out");
    let manifest = run_pipeline(&config(&input, &out, 2)).unwrap();
    for s in &manifest.samples {
        let dense = std::fs::read(out.join(&s.shard).join(&s.files[0])).unwrap();
        let sparse = std::fs::read(out.join(&s.shard).join(&s.files[1])).unwrap();
        assert!(s.files[0].ends_with(".dense.i2e") && s.files[1].ends_with(".sparse.i2e"));
        assert_eq!(formats::dense_to_sparse(&dense).unwrap(), sparse);
        assert_eq!(formats::sparse_to_dense(&sparse).unwrap(), dense);
        let (vol, meta) = formats::decode(&sparse).unwrap();
        assert_eq!(vol.count() as u64, s.events);
        assert_eq!(meta.s_th0, 0.12);
    }
}

#[test]
fn samples_convert_identically_in_a_subset() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    let paths = common::write_corpus(&input, 2, 4, 24, 12);
    let subset = root.path().join("subset");
    let keep = &paths[5];
    let rel = keep.strip_prefix(&input).unwrap();
    std::fs::create_dir_all(subset.join(rel.parent().unwrap())).unwrap();
    std::fs::copy(keep, subset.join(rel)).unwrap();

    let full = run_pipeline(&config(&input, &root.path().join("full"), 4)).unwrap();
    let part = run_pipeline(&config(&subset, &root.path().join("part"), 1)).unwrap();
    let id = rel.to_string_lossy().replace('\\', "/");
    let a = full.samples.iter().find(|s| s.id == id).unwrap();
    let b = &part.samples[0];
    let read = |dir: &str, s: &i2e_cli::pipeline::SampleRecord| {
        std::fs::read(root.path().join(dir).join(&s.shard).join(&s.files[1])).unwrap()
    };
    assert_eq!(read("full", a), read("part", b));
}

#[test]
fn manifest_matches_direct_conversion() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 1, 4, 28, 13);
    let out = root.path().join("out");
    let cfg = config(&input, &out, 3);
    let manifest = run_pipeline(&cfg).unwrap();
    for s in &manifest.samples {
        let (kernel_seed, aug_seed) = sample_streams(cfg.conversion.seed, &s.id);
        let img = preprocess(&load_rgb(&input.join(&s.id)).unwrap(), &cfg.preprocess, aug_seed).unwrap();
        let vol = i2e_core::convert_seeded(&img, &cfg.conversion, kernel_seed).unwrap();
        let stored = formats::decode(&std::fs::read(out.join(&s.shard).join(&s.files[0])).unwrap())
            .unwrap()
            .0;
        assert_eq!(stored, vol);
        assert_eq!(s.event_rate, i2e_core::event_rate(&vol));
    }
    assert_ne!(path_seed(1, "a"), path_seed(1, "b"));
    assert_eq!(manifest.timings.converted, 4);
    assert!(manifest.timings.mean_ms > 0.0);
    assert!(manifest.timings.p50_ms <= manifest.timings.p99_ms);
    assert_eq!(RunManifest::load(&out).unwrap().samples, manifest.samples);
}

#[test]
fn validation_agrees_with_pipeline_statistics() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 2, 4, 24, 14);
    let out = root.path().join("out");
    let manifest = run_pipeline(&config(&input, &out, 2)).unwrap();
    let report = validate_dataset(&out).unwrap();
    assert_eq!(report.samples, 8);
    assert_eq!(report.files, 16);
    assert_eq!(report.mean_event_rate, manifest.event_rate.mean);
    assert_eq!(report.events, manifest.samples.iter().map(|s| s.events).sum::<u64>());
}

#[test]
fn tampering_is_detected() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 1, 3, 20, 15);
    let out = root.path().join("out");
    run_pipeline(&config(&input, &out, 2)).unwrap();
    let victim = out.join("shard-00000/000001.sparse.i2e");
    let mut bytes = std::fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&victim, bytes).unwrap();
    assert!(matches!(
        validate_dataset(&out),
        Err(PipelineError::HashMismatch { .. })
    ));
}

#[test]
fn rerun_resumes_intact_shards_and_rebuilds_damaged_ones() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 2, 4, 20, 16);
    let out = root.path().join("out");
    let cfg = config(&input, &out, 2);
    run_pipeline(&cfg).unwrap();
    let before = common::shard_bytes(&out);

    std::fs::remove_file(out.join("shard-00001/000004.dense.i2e")).unwrap();
    std::fs::create_dir_all(out.join("shard-00002.tmp")).unwrap();
    std::fs::write(out.join("shard-00002.tmp/junk"), b"partial").unwrap();
    let again = run_pipeline(&cfg).unwrap();
    assert_eq!(again.timings.resumed_shards, 2);
    assert_eq!(again.timings.converted, 3);
    assert!(!out.join("shard-00002.tmp").exists());
    assert_eq!(common::shard_bytes(&out), before);

    // changed settings invalidate every shard
    let mut changed = cfg.clone();
    changed.conversion.s_th0 = 0.2;
    let third = run_pipeline(&changed).unwrap();
    assert_eq!(third.timings.resumed_shards, 0);
    validate_dataset(&out).unwrap();
}

#[test]
fn single_layout_writes_one_file_per_sample() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 1, 3, 16, 17);
    for layout in [OutputLayout::Dense, OutputLayout::Sparse] {
        let out = root.path().join(layout.to_string());
        let mut cfg = config(&input, &out, 1);
        cfg.layout = layout;
        let m = run_pipeline(&cfg).unwrap();
        assert!(m.samples.iter().all(|s| s.files.len() == 1));
        validate_dataset(&out).unwrap();
    }
}

fn i2e(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_i2e")).args(args).output().unwrap()
}

#[test]
fn command_line_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let input = root.path().join("in");
    common::write_corpus(&input, 2, 2, 20, 18);
    let out = root.path().join("out");
    let (i, o) = (input.to_str().unwrap(), out.to_str().unwrap());

    let ok = i2e(&[
        "convert", "--in", i, "--out", o, "--size", "24", "--sth0", "0.12", "--timesteps", "8",
        "--order", "gab", "--padding", "replicate", "--augment", "random", "--layout", "both",
        "--seed", "2024", "--workers", "2",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(summary["samples"], 4);

    assert_eq!(i2e(&["validate", o]).status.code(), Some(0));
    assert_eq!(i2e(&["convert", "--bogus"]).status.code(), Some(1));
    assert_eq!(i2e(&["convert", "--in", i, "--out", o, "--order", "gax"]).status.code(), Some(1));
    assert_eq!(i2e(&["convert", "--in", i, "--out", o, "--size", "2"]).status.code(), Some(1));
    assert_eq!(i2e(&["validate", input.join("nothing").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(i2e(&["stats", "--in", root.path().join("missing").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(i2e(&["--help"]).status.code(), Some(0));

    let stats = i2e(&["stats", "--in", i, "--size", "24", "--csv", "-"]);
    assert_eq!(stats.status.code(), Some(0));
    let text = String::from_utf8(stats.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("id,label,event_rate"));

    let sweep = i2e(&["calibrate", "--in", i, "--size", "24", "--target-rate", "0.05", "--sweep", "-"]);
    assert_eq!(sweep.status.code(), Some(0));
    let energy = i2e(&["energy", "--dataset", o]);
    assert_eq!(energy.status.code(), Some(0));
    let kernels = i2e(&["kernels", "--order", "abg"]);
    let json: serde_json::Value = serde_json::from_slice(&kernels.stdout).unwrap();
    assert_eq!(json["order"], "abg");
}
