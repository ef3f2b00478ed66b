//! Dataset directory round-trip and error reporting.

use gclab_core::synth::{export, generate, ingest, preset_smallratio, SbmConfig};
use gclab_core::Error;

fn sample_config(seed: u64) -> SbmConfig {
    SbmConfig {
        class_sizes: vec![6, 10],
        p_intra: 0.55,
        q_inter: 0.15,
        feature_dim: 5,
        feature_mean_scale: 1.25,
        feature_std: 0.75,
        seed,
    }
}

#[test]
fn export_ingest_is_identity() {
    let ds = generate(&sample_config(41)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&ds, dir.path()).unwrap();
    let back = ingest(dir.path()).unwrap();
    assert_eq!(ds, back);
}

#[test]
fn export_is_byte_deterministic() {
    let ds = generate(&preset_smallratio()).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    export(&ds, dir_a.path()).unwrap();
    export(&ds, dir_b.path()).unwrap();
    for name in ["edges.csv", "features.csv", "labels.csv", "meta.json", "split.json"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between exports");
    }
}

#[test]
fn missing_labels_file_errors() {
    let ds = generate(&sample_config(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&ds, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("labels.csv")).unwrap();
    match ingest(dir.path()) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("labels.csv")),
        other => panic!("expected Io error, got {other:?}"),
    }
}

#[test]
fn feature_row_count_mismatch_errors() {
    let ds = generate(&sample_config(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&ds, dir.path()).unwrap();
    let path = dir.path().join("features.csv");
    let mut content = std::fs::read_to_string(&path).unwrap();
    content.push_str("0.1,0.2,0.3,0.4,0.5\n");
    std::fs::write(&path, content).unwrap();
    match ingest(dir.path()) {
        Err(Error::Parse { path, message, .. }) => {
            assert!(path.ends_with("features.csv"));
            assert!(message.contains("expected 16 feature rows"), "{message}");
        }
        other => panic!("expected Parse error, got {other:?}"),
    }
}

#[test]
fn malformed_row_reports_file_and_line() {
    let ds = generate(&sample_config(9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&ds, dir.path()).unwrap();
    let path = dir.path().join("edges.csv");
    let mut lines: Vec<String> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    lines[2] = "3;4".into();
    std::fs::write(&path, lines.join("\n")).unwrap();
    match ingest(dir.path()) {
        Err(Error::Parse { path, line, .. }) => {
            assert!(path.ends_with("edges.csv"));
            assert_eq!(line, 3);
        }
        other => panic!("expected Parse error, got {other:?}"),
    }
}

#[test]
fn missing_split_applies_default() {
    let ds = generate(&sample_config(10)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&ds, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("split.json")).unwrap();
    let back = ingest(dir.path()).unwrap();
    // The default split derives from the meta seed, which is exactly how
    // the generated split was produced.
    assert_eq!(back.split, ds.split);
}

#[test]
fn split_with_out_of_range_node_errors() {
    let ds = generate(&sample_config(11)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export(&ds, dir.path()).unwrap();
    std::fs::write(
        dir.path().join("split.json"),
        r#"{"train": [0, 99], "val": [], "test": []}"#,
    )
    .unwrap();
    assert!(matches!(ingest(dir.path()), Err(Error::InvalidConfig(_))));
}
