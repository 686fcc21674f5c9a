mod common;

use ndarray::{array, Array2};
use noisecascade::dataset::{load, load_csv, read_fvf1, save, write_fvf1, FeatureDataset};
use noisecascade::Error;
use proptest::prelude::*;
use serde_json::json;

fn tiny() -> FeatureDataset {
    FeatureDataset::new(
        array![[1.0f32, -2.5], [0.25, 3.0]],
        vec![1, 0],
        2,
        vec!["a".into(), "bc".into()],
        json!({"k": 1}),
    )
    .unwrap()
}

/// The layout written out field by field.
fn tiny_bytes() -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(b"FVF1");
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(&2u64.to_le_bytes());
    b.extend_from_slice(&2u32.to_le_bytes());
    b.extend_from_slice(&2u32.to_le_bytes());
    b.extend_from_slice(&1u32.to_le_bytes());
    b.extend_from_slice(b"a");
    b.extend_from_slice(&2u32.to_le_bytes());
    b.extend_from_slice(b"bc");
    let meta = br#"{"k":1}"#;
    b.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    b.extend_from_slice(meta);
    for v in [1.0f32, -2.5, 0.25, 3.0] {
        b.extend_from_slice(&v.to_le_bytes());
    }
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&0u16.to_le_bytes());
    b
}

#[test]
fn writes_exact_layout() {
    assert_eq!(write_fvf1(&tiny()).unwrap(), tiny_bytes());
}

#[test]
fn reads_hand_built_file() {
    let ds = read_fvf1(&tiny_bytes()).unwrap();
    assert_eq!(ds.features(), tiny().features());
    assert_eq!(ds.labels(), &[1, 0]);
    assert_eq!(ds.class_names(), &["a".to_string(), "bc".to_string()]);
    assert_eq!(ds.meta(), &json!({"k": 1}));
}

#[test]
fn rejects_corrupt_files() {
    let good = tiny_bytes();
    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    let mut bad_version = good.clone();
    bad_version[4] = 2;
    let mut trailing = good.clone();
    trailing.push(0);
    let mut bad_label = good.clone();
    let n = bad_label.len();
    bad_label[n - 2] = 7;
    for buf in [&bad_magic, &bad_version, &trailing, &good[..good.len() - 1], &good[..10]] {
        assert!(matches!(read_fvf1(buf), Err(Error::Format(_))));
    }
    assert!(matches!(read_fvf1(&bad_label), Err(Error::LabelOutOfRange { label: 7, .. })));
}

#[test]
fn file_round_trip_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.fvf");
    save(&tiny(), &p).unwrap();
    let back = load(&p).unwrap();
    assert_eq!(write_fvf1(&back).unwrap(), tiny_bytes());

    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "f0,f1,label\n1.0,-2.5,1\n0.25,3.0,0\n").unwrap();
    let c = load_csv(&csv, None).unwrap();
    assert_eq!(c.features(), tiny().features());
    assert_eq!(c.labels(), &[1, 0]);
}

proptest! {
    #[test]
    fn round_trip_is_identity(
        n in 1usize..20,
        d in 1usize..6,
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); s };
        let feats = Array2::from_shape_simple_fn((n, d), || (next() >> 40) as f32 / 1024.0 - 8000.0);
        let labels: Vec<u16> = (0..n).map(|_| (next() % k as u64) as u16).collect();
        let names: Vec<String> = (0..k).map(|c| format!("c{c}é")).collect();
        let ds = FeatureDataset::new(feats, labels, k, names, serde_json::Value::Null).unwrap();
        let back = read_fvf1(&write_fvf1(&ds).unwrap()).unwrap();
        prop_assert_eq!(back.features(), ds.features());
        prop_assert_eq!(back.labels(), ds.labels());
        prop_assert_eq!(back.class_names(), ds.class_names());
        prop_assert_eq!(back.num_classes(), k);
    }
}
