mod common;

use common::{blobs, check_asymmetric_noise, check_symmetric_noise};
use noisecascade::noise::{builtin_map, inject, resolve_map, NoiseSpec};

#[test]
fn symmetric_flip_count_is_exact() {
    check_symmetric_noise(100).unwrap();
}

#[test]
fn asymmetric_flips_follow_the_map() {
    check_asymmetric_noise(100).unwrap();
}

#[test]
fn zero_rate_is_identity() {
    let ds = blobs(3, 2, 20, 2.0, 1);
    let (noisy, rec) = inject(&ds, &NoiseSpec::symmetric(0.0, 5)).unwrap();
    assert_eq!(rec.num_flipped(), 0);
    assert_eq!(noisy.labels(), ds.labels());
}

#[test]
fn thousand_samples_forty_percent() {
    let ds = blobs(4, 2, 250, 2.0, 2);
    let (_, rec) = inject(&ds, &NoiseSpec::symmetric(0.4, 9)).unwrap();
    assert_eq!(rec.num_flipped(), 400);
}

#[test]
fn same_seed_same_record() {
    let ds = blobs(5, 2, 40, 2.0, 3);
    let spec = NoiseSpec::symmetric(0.3, 17);
    assert_eq!(inject(&ds, &spec).unwrap().1, inject(&ds, &spec).unwrap().1);
}

#[test]
fn isic_mel_to_nv() {
    let ds = noisecascade::dataset::generate_synthetic(&noisecascade::dataset::SyntheticSpec::isic_like(0)).unwrap();
    let map = resolve_map(&[("MEL", "NV")], ds.class_names()).unwrap();
    let (mel, nv) = (ds.class_index("MEL").unwrap(), ds.class_index("NV").unwrap());
    let (_, rec) = inject(&ds, &NoiseSpec::asymmetric(0.4, map, 0)).unwrap();
    let n_mel = ds.class_counts()[mel];
    let moved = (0..rec.len())
        .filter(|&i| usize::from(rec.original[i]) == mel && usize::from(rec.observed[i]) == nv)
        .count();
    assert_eq!(moved, (0.4 * n_mel as f64).round_ties_even() as usize);
    assert_eq!(rec.num_flipped(), moved);
}

#[test]
fn builtin_maps() {
    let isic = builtin_map("isic8").unwrap();
    assert_eq!(isic.len(), 4);
    assert!(isic.iter().all(|(a, b)| a != b));
    let blood = builtin_map("bloodmnist8").unwrap();
    let next = |c: &str| blood.iter().find(|(a, _)| *a == c).map(|(_, b)| *b).unwrap();
    assert_eq!(next(next(next("BAS"))), "BAS");
    assert_eq!(next(next("LYM")), "LYM");
    assert!(builtin_map("cifar10").is_err());
}
