use std::fs;

use defect_vision::image::save_pgm;
use defect_vision::synth::{gen_dataset, gen_indexed, load_manifest, read_manifest, SynthParams};
use defect_vision::Error;

fn small() -> SynthParams {
    SynthParams {
        size: 100,
        ..SynthParams::default()
    }
}

/// Largest deviation of any 6x6 window mean from the patch mean.
fn worst_window_deviation(img: &defect_vision::image::GrayImage) -> f64 {
    let (w, h) = (img.width(), img.height());
    let d = img.data();
    let mean = d.iter().map(|&v| f64::from(v)).sum::<f64>() / d.len() as f64;
    let mut worst: f64 = 0.0;
    for r in 0..=h - 6 {
        for c in 0..=w - 6 {
            let s: f64 = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|(i, j)| f64::from(d[(r + i) * w + c + j])).sum();
            worst = worst.max((s / 36.0 - mean).abs());
        }
    }
    worst
}

#[test]
fn clean_patches_have_no_blemish_sized_deviation() {
    let params = SynthParams::default();
    for i in 0..12 {
        let patch = gen_indexed(77, i, false, &params).unwrap();
        assert!(patch.blobs.is_empty());
        let dev = worst_window_deviation(&patch.image);
        assert!(dev <= 25.0, "patch {i}: window deviation {dev}");
    }
}

#[test]
fn defect_patches_contain_a_dark_window() {
    let params = SynthParams::default();
    for i in 0..12 {
        let patch = gen_indexed(78, i, true, &params).unwrap();
        assert!((1..=3).contains(&patch.blobs.len()));
        // The darkest 6x6 window sits inside a blob, well below the background.
        let b = patch.blobs.iter().max_by_key(|b| b.area()).unwrap();
        let (cx, cy) = (b.left + b.width / 2, b.top + b.height / 2);
        let v = patch.image.get(cy, cx);
        assert!(f64::from(v) < 140.0 - 0.4 * b.dip, "blob centre {v}, dip {}", b.dip);
    }
}

#[test]
fn background_matches_requested_level() {
    let patch = gen_indexed(5, 0, false, &SynthParams::default()).unwrap();
    let d = patch.image.data();
    let mean = d.iter().map(|&v| f64::from(v)).sum::<f64>() / d.len() as f64;
    assert!((mean - 140.0).abs() < 1.0, "mean {mean}");
}

#[test]
fn dataset_round_trips_through_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let m = gen_dataset(10, 0.5, 4, &small(), tmp.path()).unwrap();
    assert_eq!(m.labels().iter().filter(|&&l| l == 1).count(), 5);
    let (images, labels, ids) = load_manifest(tmp.path().join("manifest.csv")).unwrap();
    assert_eq!(labels, m.labels());
    assert_eq!(ids[3], "patch_00003.pgm");
    for (i, img) in images.iter().enumerate() {
        assert_eq!(img, &gen_indexed(4, i, labels[i] == 1, &small()).unwrap().image);
    }
}

#[test]
fn manifest_keeps_its_row_order() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, v) in [("c.pgm", 30u8), ("a.pgm", 10), ("b.pgm", 20)] {
        save_pgm(&defect_vision::image::GrayImage::filled(4, 4, v).unwrap(), tmp.path().join(name)).unwrap();
    }
    fs::write(tmp.path().join("m.csv"), "path,label\nc.pgm,1\na.pgm,0\nb.pgm,1\n").unwrap();
    let (images, labels, _) = load_manifest(tmp.path().join("m.csv")).unwrap();
    let firsts: Vec<u8> = images.iter().map(|i| i.get(0, 0)).collect();
    assert_eq!(firsts, vec![30, 10, 20]);
    assert_eq!(labels, vec![1, 0, 1]);
}

#[test]
fn manifest_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.csv");
    fs::write(&path, "path,label\nx.pgm,2\n").unwrap();
    assert!(matches!(read_manifest(&path), Err(Error::BadLabel { line: 2, .. })));
    fs::write(&path, "path,label\ngone.pgm,0\n").unwrap();
    match load_manifest(&path) {
        Err(Error::MissingFile(p)) => assert!(p.ends_with("gone.pgm")),
        other => panic!("expected MissingFile, got {other:?}"),
    }
    fs::write(&path, "path,label\na.pgm,0\na.pgm,1\n").unwrap();
    assert!(read_manifest(&path).is_err());
    assert!(matches!(read_manifest(tmp.path().join("none.csv")), Err(Error::NotFound(_))));
}

#[test]
fn regeneration_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    gen_dataset(6, 0.5, 9, &small(), a.path()).unwrap();
    gen_dataset(6, 0.5, 9, &small(), b.path()).unwrap();
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
    }
}
