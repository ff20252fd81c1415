use std::fs;

use crosslid_core::data::{read_npy, write_npy};
use crosslid_core::{load_csv, load_npy, save_npy, Error, FeatureMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn npy_file_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<f64> = (0..100 * 16).map(|_| rng.random::<f64>() * 1e3 - 5e2).collect();
    let m = FeatureMatrix::new(100, 16, data).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.npy");
    save_npy(&m, &path).unwrap();
    assert_eq!(load_npy(&path).unwrap(), m);

    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..6], b"\x93NUMPY");
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    assert_eq!((10 + header_len) % 64, 0);
    let header = std::str::from_utf8(&bytes[10..10 + header_len]).unwrap();
    assert!(header.contains("'descr': '<f8'"));
    assert!(header.contains("'shape': (100, 16)"));
    assert_eq!(bytes.len(), 10 + header_len + 100 * 16 * 8);
}

#[test]
fn write_into_missing_directory_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let m = FeatureMatrix::new(1, 1, vec![1.0]).unwrap();
    let err = save_npy(&m, blocker.join("out.npy")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
}

#[test]
fn missing_file_is_io_error() {
    let err = load_npy("/definitely/not/here.npy").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn csv_with_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    fs::write(&path, "1.0,0,2.5\n3.0,2,4.5\n\n-1,1,0\n").unwrap();
    let set = load_csv(&path, Some(1)).unwrap();
    assert_eq!(set.labels(), &[0, 2, 1]);
    assert_eq!(set.n_classes(), 3);
    assert_eq!(set.features().row(1), &[3.0, 4.5]);
}

#[test]
fn csv_ragged_row_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    fs::write(&path, "1,2\n3,4\n5\n").unwrap();
    match load_csv(&path, None).unwrap_err() {
        Error::Csv { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn npy_bytes_round_trip(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| f64::from_bits(rng.random::<u64>() & !(0x7ff << 52) | (rng.random_range(1..2046u64) << 52)))
            .collect();
        let m = FeatureMatrix::new(rows, cols, data).unwrap();
        let mut buf = Vec::new();
        write_npy(&m, &mut buf).unwrap();
        let back = read_npy(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back, m);
    }
}
