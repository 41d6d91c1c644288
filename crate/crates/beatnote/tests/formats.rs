use std::io::Cursor;

use beatnote::formats::*;
use beatnote_core::nn::Architecture;
use beatnote_core::{generate_dataset, Model, ParamRanges};

fn small_arch() -> Architecture {
    Architecture { denoise_channels: vec![3, 4, 2], denoise_hidden: 7, head_channels: 2, hidden: 5, ..Architecture::default() }
}

#[test]
fn dataset_round_trip_is_exact_in_f32() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.bnds");
    let ranges = ParamRanges::default();
    let records: Vec<_> = generate_dataset(25, &ranges, 9).unwrap().collect();
    write_dataset_file(&path, 50, 5000.0, records.clone().into_iter()).unwrap();
    let (header, stored) = read_dataset_file(&path).unwrap();
    assert_eq!(header, DatasetHeader { n_samples: 50, sample_rate_hz: 5000.0, count: 25 });
    assert_eq!(stored.len(), 25);
    for (a, b) in records.iter().zip(&stored) {
        assert_eq!(b.frequency_hz, a.frequency_hz as f32);
        assert!(a.noisy.samples().iter().zip(&b.noisy).all(|(x, y)| *x as f32 == *y));
        assert!(a.clean.samples().iter().zip(&b.clean).all(|(x, y)| *x as f32 == *y));
    }
    // file size: header + records × (2n + 1) floats
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 20 + 25 * (101 * 4));
}

#[test]
fn dataset_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ranges = ParamRanges::default();
    let a = dir.path().join("a.bnds");
    let b = dir.path().join("b.bnds");
    write_dataset_file(&a, 50, 5000.0, generate_dataset(3, &ranges, 7).unwrap()).unwrap();
    write_dataset_file(&b, 50, 5000.0, generate_dataset(3, &ranges, 7).unwrap()).unwrap();
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn dataset_reader_rejects_bad_headers() {
    assert!(matches!(DatasetReader::new(Cursor::new(b"BNMD\x01\x00".to_vec())), Err(FormatError::BadMagic { .. })));
    let mut v = b"BNDS".to_vec();
    v.extend_from_slice(&2u16.to_le_bytes());
    v.extend_from_slice(&[0; 14]);
    assert!(matches!(DatasetReader::new(Cursor::new(v)), Err(FormatError::UnsupportedVersion { version: 2, .. })));
}

#[test]
fn truncated_dataset_is_an_error() {
    let mut buf = Vec::new();
    let mut w = DatasetWriter::new(&mut buf, DatasetHeader { n_samples: 50, sample_rate_hz: 5000.0, count: 2 }).unwrap();
    for r in generate_dataset(2, &ParamRanges::default(), 1).unwrap() {
        w.push(&r).unwrap();
    }
    w.finish().unwrap();
    buf.truncate(buf.len() - 10);
    let results: Vec<_> = DatasetReader::new(Cursor::new(buf)).unwrap().collect();
    assert_eq!(results.len(), 2);
    assert!(results[0].is_ok());
    assert!(matches!(results[1], Err(FormatError::Io(_))));
}

#[test]
fn writer_enforces_record_count() {
    let mut buf = Vec::new();
    let w = DatasetWriter::new(&mut buf, DatasetHeader { n_samples: 50, sample_rate_hz: 5000.0, count: 1 }).unwrap();
    assert!(w.finish().is_err());
}

#[test]
fn model_round_trip_gives_identical_outputs() {
    let model = Model::<f32>::init(small_arch(), 42).unwrap();
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();
    let back = read_model(Cursor::new(&buf)).unwrap();
    assert_eq!(back, model);
    let windows: Vec<f32> = (0..4 * 50).map(|i| (i as f32 * 0.3).sin()).collect();
    let (c1, f1) = model.predict_batch(&windows, 4).unwrap();
    let (c2, f2) = back.predict_batch(&windows, 4).unwrap();
    assert!(c1.iter().zip(&c2).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(f1.iter().zip(&f2).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn model_loader_rejects_unknown_versions_and_corruption() {
    let model = Model::<f32>::init(small_arch(), 1).unwrap();
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();

    let mut bumped = buf.clone();
    bumped[4..6].copy_from_slice(&99u16.to_le_bytes());
    assert!(matches!(read_model(Cursor::new(bumped)), Err(FormatError::UnsupportedVersion { version: 99, .. })));

    let mut magic = buf.clone();
    magic[0] = b'X';
    assert!(matches!(read_model(Cursor::new(magic)), Err(FormatError::BadMagic { .. })));

    let short = buf[..buf.len() - 3].to_vec();
    assert!(matches!(read_model(Cursor::new(short)), Err(FormatError::Io(_))));

    // first tensor name starts after magic, version and the descriptor
    let descriptor = 2 + 2 + 1 + 2 * 3 + 2 + 2 + 8 + 8;
    let first_name = 4 + 2 + descriptor + 4 + 2;
    let mut renamed = buf;
    renamed[first_name] = b'X';
    assert!(read_model(Cursor::new(renamed)).is_err());
}

#[test]
fn shipped_model_loads() {
    let model = load_model(&beatnote::default_model_path()).unwrap();
    assert_eq!(model.architecture(), &Architecture::default());
}
