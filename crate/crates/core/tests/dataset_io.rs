use std::path::Path;

use isar_core::dataset::{
    enumerate_dataset, generate_dataset, read_bin, read_dataset, record_size, write_bin, write_dataset, DatasetError,
    DatasetManifest, ImageStack, Target, BIN_FILE, HEADER_SIZE, MANIFEST_FILE,
};
use isar_core::geometry::{radar_azimuths, ArrayConfig};
use isar_core::imaging::WaveformSpec;
use isar_core::scattering::RaySpec;
use isar_core::shapes;

fn small_manifest(noise: &[f64]) -> DatasetManifest {
    let array = ArrayConfig::new(8, vec![15.0], 1000.0).unwrap();
    let ray = RaySpec { rays_per_axis: 8, ..RaySpec::default() };
    enumerate_dataset(&["F16"], &array, noise, 3, &WaveformSpec::default(), &ray).unwrap()
}

fn targets() -> Vec<Target> {
    vec![Target::new("F16", shapes::trihedral(1.0).centered()).unwrap()]
}

fn generate(dir: &Path, workers: usize) -> DatasetManifest {
    let manifest = small_manifest(&[201.0]);
    generate_dataset(&manifest, &targets(), dir, workers).unwrap();
    manifest
}

fn read_all(dir: &Path) -> Result<Vec<ImageStack>, DatasetError> {
    read_dataset(dir)?.1.collect()
}

#[test]
fn round_trip_matches_manifest_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate(dir.path(), 2);
    let (read_manifest, reader) = read_dataset(dir.path()).unwrap();
    assert_eq!(read_manifest, manifest);
    assert_eq!(reader.len(), 45);
    let stacks: Vec<ImageStack> = reader.collect::<Result<_, _>>().unwrap();
    let array = manifest.array();
    for (stack, sample) in stacks.iter().zip(&manifest.samples) {
        assert_eq!(stack.channels.len(), 8);
        assert_eq!(stack.meta.azimuths_deg, radar_azimuths(&array, sample.offset_deg).unwrap());
        assert_eq!(stack.meta.seed, sample.seed);
    }

    // Hand-decode the header and the first record.
    let bytes = std::fs::read(dir.path().join(BIN_FILE)).unwrap();
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    assert_eq!(&bytes[..8], b"ISARDS01");
    assert_eq!([u32_at(8), u32_at(12), u32_at(16), u32_at(20), u32_at(24)], [1, 45, 8, 54, 54]);
    let rec = &bytes[28..28 + 19 + 8 * 54 * 54 * 8 + 4];
    assert_eq!(bytes.len(), 28 + 45 * rec.len());
    let s0 = &manifest.samples[0];
    assert_eq!(rec[0], s0.label);
    assert_eq!(f32::from_le_bytes(rec[1..5].try_into().unwrap()), 15.0);
    assert_eq!(u16::from_le_bytes(rec[5..7].try_into().unwrap()), s0.offset_deg as u16);
    assert_eq!(f32::from_le_bytes(rec[7..11].try_into().unwrap()), 201.0);
    assert_eq!(u64::from_le_bytes(rec[11..19].try_into().unwrap()), s0.seed);
    let (payload, crc) = rec.split_at(rec.len() - 4);
    assert_eq!(crc32fast::hash(payload), u32::from_le_bytes(crc.try_into().unwrap()));
    let re = f32::from_le_bytes(payload[19..23].try_into().unwrap());
    assert_eq!(f64::from(re), stacks[0].channels[0].pixels()[0].re);
}

#[test]
fn regeneration_is_byte_identical_across_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate(a.path(), 1);
    generate(b.path(), 8);
    for f in [BIN_FILE, MANIFEST_FILE] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn corrupted_record_names_its_index() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 1);
    let path = dir.path().join(BIN_FILE);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[HEADER_SIZE + 3 * record_size(8) + 100] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    let results: Vec<_> = read_dataset(dir.path()).unwrap().1.collect();
    assert_eq!(results.len(), 4);
    assert!(results[..3].iter().all(Result::is_ok));
    assert!(matches!(results[3], Err(DatasetError::Checksum { index: 3 })));
}

#[test]
fn truncated_and_padded_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 1);
    let path = dir.path().join(BIN_FILE);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
    assert!(matches!(read_all(dir.path()), Err(DatasetError::Truncated(_))));
    std::fs::write(&path, &bytes[..10]).unwrap();
    assert!(matches!(read_all(dir.path()), Err(DatasetError::Truncated(_))));
    let mut padded = bytes.clone();
    padded.push(0);
    std::fs::write(&path, &padded).unwrap();
    assert!(matches!(read_all(dir.path()), Err(DatasetError::Truncated(_))));
}

#[test]
fn manifest_disagreement_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = generate(dir.path(), 1);
    manifest.samples[5].seed ^= 1;
    std::fs::write(dir.path().join(MANIFEST_FILE), serde_json::to_string(&manifest).unwrap()).unwrap();
    let err = read_all(dir.path()).unwrap_err();
    assert!(matches!(err, DatasetError::Mismatch { index: 5, field: "seed" }), "{err}");
}

#[test]
fn empty_dataset_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = small_manifest(&[201.0]);
    manifest.samples.clear();
    write_dataset(&manifest, std::iter::empty(), dir.path()).unwrap();
    let (m, reader) = read_dataset(dir.path()).unwrap();
    assert_eq!(m.sample_count(), 0);
    assert!(reader.is_empty());
    assert_eq!(reader.count(), 0);
    assert_eq!(std::fs::metadata(dir.path().join(BIN_FILE)).unwrap().len(), HEADER_SIZE as u64);
}

#[test]
fn failed_generation_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    // A vertical plate is invisible from 15° elevation, so 100 dB noise has
    // no signal to scale against.
    let manifest = small_manifest(&[100.0]);
    let targets = vec![Target::new("F16", shapes::plate_facing_x(1.0, 1.0, 0.0, 1)).unwrap()];
    let err = generate_dataset(&manifest, &targets, &out, 2).unwrap_err();
    assert!(matches!(err, DatasetError::Noise(_)), "{err}");
    let left: Vec<_> = std::fs::read_dir(&out).map(|d| d.filter_map(Result::ok).collect()).unwrap_or_default();
    assert!(left.is_empty(), "{left:?}");
}

#[test]
fn missing_target_mesh_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_manifest(&[201.0]);
    let other = vec![Target::new("J11", shapes::unit_cube()).unwrap()];
    assert!(matches!(generate_dataset(&manifest, &other, dir.path(), 1), Err(DatasetError::MissingTarget(_))));
}

#[test]
fn bare_bin_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 1);
    let stacks = read_all(dir.path()).unwrap();
    let path = dir.path().join("copy.bin");
    write_bin(&path, &stacks[..4]).unwrap();
    let back = read_bin(&path, &WaveformSpec::default()).unwrap();
    assert_eq!(back, stacks[..4].to_vec());
}
