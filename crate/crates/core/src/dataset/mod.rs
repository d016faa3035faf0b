//! Multiple mono-static image stacks and full dataset enumeration.
//!
//! A sample is one (target, elevation, ring offset, SNR) combination. Its
//! stack holds one 54×54 complex image per radar in the ring, ordered by
//! radar index. Samples are listed target-major, then elevation, offset and
//! noise level, and each (class, noise) stratum is dealt into ten folds.

mod format;
mod render;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{enumerate_offsets, radar_azimuths, ArrayConfig, GeometryError, RadarPose};
use crate::imaging::{form_image, synthesize_phase_history, ComplexImage, ImagingError, WaveformSpec};
use crate::mesh::TriangleMesh;
use crate::noise::{add_noise, NoiseError, NoiseSpec, GENERATOR_NAME};
use crate::scattering::{RaySpec, Scene};
use crate::seeds::{channel_seed, SeedKey, SEED_DERIVATION};

pub use format::{
    read_bin, read_dataset, record_size, write_bin, write_dataset, DatasetWriter, ManifestCheckedReader, StackReader, BIN_FILE, FORMAT_VERSION,
    HEADER_SIZE, MAGIC, MANIFEST_FILE,
};
pub use render::{encode_png, render_magnitude_png, write_png, GrayImage, RenderError};

/// Class names in label order.
pub const CLASS_TABLE: [&str; 7] = ["F15", "F16", "J11", "J15", "MIG29", "MIG35", "EF2000"];

pub const MAX_RADARS: u32 = 8;
pub const NUM_FOLDS: u8 = 10;
/// Noise levels kept for training and evaluation.
pub const DEFAULT_NOISE_LEVELS_DB: [f64; 3] = [200.0, 150.0, 100.0];
pub const MANIFEST_VERSION: u32 = 1;
pub const SNR_REFERENCE: &str = "mean |sample|^2 over the noise-free 54x54 phase history of each channel";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {0:?}; not an isarsim dataset")]
    BadMagic([u8; 8]),
    #[error("unsupported dataset version {0}")]
    Version(u32),
    #[error("checksum mismatch in sample {index}")]
    Checksum { index: u64 },
    #[error("dataset truncated: {0}")]
    Truncated(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("sample {index} does not match the manifest: {field}")]
    Mismatch { index: u64, field: &'static str },
    #[error("unknown target class {0:?}; expected one of F15, F16, J11, J15, MIG29, MIG35, EF2000")]
    UnknownTarget(String),
    #[error("duplicate target {0:?}")]
    DuplicateTarget(String),
    #[error("radar count {0} outside [1, 8]")]
    RadarCount(u32),
    #[error("no noise levels given")]
    NoNoiseLevels,
    #[error("missing mesh for target {0:?}")]
    MissingTarget(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Fixed class table.
pub fn class_table() -> &'static [&'static str; 7] {
    &CLASS_TABLE
}

/// Label of a class name (case-insensitive).
pub fn class_index(name: &str) -> Option<u8> {
    CLASS_TABLE.iter().position(|c| c.eq_ignore_ascii_case(name)).map(|i| i as u8)
}

/// A named, ray-trace-ready target.
#[derive(Clone, Debug)]
pub struct Target {
    name: String,
    label: u8,
    scene: Scene,
}

impl Target {
    pub fn new(name: &str, mesh: TriangleMesh) -> Result<Self, DatasetError> {
        let label = class_index(name).ok_or_else(|| DatasetError::UnknownTarget(name.to_string()))?;
        Ok(Target { name: CLASS_TABLE[label as usize].to_string(), label, scene: Scene::new(mesh) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn label(&self) -> u8 {
        self.label
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackMeta {
    pub target: String,
    pub elevation_deg: f32,
    pub offset_deg: u16,
    pub snr_db: f32,
    pub seed: u64,
    /// Azimuth of each channel's radar.
    pub azimuths_deg: Vec<f64>,
}

/// One multi-radar sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageStack {
    pub channels: Vec<ComplexImage>,
    pub label: u8,
    pub meta: StackMeta,
}

impl ImageStack {
    pub fn radar_count(&self) -> usize {
        self.channels.len()
    }
}

fn check_radars(array: &ArrayConfig) -> Result<(), DatasetError> {
    array.validate()?;
    if !(1..=MAX_RADARS).contains(&array.num_radars) {
        return Err(DatasetError::RadarCount(array.num_radars));
    }
    Ok(())
}

/// Builds one stack: per radar, trace → add noise → image.
///
/// Channel `k` draws noise from `channel_seed(noise.seed, k)` and jitters its
/// ray grid with `channel_seed(ray.jitter_seed, k)`.
pub fn generate_stack(
    target: &Target,
    array: &ArrayConfig,
    offset_deg: u32,
    elevation_deg: f64,
    noise: &NoiseSpec,
    wf: &WaveformSpec,
    ray: &RaySpec,
) -> Result<ImageStack, DatasetError> {
    let mut stacks = generate_stacks(target, array, offset_deg, elevation_deg, std::slice::from_ref(noise), wf, ray)?;
    Ok(stacks.remove(0))
}

/// Like [`generate_stack`] for several noise levels at once; the noise-free
/// phase histories are traced once and shared.
pub fn generate_stacks(
    target: &Target,
    array: &ArrayConfig,
    offset_deg: u32,
    elevation_deg: f64,
    noises: &[NoiseSpec],
    wf: &WaveformSpec,
    ray: &RaySpec,
) -> Result<Vec<ImageStack>, DatasetError> {
    check_radars(array)?;
    wf.validate()?;
    ray.validate().map_err(ImagingError::from)?;
    for n in noises {
        n.validate()?;
    }
    let azimuths = radar_azimuths(array, offset_deg)?;
    let offset_u16 = u16::try_from(offset_deg).expect("offset < 360");

    let mut channels: Vec<Vec<ComplexImage>> = vec![Vec::with_capacity(azimuths.len()); noises.len()];
    for (k, &az) in azimuths.iter().enumerate() {
        let pose = RadarPose::from_ground(az, elevation_deg, array.ground_distance_m)?;
        let channel_ray = RaySpec { jitter_seed: channel_seed(ray.jitter_seed, k as u32), ..*ray };
        let clean = synthesize_phase_history(target.scene(), &pose, wf, &channel_ray)?;
        for (slot, noise) in channels.iter_mut().zip(noises) {
            let spec = NoiseSpec { seed: channel_seed(noise.seed, k as u32), ..*noise };
            let noisy = add_noise(&clean, &spec)?;
            slot.push(form_image(&noisy)?.quantized());
        }
    }

    Ok(channels
        .into_iter()
        .zip(noises)
        .map(|(channels, noise)| ImageStack {
            channels,
            label: target.label(),
            meta: StackMeta {
                target: target.name().to_string(),
                elevation_deg: elevation_deg as f32,
                offset_deg: offset_u16,
                snr_db: noise.snr_db as f32,
                seed: noise.seed,
                azimuths_deg: azimuths.clone(),
            },
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub index: u64,
    /// Byte offset of the sample record in `dataset.bin`.
    pub file_offset: u64,
    pub label: u8,
    pub target: String,
    pub elevation_deg: f64,
    pub offset_deg: u32,
    pub snr_db: f64,
    pub seed: u64,
    /// Seed of the noise-free ray-grid stream shared by all noise levels.
    pub geometry_seed: u64,
    pub fold: u8,
    pub azimuths_deg: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub class_table: Vec<String>,
    pub targets: Vec<String>,
    pub radar_count: u32,
    pub elevations_deg: Vec<f64>,
    pub ground_distance_m: f64,
    pub noise_levels_db: Vec<f64>,
    pub master_seed: u64,
    pub generator: String,
    pub seed_derivation: String,
    pub snr_reference: String,
    pub waveform: WaveformSpec,
    pub ray: RaySpec,
    pub num_folds: u8,
    pub samples: Vec<ManifestSample>,
}

impl DatasetManifest {
    pub fn array(&self) -> ArrayConfig {
        ArrayConfig {
            num_radars: self.radar_count,
            elevations_deg: self.elevations_deg.clone(),
            ground_distance_m: self.ground_distance_m,
        }
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Number of samples per noise level.
    pub fn count_per_noise_level(&self, snr_db: f64) -> usize {
        self.samples.iter().filter(|s| s.snr_db == snr_db).count()
    }
}

/// Lists every sample of the cross product targets × elevations × offsets ×
/// noise levels and deals each (class, noise) stratum into ten folds.
pub fn enumerate_dataset(
    targets: &[&str],
    array: &ArrayConfig,
    noise_levels_db: &[f64],
    master_seed: u64,
    wf: &WaveformSpec,
    ray: &RaySpec,
) -> Result<DatasetManifest, DatasetError> {
    check_radars(array)?;
    wf.validate()?;
    ray.validate().map_err(ImagingError::from)?;
    if noise_levels_db.is_empty() {
        return Err(DatasetError::NoNoiseLevels);
    }
    for &db in noise_levels_db {
        NoiseSpec::new(db, 0)?;
    }
    let mut labels = Vec::with_capacity(targets.len());
    for name in targets {
        let label = class_index(name).ok_or_else(|| DatasetError::UnknownTarget(name.to_string()))?;
        if labels.contains(&label) {
            return Err(DatasetError::DuplicateTarget(name.to_string()));
        }
        labels.push(label);
    }

    let offsets = enumerate_offsets(array);
    let record = record_size(array.num_radars) as u64;
    let mut samples = Vec::with_capacity(targets.len() * array.elevations_deg.len() * offsets.len() * noise_levels_db.len());
    for &label in &labels {
        for &elevation in &array.elevations_deg {
            for &offset in &offsets {
                let azimuths = radar_azimuths(array, offset)?;
                let key = SeedKey { master: master_seed, target_id: u32::from(label), elevation_deg: elevation, offset_deg: offset, noise_db: None };
                let geometry_seed = key.derive();
                for &snr_db in noise_levels_db {
                    let index = samples.len() as u64;
                    samples.push(ManifestSample {
                        index,
                        file_offset: HEADER_SIZE as u64 + index * record,
                        label,
                        target: CLASS_TABLE[label as usize].to_string(),
                        elevation_deg: elevation,
                        offset_deg: offset,
                        snr_db,
                        seed: SeedKey { noise_db: Some(snr_db), ..key }.derive(),
                        geometry_seed,
                        fold: 0,
                        azimuths_deg: azimuths.clone(),
                    });
                }
            }
        }
    }
    assign_folds(&mut samples, master_seed);

    Ok(DatasetManifest {
        version: MANIFEST_VERSION,
        class_table: CLASS_TABLE.iter().map(|s| s.to_string()).collect(),
        targets: labels.iter().map(|&l| CLASS_TABLE[l as usize].to_string()).collect(),
        radar_count: array.num_radars,
        elevations_deg: array.elevations_deg.clone(),
        ground_distance_m: array.ground_distance_m,
        noise_levels_db: noise_levels_db.to_vec(),
        master_seed,
        generator: GENERATOR_NAME.to_string(),
        seed_derivation: SEED_DERIVATION.to_string(),
        snr_reference: SNR_REFERENCE.to_string(),
        waveform: *wf,
        ray: *ray,
        num_folds: NUM_FOLDS,
        samples,
    })
}

/// Shuffles each (label, snr) stratum with a seed derived from the master
/// seed and deals it round-robin into folds.
fn assign_folds(samples: &mut [ManifestSample], master_seed: u64) {
    let mut strata: Vec<((u8, u64), Vec<usize>)> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let key = (s.label, s.snr_db.to_bits());
        match strata.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(i),
            None => strata.push((key, vec![i])),
        }
    }
    for ((label, snr_bits), mut members) in strata {
        let seed = SeedKey {
            master: master_seed,
            target_id: u32::from(label),
            elevation_deg: f64::NAN,
            offset_deg: u32::MAX,
            noise_db: Some(f64::from_bits(snr_bits)),
        }
        .derive();
        members.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
        for (rank, i) in members.into_iter().enumerate() {
            samples[i].fold = (rank % NUM_FOLDS as usize) as u8;
        }
    }
}

/// Generates every stack in the manifest on `workers` threads and writes
/// `dataset.bin` + `manifest.json` into `dir`. Output bytes do not depend
/// on the worker count.
pub fn generate_dataset(manifest: &DatasetManifest, targets: &[Target], dir: &Path, workers: usize) -> Result<(), DatasetError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| DatasetError::Io(std::io::Error::other(e)))?;
    let array = manifest.array();
    let levels = manifest.noise_levels_db.len();

    let lookup = |name: &str| -> Result<&Target, DatasetError> {
        targets.iter().find(|t| t.name() == name).ok_or_else(|| DatasetError::MissingTarget(name.to_string()))
    };
    for name in &manifest.targets {
        lookup(name)?;
    }

    // One job per (target, elevation, offset); each yields every noise level.
    let jobs: Vec<&[ManifestSample]> = manifest.samples.chunks(levels).collect();
    let mut writer = DatasetWriter::create(dir, manifest)?;
    let batch = (workers.max(1) * 8).max(16);
    let total = jobs.len();
    for (b, chunk) in jobs.chunks(batch).enumerate() {
        let stacks: Vec<Result<Vec<ImageStack>, DatasetError>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|group| {
                    let first = &group[0];
                    let target = lookup(&first.target)?;
                    let noises: Vec<NoiseSpec> = group.iter().map(|s| NoiseSpec { snr_db: s.snr_db, seed: s.seed }).collect();
                    let ray = RaySpec { jitter_seed: first.geometry_seed, ..manifest.ray };
                    generate_stacks(target, &array, first.offset_deg, first.elevation_deg, &noises, &manifest.waveform, &ray)
                })
                .collect()
        });
        for group in stacks {
            for stack in group? {
                writer.push(&stack)?;
            }
        }
        log::info!("generated {}/{} sample groups", ((b + 1) * batch).min(total), total);
    }
    writer.finish()
}
