//! Versioned JSON dataset configuration.
//!
//! ```json
//! {
//!   "version": 1,
//!   "targets": [{ "name": "F15", "model": "models/f15.stl", "scale": 1.0 }],
//!   "radars": 1,
//!   "elevations_deg": [15, 30],
//!   "noise_levels_db": [200, 150, 100],
//!   "master_seed": 0
//! }
//! ```
//!
//! `model` is an STL path relative to the config file, or one of
//! `builtin:surrogate` (procedural stand-in for the named class),
//! `builtin:cube`, `builtin:trihedral`, `builtin:slicy`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, Target, CLASS_TABLE, DEFAULT_NOISE_LEVELS_DB};
use crate::geometry::ArrayConfig;
use crate::imaging::WaveformSpec;
use crate::mesh::{load_stl, MeshError, TriangleMesh};
use crate::scattering::RaySpec;
use crate::shapes;

pub const CONFIG_VERSION: u32 = 1;
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config version {0} unsupported (expected 1)")]
    Version(u32),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("cannot read model {path}: {source}")]
    ModelIo { path: PathBuf, source: std::io::Error },
    #[error("model {path}: {source}")]
    Model { path: String, source: MeshError },
    #[error("unknown builtin model {0:?}")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn field(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Field { field: field.to_string(), message: message.to_string() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub name: String,
    pub model: String,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub version: u32,
    pub targets: Vec<TargetConfig>,
    #[serde(default = "one_radar")]
    pub radars: u32,
    #[serde(default = "default_elevations")]
    pub elevations_deg: Vec<f64>,
    #[serde(default = "default_ground")]
    pub ground_distance_m: f64,
    #[serde(default = "default_noise")]
    pub noise_levels_db: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub waveform: WaveformSpec,
    #[serde(default)]
    pub ray: RaySpec,
}

fn one_radar() -> u32 {
    1
}

fn default_elevations() -> Vec<f64> {
    ArrayConfig::default().elevations_deg
}

fn default_ground() -> f64 {
    ArrayConfig::default().ground_distance_m
}

fn default_noise() -> Vec<f64> {
    DEFAULT_NOISE_LEVELS_DB.to_vec()
}

impl DatasetConfig {
    /// All seven classes with procedural surrogates, R = 1, elevations
    /// 15°/30°, noise levels 200/150/100 dB.
    pub fn standard() -> Self {
        DatasetConfig {
            version: CONFIG_VERSION,
            targets: CLASS_TABLE
                .iter()
                .map(|n| TargetConfig { name: n.to_string(), model: format!("{BUILTIN_PREFIX}surrogate"), scale: 1.0 })
                .collect(),
            radars: 1,
            elevations_deg: default_elevations(),
            ground_distance_m: default_ground(),
            noise_levels_db: default_noise(),
            master_seed: 0,
            waveform: WaveformSpec::default(),
            ray: RaySpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: DatasetConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(ConfigError::Version(self.version));
        }
        if self.targets.is_empty() {
            return Err(field("targets", "at least one target is required"));
        }
        for (i, t) in self.targets.iter().enumerate() {
            if !(t.scale.is_finite() && t.scale > 0.0) {
                return Err(field(&format!("targets[{i}].scale"), format!("must be positive, got {}", t.scale)));
            }
        }
        self.array().map(|_| ())?;
        if self.noise_levels_db.is_empty() {
            return Err(field("noise_levels_db", "at least one level is required"));
        }
        for &db in &self.noise_levels_db {
            if !(0.0..=201.0).contains(&db) {
                return Err(field("noise_levels_db", format!("{db} dB outside [0, 201]")));
            }
        }
        self.waveform.validate().map_err(|e| field("waveform", e))?;
        self.ray.validate().map_err(|e| field("ray", e))?;
        Ok(())
    }

    pub fn array(&self) -> Result<ArrayConfig, ConfigError> {
        let array = ArrayConfig {
            num_radars: self.radars,
            elevations_deg: self.elevations_deg.clone(),
            ground_distance_m: self.ground_distance_m,
        };
        if !(1..=crate::dataset::MAX_RADARS).contains(&self.radars) {
            return Err(field("radars", format!("{} outside [1, 8]", self.radars)));
        }
        array.validate().map_err(|e| field("elevations_deg/ground_distance_m", e))?;
        Ok(array)
    }

    pub fn target_names(&self) -> Vec<&str> {
        self.targets.iter().map(|t| t.name.as_str()).collect()
    }

    /// Loads every target mesh; relative paths resolve against `base`.
    pub fn load_targets(&self, base: &Path) -> Result<Vec<Target>, ConfigError> {
        self.targets
            .iter()
            .map(|t| {
                let mesh = load_model(&t.model, &t.name, base)?;
                let mesh = if t.scale == 1.0 {
                    mesh
                } else {
                    mesh.scaled(t.scale).map_err(|source| ConfigError::Model { path: t.model.clone(), source })?
                };
                Ok(Target::new(&t.name, mesh)?)
            })
            .collect()
    }
}

/// Resolves a `builtin:` name or reads an STL file.
pub fn load_model(model: &str, class: &str, base: &Path) -> Result<TriangleMesh, ConfigError> {
    if let Some(name) = model.strip_prefix(BUILTIN_PREFIX) {
        return builtin_model(name, class).ok_or_else(|| ConfigError::UnknownBuiltin(model.to_string()));
    }
    let path = base.join(model);
    let bytes = std::fs::read(&path).map_err(|source| ConfigError::ModelIo { path: path.clone(), source })?;
    let load = load_stl(&bytes).map_err(|source| ConfigError::Model { path: model.to_string(), source })?;
    if load.dropped > 0 {
        log::warn!("{model}: dropped {} degenerate facets", load.dropped);
    }
    Ok(load.mesh)
}

/// Procedural meshes by name; `surrogate` uses `class`.
pub fn builtin_model(name: &str, class: &str) -> Option<TriangleMesh> {
    match name {
        "surrogate" => shapes::aircraft_surrogate(class),
        "cube" => Some(shapes::unit_cube()),
        "trihedral" => Some(shapes::trihedral(1.0).centered()),
        "slicy" => Some(shapes::slicy()),
        _ => None,
    }
}
