//! Radar pose computation: elevation trigonometry, slant range and
//! multi-monostatic azimuth placement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vec3::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("elevation {0}° outside [0, 90)")]
    Elevation(f64),
    #[error("ground distance {0} m must be finite and > 0")]
    GroundDistance(f64),
    #[error("slant range {0} m must be finite and > 0")]
    SlantRange(f64),
    #[error("azimuth {0}° is not finite")]
    Azimuth(f64),
    #[error("radar count {0} outside [1, 360]")]
    RadarCount(u32),
    #[error("at least one elevation is required")]
    NoElevations,
    #[error("duplicate elevation {0}°")]
    DuplicateElevation(f64),
    #[error("offset must be < {spacing} for {radars} radars (got {offset})")]
    Offset { offset: u32, spacing: u32, radars: u32 },
}

/// Wraps degrees into [0, 360).
pub fn normalize_azimuth(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    if a >= 360.0 { 0.0 } else { a }
}

/// Position of one mono-static radar relative to the target centroid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarPose {
    azimuth_deg: f64,
    elevation_deg: f64,
    slant_range_m: f64,
}

impl RadarPose {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, slant_range_m: f64) -> Result<Self, GeometryError> {
        if !azimuth_deg.is_finite() {
            return Err(GeometryError::Azimuth(azimuth_deg));
        }
        check_elevation(elevation_deg)?;
        if !(slant_range_m.is_finite() && slant_range_m > 0.0) {
            return Err(GeometryError::SlantRange(slant_range_m));
        }
        Ok(RadarPose { azimuth_deg: normalize_azimuth(azimuth_deg), elevation_deg, slant_range_m })
    }

    /// Pose for a radar at `ground_distance_m` whose line of sight rises at
    /// `elevation_deg`.
    pub fn from_ground(azimuth_deg: f64, elevation_deg: f64, ground_distance_m: f64) -> Result<Self, GeometryError> {
        let (_, slant) = slant_geometry(ground_distance_m, elevation_deg)?;
        RadarPose::new(azimuth_deg, elevation_deg, slant)
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    pub fn slant_range_m(&self) -> f64 {
        self.slant_range_m
    }

    /// Same elevation and range, different azimuth.
    pub fn with_azimuth(&self, azimuth_deg: f64) -> RadarPose {
        RadarPose { azimuth_deg: normalize_azimuth(azimuth_deg), ..*self }
    }

    /// Unit vector from the target centroid toward the radar.
    pub fn line_of_sight(&self) -> Vec3 {
        line_of_sight(self.azimuth_deg, self.elevation_deg)
    }
}

/// Unit vector toward a radar at the given azimuth (from +x toward +y) and
/// elevation (above the horizontal plane).
pub fn line_of_sight(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let (sa, ca) = azimuth_deg.to_radians().sin_cos();
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    Vec3::new(ce * ca, ce * sa, se)
}

fn check_elevation(elevation_deg: f64) -> Result<(), GeometryError> {
    if elevation_deg.is_finite() && (0.0..90.0).contains(&elevation_deg) {
        Ok(())
    } else {
        Err(GeometryError::Elevation(elevation_deg))
    }
}

/// Height of the target above the radar's ground plane and the resulting
/// slant range, from a fixed ground distance and an elevation angle.
pub fn slant_geometry(ground_distance_m: f64, elevation_deg: f64) -> Result<(f64, f64), GeometryError> {
    if !(ground_distance_m.is_finite() && ground_distance_m > 0.0) {
        return Err(GeometryError::GroundDistance(ground_distance_m));
    }
    check_elevation(elevation_deg)?;
    let height = ground_distance_m * elevation_deg.to_radians().tan();
    Ok((height, ground_distance_m.hypot(height)))
}

fn default_elevations() -> Vec<f64> {
    vec![15.0, 30.0]
}

fn default_ground_distance() -> f64 {
    1000.0
}

/// A ring of `num_radars` mono-static radars evenly spaced in azimuth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub num_radars: u32,
    #[serde(default = "default_elevations")]
    pub elevations_deg: Vec<f64>,
    #[serde(default = "default_ground_distance")]
    pub ground_distance_m: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            num_radars: 1,
            elevations_deg: default_elevations(),
            ground_distance_m: default_ground_distance(),
        }
    }
}

impl ArrayConfig {
    pub fn new(num_radars: u32, elevations_deg: Vec<f64>, ground_distance_m: f64) -> Result<Self, GeometryError> {
        let cfg = ArrayConfig { num_radars, elevations_deg, ground_distance_m };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(1..=360).contains(&self.num_radars) {
            return Err(GeometryError::RadarCount(self.num_radars));
        }
        if self.elevations_deg.is_empty() {
            return Err(GeometryError::NoElevations);
        }
        for (i, &e) in self.elevations_deg.iter().enumerate() {
            check_elevation(e)?;
            if self.elevations_deg[..i].contains(&e) {
                return Err(GeometryError::DuplicateElevation(e));
            }
        }
        if !(self.ground_distance_m.is_finite() && self.ground_distance_m > 0.0) {
            return Err(GeometryError::GroundDistance(self.ground_distance_m));
        }
        Ok(())
    }

    /// Azimuth step between adjacent radars: floor(360 / R) degrees.
    pub fn spacing_deg(&self) -> u32 {
        360 / self.num_radars
    }

    pub fn check_offset(&self, offset_deg: u32) -> Result<(), GeometryError> {
        let spacing = self.spacing_deg();
        if offset_deg < spacing {
            Ok(())
        } else {
            Err(GeometryError::Offset { offset: offset_deg, spacing, radars: self.num_radars })
        }
    }
}

/// Azimuths of every radar in the ring for one rotational offset.
pub fn radar_azimuths(config: &ArrayConfig, offset_deg: u32) -> Result<Vec<f64>, GeometryError> {
    config.check_offset(offset_deg)?;
    let spacing = config.spacing_deg();
    Ok((0..config.num_radars)
        .map(|k| f64::from((offset_deg + k * spacing) % 360))
        .collect())
}

/// Every distinct rotational offset of the ring: 0..floor(360 / R).
pub fn enumerate_offsets(config: &ArrayConfig) -> Vec<u32> {
    (0..config.spacing_deg()).collect()
}
