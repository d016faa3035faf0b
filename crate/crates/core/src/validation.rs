//! Calibration-target validation run.
//!
//! The target is rotated through a set of yaw angles under a fixed radar at
//! azimuth 0, and each view is imaged, rendered, and checked for
//! multi-bounce returns, shadowing, and aspect-dependent energy.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::{intersect_triangle, Ray};
use crate::dataset::{render_magnitude_png, write_png, GrayImage, RenderError};
use crate::geometry::{GeometryError, RadarPose};
use crate::imaging::{form_image, synthesize_phase_history, ImagingError, WaveformSpec};
use crate::mesh::{rotate_mesh, MeshError, TriangleMesh};
use crate::scattering::{RaySpec, ScatterReturn, Scene};
use crate::shapes::{SLICY_LENGTH_M, SLICY_WIDTH_M};
use crate::vec3::Vec3;

pub const DEFAULT_ROTATIONS_DEG: [u32; 8] = [0, 45, 90, 135, 180, 225, 270, 315];
pub const CARDINAL_ROTATIONS_DEG: [u32; 4] = [0, 90, 180, 270];
pub const RENDER_DYNAMIC_RANGE_DB: f64 = 40.0;
/// Minimum max/min image energy ratio across rotations.
pub const ASPECT_VARIATION_DB: f64 = 3.0;
/// Relative footprint error above which a warning is issued.
pub const FOOTPRINT_TOLERANCE: f64 = 0.10;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no elevations or rotations to validate")]
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlicyOptions {
    pub elevations_deg: Vec<f64>,
    pub rotations_deg: Vec<u32>,
    pub ground_distance_m: f64,
    pub dynamic_range_db: f64,
    pub waveform: WaveformSpec,
    pub ray: RaySpec,
}

impl Default for SlicyOptions {
    fn default() -> Self {
        SlicyOptions {
            elevations_deg: vec![15.0, 30.0],
            rotations_deg: DEFAULT_ROTATIONS_DEG.to_vec(),
            ground_distance_m: 1000.0,
            dynamic_range_db: RENDER_DYNAMIC_RANGE_DB,
            waveform: WaveformSpec::default(),
            ray: RaySpec::default(),
        }
    }
}

/// Summary of one (elevation, rotation) view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub elevation_deg: f64,
    pub rotation_deg: u32,
    pub file_name: String,
    pub image_energy: f64,
    pub returns: usize,
    pub multi_bounce_returns: usize,
    /// Returns whose exit point a brute-force check finds occluded.
    pub occluded_returns: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicyReport {
    pub faces: usize,
    pub footprint_m: [f64; 2],
    pub footprint_warning: Option<String>,
    pub views: Vec<ViewSummary>,
    pub multi_bounce: Check,
    pub shadowing: Check,
    pub aspect_dependence: Check,
    pub passed: bool,
}

/// `slicy_e{elevation}_r{rotation:03}.png`
pub fn render_file_name(elevation_deg: f64, rotation_deg: u32) -> String {
    format!("slicy_e{}_r{rotation_deg:03}.png", elevation_deg)
}

/// Horizontal extent (short side, long side) of the mesh.
pub fn footprint(mesh: &TriangleMesh) -> [f64; 2] {
    let (lo, hi) = mesh.bounds();
    let (a, b) = (hi.x - lo.x, hi.y - lo.y);
    [a.min(b), a.max(b)]
}

fn footprint_warning(fp: [f64; 2]) -> Option<String> {
    let want = [SLICY_WIDTH_M.min(SLICY_LENGTH_M), SLICY_WIDTH_M.max(SLICY_LENGTH_M)];
    let off = fp.iter().zip(&want).any(|(g, w)| ((g - w) / w).abs() > FOOTPRINT_TOLERANCE);
    off.then(|| format!("footprint {:.3} x {:.3} m differs from {} x {} m by more than 10%", fp[0], fp[1], want[0], want[1]))
}

/// Counts returns whose last bounce point cannot see the radar, using a
/// brute-force scan over every triangle.
pub fn count_occluded_exits(mesh: &TriangleMesh, returns: &[ScatterReturn], line_of_sight: Vec3) -> usize {
    returns
        .iter()
        .filter(|r| {
            let last = r.chain.last().expect("returns have at least one bounce");
            let mut n = mesh.normals()[last.triangle as usize];
            if n.dot(line_of_sight) < 0.0 {
                n = -n;
            }
            let ray = Ray::new(last.point + n * 1e-6, line_of_sight);
            (0..mesh.len()).any(|t| {
                let [a, b, c] = mesh.corners(t);
                intersect_triangle(&ray, a, b, c).is_some()
            })
        })
        .count()
}

/// Two square plates normal to the line of sight; the small one sits
/// directly behind the large one. Returns the mesh and the index of the
/// first hidden triangle.
pub fn occluder_scene(line_of_sight: Vec3) -> (TriangleMesh, u32) {
    let u = line_of_sight.normalize();
    let e1 = Vec3::new(0.0, 0.0, 1.0).cross(u).normalize();
    let e2 = u.cross(e1);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (depth, half) in [(1.0, 2.0), (-1.0, 0.5)] {
        let base = vertices.len() as u32;
        let c = u * depth;
        for (s, t) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            vertices.push(c + e1 * (s * half) + e2 * (t * half));
        }
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }
    (TriangleMesh::new(vertices, triangles).expect("plates are non-degenerate"), 2)
}

/// Traces the occluder scene; `(front returns, hidden returns)`.
pub fn occluder_returns(pose: &RadarPose, ray: &RaySpec) -> (usize, usize) {
    let (mesh, hidden) = occluder_scene(pose.line_of_sight());
    let returns = Scene::new(mesh).trace(pose, ray);
    let touches_hidden = |r: &&ScatterReturn| r.chain.iter().any(|b| b.triangle >= hidden);
    let hidden_count = returns.iter().filter(touches_hidden).count();
    (returns.len() - hidden_count, hidden_count)
}

struct View {
    summary: ViewSummary,
    render: GrayImage,
}

fn run_view(mesh: &TriangleMesh, elevation_deg: f64, rotation_deg: u32, opts: &SlicyOptions) -> Result<View, ValidationError> {
    let scene = Scene::new(rotate_mesh(mesh, f64::from(rotation_deg)));
    let pose = RadarPose::from_ground(0.0, elevation_deg, opts.ground_distance_m)?;
    let returns = scene.trace(&pose, &opts.ray);
    let image = form_image(&synthesize_phase_history(&scene, &pose, &opts.waveform, &opts.ray)?)?;
    let render = render_magnitude_png(&image, opts.dynamic_range_db)?;
    Ok(View {
        summary: ViewSummary {
            elevation_deg,
            rotation_deg,
            file_name: render_file_name(elevation_deg, rotation_deg),
            image_energy: image.energy(),
            returns: returns.len(),
            multi_bounce_returns: returns.iter().filter(|r| r.bounce_count >= 2).count(),
            occluded_returns: count_occluded_exits(scene.mesh(), &returns, pose.line_of_sight()),
        },
        render,
    })
}

/// Runs every (elevation, rotation) view, writes renders into `out_dir`
/// when given, and evaluates the three checks.
pub fn validate_slicy(mesh: &TriangleMesh, opts: &SlicyOptions, out_dir: Option<&Path>) -> Result<SlicyReport, ValidationError> {
    if opts.elevations_deg.is_empty() || opts.rotations_deg.is_empty() {
        return Err(ValidationError::Empty);
    }
    opts.waveform.validate()?;
    opts.ray.validate().map_err(ImagingError::from)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let fp = footprint(mesh);
    let warning = footprint_warning(fp);
    if let Some(w) = &warning {
        log::warn!("{w}");
    }

    let mut views = Vec::new();
    for &el in &opts.elevations_deg {
        for &rot in &opts.rotations_deg {
            let view = run_view(mesh, el, rot, opts)?;
            log::info!("{}: {} returns, energy {:.3e}", view.summary.file_name, view.summary.returns, view.summary.image_energy);
            if let Some(dir) = out_dir {
                write_png(&view.render, &dir.join(&view.summary.file_name))?;
            }
            views.push(view.summary);
        }
    }

    let cardinal: Vec<&ViewSummary> = views.iter().filter(|v| CARDINAL_ROTATIONS_DEG.contains(&(v.rotation_deg % 360))).collect();
    let lacking: Vec<String> = cardinal.iter().filter(|v| v.multi_bounce_returns == 0).map(|v| v.file_name.clone()).collect();
    let multi_bounce = Check {
        passed: !cardinal.is_empty() && lacking.is_empty(),
        detail: if cardinal.is_empty() {
            "no cardinal rotation in the run".into()
        } else if lacking.is_empty() {
            format!("{} cardinal views all have bounce >= 2 returns", cardinal.len())
        } else {
            format!("no bounce >= 2 returns in {}", lacking.join(", "))
        },
    };

    let occluded: usize = views.iter().map(|v| v.occluded_returns).sum();
    let pose = RadarPose::from_ground(0.0, opts.elevations_deg[0], opts.ground_distance_m)?;
    let (front, hidden) = occluder_returns(&pose, &opts.ray);
    let shadowing = Check {
        passed: occluded == 0 && hidden == 0 && front > 0,
        detail: format!("{occluded} returns from occluded exit points; occluder scene: {front} front, {hidden} hidden returns"),
    };

    let mut spreads = Vec::new();
    let mut aspect_ok = true;
    for &el in &opts.elevations_deg {
        let energies: Vec<f64> = views.iter().filter(|v| v.elevation_deg == el).map(|v| v.image_energy).collect();
        let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = 10.0 * (max / min).log10();
        aspect_ok &= energies.len() >= 2 && spread > ASPECT_VARIATION_DB;
        spreads.push(format!("{el} deg: {spread:.2} dB"));
    }
    let aspect_dependence = Check {
        passed: aspect_ok,
        detail: format!("max/min energy across rotations ({}), required > {ASPECT_VARIATION_DB} dB", spreads.join(", ")),
    };

    let passed = multi_bounce.passed && shadowing.passed && aspect_dependence.passed;
    Ok(SlicyReport { faces: mesh.len(), footprint_m: fp, footprint_warning: warning, views, multi_bounce, shadowing, aspect_dependence, passed })
}
