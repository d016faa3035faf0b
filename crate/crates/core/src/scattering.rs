//! Geometric-optics shooting-and-bouncing-rays tracer.
//!
//! A jittered grid of parallel rays covers the mesh's projection onto the
//! plane normal to the line of sight. Each ray reflects specularly off
//! perfectly conducting two-sided facets. A bounce is reported when its
//! outgoing direction falls inside the exit cone around the back-to-radar
//! direction and (with shadowing on) nothing blocks the way back.
//!
//! Path lengths use the plane-wave convention: a point `x` lies
//! `R - û·x` from a radar at slant range `R` along unit line of sight `û`.

use arrayvec::ArrayVec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::{Bvh, Ray};
use crate::geometry::RadarPose;
use crate::mesh::TriangleMesh;
use crate::seeds::{splitmix64, unit_interval};
use crate::vec3::Vec3;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const MAX_BOUNCES: u8 = 3;

/// Offset applied along the facet normal before re-launching a ray.
const SURFACE_EPS: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ScatterError {
    #[error("rays_per_axis must be >= 8 (got {0})")]
    RayDensity(u32),
    #[error("max_bounces must be in [1, 3] (got {0})")]
    Bounces(u8),
    #[error("wavelength {0} m must be finite and > 0")]
    Wavelength(f64),
    #[error("jitter fraction {0} must be in [0, 1]")]
    Jitter(f64),
}

fn default_jitter() -> f64 {
    0.5
}

fn default_shadowing() -> bool {
    true
}

/// Ray-launch parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySpec {
    /// Grid density across the projected bounding box (N × N rays).
    pub rays_per_axis: u32,
    pub max_bounces: u8,
    /// Carrier wavelength the trace is run for.
    pub wavelength_m: f64,
    /// Jitter amplitude as a fraction of one grid cell.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// Seed for the deterministic jitter pattern.
    #[serde(default)]
    pub jitter_seed: u64,
    /// Check the return leg for occlusion.
    #[serde(default = "default_shadowing")]
    pub shadowing: bool,
}

impl Default for RaySpec {
    fn default() -> Self {
        RaySpec {
            rays_per_axis: 64,
            max_bounces: MAX_BOUNCES,
            wavelength_m: SPEED_OF_LIGHT / 10e9,
            jitter: default_jitter(),
            jitter_seed: 0,
            shadowing: true,
        }
    }
}

impl RaySpec {
    pub fn validate(&self) -> Result<(), ScatterError> {
        if self.rays_per_axis < 8 {
            return Err(ScatterError::RayDensity(self.rays_per_axis));
        }
        if !(1..=MAX_BOUNCES).contains(&self.max_bounces) {
            return Err(ScatterError::Bounces(self.max_bounces));
        }
        if !(self.wavelength_m.is_finite() && self.wavelength_m > 0.0) {
            return Err(ScatterError::Wavelength(self.wavelength_m));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(ScatterError::Jitter(self.jitter));
        }
        Ok(())
    }

    /// Exit-cone half-angle in radians: atan(1/N) + 2°.
    pub fn exit_cone_rad(&self) -> f64 {
        (1.0 / f64::from(self.rays_per_axis)).atan() + 2f64.to_radians()
    }
}

/// One bounce point on a ray's path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BouncePoint {
    pub point: Vec3,
    pub triangle: u32,
}

/// A contribution received back at the radar.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterReturn {
    /// Total two-way path, meters.
    pub path_length_m: f64,
    pub amplitude: f64,
    pub bounce_count: u8,
    /// Index of the launching ray in the grid (row-major).
    pub ray_index: u32,
    /// Bounce points from first to last.
    pub chain: ArrayVec<BouncePoint, 3>,
}

/// Two-way path of a bounce chain under the plane-wave convention.
pub fn chain_path_length(points: &[Vec3], line_of_sight: Vec3, slant_range_m: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    let legs: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    (slant_range_m - line_of_sight.dot(first)) + legs + (slant_range_m - line_of_sight.dot(last))
}

/// A mesh with its acceleration structure, ready for repeated traces.
#[derive(Clone, Debug)]
pub struct Scene {
    mesh: TriangleMesh,
    bvh: Bvh,
}

impl Scene {
    pub fn new(mesh: TriangleMesh) -> Self {
        let bvh = Bvh::build(&mesh);
        Scene { mesh, bvh }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    /// Traces the ray grid for one pose. Results are ordered by ray index,
    /// then by bounce, independent of thread scheduling.
    pub fn trace(&self, pose: &RadarPose, spec: &RaySpec) -> Vec<ScatterReturn> {
        let grid = RayGrid::new(&self.mesh, pose, spec);
        let n = spec.rays_per_axis as usize;
        let per_ray: Vec<ArrayVec<ScatterReturn, 3>> = (0..n * n)
            .into_par_iter()
            .with_min_len(64)
            .map(|i| self.trace_ray(&grid, i as u32, pose, spec))
            .collect();
        per_ray.into_iter().flatten().collect()
    }

    fn trace_ray(&self, grid: &RayGrid, index: u32, pose: &RadarPose, spec: &RaySpec) -> ArrayVec<ScatterReturn, 3> {
        let mut out = ArrayVec::new();
        let u = grid.los;
        let cone = spec.exit_cone_rad();
        let range = pose.slant_range_m();
        let normals = self.mesh.normals();

        let mut ray = Ray::new(grid.origin(index), -u);
        let mut chain: ArrayVec<BouncePoint, 3> = ArrayVec::new();
        let mut legs = 0.0;
        for bounce in 1..=spec.max_bounces {
            let Some(hit) = self.bvh.nearest(&ray) else { break };
            let x = ray.at(hit.t);
            if let Some(prev) = chain.last() {
                legs += (x - prev.point).norm();
            }
            chain.push(BouncePoint { point: x, triangle: hit.triangle });

            let mut n = normals[hit.triangle as usize];
            if n.dot(ray.dir) > 0.0 {
                n = -n;
            }
            let cos_incidence = -ray.dir.dot(n);
            let outgoing = ray.dir.reflect(n);
            let lift = x + n * SURFACE_EPS;

            if outgoing.angle_to(u) <= cone
                && !(spec.shadowing && self.bvh.occluded(&Ray::new(lift, u), f64::INFINITY))
            {
                let first = chain[0].point;
                out.push(ScatterReturn {
                    path_length_m: (range - u.dot(first)) + legs + (range - u.dot(x)),
                    amplitude: grid.footprint * cos_incidence.abs(),
                    bounce_count: bounce,
                    ray_index: index,
                    chain: chain.clone(),
                });
            }
            ray = Ray::new(lift, outgoing);
        }
        out
    }
}

/// Launch plane for one pose.
struct RayGrid {
    los: Vec3,
    e1: Vec3,
    e2: Vec3,
    lo: (f64, f64),
    cell: (f64, f64),
    standoff: f64,
    n: u32,
    jitter: f64,
    seed: u64,
    footprint: f64,
}

impl RayGrid {
    fn new(mesh: &TriangleMesh, pose: &RadarPose, spec: &RaySpec) -> Self {
        let los = pose.line_of_sight();
        let az = pose.azimuth_deg().to_radians();
        let e1 = Vec3::new(-az.sin(), az.cos(), 0.0);
        let e2 = los.cross(e1);
        let (mut lo1, mut hi1, mut lo2, mut hi2) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let mut depth = f64::NEG_INFINITY;
        for tri in mesh.triangles() {
            for &i in tri {
                let v = mesh.vertices()[i as usize];
                let (a, b) = (e1.dot(v), e2.dot(v));
                lo1 = lo1.min(a);
                hi1 = hi1.max(a);
                lo2 = lo2.min(b);
                hi2 = hi2.max(b);
                depth = depth.max(los.dot(v));
            }
        }
        let n = spec.rays_per_axis;
        let w1 = (hi1 - lo1).max(1e-9);
        let w2 = (hi2 - lo2).max(1e-9);
        let cell = (w1 / f64::from(n), w2 / f64::from(n));
        RayGrid {
            los,
            e1,
            e2,
            lo: (lo1, lo2),
            cell,
            standoff: depth + 1.0 + 1e-3 * (w1 + w2),
            n,
            jitter: spec.jitter,
            seed: spec.jitter_seed,
            footprint: cell.0 * cell.1,
        }
    }

    fn origin(&self, index: u32) -> Vec3 {
        let (i, j) = (index % self.n, index / self.n);
        let h = splitmix64(self.seed ^ u64::from(index).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let ja = (unit_interval(h) - 0.5) * self.jitter;
        let jb = (unit_interval(splitmix64(h)) - 0.5) * self.jitter;
        let a = self.lo.0 + (f64::from(i) + 0.5 + ja) * self.cell.0;
        let b = self.lo.1 + (f64::from(j) + 0.5 + jb) * self.cell.1;
        self.e1 * a + self.e2 * b + self.los * self.standoff
    }
}

/// Builds a [`Scene`] and traces one pose. Prefer [`Scene::trace`] when the
/// same mesh is traced repeatedly.
pub fn trace_returns(mesh: &TriangleMesh, pose: &RadarPose, spec: &RaySpec) -> Vec<ScatterReturn> {
    Scene::new(mesh.clone()).trace(pose, spec)
}
