//! Deterministic inverse synthetic aperture radar (ISAR) simulation.
//!
//! Triangle meshes are ray traced with shooting-and-bouncing rays under a
//! ring of mono-static radars, turned into stepped-frequency phase
//! histories, corrupted with seeded complex Gaussian noise, and focused into
//! 54 × 54 complex range–Doppler images. The [`dataset`] module enumerates
//! and writes whole multi-radar datasets in a fixed binary layout.
//!
//! ```
//! use isar_core::{geometry::RadarPose, imaging, scattering::{RaySpec, Scene}, shapes};
//!
//! let scene = Scene::new(shapes::trihedral(1.0).centered());
//! let pose = RadarPose::from_ground(45.0, 30.0, 1000.0).unwrap();
//! let wf = imaging::WaveformSpec::default();
//! let ray = RaySpec { rays_per_axis: 16, ..RaySpec::default() };
//! let ph = imaging::synthesize_phase_history(&scene, &pose, &wf, &ray).unwrap();
//! let image = imaging::form_image(&ph).unwrap();
//! assert!(image.energy() > 0.0);
//! ```

pub mod bvh;
pub mod config;
pub mod dataset;
pub mod geometry;
pub mod imaging;
pub mod mesh;
pub mod noise;
pub mod scattering;
pub mod seeds;
pub mod shapes;
pub mod validation;
pub mod vec3;

pub use vec3::Vec3;
