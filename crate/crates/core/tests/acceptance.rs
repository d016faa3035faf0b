//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use isar_core::bvh::{Bvh, Ray};
use isar_core::config::{DatasetConfig, TargetConfig, BUILTIN_PREFIX};
use isar_core::dataset::{enumerate_dataset, generate_dataset, BIN_FILE, CLASS_TABLE};
use isar_core::geometry::RadarPose;
use isar_core::imaging::{form_image, synthesize_point_scatterers, PhaseHistory, WaveformSpec};
use isar_core::mesh::TriangleMesh;
use isar_core::noise::{add_noise, NoiseSpec};
use isar_core::scattering::{RaySpec, Scene};
use isar_core::validation::{occluder_returns, validate_slicy, SlicyOptions};
use isar_core::{shapes, Vec3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const C: f64 = 299_792_458.0;
const N: usize = 54;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Circular pixel distance on the 54-point grid.
fn wrap_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(N as f64);
    d.min(N as f64 - d)
}

fn point_scatterer() -> Outcome {
    let start = Instant::now();
    let wf = WaveformSpec::default();
    // Independent constants: 10 GHz, 300 MHz over 54 steps, 3° sweep.
    let df = 300e6 / 53.0;
    let range_bin = C / (2.0 * df * N as f64);
    let cross_res = (C / 10e9) / (2.0 * 3f64.to_radians());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let x = Vec3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let az: f64 = rng.random_range(0.0..360.0);
        let el = if rng.random_bool(0.5) { 15.0 } else { 30.0 };
        let pose = RadarPose::from_ground(az, el, 1000.0).map_err(|e| e.to_string())?;
        let (a, e) = (az.to_radians(), f64::to_radians(el));
        let u = Vec3::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin());
        let e1 = Vec3::new(-a.sin(), a.cos(), 0.0);
        let row = 27.0 - u.dot(x) / range_bin;
        let col = 27.0 - e.cos() * e1.dot(x) / cross_res;
        let ph = synthesize_point_scatterers(&wf, &pose, &[(x, 1.0)]).map_err(|e| e.to_string())?;
        let (pr, pc, _) = form_image(&ph).map_err(|e| e.to_string())?.peak();
        let d = wrap_dist(pr as f64, row).max(wrap_dist(pc as f64, col));
        worst = worst.max(d);
        ensure(d <= 1.0, || {
            format!("trial {trial}: x={x:?} az={az:.2} el={el}: peak ({pr},{pc}) vs predicted ({row:.2},{col:.2})")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("runtime {elapsed:?} >= 10 s"))?;
    Ok(format!("20 offsets, worst distance {worst:.2} px, {elapsed:.2?}"))
}

fn parseval() -> Outcome {
    let wf = WaveformSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let scale: f64 = 10f64.powf(rng.random_range(-3.0..3.0));
        let samples: Vec<Complex64> = (0..N * N)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
            .collect();
        let reference = rng.random_range(10.0..50_000.0);
        let ph_energy: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
        let ph = PhaseHistory::with_reference(wf, reference, samples).map_err(|e| e.to_string())?;
        let image = form_image(&ph).map_err(|e| e.to_string())?;
        let img_energy: f64 = image.pixels().iter().map(|z| z.norm_sqr()).sum();
        worst = worst.max((img_energy - ph_energy).abs() / ph_energy);
    }
    ensure(worst < 1e-9, || format!("worst relative error {worst:e}"))?;
    Ok(format!("100 histories, worst relative error {worst:.2e}"))
}

fn oracle_hit(mesh: &TriangleMesh, ray: &Ray) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for t in 0..mesh.len() {
        let [a, b, c] = mesh.corners(t);
        let (e1, e2) = (b - a, c - a);
        let p = ray.dir.cross(e2);
        let det = e1.dot(p);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = ray.origin - a;
        let bu = s.dot(p) / det;
        let q = s.cross(e1);
        let bv = ray.dir.dot(q) / det;
        let dist = e2.dot(q) / det;
        if bu < 0.0 || bv < 0.0 || bu + bv > 1.0 || dist <= 1e-9 {
            continue;
        }
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((t as u32, dist));
        }
    }
    best
}

fn random_mesh(rng: &mut ChaCha8Rng) -> TriangleMesh {
    let n = rng.random_range(1..=200);
    let mut vertices = Vec::with_capacity(3 * n);
    let mut triangles = Vec::with_capacity(n);
    let mut pt = |half: f64| Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half));
    for i in 0..n {
        let c = pt(5.0);
        for _ in 0..3 {
            vertices.push(c + pt(1.5));
        }
        let base = 3 * i as u32;
        triangles.push([base, base + 1, base + 2]);
    }
    TriangleMesh::new(vertices, triangles).expect("random triangles are non-degenerate")
}

fn bvh_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut hits, mut rays) = (0, 0);
    for m in 0..10 {
        let mesh = random_mesh(&mut rng);
        let bvh = Bvh::build(&mesh);
        for _ in 0..100 {
            let origin = Vec3::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0));
            let aim = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let ray = Ray::new(origin, (aim - origin).normalize());
            let got = bvh.nearest(&ray).map(|h| (h.triangle, h.t));
            let want = oracle_hit(&mesh, &ray);
            rays += 1;
            match (got, want) {
                (None, None) => {}
                (Some((ta, da)), Some((tb, db))) if ta == tb && (da - db).abs() <= 1e-9 => hits += 1,
                _ => return Err(format!("mesh {m}: bvh {got:?} vs brute force {want:?}")),
            }
        }
    }
    Ok(format!("{rays} rays over 10 meshes agree ({hits} hits)"))
}

fn scattering_primitives() -> Outcome {
    let spec = RaySpec { rays_per_axis: 32, ..RaySpec::default() };
    let plate = Scene::new(shapes::plate_facing_x(2.0, 2.0, 0.0, 4));
    let pose = RadarPose::new(0.0, 0.0, 1000.0).map_err(|e| e.to_string())?;
    let returns = plate.trace(&pose, &spec);
    let total: f64 = returns.iter().map(|r| r.amplitude).sum();
    let single: f64 = returns.iter().filter(|r| r.bounce_count == 1).map(|r| r.amplitude).sum();
    let plate_frac = single / total;
    ensure(total > 0.0 && plate_frac >= 0.95, || format!("plate bounce-1 fraction {plate_frac:.4}"))?;

    let dihedral = Scene::new(shapes::dihedral(1.0, 1.0));
    let mut worst: f64 = 1.0;
    for az in 25..=65 {
        let pose = RadarPose::new(f64::from(az), 0.0, 1000.0).map_err(|e| e.to_string())?;
        let returns = dihedral.trace(&pose, &spec);
        let total: f64 = returns.iter().map(|r| r.amplitude).sum();
        let double: f64 = returns.iter().filter(|r| r.bounce_count == 2).map(|r| r.amplitude).sum();
        ensure(double > 0.0, || format!("dihedral az {az}: no bounce-2 returns"))?;
        worst = worst.min(double / total);
    }
    ensure(worst >= 0.95, || format!("dihedral bounce-2 fraction {worst:.4}"))?;

    for (az, el) in [(0.0, 0.0), (37.0, 15.0), (200.0, 30.0)] {
        let pose = RadarPose::new(az, el, 1000.0).map_err(|e| e.to_string())?;
        let (front, hidden) = occluder_returns(&pose, &spec);
        ensure(front > 0 && hidden == 0, || format!("occluder az {az} el {el}: front {front}, hidden {hidden}"))?;
    }
    Ok(format!(
        "plate bounce-1 {:.1}%, dihedral bounce-2 ≥ {:.1}% over az 25..65, occluded plate silent",
        100.0 * plate_frac,
        100.0 * worst
    ))
}

fn snr_calibration() -> Outcome {
    let wf = WaveformSpec::default();
    let pose = RadarPose::from_ground(30.0, 15.0, 1000.0).map_err(|e| e.to_string())?;
    let pts = [(Vec3::new(1.0, 0.5, 0.0), 1.0), (Vec3::new(-2.0, 1.0, 0.5), 0.5), (Vec3::new(0.3, -1.7, 0.2), 0.8)];
    let clean = synthesize_point_scatterers(&wf, &pose, &pts).map_err(|e| e.to_string())?;
    let signal: f64 = clean.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / (N * N) as f64;
    let mut sum = 0.0;
    for seed in 0..100u64 {
        let noisy = add_noise(&clean, &NoiseSpec::new(100.0, seed).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let noise: f64 = clean.samples().iter().zip(noisy.samples()).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>() / (N * N) as f64;
        sum += 10.0 * (signal / noise).log10();
    }
    let mean = sum / 100.0;
    ensure((mean - 100.0).abs() <= 0.2, || format!("mean empirical SNR {mean:.4} dB"))?;
    Ok(format!("mean empirical SNR {mean:.4} dB over 100 seeds"))
}

fn dataset_counts() -> Outcome {
    let cfg = DatasetConfig::standard();
    let array = cfg.array().map_err(|e| e.to_string())?;
    let m = enumerate_dataset(&cfg.target_names(), &array, &cfg.noise_levels_db, cfg.master_seed, &cfg.waveform, &cfg.ray)
        .map_err(|e| e.to_string())?;
    ensure(m.sample_count() == 15_120, || format!("default count {}", m.sample_count()))?;
    for &level in &cfg.noise_levels_db {
        let n = m.count_per_noise_level(level);
        ensure(n == 5_040, || format!("{n} samples at {level} dB"))?;
    }

    let mut cfg4 = DatasetConfig::standard();
    cfg4.radars = 4;
    let array4 = cfg4.array().map_err(|e| e.to_string())?;
    let m4 = enumerate_dataset(&cfg4.target_names(), &array4, &cfg4.noise_levels_db, 0, &cfg4.waveform, &cfg4.ray)
        .map_err(|e| e.to_string())?;
    for name in CLASS_TABLE {
        for &level in &cfg4.noise_levels_db {
            let n = m4.samples.iter().filter(|s| s.target == name && s.snr_db == level).count();
            ensure(n == 180, || format!("R=4: {n} stacks for {name} at {level} dB"))?;
        }
    }

    // Byte-identical regeneration on a reduced configuration.
    let small = DatasetConfig {
        targets: vec![TargetConfig { name: "F16".into(), model: format!("{BUILTIN_PREFIX}surrogate"), scale: 1.0 }],
        radars: 8,
        elevations_deg: vec![15.0],
        noise_levels_db: vec![100.0],
        master_seed: 7,
        ..DatasetConfig::standard()
    };
    let small_array = small.array().map_err(|e| e.to_string())?;
    let ms = enumerate_dataset(&small.target_names(), &small_array, &small.noise_levels_db, small.master_seed, &small.waveform, &small.ray)
        .map_err(|e| e.to_string())?;
    let targets = small.load_targets(Path::new(".")).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut bins = Vec::new();
    for workers in [1, 8] {
        let out = dir.path().join(format!("w{workers}"));
        generate_dataset(&ms, &targets, &out, workers).map_err(|e| e.to_string())?;
        bins.push(std::fs::read(out.join(BIN_FILE)).map_err(|e| e.to_string())?);
    }
    ensure(bins[0] == bins[1], || "dataset.bin differs between 1 and 8 workers".into())?;
    Ok(format!(
        "15120 default (5040 per level), R=4 180 per target per level, {} stacks byte-identical for workers 1 vs 8",
        ms.sample_count()
    ))
}

fn slicy_validation() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mesh = shapes::slicy();
    let report = validate_slicy(&mesh, &SlicyOptions::default(), Some(dir.path())).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let pngs = std::fs::read_dir(dir.path())
        .map_err(|e| e.to_string())?
        .filter_map(Result::ok)
        .filter(|e| e.path().extension().is_some_and(|x| x == "png"))
        .count();
    ensure(mesh.len() == 6400, || format!("{} faces", mesh.len()))?;
    ensure(pngs == 16, || format!("{pngs} renders"))?;
    for (name, check) in [("multi-bounce", &report.multi_bounce), ("shadowing", &report.shadowing), ("aspect", &report.aspect_dependence)] {
        ensure(check.passed, || format!("{name} check failed: {}", check.detail))?;
    }
    ensure(elapsed < Duration::from_secs(300), || format!("runtime {elapsed:?} >= 300 s"))?;
    Ok(format!("16 renders, 3 checks passed, {elapsed:.2?}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("point-scatterer impulse response", point_scatterer),
        ("parseval energy", parseval),
        ("bvh vs brute force", bvh_oracle),
        ("scattering primitives", scattering_primitives),
        ("snr calibration", snr_calibration),
        ("dataset counts and determinism", dataset_counts),
        ("slicy validation", slicy_validation),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
