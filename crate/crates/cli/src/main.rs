//! `isarsim`: batch ISAR simulation, dataset builds, renders and
//! calibration-target validation.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use isar_core::config::{load_model, DatasetConfig, BUILTIN_PREFIX};
use isar_core::dataset::{
    self, class_index, enumerate_dataset, generate_dataset, generate_stack, read_bin, read_dataset, render_magnitude_png,
    write_bin, write_png, ImageStack, Target, CLASS_TABLE,
};
use isar_core::geometry::ArrayConfig;
use isar_core::imaging::{WaveformSpec, IMAGE_SIZE};
use isar_core::mesh::{to_ascii_stl, to_binary_stl};
use isar_core::noise::{NoiseSpec, GENERATOR_NAME};
use isar_core::scattering::RaySpec;
use isar_core::validation::{validate_slicy, SlicyOptions, RENDER_DYNAMIC_RANGE_DB};

const BUILTINS: [&str; 4] = ["surrogate", "cube", "trihedral", "slicy"];

#[derive(Parser)]
#[command(name = "isarsim", version, about = "Deterministic multi-radar ISAR image simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one multi-radar image stack.
    Simulate(SimulateArgs),
    /// Build dataset.bin + manifest.json from a JSON config.
    Dataset(DatasetArgs),
    /// Render one channel of a stack file or dataset as a PNG.
    Render(RenderArgs),
    /// Image the calibration target over the rotation grid and check it.
    ValidateSlicy(ValidateArgs),
    /// Print defaults, or summarize and verify a dataset.
    Info(InfoArgs),
    /// Export a builtin model as STL.
    MakeModel(MakeModelArgs),
}

#[derive(Args)]
struct RayArgs {
    /// Rays per axis of the launch grid.
    #[arg(long)]
    rays: Option<u32>,
    /// Maximum bounces per ray (1-3).
    #[arg(long)]
    max_bounces: Option<u8>,
}

impl RayArgs {
    fn apply(&self, mut ray: RaySpec) -> RaySpec {
        if let Some(n) = self.rays {
            ray.rays_per_axis = n;
        }
        if let Some(b) = self.max_bounces {
            ray.max_bounces = b;
        }
        ray
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// STL file or builtin:{surrogate,cube,trihedral,slicy}.
    #[arg(long)]
    model: String,
    /// Class name used for the label (and for builtin:surrogate).
    #[arg(long, default_value = "F15")]
    class: String,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 1)]
    radars: u32,
    /// Ring offset in whole degrees.
    #[arg(long, default_value_t = 0)]
    offset: u32,
    #[arg(long, default_value_t = 15.0)]
    elevation: f64,
    /// SNR in dB; 201 means no noise.
    #[arg(long, default_value_t = 201.0)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000.0)]
    ground_distance: f64,
    /// Output stack file.
    #[arg(long)]
    out: PathBuf,
    /// Also write one PNG per channel at 40 dB dynamic range.
    #[arg(long)]
    png: bool,
    #[command(flatten)]
    ray: RayArgs,
}

#[derive(Args)]
struct DatasetArgs {
    /// JSON dataset config.
    #[arg(long, conflicts_with = "standard", required_unless_present = "standard")]
    config: Option<PathBuf>,
    /// Seven surrogate targets, R=1, elevations 15/30, noise 200/150/100 dB.
    #[arg(long)]
    standard: bool,
    /// Output directory (required unless --dry-run).
    #[arg(long, required_unless_present = "dry_run")]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Override the radar count.
    #[arg(long)]
    radars: Option<u32>,
    /// Override the master seed.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Override the noise levels (comma separated dB).
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<f64>>,
    /// Override the elevations (comma separated degrees).
    #[arg(long, value_delimiter = ',')]
    elevations: Option<Vec<f64>>,
    /// Enumerate and print counts without generating.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    ray: RayArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Stack file from `simulate`, or a dataset directory.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long, default_value_t = 0)]
    channel: usize,
    #[arg(long, default_value_t = RENDER_DYNAMIC_RANGE_DB)]
    dynamic_range: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// STL file; defaults to the builtin 6400-face model.
    #[arg(long, default_value = "builtin:slicy")]
    model: String,
    #[arg(long)]
    out: PathBuf,
    /// Elevations to render (comma separated degrees).
    #[arg(long, value_delimiter = ',', default_values_t = [15.0, 30.0])]
    elevations: Vec<f64>,
    /// Also write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    ray: RayArgs,
}

#[derive(Args)]
struct InfoArgs {
    /// Dataset directory to summarize.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Read every record and check checksums.
    #[arg(long, requires = "dataset")]
    verify: bool,
}

#[derive(Args)]
struct MakeModelArgs {
    /// surrogate, cube, trihedral or slicy.
    #[arg(long)]
    name: String,
    #[arg(long, default_value = "F15")]
    class: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ascii: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Dataset(a) => dataset(a),
        Command::Render(a) => render(a),
        Command::ValidateSlicy(a) => validate(a),
        Command::Info(a) => info(a),
        Command::MakeModel(a) => make_model(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
}

fn workers(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1)
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let label = class_index(&a.class).with_context(|| format!("unknown class {:?}; expected one of {}", a.class, CLASS_TABLE.join(", ")))?;
    let class = CLASS_TABLE[label as usize];
    let mut mesh = load_model(&a.model, class, Path::new("."))?;
    if a.scale != 1.0 {
        mesh = mesh.scaled(a.scale)?;
    }
    let array = ArrayConfig::new(a.radars, vec![a.elevation], a.ground_distance)?;
    let noise = NoiseSpec::new(a.snr, a.seed)?;
    let ray = RaySpec { jitter_seed: a.seed, ..a.ray.apply(RaySpec::default()) };
    let target = Target::new(class, mesh)?;
    log::info!("simulating {} radars at offset {} deg, elevation {} deg", a.radars, a.offset, a.elevation);
    let stack = generate_stack(&target, &array, a.offset, a.elevation, &noise, &WaveformSpec::default(), &ray)?;
    write_bin(&a.out, std::slice::from_ref(&stack))?;

    let mut pngs = Vec::new();
    if a.png {
        for (k, image) in stack.channels.iter().enumerate() {
            let path = channel_png_path(&a.out, k);
            let gray = render_magnitude_png(image, RENDER_DYNAMIC_RANGE_DB).with_context(|| format!("channel {k}"))?;
            write_png(&gray, &path)?;
            pngs.push(path.display().to_string());
        }
    }
    print_json(&json!({
        "out": a.out.display().to_string(),
        "class": class,
        "label": label,
        "channels": stack.channels.len(),
        "azimuths_deg": stack.meta.azimuths_deg,
        "energy": stack.channels.iter().map(|c| c.energy()).collect::<Vec<_>>(),
        "png": pngs,
    }));
    Ok(ExitCode::SUCCESS)
}

fn channel_png_path(out: &Path, k: usize) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "stack".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_ch{k}.png"))
}

fn dataset(a: DatasetArgs) -> Result<ExitCode> {
    let (mut cfg, base) = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let cfg = DatasetConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?;
            (cfg, path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf))
        }
        None => (DatasetConfig::standard(), PathBuf::from(".")),
    };
    if let Some(r) = a.radars {
        cfg.radars = r;
    }
    if let Some(s) = a.master_seed {
        cfg.master_seed = s;
    }
    if let Some(levels) = a.noise_levels.clone() {
        cfg.noise_levels_db = levels;
    }
    if let Some(els) = a.elevations.clone() {
        cfg.elevations_deg = els;
    }
    cfg.ray = a.ray.apply(cfg.ray);
    cfg.validate()?;

    let array = cfg.array()?;
    let manifest = enumerate_dataset(&cfg.target_names(), &array, &cfg.noise_levels_db, cfg.master_seed, &cfg.waveform, &cfg.ray)?;
    let per_level: serde_json::Map<String, serde_json::Value> = cfg
        .noise_levels_db
        .iter()
        .map(|&db| (format!("{db}"), json!(manifest.count_per_noise_level(db))))
        .collect();
    eprintln!("{} samples", manifest.sample_count());

    if !a.dry_run {
        let out = a.out.as_deref().expect("clap requires --out without --dry-run");
        let targets = cfg.load_targets(&base)?;
        let w = workers(a.workers);
        log::info!("generating {} samples with {w} workers into {}", manifest.sample_count(), out.display());
        generate_dataset(&manifest, &targets, out, w)?;
        let (_, reader) = read_dataset(out)?;
        if reader.len() as usize != manifest.sample_count() {
            bail!("wrote {} samples, manifest lists {}", reader.len(), manifest.sample_count());
        }
    }
    print_json(&json!({
        "samples": manifest.sample_count(),
        "per_noise_level": per_level,
        "radars": cfg.radars,
        "targets": manifest.targets,
        "dry_run": a.dry_run,
        "out": a.out.as_ref().map(|p| p.display().to_string()),
    }));
    Ok(ExitCode::SUCCESS)
}

fn load_stack(input: &Path, index: usize) -> Result<ImageStack> {
    if input.is_dir() {
        let (_, reader) = read_dataset(input)?;
        let count = reader.len();
        match reader.into_iter().nth(index) {
            Some(stack) => Ok(stack?),
            None => bail!("index {index} out of range for {count} samples"),
        }
    } else {
        let stacks = read_bin(input, &WaveformSpec::default())?;
        let count = stacks.len();
        stacks.into_iter().nth(index).with_context(|| format!("index {index} out of range for {count} samples"))
    }
}

fn render(a: RenderArgs) -> Result<ExitCode> {
    let stack = load_stack(&a.input, a.index)?;
    let image = stack
        .channels
        .get(a.channel)
        .with_context(|| format!("channel {} out of range for {} channels", a.channel, stack.channels.len()))?;
    let gray = render_magnitude_png(image, a.dynamic_range)?;
    write_png(&gray, &a.out)?;
    let (row, col, mag) = image.peak();
    print_json(&json!({
        "out": a.out.display().to_string(),
        "target": stack.meta.target,
        "azimuth_deg": stack.meta.azimuths_deg.get(a.channel),
        "peak": { "row": row, "col": col, "magnitude": mag },
    }));
    Ok(ExitCode::SUCCESS)
}

fn validate(a: ValidateArgs) -> Result<ExitCode> {
    let mesh = load_model(&a.model, "F15", Path::new("."))?;
    let opts = SlicyOptions { elevations_deg: a.elevations.clone(), ray: a.ray.apply(RaySpec::default()), ..SlicyOptions::default() };
    log::info!("validating {} faces over {} views", mesh.len(), opts.elevations_deg.len() * opts.rotations_deg.len());
    let report = validate_slicy(&mesh, &opts, Some(&a.out))?;
    let value = serde_json::to_value(&report)?;
    if let Some(path) = &a.report {
        std::fs::write(path, serde_json::to_string_pretty(&value)? + "\n")?;
    }
    print_json(&value);
    for (name, check) in [("multi_bounce", &report.multi_bounce), ("shadowing", &report.shadowing), ("aspect_dependence", &report.aspect_dependence)] {
        eprintln!("{} {name}: {}", if check.passed { "PASS" } else { "FAIL" }, check.detail);
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn info(a: InfoArgs) -> Result<ExitCode> {
    let Some(dir) = a.dataset else {
        let wf = WaveformSpec::default();
        print_json(&json!({
            "version": env!("CARGO_PKG_VERSION"),
            "class_table": CLASS_TABLE,
            "image_size": IMAGE_SIZE,
            "waveform": wf,
            "range_resolution_m": wf.range_resolution_m(),
            "cross_range_resolution_m": wf.cross_range_resolution_m(),
            "ray": RaySpec::default(),
            "array": ArrayConfig::default(),
            "noise_levels_db": dataset::DEFAULT_NOISE_LEVELS_DB,
            "noise_generator": GENERATOR_NAME,
            "builtin_models": BUILTINS.map(|n| format!("{BUILTIN_PREFIX}{n}")),
        }));
        return Ok(ExitCode::SUCCESS);
    };
    let (manifest, reader) = read_dataset(&dir)?;
    let mut verified = None;
    if a.verify {
        let mut n = 0u64;
        for stack in reader {
            stack?;
            n += 1;
        }
        verified = Some(n);
    }
    let per_level: serde_json::Map<String, serde_json::Value> = manifest
        .noise_levels_db
        .iter()
        .map(|&db| (format!("{db}"), json!(manifest.count_per_noise_level(db))))
        .collect();
    print_json(&json!({
        "samples": manifest.sample_count(),
        "per_noise_level": per_level,
        "radars": manifest.radar_count,
        "targets": manifest.targets,
        "elevations_deg": manifest.elevations_deg,
        "master_seed": manifest.master_seed,
        "verified_samples": verified,
    }));
    Ok(ExitCode::SUCCESS)
}

fn make_model(a: MakeModelArgs) -> Result<ExitCode> {
    let class = class_index(&a.class).map(|l| CLASS_TABLE[l as usize]).unwrap_or(&a.class);
    let mesh = load_model(&format!("{BUILTIN_PREFIX}{}", a.name), class, Path::new("."))?;
    if a.ascii {
        std::fs::write(&a.out, to_ascii_stl(&mesh, &a.name))?;
    } else {
        std::fs::write(&a.out, to_binary_stl(&mesh))?;
    }
    let (lo, hi) = mesh.bounds();
    print_json(&json!({
        "out": a.out.display().to_string(),
        "faces": mesh.len(),
        "extent_m": [hi.x - lo.x, hi.y - lo.y, hi.z - lo.z],
    }));
    Ok(ExitCode::SUCCESS)
}
