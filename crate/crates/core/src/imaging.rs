//! Stepped-frequency phase histories and range–Doppler image formation.
//!
//! A phase history holds K frequency steps × P pulses. Pulse `p` views the
//! target at aspect `azimuth + (p - P/2)·span/P`. The image is the centered
//! unitary 2-D inverse DFT of the range-compensated history: row index is
//! range, column index is cross-range, and the scene origin lands on pixel
//! (K/2, P/2).

use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::RadarPose;
use crate::scattering::{RaySpec, ScatterError, Scene, SPEED_OF_LIGHT};
use crate::vec3::Vec3;

/// Side length of every phase history and image.
pub const IMAGE_SIZE: usize = 54;

#[derive(Debug, Error, PartialEq)]
pub enum ImagingError {
    #[error("expected {expected_rows}x{expected_cols} samples, got {rows}x{cols}")]
    Dimensions { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("invalid waveform: {0}")]
    Waveform(String),
    #[error("non-finite sample at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error(transparent)]
    Ray(#[from] ScatterError),
}

/// Stepped-frequency waveform and coherent aspect sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub num_freq_steps: usize,
    pub num_pulses: usize,
    pub aspect_span_deg: f64,
}

impl Default for WaveformSpec {
    fn default() -> Self {
        WaveformSpec {
            center_frequency_hz: 10e9,
            bandwidth_hz: 300e6,
            num_freq_steps: IMAGE_SIZE,
            num_pulses: IMAGE_SIZE,
            aspect_span_deg: 3.0,
        }
    }
}

impl WaveformSpec {
    pub fn validate(&self) -> Result<(), ImagingError> {
        let bad = |m: String| Err(ImagingError::Waveform(m));
        if self.num_freq_steps != IMAGE_SIZE || self.num_pulses != IMAGE_SIZE {
            return bad(format!(
                "freq steps and pulses must both be {IMAGE_SIZE} (got {} x {})",
                self.num_freq_steps, self.num_pulses
            ));
        }
        if !(self.center_frequency_hz.is_finite() && self.center_frequency_hz > 0.0) {
            return bad(format!("center frequency {} Hz", self.center_frequency_hz));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0 && self.bandwidth_hz < self.center_frequency_hz) {
            return bad(format!("bandwidth {} Hz must be in (0, center frequency)", self.bandwidth_hz));
        }
        if !(self.aspect_span_deg.is_finite() && self.aspect_span_deg > 0.0) {
            return bad(format!("aspect span {}°", self.aspect_span_deg));
        }
        Ok(())
    }

    /// Frequency of step `k`: f_c − B/2 + k·B/(K−1).
    #[inline]
    pub fn frequency(&self, k: usize) -> f64 {
        self.center_frequency_hz - self.bandwidth_hz / 2.0 + k as f64 * self.frequency_step()
    }

    #[inline]
    pub fn frequency_step(&self) -> f64 {
        self.bandwidth_hz / (self.num_freq_steps - 1) as f64
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_frequency_hz
    }

    /// Aspect offset of pulse `p` from the pose azimuth, degrees.
    pub fn pulse_aspect_deg(&self, p: usize) -> f64 {
        (p as f64 - (self.num_pulses / 2) as f64) * self.aspect_span_deg / self.num_pulses as f64
    }

    /// c / (2B).
    pub fn range_resolution_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }

    /// λ_c / (2·span).
    pub fn cross_range_resolution_m(&self) -> f64 {
        self.wavelength_m() / (2.0 * self.aspect_span_deg.to_radians())
    }

    /// Range shift (m) that moves a scatterer by one image row.
    pub fn range_bin_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.frequency_step() * self.num_freq_steps as f64)
    }
}

/// K × P complex matrix of received samples, row-major by frequency step.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseHistory {
    waveform: WaveformSpec,
    /// Two-way path `2·R_ref` removed during image formation; zero for
    /// histories that are already compensated.
    reference_range_m: f64,
    samples: Vec<Complex64>,
}

impl PhaseHistory {
    /// Wraps already-compensated samples (reference range zero).
    pub fn from_samples(waveform: WaveformSpec, samples: Vec<Complex64>) -> Result<Self, ImagingError> {
        Self::with_reference(waveform, 0.0, samples)
    }

    pub fn with_reference(waveform: WaveformSpec, reference_range_m: f64, samples: Vec<Complex64>) -> Result<Self, ImagingError> {
        let (k, p) = (waveform.num_freq_steps, waveform.num_pulses);
        if samples.len() != k * p {
            return Err(ImagingError::Dimensions {
                rows: samples.len() / p.max(1),
                cols: p,
                expected_rows: k,
                expected_cols: p,
            });
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(ImagingError::NonFinite(i / p, i % p));
        }
        Ok(PhaseHistory { waveform, reference_range_m, samples })
    }

    pub fn zeros(waveform: WaveformSpec, reference_range_m: f64) -> Self {
        let n = waveform.num_freq_steps * waveform.num_pulses;
        PhaseHistory { waveform, reference_range_m, samples: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn waveform(&self) -> &WaveformSpec {
        &self.waveform
    }

    pub fn reference_range_m(&self) -> f64 {
        self.reference_range_m
    }

    pub fn rows(&self) -> usize {
        self.waveform.num_freq_steps
    }

    pub fn cols(&self) -> usize {
        self.waveform.num_pulses
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    #[inline]
    pub fn get(&self, k: usize, p: usize) -> Complex64 {
        self.samples[k * self.cols() + p]
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Mean |sample|².
    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    /// Element-wise `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &PhaseHistory, b: Complex64) -> PhaseHistory {
        let samples = self.samples.iter().zip(&other.samples).map(|(x, y)| a * x + b * y).collect();
        PhaseHistory { samples, ..self.clone() }
    }

    /// Adds `amplitude·exp(−i2π f_k L / c)` to column `p` for a return with
    /// two-way path `L`.
    fn accumulate(&mut self, p: usize, path_length_m: f64, amplitude: f64) {
        let wf = self.waveform;
        let cols = self.cols();
        let scale = -TAU * path_length_m / SPEED_OF_LIGHT;
        let mut phasor = Complex64::from_polar(amplitude, scale * wf.frequency(0));
        let step = Complex64::from_polar(1.0, scale * wf.frequency_step());
        for k in 0..wf.num_freq_steps {
            self.samples[k * cols + p] += phasor;
            phasor *= step;
        }
    }
}

/// Builds a history from per-pulse `(path_length_m, amplitude)` returns.
/// `returns_for` receives the pulse index and the pulse's pose.
pub fn synthesize_from_returns<F, I>(wf: &WaveformSpec, pose: &RadarPose, mut returns_for: F) -> Result<PhaseHistory, ImagingError>
where
    F: FnMut(usize, &RadarPose) -> I,
    I: IntoIterator<Item = (f64, f64)>,
{
    wf.validate()?;
    let mut ph = PhaseHistory::zeros(*wf, pose.slant_range_m());
    for p in 0..wf.num_pulses {
        let pulse_pose = pose.with_azimuth(pose.azimuth_deg() + wf.pulse_aspect_deg(p));
        for (path, amp) in returns_for(p, &pulse_pose) {
            ph.accumulate(p, path, amp);
        }
    }
    Ok(ph)
}

/// Ray-traced phase history of a scene over the waveform's aspect sweep.
pub fn synthesize_phase_history(scene: &Scene, pose: &RadarPose, wf: &WaveformSpec, ray: &RaySpec) -> Result<PhaseHistory, ImagingError> {
    ray.validate()?;
    synthesize_from_returns(wf, pose, |_, pulse_pose| {
        scene
            .trace(pulse_pose, ray)
            .into_iter()
            .map(|r| (r.path_length_m, r.amplitude))
    })
}

/// Ideal isotropic point scatterers `(position, amplitude)` in target
/// coordinates.
pub fn synthesize_point_scatterers(wf: &WaveformSpec, pose: &RadarPose, scatterers: &[(Vec3, f64)]) -> Result<PhaseHistory, ImagingError> {
    let range = pose.slant_range_m();
    synthesize_from_returns(wf, pose, |_, pulse_pose| {
        let u = pulse_pose.line_of_sight();
        scatterers
            .iter()
            .map(move |&(x, a)| (2.0 * (range - u.dot(x)), a))
            .collect::<Vec<_>>()
    })
}

/// Apodization applied separably along both axes before the DFT.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    Taylor { nbar: u32, sidelobe_db: f64 },
}

impl Window {
    /// Weights of length `n`, scaled to unit RMS.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        match *self {
            Window::Rectangular => vec![1.0; n],
            Window::Taylor { nbar, sidelobe_db } => taylor(n, nbar.max(1) as usize, sidelobe_db.abs()),
        }
    }
}

fn taylor(n: usize, nbar: usize, sll_db: f64) -> Vec<f64> {
    let r = 10f64.powf(sll_db / 20.0);
    let a = r.acosh() / PI;
    let s2 = (nbar * nbar) as f64 / (a * a + (nbar as f64 - 0.5).powi(2));
    let coeffs: Vec<f64> = (1..nbar)
        .map(|m| {
            let m = m as f64;
            let num: f64 = (1..nbar)
                .map(|i| 1.0 - m * m / s2 / (a * a + (i as f64 - 0.5).powi(2)))
                .product();
            let den: f64 = (1..nbar)
                .filter(|&i| i as f64 != m)
                .map(|i| 1.0 - m * m / (i * i) as f64)
                .product();
            let sign = if (m as usize) % 2 == 1 { 1.0 } else { -1.0 };
            sign * num / (2.0 * den)
        })
        .collect();
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 - (n as f64 - 1.0) / 2.0) / n as f64;
            1.0 + 2.0 * coeffs.iter().enumerate().map(|(m, f)| f * (TAU * (m + 1) as f64 * x).cos()).sum::<f64>()
        })
        .collect();
    let rms = (w.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    w.into_iter().map(|v| v / rms).collect()
}

/// 54 × 54 complex range–Doppler image; row = range bin, column = cross-range bin.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    pixels: Vec<Complex64>,
    range_resolution_m: f64,
    cross_range_resolution_m: f64,
}

impl ComplexImage {
    pub fn new(pixels: Vec<Complex64>, range_resolution_m: f64, cross_range_resolution_m: f64) -> Result<Self, ImagingError> {
        if pixels.len() != IMAGE_SIZE * IMAGE_SIZE {
            return Err(ImagingError::Dimensions {
                rows: pixels.len() / IMAGE_SIZE,
                cols: IMAGE_SIZE,
                expected_rows: IMAGE_SIZE,
                expected_cols: IMAGE_SIZE,
            });
        }
        if let Some(i) = pixels.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(ImagingError::NonFinite(i / IMAGE_SIZE, i % IMAGE_SIZE));
        }
        Ok(ComplexImage { pixels, range_resolution_m, cross_range_resolution_m })
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.pixels[row * IMAGE_SIZE + col]
    }

    pub fn range_resolution_m(&self) -> f64 {
        self.range_resolution_m
    }

    pub fn cross_range_resolution_m(&self) -> f64 {
        self.cross_range_resolution_m
    }

    pub fn energy(&self) -> f64 {
        self.pixels.iter().map(|z| z.norm_sqr()).sum()
    }

    /// (row, col, magnitude) of the strongest pixel; first in row-major order
    /// on ties.
    pub fn peak(&self) -> (usize, usize, f64) {
        let (i, m) = self
            .pixels
            .iter()
            .map(|z| z.norm())
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, m)| if m > best.1 { (i, m) } else { best });
        (i / IMAGE_SIZE, i % IMAGE_SIZE, m)
    }

    /// Rounds every component to single precision (the on-disk resolution).
    pub fn quantized(&self) -> ComplexImage {
        let q = |v: f64| v as f32 as f64;
        ComplexImage {
            pixels: self.pixels.iter().map(|z| Complex64::new(q(z.re), q(z.im))).collect(),
            ..*self
        }
    }
}

fn inverse_plan() -> Arc<dyn Fft<f64>> {
    static PLAN: OnceLock<Arc<dyn Fft<f64>>> = OnceLock::new();
    PLAN.get_or_init(|| FftPlanner::new().plan_fft_inverse(IMAGE_SIZE)).clone()
}

/// Range-compensates and transforms with a rectangular window.
pub fn form_image(ph: &PhaseHistory) -> Result<ComplexImage, ImagingError> {
    form_image_windowed(ph, Window::Rectangular)
}

pub fn form_image_windowed(ph: &PhaseHistory, window: Window) -> Result<ComplexImage, ImagingError> {
    let n = IMAGE_SIZE;
    if ph.rows() != n || ph.cols() != n {
        return Err(ImagingError::Dimensions { rows: ph.rows(), cols: ph.cols(), expected_rows: n, expected_cols: n });
    }
    let wf = ph.waveform();
    let wk = window.weights(n);
    let wp = window.weights(n);

    let mut buf = ph.samples().to_vec();
    for k in 0..n {
        let comp = if ph.reference_range_m() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, TAU * wf.frequency(k) * 2.0 * ph.reference_range_m() / SPEED_OF_LIGHT)
        };
        for p in 0..n {
            buf[k * n + p] *= comp * (wk[k] * wp[p]);
        }
    }

    let fft = inverse_plan();
    // Along pulses (rows are contiguous).
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    // Along frequency steps.
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for p in 0..n {
        for k in 0..n {
            column[k] = buf[k * n + p];
        }
        fft.process(&mut column);
        for k in 0..n {
            buf[k * n + p] = column[k];
        }
    }

    let scale = 1.0 / (n as f64);
    let half = n / 2;
    let mut pixels = vec![Complex64::new(0.0, 0.0); n * n];
    for m in 0..n {
        for q in 0..n {
            pixels[((m + half) % n) * n + (q + half) % n] = buf[m * n + q] * scale;
        }
    }
    ComplexImage::new(pixels, wf.range_resolution_m(), wf.cross_range_resolution_m())
}
