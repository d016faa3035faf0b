//! 8-bit log-magnitude renders.

use std::path::Path;

use thiserror::Error;

use crate::imaging::{ComplexImage, IMAGE_SIZE};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("dynamic range must be positive and finite, got {0} dB")]
    DynamicRange(f64),
    #[error("image is all zero; nothing to normalize against")]
    ZeroImage,
    #[error("PNG encoding failed: {0}")]
    Png(#[from] png::EncodingError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    /// Row-major, one byte per pixel.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width as usize + col]
    }
}

/// `clamp(round(255·(20·log10(|z|/max) + DR)/DR))`: the peak maps to 255,
/// anything DR dB or more below it to 0.
pub fn render_magnitude_png(image: &ComplexImage, dynamic_range_db: f64) -> Result<GrayImage, RenderError> {
    if !(dynamic_range_db.is_finite() && dynamic_range_db > 0.0) {
        return Err(RenderError::DynamicRange(dynamic_range_db));
    }
    let peak = image.peak().2;
    if peak <= 0.0 {
        return Err(RenderError::ZeroImage);
    }
    let pixels = image
        .pixels()
        .iter()
        .map(|z| {
            let db = 20.0 * (z.norm() / peak).log10();
            let v = 255.0 * (db + dynamic_range_db) / dynamic_range_db;
            if v.is_nan() { 0 } else { v.round().clamp(0.0, 255.0) as u8 }
        })
        .collect();
    Ok(GrayImage { width: IMAGE_SIZE as u32, height: IMAGE_SIZE as u32, pixels })
}

pub fn encode_png(gray: &GrayImage) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, gray.width, gray.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(&gray.pixels)?;
    }
    Ok(out)
}

pub fn write_png(gray: &GrayImage, path: &Path) -> Result<(), RenderError> {
    std::fs::write(path, encode_png(gray)?)?;
    Ok(())
}
