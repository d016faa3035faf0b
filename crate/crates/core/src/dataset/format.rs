//! `dataset.bin` layout (all little-endian):
//!
//! ```text
//! header  "ISARDS01" | u32 version | u32 count | u32 R | u32 54 | u32 54
//! record  u8 label | f32 elevation | u16 offset | f32 snr_db | u64 seed
//!         | R·54·54 × (f32 re, f32 im), channel-major then row-major
//!         | u32 CRC32 of every preceding byte of the record
//! ```
//!
//! `manifest.json` sits next to it. Both files are written to temporaries
//! and renamed into place.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use tempfile::NamedTempFile;

use super::{DatasetError, DatasetManifest, ImageStack, StackMeta, CLASS_TABLE};
use crate::geometry::{radar_azimuths, ArrayConfig};
use crate::imaging::{ComplexImage, WaveformSpec, IMAGE_SIZE};

pub const MAGIC: [u8; 8] = *b"ISARDS01";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_SIZE: usize = 8 + 5 * 4;
pub const BIN_FILE: &str = "dataset.bin";
pub const MANIFEST_FILE: &str = "manifest.json";

const META_SIZE: usize = 1 + 4 + 2 + 4 + 8;
const PIXELS: usize = IMAGE_SIZE * IMAGE_SIZE;

/// Bytes per sample record including its checksum.
pub fn record_size(radars: u32) -> usize {
    META_SIZE + radars as usize * PIXELS * 8 + 4
}

fn header_bytes(count: u64, radars: u32) -> Result<[u8; HEADER_SIZE], DatasetError> {
    let count = u32::try_from(count).map_err(|_| DatasetError::Manifest(format!("{count} samples exceed the u32 count field")))?;
    let mut h = [0u8; HEADER_SIZE];
    h[..8].copy_from_slice(&MAGIC);
    for (i, v) in [FORMAT_VERSION, count, radars, IMAGE_SIZE as u32, IMAGE_SIZE as u32].into_iter().enumerate() {
        h[8 + 4 * i..12 + 4 * i].copy_from_slice(&v.to_le_bytes());
    }
    Ok(h)
}

fn encode_record(stack: &ImageStack, buf: &mut Vec<u8>) {
    buf.clear();
    buf.push(stack.label);
    buf.extend_from_slice(&stack.meta.elevation_deg.to_le_bytes());
    buf.extend_from_slice(&stack.meta.offset_deg.to_le_bytes());
    buf.extend_from_slice(&stack.meta.snr_db.to_le_bytes());
    buf.extend_from_slice(&stack.meta.seed.to_le_bytes());
    for image in &stack.channels {
        for z in image.pixels() {
            buf.extend_from_slice(&(z.re as f32).to_le_bytes());
            buf.extend_from_slice(&(z.im as f32).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(buf);
    buf.extend_from_slice(&crc.to_le_bytes());
}

struct Header {
    count: u32,
    radars: u32,
}

fn parse_header(bytes: &[u8; HEADER_SIZE]) -> Result<Header, DatasetError> {
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
    let magic: [u8; 8] = bytes[..8].try_into().unwrap();
    if magic != MAGIC {
        return Err(DatasetError::BadMagic(magic));
    }
    if word(0) != FORMAT_VERSION {
        return Err(DatasetError::Version(word(0)));
    }
    if word(3) != IMAGE_SIZE as u32 || word(4) != IMAGE_SIZE as u32 {
        return Err(DatasetError::Manifest(format!("image size {}x{} is not 54x54", word(3), word(4))));
    }
    if word(2) == 0 {
        return Err(DatasetError::Manifest("radar count 0 in header".into()));
    }
    Ok(Header { count: word(1), radars: word(2) })
}

/// Streams records into a temporary `dataset.bin`, checking each one
/// against the manifest.
pub struct DatasetWriter<'a> {
    dir: PathBuf,
    manifest: &'a DatasetManifest,
    out: BufWriter<NamedTempFile>,
    written: usize,
    buf: Vec<u8>,
}

impl<'a> DatasetWriter<'a> {
    pub fn create(dir: &Path, manifest: &'a DatasetManifest) -> Result<Self, DatasetError> {
        std::fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(NamedTempFile::new_in(dir)?);
        out.write_all(&header_bytes(manifest.samples.len() as u64, manifest.radar_count)?)?;
        Ok(DatasetWriter { dir: dir.to_path_buf(), manifest, out, written: 0, buf: Vec::with_capacity(record_size(manifest.radar_count)) })
    }

    pub fn push(&mut self, stack: &ImageStack) -> Result<(), DatasetError> {
        let index = self.written as u64;
        let sample = self
            .manifest
            .samples
            .get(self.written)
            .ok_or_else(|| DatasetError::Manifest(format!("more stacks than the {} manifest samples", self.manifest.samples.len())))?;
        check_against(stack, sample, self.manifest.radar_count, index)?;
        encode_record(stack, &mut self.buf);
        self.out.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    /// Renames both files into place once every sample has been written.
    pub fn finish(self) -> Result<(), DatasetError> {
        if self.written != self.manifest.samples.len() {
            return Err(DatasetError::Manifest(format!(
                "wrote {} of {} samples",
                self.written,
                self.manifest.samples.len()
            )));
        }
        let bin = self.out.into_inner().map_err(|e| e.into_error())?;
        bin.as_file().sync_all()?;
        bin.persist(self.dir.join(BIN_FILE)).map_err(|e| e.error)?;

        let mut json = NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer_pretty(&mut json, self.manifest)?;
        json.write_all(b"\n")?;
        json.as_file().sync_all()?;
        json.persist(self.dir.join(MANIFEST_FILE)).map_err(|e| e.error)?;
        Ok(())
    }
}

fn check_against(stack: &ImageStack, sample: &super::ManifestSample, radars: u32, index: u64) -> Result<(), DatasetError> {
    let mismatch = |field| DatasetError::Mismatch { index, field };
    if stack.channels.len() != radars as usize {
        return Err(mismatch("radar count"));
    }
    if stack.label != sample.label {
        return Err(mismatch("label"));
    }
    if stack.meta.elevation_deg != sample.elevation_deg as f32 {
        return Err(mismatch("elevation"));
    }
    if u32::from(stack.meta.offset_deg) != sample.offset_deg {
        return Err(mismatch("offset"));
    }
    if stack.meta.snr_db != sample.snr_db as f32 {
        return Err(mismatch("snr_db"));
    }
    if stack.meta.seed != sample.seed {
        return Err(mismatch("seed"));
    }
    Ok(())
}

/// Writes a complete dataset directory from in-memory stacks.
pub fn write_dataset<'s, I>(manifest: &DatasetManifest, stacks: I, dir: &Path) -> Result<(), DatasetError>
where
    I: IntoIterator<Item = &'s ImageStack>,
{
    let mut writer = DatasetWriter::create(dir, manifest)?;
    for stack in stacks {
        writer.push(stack)?;
    }
    writer.finish()
}

/// Decodes records one at a time, verifying each checksum.
pub struct StackReader<R: Read> {
    input: R,
    radars: u32,
    count: u64,
    next: u64,
    waveform: WaveformSpec,
    buf: Vec<u8>,
}

impl<R: Read> StackReader<R> {
    fn new(input: R, header: &Header, waveform: WaveformSpec) -> Self {
        StackReader {
            input,
            radars: header.radars,
            count: u64::from(header.count),
            next: 0,
            waveform,
            buf: vec![0u8; record_size(header.radars)],
        }
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn radar_count(&self) -> u32 {
        self.radars
    }

    fn read_one(&mut self) -> Result<ImageStack, DatasetError> {
        let index = self.next;
        self.input.read_exact(&mut self.buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => DatasetError::Truncated(format!("sample {index} is incomplete")),
            _ => DatasetError::Io(e),
        })?;
        let (payload, tail) = self.buf.split_at(self.buf.len() - 4);
        if crc32fast::hash(payload) != u32::from_le_bytes(tail.try_into().unwrap()) {
            return Err(DatasetError::Checksum { index });
        }
        decode_record(payload, self.radars, &self.waveform, index)
    }
}

impl<R: Read> Iterator for StackReader<R> {
    type Item = Result<ImageStack, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let out = self.read_one();
        // Stop after the first error; later offsets are unreliable.
        self.next = if out.is_ok() { self.next + 1 } else { self.count };
        Some(out)
    }
}

fn decode_record(payload: &[u8], radars: u32, wf: &WaveformSpec, index: u64) -> Result<ImageStack, DatasetError> {
    let f32_at = |o: usize| f32::from_le_bytes(payload[o..o + 4].try_into().unwrap());
    let label = payload[0];
    let elevation_deg = f32_at(1);
    let offset_deg = u16::from_le_bytes(payload[5..7].try_into().unwrap());
    let snr_db = f32_at(7);
    let seed = u64::from_le_bytes(payload[11..19].try_into().unwrap());
    let target = CLASS_TABLE.get(label as usize).ok_or(DatasetError::Mismatch { index, field: "label" })?;

    let mut channels = Vec::with_capacity(radars as usize);
    for k in 0..radars as usize {
        let base = META_SIZE + k * PIXELS * 8;
        let pixels = (0..PIXELS)
            .map(|i| Complex64::new(f64::from(f32_at(base + 8 * i)), f64::from(f32_at(base + 8 * i + 4))))
            .collect();
        channels.push(
            ComplexImage::new(pixels, wf.range_resolution_m(), wf.cross_range_resolution_m())
                .map_err(|_| DatasetError::Mismatch { index, field: "pixels" })?,
        );
    }
    let ring = ArrayConfig { num_radars: radars, elevations_deg: vec![f64::from(elevation_deg)], ground_distance_m: 1.0 };
    let azimuths_deg = radar_azimuths(&ring, u32::from(offset_deg)).map_err(|_| DatasetError::Mismatch { index, field: "offset" })?;
    Ok(ImageStack {
        channels,
        label,
        meta: StackMeta { target: target.to_string(), elevation_deg, offset_deg, snr_db, seed, azimuths_deg },
    })
}

fn open_bin(path: &Path) -> Result<(Header, BufReader<File>), DatasetError> {
    let file = File::open(path)?;
    let len = file.metadata()?.len();
    let mut input = BufReader::new(file);
    let mut head = [0u8; HEADER_SIZE];
    input.read_exact(&mut head).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => DatasetError::Truncated(format!("{len}-byte file has no complete header")),
        _ => DatasetError::Io(e),
    })?;
    let header = parse_header(&head)?;
    let expected = HEADER_SIZE as u64 + u64::from(header.count) * record_size(header.radars) as u64;
    if len < expected {
        let whole = (len - HEADER_SIZE as u64) / record_size(header.radars) as u64;
        return Err(DatasetError::Truncated(format!("{len} of {expected} bytes; sample {whole} is incomplete")));
    }
    if len > expected {
        return Err(DatasetError::Truncated(format!("{} trailing bytes after sample {}", len - expected, header.count)));
    }
    Ok((header, input))
}

/// Opens a dataset directory: parses the manifest, checks it against the
/// header and returns a validating stack iterator.
pub fn read_dataset(dir: &Path) -> Result<(DatasetManifest, ManifestCheckedReader), DatasetError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    let (header, input) = open_bin(&dir.join(BIN_FILE))?;
    if header.count as usize != manifest.samples.len() {
        return Err(DatasetError::Manifest(format!(
            "dataset.bin holds {} samples, manifest lists {}",
            header.count,
            manifest.samples.len()
        )));
    }
    if header.radars != manifest.radar_count {
        return Err(DatasetError::Manifest(format!(
            "dataset.bin has {} radars, manifest says {}",
            header.radars, manifest.radar_count
        )));
    }
    let reader = StackReader::new(input, &header, manifest.waveform);
    Ok((manifest.clone(), ManifestCheckedReader { reader, manifest }))
}

/// [`StackReader`] that also matches every record to its manifest entry.
pub struct ManifestCheckedReader {
    reader: StackReader<BufReader<File>>,
    manifest: DatasetManifest,
}

impl ManifestCheckedReader {
    pub fn len(&self) -> u64 {
        self.reader.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reader.is_empty()
    }
}

impl Iterator for ManifestCheckedReader {
    type Item = Result<ImageStack, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        let index = self.reader.next;
        let item = self.reader.next()?;
        Some(item.and_then(|stack| {
            let sample = &self.manifest.samples[index as usize];
            check_against(&stack, sample, self.manifest.radar_count, index)?;
            if stack.meta.azimuths_deg != sample.azimuths_deg {
                return Err(DatasetError::Mismatch { index, field: "azimuths" });
            }
            Ok(stack)
        }))
    }
}

/// Writes stacks to a bare `.bin` file with no manifest.
pub fn write_bin(path: &Path, stacks: &[ImageStack]) -> Result<(), DatasetError> {
    let radars = stacks.first().map_or(1, |s| s.channels.len() as u32);
    if let Some(i) = stacks.iter().position(|s| s.channels.len() as u32 != radars) {
        return Err(DatasetError::Mismatch { index: i as u64, field: "radar count" });
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut out = BufWriter::new(NamedTempFile::new_in(&dir)?);
    out.write_all(&header_bytes(stacks.len() as u64, radars)?)?;
    let mut buf = Vec::with_capacity(record_size(radars));
    for stack in stacks {
        encode_record(stack, &mut buf);
        out.write_all(&buf)?;
    }
    let file = out.into_inner().map_err(|e| e.into_error())?;
    file.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads every stack of a bare `.bin` file; `wf` supplies the pixel
/// resolutions, which are not stored.
pub fn read_bin(path: &Path, wf: &WaveformSpec) -> Result<Vec<ImageStack>, DatasetError> {
    let (header, input) = open_bin(path)?;
    StackReader::new(input, &header, *wf).collect()
}
