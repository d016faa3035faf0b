//! Deterministic seed derivation.
//!
//! Every random stream in a dataset is keyed by a SHA-256 digest of the
//! master seed and the sample coordinates, so any sample can be regenerated
//! alone and in any order.

use sha2::{Digest, Sha256};

/// Human-readable description recorded in dataset manifests.
pub const SEED_DERIVATION: &str = "stack_seed = first 8 bytes (LE) of SHA-256(\"isarsim-seed-v1\" || master_seed u64 LE || \
target_id u32 LE || elevation_deg f64 bits LE || offset_deg u32 LE || noise_db f64 bits LE); \
geometry_seed = same digest with noise_db replaced by 0xFFFFFFFFFFFFFFFF; \
channel k noise seed = channel_seed(stack_seed, k), channel k ray-jitter seed = channel_seed(geometry_seed, k), \
channel_seed(s, k) = first 8 bytes (LE) of SHA-256(\"isarsim-channel-v1\" || s u64 LE || k u32 LE)";

/// Coordinates of one random stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedKey {
    pub master: u64,
    pub target_id: u32,
    pub elevation_deg: f64,
    pub offset_deg: u32,
    /// `None` keys the noise-independent geometry stream.
    pub noise_db: Option<f64>,
}

impl SeedKey {
    pub fn derive(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"isarsim-seed-v1");
        h.update(self.master.to_le_bytes());
        h.update(self.target_id.to_le_bytes());
        h.update(self.elevation_deg.to_bits().to_le_bytes());
        h.update(self.offset_deg.to_le_bytes());
        h.update(self.noise_db.map_or(u64::MAX, f64::to_bits).to_le_bytes());
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

/// Seed of channel `radar_index` within a stack.
pub fn channel_seed(stack_seed: u64, radar_index: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(b"isarsim-channel-v1");
    h.update(stack_seed.to_le_bytes());
    h.update(radar_index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// SplitMix64 finalizer; a cheap bijective mixer for per-ray streams.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 64 random bits to [0, 1) with 53-bit resolution.
#[inline]
pub fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
