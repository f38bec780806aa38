//! Stream splitting for the single root seed.
//!
//! Every random stream in a run is derived from the root seed and a textual
//! label: the first eight bytes (little endian) of `SHA-256("{root}/{label}")`.
//! Labels used by the runner:
//!
//! | label                              | stream                          |
//! |------------------------------------|---------------------------------|
//! | `items/{experiment}`               | template generation             |
//! | `items/{experiment}/{participant}` | per-participant exposure lists  |
//! | `temperatures/{experiment}`        | participant temperatures        |
//! | `personas/{experiment}`            | persona draws                   |
//! | `schedule/{participant_id}`        | per-participant trial schedule  |
//! | `mock/{experiment}`                | mock participant answers        |
//! | `sampler/{experiment}`             | posterior sampler               |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `root` and a stream label.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let digest = Sha256::digest(format!("{root}/{label}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seeded generator used for every stream in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shorthand for `rng_from_seed(derive_seed(root, label))`.
pub fn stream(root: u64, label: &str) -> ChaCha8Rng {
    rng_from_seed(derive_seed(root, label))
}
