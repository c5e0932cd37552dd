//! Deterministic seed derivation and configuration digests.
//!
//! One user-facing seed is expanded into per-purpose stream seeds by
//! hashing the seed together with a textual tag (module, instance name,
//! replicate index, ...). The same derivation is used everywhere, so a
//! single `--seed` reproduces an entire experiment.

/// FNV-1a over the bytes of a string.
pub fn fnv1a64(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// splitmix64 finalizer; decorrelates structured inputs.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Stream seed for `tag` under a base seed.
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    splitmix64(base ^ splitmix64(fnv1a64(tag)))
}

/// Stable 16-hex-digit digest of a canonical settings string. Any change
/// to an effective setting changes the digest.
pub fn config_digest(canonical: &str) -> String {
    format!("{:016x}", splitmix64(fnv1a64(canonical)))
}
