//! Seed derivation for reproducible runs.
//!
//! Every randomized component is seeded from a root seed and a salt through
//! a fixed mixing function (splitmix64 over the xor), so reruns with equal
//! seeds and configuration are bit-identical on every machine.

/// splitmix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a salt.
pub fn mix(root: u64, salt: u64) -> u64 {
    splitmix64(root ^ splitmix64(salt.wrapping_add(1)))
}

/// Seed for trial `t` of an experiment.
pub fn trial_seed(root: u64, trial: u64) -> u64 {
    mix(root, 0x7472_6961_6c00_0000 ^ trial)
}

/// Seed for the dataset generator of an experiment.
pub fn dataset_seed(root: u64) -> u64 {
    mix(root, 0x6461_7461_7365_7400)
}
