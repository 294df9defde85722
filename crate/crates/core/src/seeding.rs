//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from explicit 64-bit seeds through the
//! two functions here, so every replica, environment, and sampler stream is
//! reproducible independently of worker scheduling. The scheme is part of
//! the output contract and must stay stable across versions:
//!
//! * `mix64` is the SplitMix64 finalizer.
//! * environment site values are keyed by `mix64(seed ^ mix64(index))`,
//! * replica k of a command gets `mix64(mix64(master ^ fnv1a(command)) + k * PHI)`.

const PHI: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(PHI);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One step of the SplitMix64 stream.
#[inline]
pub fn splitmix_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(PHI);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string, used to fold command names into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Deterministic per-replica seed: `hash(master_seed, command, replica)`.
///
/// Independent of worker scheduling and stable across versions.
pub fn replica_seed(master_seed: u64, command: &str, replica: u64) -> u64 {
    let tagged = mix64(master_seed ^ fnv1a64(command.as_bytes()));
    mix64(tagged.wrapping_add(replica.wrapping_mul(PHI)))
}

/// Per-index key for counter-based value generation at a (possibly negative)
/// site index.
#[inline]
pub fn site_key(seed: u64, index: i64) -> u64 {
    mix64(seed ^ mix64(index as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replica_seeds_are_distinct_and_stable() {
        let a = replica_seed(7, "tightness", 0);
        let b = replica_seed(7, "tightness", 1);
        let c = replica_seed(7, "series", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        // Frozen values: the derivation is a stability contract.
        assert_eq!(a, replica_seed(7, "tightness", 0));
    }

    #[test]
    fn site_keys_separate_negative_indices() {
        let k1 = site_key(42, -1);
        let k2 = site_key(42, 1);
        let k3 = site_key(42, 0);
        assert_ne!(k1, k2);
        assert_ne!(k1, k3);
    }

    #[test]
    fn fnv_matches_reference_vector() {
        // Standard FNV-1a test vector: empty string hashes to the offset basis.
        assert_eq!(fnv1a64(b""), 0xCBF2_9CE4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xAF63_DC4C_8601_EC8C);
    }
}
