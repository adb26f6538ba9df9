//! Deterministic derivation of independent RNG streams.
//!
//! Every randomized stage derives its stream as `mix(seed, salt)` where the
//! salt encodes the stage and the unit of work (node id, worker id, walk
//! index, query index). The mix is the splitmix64 finalizer, which spreads
//! nearby salts to unrelated ChaCha seeds.

/// Stage salts, spaced so `salt + index` never collides across stages for
/// any realistic index.
pub(crate) const SALT_PARTITION: u64 = 0x01 << 56;
pub(crate) const SALT_WALK: u64 = 0x02 << 56;
pub(crate) const SALT_TRAIN_WALK: u64 = 0x03 << 56;
pub(crate) const SALT_WORKER: u64 = 0x04 << 56;
pub(crate) const SALT_SPLIT: u64 = 0x05 << 56;
pub(crate) const SALT_AUC: u64 = 0x06 << 56;
pub(crate) const SALT_MRR: u64 = 0x07 << 56;
pub(crate) const SALT_INIT: u64 = 0x08 << 56;
pub(crate) const SALT_CLASSIFY: u64 = 0x09 << 56;

/// splitmix64 finalizer over `seed ^ golden-ratio-spread salt`.
pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
