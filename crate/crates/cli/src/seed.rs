//! Fixed sub-seeding: every stage draws from its own stream derived from the
//! run seed, a stage label and an index.

use sha2::{Digest, Sha256};

pub fn sub_seed(seed: u64, stage: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stage.as_bytes());
    h.update([0]);
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
