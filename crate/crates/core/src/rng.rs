//! Stable seed derivation.
//!
//! Every random stream in the crate is keyed by a root seed plus a path of
//! labels (machine id, run id, cell name...), so results do not depend on
//! iteration or thread scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// One component of a derivation path.
#[derive(Clone, Copy, Debug)]
pub enum Key<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Key<'a> {
    fn from(s: &'a str) -> Self {
        Key::Str(s)
    }
}

impl From<u64> for Key<'_> {
    fn from(v: u64) -> Self {
        Key::Int(v)
    }
}

impl From<usize> for Key<'_> {
    fn from(v: usize) -> Self {
        Key::Int(v as u64)
    }
}

fn digest(seed: u64, path: &[Key<'_>]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for key in path {
        match key {
            Key::Str(s) => {
                h.update([0u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            Key::Int(v) => {
                h.update([1u8]);
                h.update(v.to_le_bytes());
            }
        }
    }
    h.finalize().into()
}

/// Independent generator for `(seed, path...)`.
pub fn derive_rng(seed: u64, path: &[Key<'_>]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(digest(seed, path))
}

/// A 64-bit seed for `(seed, path...)`.
pub fn derive_seed(seed: u64, path: &[Key<'_>]) -> u64 {
    let d = digest(seed, path);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = derive_rng(7, &["m".into(), 3u64.into()]).random();
        let b: u64 = derive_rng(7, &["m".into(), 3u64.into()]).random();
        let c: u64 = derive_rng(7, &["m".into(), 4u64.into()]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // string/int keys never collide
        assert_ne!(
            derive_seed(1, &["1".into()]),
            derive_seed(1, &[1u64.into()])
        );
    }
}
