//! Seeded uniform sampling of `r`-subsets of `[n]`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mask::SubsetMask;

/// The random stream of trial `trial` under `seed`.
///
/// ChaCha's 64-bit stream id selects an independent substream, so a trial's
/// draws do not depend on which worker runs it or in what order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform `r`-subset of `[n]` by Floyd's algorithm (`r` draws, no shuffle).
pub fn sample_subset<R: Rng + ?Sized>(n: u64, r: u64, rng: &mut R) -> Result<SubsetMask> {
    if r > n {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds n = {n}")));
    }
    let mut mask = SubsetMask::empty(n);
    for j in n - r + 1..=n {
        let t = rng.random_range(1..=j);
        let fresh = mask.insert(t)?;
        if !fresh {
            mask.insert(j)?;
        }
    }
    Ok(mask)
}

/// 64-bit FNV-1a over the sorted members.
pub fn subset_digest(mask: &SubsetMask) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for x in mask.iter().chain(std::iter::once(mask.n())) {
        for byte in x.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}
