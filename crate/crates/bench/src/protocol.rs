//! Train/test splitting and seed derivation.

use mcd_core::seeded_rng;
use rand::seq::SliceRandom;

use crate::error::{BenchError, Result};

/// Train and test sizes: `n = min(300, floor(0.8 n_max))`, `n_test = min(300, n_max - n)`.
pub fn split_sizes(n_max: usize) -> Result<(usize, usize)> {
    if n_max < 2 {
        return Err(BenchError::Setting(format!(
            "need at least 2 rows to split, got {n_max}"
        )));
    }
    let n = 300.min(n_max * 4 / 5);
    Ok((n, 300.min(n_max - n)))
}

/// Disjoint shuffled train and test indices into `0..n_max`.
pub fn split_train_test(n_max: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let (n, n_test) = split_sizes(n_max)?;
    let mut idx: Vec<usize> = (0..n_max).collect();
    idx.shuffle(&mut seeded_rng(seed));
    Ok((idx[..n].to_vec(), idx[n..n + n_test].to_vec()))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent seed for substream `stream` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix(splitmix(seed) ^ stream.wrapping_mul(0xd6e8_feb8_6659_fd93))
}
