use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Smallest corpus [`split_dataset`] accepts.
pub const MIN_SPLIT_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded uniform shuffle followed by a contiguous 70/15/15 cut with sizes
/// `⌊0.7n⌋`, `⌊0.15n⌋` and the remainder.
pub fn split_dataset<T: Clone>(docs: &[T], seed: u64) -> Result<Split<T>> {
    let n = docs.len();
    if n < MIN_SPLIT_SIZE {
        return Err(Error::DatasetTooSmall {
            n,
            min: MIN_SPLIT_SIZE,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 70 / 100;
    let n_val = n * 15 / 100;
    let pick = |range: &[usize]| range.iter().map(|&i| docs[i].clone()).collect();
    Ok(Split {
        train: pick(&order[..n_train]),
        val: pick(&order[n_train..n_train + n_val]),
        test: pick(&order[n_train + n_val..]),
    })
}
