//! One seed per run, split into independent ChaCha streams by purpose.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; the tag occupies the high half of the stream
/// number and an index (dimension, solver, ...) the low half.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum Lane {
    Qp = 1,
    Graph = 2,
    Stream = 3,
    Ascent = 4,
    Validate = 5,
}

pub fn rng(seed: u64, lane: Lane, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((lane as u64) << 32) | (index & 0xffff_ffff));
    r
}

/// Seed handed to generators that take a plain `u64`.
pub fn derive(seed: u64, lane: Lane, index: u64) -> u64 {
    rng(seed, lane, index).next_u64()
}
