//! Seeded randomness whose every draw is written to the journal.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TournamentRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TournamentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Wraps an rng and logs every 64-bit word taken from it.
///
/// All entry points go through `next_u64`, so the log is the complete
/// consumption and can be replayed against a fresh generator.
pub struct RecordingRng<'a, R: RngCore> {
    inner: &'a mut R,
    draws: Vec<u64>,
}

impl<'a, R: RngCore> RecordingRng<'a, R> {
    pub fn new(inner: &'a mut R) -> Self {
        Self {
            inner,
            draws: Vec::new(),
        }
    }

    pub fn into_draws(self) -> Vec<u64> {
        self.draws
    }
}

impl<R: RngCore> RngCore for RecordingRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let value = self.inner.next_u64();
        self.draws.push(value);
        value
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Maps a word to `[0, 1)` using its top 53 bits.
pub fn unit_interval(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` from one draw.
pub fn pick(rng: &mut impl RngCore, n: usize) -> usize {
    assert!(n > 0, "pick from an empty range");
    ((u128::from(rng.next_u64()) * n as u128) >> 64) as usize
}

/// Draws once and returns the uniform value together with whether it falls
/// below `probability`.
pub fn bernoulli(rng: &mut impl RngCore, probability: f64) -> (f64, bool) {
    let draw = unit_interval(rng.next_u64());
    (draw, draw < probability)
}
