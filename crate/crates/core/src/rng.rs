//! Counter-addressed random numbers.
//!
//! Every draw is a pure function of `(seed, sub-stream, path, day)`: the
//! ChaCha12 stream id encodes sub-stream and path, and the word position
//! encodes the day. Any path can therefore be regenerated on its own, and
//! splitting paths across threads cannot change a single bit.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Independent families of draws sharing one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum SubStream {
    /// Gaussian increments driving the stock.
    Diffusion = 0,
    /// Uniform draws deciding conversion-price resets.
    Adjustment = 1,
}

/// Largest path index addressable by the stream layout.
pub const MAX_PATH_INDEX: u64 = (1 << 62) - 1;

// Each draw consumes two u64 values, i.e. four 32-bit words.
const WORDS_PER_DRAW: u128 = 4;

/// Sequential reader over one `(seed, sub-stream, path)` stream.
#[derive(Clone)]
pub struct DrawStream {
    rng: ChaCha12Rng,
}

impl DrawStream {
    pub fn new(seed: u64, sub: SubStream, path: u64) -> Self {
        debug_assert!(path <= MAX_PATH_INDEX);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(((sub as u64) << 62) | (path & MAX_PATH_INDEX));
        Self { rng }
    }

    /// Positions the stream so the next draw is the one for `day`.
    pub fn seek(&mut self, day: u64) {
        self.rng.set_word_pos(u128::from(day) * WORDS_PER_DRAW);
    }

    fn pair(&mut self) -> (u64, u64) {
        (self.rng.next_u64(), self.rng.next_u64())
    }

    /// Standard normal deviate (Box-Muller, cosine branch).
    pub fn next_normal(&mut self) -> f64 {
        let (a, b) = self.pair();
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    /// Uniform deviate on `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        let (a, _) = self.pair();
        (a >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// The standard normal deviate addressed by `(seed, path, day)`.
pub fn normal_stream(seed: u64, path: u64, day: u64) -> f64 {
    let mut s = DrawStream::new(seed, SubStream::Diffusion, path);
    s.seek(day);
    s.next_normal()
}

/// The uniform deviate addressed by `(seed, sub-stream, path, day)`.
pub fn uniform_at(seed: u64, sub: SubStream, path: u64, day: u64) -> f64 {
    let mut s = DrawStream::new(seed, sub, path);
    s.seek(day);
    s.next_uniform()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn addressing_is_pure() {
        assert_eq!(normal_stream(7, 3, 11), normal_stream(7, 3, 11));
        assert_ne!(normal_stream(7, 3, 11), normal_stream(8, 3, 11));
        assert_ne!(normal_stream(7, 3, 11), normal_stream(7, 4, 11));
        assert_ne!(normal_stream(7, 3, 11), normal_stream(7, 3, 12));
    }

    #[test]
    fn sequential_reads_match_random_access() {
        let mut s = DrawStream::new(99, SubStream::Diffusion, 5);
        s.seek(1);
        for day in 1..50 {
            assert_eq!(s.next_normal(), normal_stream(99, 5, day));
        }
        let mut u = DrawStream::new(99, SubStream::Adjustment, 5);
        u.seek(0);
        for day in 0..20 {
            assert_eq!(u.next_uniform(), uniform_at(99, SubStream::Adjustment, 5, day));
        }
    }

    #[test]
    fn substreams_differ() {
        let mut a = DrawStream::new(1, SubStream::Diffusion, 0);
        let mut b = DrawStream::new(1, SubStream::Adjustment, 0);
        assert_ne!(a.next_uniform(), b.next_uniform());
    }

    #[test]
    fn moments_and_lag_one_correlation() {
        const N: usize = 1_000_000;
        let seed = 20240601;
        let mut xs = Vec::with_capacity(N);
        let mut ys = Vec::with_capacity(N);
        // 1000 paths x 1000 days; pair (i, t) with (i, t + 1).
        for path in 0..1000u64 {
            let mut s = DrawStream::new(seed, SubStream::Diffusion, path);
            s.seek(0);
            let mut prev = s.next_normal();
            for _ in 0..1000 {
                let next = s.next_normal();
                xs.push(prev);
                ys.push(next);
                prev = next;
            }
        }
        let n = N as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");

        let my = ys.iter().sum::<f64>() / n;
        let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / (n - 1.0);
        let cov = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mean) * (y - my))
            .sum::<f64>()
            / (n - 1.0);
        let corr = cov / (var * vy).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }
}
