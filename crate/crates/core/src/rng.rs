//! Deterministic seed splitting.
//!
//! A [`Seed`] is a 64-bit value; children are derived with a SplitMix64-style
//! finaliser so that the stream for `(seed, i)` never depends on how many
//! other streams were drawn or in what order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn child(self, index: u64) -> Seed {
        let a = mix(self.0.wrapping_add(0x9e37_79b9_7f4a_7c15));
        Seed(mix(a ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03).wrapping_add(0x632b_e59b_d9b4_e019)))
    }

    /// Child keyed by a label, handy for naming independent streams.
    pub fn named(self, label: &str) -> Seed {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        self.child(h)
    }

    pub fn rng(self) -> SimRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Circularly symmetric complex Gaussian with unit variance.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Sum of `n` items processed in fixed-size chunks, each chunk with its own
/// RNG stream. The chunking never depends on the thread pool, so the result
/// is bit-identical for any worker count.
pub fn chunked_trials<T, F, M>(seed: Seed, trials: usize, chunk: usize, f: F, merge: M) -> Option<T>
where
    T: Send,
    F: Fn(&mut SimRng, usize) -> T + Sync,
    M: Fn(T, T) -> T,
{
    use rayon::prelude::*;
    let chunk = chunk.max(1);
    let n_chunks = trials.div_ceil(chunk);
    let parts: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.child(c as u64).rng();
            let len = chunk.min(trials - c * chunk);
            f(&mut rng, len)
        })
        .collect();
    parts.into_iter().reduce(merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_differ_and_repeat() {
        let s = Seed(7);
        assert_eq!(s.child(3), s.child(3));
        assert_ne!(s.child(3), s.child(4));
        assert_ne!(s.child(0), s);
        assert_ne!(s.named("a"), s.named("b"));
    }

    #[test]
    fn cn01_has_unit_variance() {
        let mut rng = Seed(1).rng();
        let n = 200_000;
        let p: f64 = (0..n).map(|_| cn01(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.01);
    }

    #[test]
    fn chunked_is_order_free() {
        let a = chunked_trials(Seed(5), 1000, 64, |r, n| (0..n).map(|_| normal(r)).sum::<f64>(), |a, b| a + b);
        let b = chunked_trials(Seed(5), 1000, 64, |r, n| (0..n).map(|_| normal(r)).sum::<f64>(), |a, b| a + b);
        assert_eq!(a.unwrap().to_bits(), b.unwrap().to_bits());
    }
}
