//! Counter-based random streams.
//!
//! A value is a pure function of `(seed, stream, counter)`: the ChaCha8 block
//! function is keyed by the seed, selects its stream by `stream` and is
//! positioned at `counter`, so any entry can be regenerated without replaying
//! the ones before it. Gaussian variates come from Box-Muller on consecutive
//! counter pairs `(2q, 2q + 1)`: the even counter takes the cosine branch, the
//! odd one the sine branch.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

/// `[0, 1)` with 53 bits of resolution.
#[inline]
fn unit_open_right(x: u64) -> f64 {
    (x >> 11) as f64 * UNIT
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Generator positioned at the `index`-th 64-bit output of this stream.
    fn at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(u128::from(index) * 2);
        rng
    }

    pub fn u64_at(&self, counter: u64) -> u64 {
        self.at(counter).next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform_at(&self, counter: u64) -> f64 {
        unit_open_right(self.u64_at(counter))
    }

    pub fn fill_uniform(&self, start: u64, out: &mut [f64]) {
        let mut rng = self.at(start);
        for v in out.iter_mut() {
            *v = unit_open_right(rng.next_u64());
        }
    }

    /// Standard normal at `counter`.
    pub fn normal_at(&self, counter: u64) -> f64 {
        let mut v = [0.0];
        self.fill_normal(counter, &mut v);
        v[0]
    }

    /// Standard normals for counters `start..start + out.len()`.
    pub fn fill_normal(&self, start: u64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let mut rng = self.at(start & !1);
        let mut idx = 0;
        if start & 1 == 1 {
            let (_, s) = box_muller(rng.next_u64(), rng.next_u64());
            out[0] = s;
            idx = 1;
        }
        while idx + 1 < out.len() {
            let (c, s) = box_muller(rng.next_u64(), rng.next_u64());
            out[idx] = c;
            out[idx + 1] = s;
            idx += 2;
        }
        if idx < out.len() {
            let (c, _) = box_muller(rng.next_u64(), rng.next_u64());
            out[idx] = c;
        }
    }
}

#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    // 1 - U keeps the log argument in (0, 1].
    let u1 = 1.0 - unit_open_right(a);
    let u2 = unit_open_right(b);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `index` under `parent`: `mix64(parent + (index + 1) * phi)`
/// with `phi = 0x9e3779b97f4a7c15`, finalized twice so that neighbouring
/// parents do not produce overlapping child sequences.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    const PHI: u64 = 0x9e37_79b9_7f4a_7c15;
    mix64(mix64(parent.wrapping_add(index.wrapping_add(1).wrapping_mul(PHI))) ^ parent)
}
