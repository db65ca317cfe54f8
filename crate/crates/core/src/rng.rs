//! Counter-based, splittable random streams.
//!
//! A stream is identified by a 64-bit key derived from
//! `(master seed, replicate index, role)`. The `i`-th output of a stream is a
//! fixed function of `(key, i)`, so any replicate can be regenerated without
//! replaying the others and results do not depend on thread scheduling.

use crate::math;
use core::f64::consts::PI;

/// Purpose of a stream; keeps e.g. point-count and point-location draws of
/// the same replicate independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamRole {
    Count = 1,
    Points = 2,
    Shell = 3,
    Proposal = 4,
    Energy = 5,
    Volume = 6,
    Bootstrap = 7,
    Chain = 8,
    Directions = 9,
    Replicate = 10,
    Attempt = 11,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the key of stream `(master, index, role)`.
pub fn derive_key(master: u64, index: u64, role: StreamRole) -> u64 {
    let a = mix64(master ^ GOLDEN);
    let b = mix64(a.wrapping_add(index.wrapping_mul(GOLDEN)) ^ 0x5851_f42d_4c95_7f2d);
    mix64(b ^ (role as u64).wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// A random stream. Cloning a stream replays it from the same position.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self {
            key,
            counter: 0,
            spare_normal: None,
        }
    }

    pub fn stream(master: u64, index: u64, role: StreamRole) -> Self {
        Self::new(derive_key(master, index, role))
    }

    /// Key for a child stream, e.g. a per-sample sub-stream.
    pub fn split(&self, index: u64, role: StreamRole) -> Self {
        Self::stream(self.key, index, role)
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(mix64(self.counter.wrapping_mul(GOLDEN)).wrapping_add(self.key))
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on `(0, 1)`.
    #[inline]
    pub fn open_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `[0, n)`.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Standard exponential.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        -math::ln(self.open_uniform())
    }

    /// Standard normal (Box-Muller, pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let radius = math::sqrt(-2.0 * math::ln(self.open_uniform()));
        let angle = 2.0 * PI * self.uniform();
        self.spare_normal = Some(radius * math::sin(angle));
        radius * math::cos(angle)
    }

    /// Uniform direction on the unit sphere `S^{d-1}`, written into `out`.
    pub fn direction(&mut self, out: &mut [f64]) {
        if out.len() == 1 {
            out[0] = if self.next_u64() >> 63 == 0 { 1.0 } else { -1.0 };
            return;
        }
        loop {
            let mut norm2 = 0.0;
            for x in out.iter_mut() {
                *x = self.normal();
                norm2 += *x * *x;
            }
            if norm2 > 1e-300 {
                let inv = 1.0 / math::sqrt(norm2);
                out.iter_mut().for_each(|x| *x *= inv);
                return;
            }
        }
    }
}
