//! Reproducible random streams.
//!
//! Every replica of every experiment draws from its own ChaCha8 stream keyed
//! by the experiment seed; the 64-bit stream id packs the replica index with a
//! small [`Lane`] tag so that independent roles inside one replica (for
//! instance the path and the forest of a law comparison) never share bits.
//! Results therefore depend only on `(seed, replica, lane)`, never on how
//! replicas are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Role of a stream within one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Path = 0,
    Forest = 1,
    Population = 2,
    Feller = 3,
    Ceiling = 4,
    Aux = 5,
}

const LANE_BITS: u32 = 3;

/// A counter-based random stream for one `(seed, replica, lane)` triple.
#[derive(Debug, Clone)]
pub struct Substream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl Substream {
    pub fn new(seed: u64, replica: u64, lane: Lane) -> Self {
        debug_assert!(replica < (1 << (64 - LANE_BITS)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((replica << LANE_BITS) | lane as u64);
        Self {
            rng,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential variate with the given rate, by inverse CDF.
    #[inline]
    pub fn exp(&mut self, rate: f64) -> f64 {
        -libm::log(self.uniform_open()) / rate
    }

    /// `true` with probability `p`, using one 64-bit draw.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform_open() < p
    }

    /// Standard normal variate (Box–Muller, pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = libm::sqrt(-2.0 * libm::log(self.uniform_open()));
        let theta = core::f64::consts::TAU * self.uniform_open();
        let (s, c) = libm::sincos(theta);
        self.spare_normal = Some(r * s);
        r * c
    }
}
