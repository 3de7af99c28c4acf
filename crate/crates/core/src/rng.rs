//! Counter-based random streams.
//!
//! Every consumer of randomness derives its own stream from `(seed, domain,
//! index)`, so pulse `i` always sees the same draws no matter how the work is
//! partitioned. The generator is splitmix64: one 64-bit state, one
//! finalizer-quality mix per output.

/// Independent stream domains. The domain tag is folded into the stream id so
/// that, e.g., pulse streams and test-bit selection never overlap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    /// Per-pulse simulation randomness (r, b, channel branch, loss, POVM u).
    Pulse,
    /// Test-bit position selection in PBC00.
    TestSelection,
    /// Martingale / coin-flip simulation trials.
    Martingale,
    /// Randomized invariant batteries (random attacks, vectors).
    Battery,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Pulse => 0,
            StreamDomain::TestSelection => 1,
            StreamDomain::Martingale => 2,
            StreamDomain::Battery => 3,
        }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A splitmix64 stream addressed by `(seed, domain, index)`.
#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
}

impl Stream {
    pub fn new(seed: u64, domain: StreamDomain, index: u64) -> Self {
        // Index space is well below 2^56 in practice; the domain tag keeps
        // distinct consumers on provably distinct stream ids.
        let id = (domain.tag() << 56) ^ index;
        Stream {
            state: mix(seed) ^ mix(id.wrapping_mul(GOLDEN).wrapping_add(1)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Uniform integer in [0, n) by widening multiply; the modulo bias is
    /// below 2^-64 and irrelevant at Monte Carlo scale.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    #[inline]
    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    /// Standard normal via Box-Muller. Draws two uniforms per call; the spare
    /// is discarded to keep consumption independent of call history.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
