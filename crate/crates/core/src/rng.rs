//! Counter-based derivation of independent random streams.
//!
//! Every random quantity in a run is drawn from a stream keyed by
//! `(master seed, run, purpose, id)`. Streams never share state, so the order
//! in which nodes, links or runs are processed cannot change any draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Topology,
    Profiles,
    GroundTruth,
    /// Regressors and measurement noise of one node.
    NodeData,
    /// Noise on one directed link, keyed by its link-index position.
    LinkNoise,
    /// Entry-selection draws of one node.
    Selection,
    /// Starting phase of the sequential schedule.
    Phase,
    /// Monte-Carlo moment oracles.
    Oracle,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Topology => 1,
            Purpose::Profiles => 2,
            Purpose::GroundTruth => 3,
            Purpose::NodeData => 4,
            Purpose::LinkNoise => 5,
            Purpose::Selection => 6,
            Purpose::Phase => 7,
            Purpose::Oracle => 8,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with a sequence of counters into a 64-bit seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(master: u64, run: u64, purpose: Purpose, id: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, &[run, purpose.tag(), id]))
}
