//! Deterministic RNG substreams.
//!
//! Every random quantity in a run is drawn from a ChaCha8 stream derived
//! from `(master seed, stream kind, index)`. Windows and chunk segments get
//! disjoint streams, so they can be simulated in any order (or skipped
//! entirely when empty) and still produce the same values for the same
//! configuration and seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream families. Each (kind, index) pair names one independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Per-window phase modulator draws (active first, then reference).
    Phase,
    /// Per-window pair physics: channel survival, path sampling, jitter.
    Pair,
    /// Per-segment pair-emission counts and window placement.
    Emission,
    /// Per-segment dark counts on the active receiver.
    DarkActive,
    /// Per-segment dark counts on the reference receiver.
    DarkReference,
    /// Per-segment spoof-pulse injection.
    Spoof,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Phase => 1,
            StreamKind::Pair => 2,
            StreamKind::Emission => 3,
            StreamKind::DarkActive => 4,
            StreamKind::DarkReference => 5,
            StreamKind::Spoof => 6,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the stream for `(master, kind, index)`.
pub fn substream(master: u64, kind: StreamKind, index: u64) -> ChaCha8Rng {
    let mut state = master
        ^ kind.tag().wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ index.wrapping_mul(0x8CB9_2BA7_2F3D_8DD7);
    let mut seed = [0u8; 32];
    for word in seed.chunks_exact_mut(8) {
        word.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}
