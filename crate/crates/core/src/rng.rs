//! Counter-based random streams.
//!
//! Every event draws from its own ChaCha8 stream keyed by `(master seed,
//! purpose, index)`, so results never depend on how work is split across
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Independent families of streams derived from one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Event,
    Bootstrap,
    Auxiliary,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Event => 0x6576_656e_7473_0001,
            Purpose::Bootstrap => 0x626f_6f74_7374_0002,
            Purpose::Auxiliary => 0x6175_7869_6c69_0003,
        }
    }
}

/// Stream for `index` within the `purpose` family of `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.tag());
    rng.set_stream(index);
    rng
}

/// Per-event generation stream.
pub fn event_stream(seed: u64, event_id: u64) -> StreamRng {
    stream(seed, Purpose::Event, event_id)
}
