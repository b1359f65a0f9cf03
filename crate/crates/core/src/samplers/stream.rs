use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Component tags separating the independent random inputs of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[repr(u64)]
pub enum StreamTag {
    BasePath = 0,
    ReplacingCopy = 1,
    Selection = 2,
    Lambda = 3,
    Diagnostic = 4,
}

const TAG_SLOTS: u64 = 8;

/// Key of a counter-based random stream: `(master seed, replication, component)`.
///
/// The ChaCha key is derived from the seed and the 64-bit stream id from the
/// replication and tag, so every stream is reproducible in isolation and no
/// two components of any replication ever overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub replication: u64,
    pub tag: StreamTag,
}

impl StreamKey {
    pub fn new(seed: u64, replication: u64, tag: StreamTag) -> Self {
        StreamKey { seed, replication, tag }
    }

    pub fn with_tag(self, tag: StreamTag) -> Self {
        StreamKey { tag, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.replication.wrapping_mul(TAG_SLOTS) + self.tag as u64);
        rng
    }
}
