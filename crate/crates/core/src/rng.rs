//! Counter-based random streams addressed by `(master_seed, replication, purpose)`.
//!
//! Every replication draws from its own ChaCha stream, so results do not depend
//! on how replications are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream is used for. Each purpose gets a distinct key so that, for
/// example, adding fading draws never shifts the candidate positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u64)]
pub enum Purpose {
    Candidates = 0,
    GuardRing = 1,
    CellUser = 2,
    CellFading = 3,
    Pairing = 4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
    pub substream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64, substream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
            substream_id,
        }
    }

    /// Stream for replication `replication` and the given purpose.
    pub fn for_replication(master_seed: u64, replication: u64, purpose: Purpose) -> Self {
        Self::new(master_seed, replication, purpose as u64)
    }

    pub fn with_purpose(self, purpose: Purpose) -> Self {
        Self {
            substream_id: purpose as u64,
            ..self
        }
    }

    /// Materialize the generator. The key packs `master_seed` and
    /// `substream_id`; `stream_id` selects the ChaCha stream under that key.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.substream_id.to_le_bytes());
        // fixed tag so that the all-zero key is never used
        key[16..24].copy_from_slice(&0x6432_6463_6f76_0001u64.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}
