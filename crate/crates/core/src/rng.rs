use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Reproducible random stream identified by `(seed, stream_id)`.
///
/// Parallel sampling assigns one stream id per sample, so draws do not depend
/// on how work is split across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream for sample `index`; children of distinct parents or
    /// distinct indices never share a ChaCha stream.
    pub fn substream(&self, index: u64) -> Self {
        // splitmix-style mixing of the parent id and the index
        let mut z = self
            .stream_id
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(index)
            .wrapping_add(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self {
            seed: self.seed,
            stream_id: z,
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
