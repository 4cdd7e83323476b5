use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Addresses one independent random stream.
///
/// Every draw in a run is taken from the stream named by the full key, so
/// results do not depend on how work is scheduled across threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub trajectory: u64,
    pub snapshot: u64,
    pub sample: u64,
    /// Bumped when a failed trajectory is retried.
    pub attempt: u32,
}

/// Snapshot slot reserved for the measurement-event stream of a trajectory.
pub const EVENT_STREAM: u64 = u64::MAX;

impl StreamKey {
    pub fn new(master_seed: u64) -> Self {
        StreamKey {
            master_seed,
            trajectory: 0,
            snapshot: 0,
            sample: 0,
            attempt: 0,
        }
    }

    pub fn trajectory(self, trajectory: u64) -> Self {
        StreamKey { trajectory, ..self }
    }

    pub fn snapshot(self, snapshot: u64) -> Self {
        StreamKey { snapshot, ..self }
    }

    pub fn sample(self, sample: u64) -> Self {
        StreamKey { sample, ..self }
    }

    pub fn attempt(self, attempt: u32) -> Self {
        StreamKey { attempt, ..self }
    }

    /// Stream driving measurement scheduling and outcomes.
    pub fn events(self) -> Self {
        StreamKey {
            snapshot: EVENT_STREAM,
            sample: 0,
            ..self
        }
    }

    pub fn seed(&self) -> [u8; 32] {
        let mut s = splitmix(self.master_seed ^ 0x6a09_e667_f3bc_c908);
        for (tag, field) in [
            (1u64, self.trajectory),
            (2, self.snapshot),
            (3, self.sample),
            (4, self.attempt as u64),
        ] {
            s = splitmix(s ^ splitmix(field.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))));
        }
        let mut out = [0u8; 32];
        for chunk in out.chunks_mut(8) {
            s = splitmix(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        out
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.seed())
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
