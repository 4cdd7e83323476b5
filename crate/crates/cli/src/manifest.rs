use fermion_magic::monitoring::ExcludedTrajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// How every random stream of a run is derived from the recorded seeds.
pub const SEEDING: &str = "trajectory i of a (sites, gamma) run uses the ChaCha8 streams of \
StreamKey::new(run_seed).trajectory(i); run_seed = first 8 bytes (LE) of \
SHA-256(master_seed LE || sites LE || gamma bits LE)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub sites: usize,
    pub gamma: f64,
    pub run_seed: u64,
    pub n_traj: usize,
    pub completed: usize,
    pub retried: Vec<u64>,
    pub excluded: Vec<ExcludedTrajectory>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub run_id: String,
    /// The fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub seeding: String,
    pub runs: Vec<RunEntry>,
    pub warnings: Vec<String>,
    pub threads: usize,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, run_id: &str, config: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            run_id: run_id.to_string(),
            config,
            seeding: SEEDING.to_string(),
            runs: Vec::new(),
            warnings: Vec::new(),
            threads: rayon::current_num_threads(),
            wall_clock_seconds: 0.0,
        }
    }
}

pub fn run_seed(master_seed: u64, sites: usize, gamma: f64) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((sites as u64).to_le_bytes());
    h.update(gamma.to_bits().to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}
