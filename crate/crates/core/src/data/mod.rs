//! Synthetic Lennard-Jones relaxation-trajectory dataset: generation with
//! exact analytic labels, extended-XYZ frame files, manifests, splits, and
//! batching.

mod batch;
mod gen;
mod lj;
mod relax;
mod xyz;

pub use batch::{assemble_batch, shuffled_batches, Batch};
pub use gen::{generate_dataset, load_split, DatasetManifest, GenConfig, Split};
pub use lj::{lj_energy_forces, LjParams};
pub use relax::{relax, RelaxOutcome, RelaxSettings};
pub use xyz::{read_frames, write_frames};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("atoms {i} and {j} are {r:.3e} apart; below the 1e-6 singularity guard")]
    Singularity { i: usize, j: usize, r: f64 },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("trajectory {index} (seed {seed}): {msg}")]
    Generation { index: usize, seed: u64, msg: String },
    #[error("manifest invalid: {0}")]
    Manifest(String),
    #[error("stored labels disagree with the analytic potential: {0}")]
    LabelMismatch(String),
}

/// One frame of a relaxation trajectory: species ids, positions (reduced
/// length units), the exact energy/forces of the generator's potential,
/// per-atom free flags, and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Structure {
    pub species: Vec<u8>,
    pub positions: Vec<[f64; 3]>,
    pub energy: f64,
    pub forces: Vec<[f64; 3]>,
    pub free: Vec<bool>,
    pub trajectory: usize,
    pub frame: usize,
}

impl Structure {
    pub fn n_atoms(&self) -> usize {
        self.species.len()
    }
}
