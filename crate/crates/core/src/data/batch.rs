//! Batching: concatenate structures into one disjoint multi-structure
//! input with segment ids.

use rand::seq::SliceRandom;
use rand::Rng;

use super::Structure;

/// A batch of structures concatenated node-wise. Edges are built later
/// (after any corruption) by the model's graph construction; structures
/// never share edges because construction is per segment.
#[derive(Clone, Debug)]
pub struct Batch {
    pub species: Vec<u8>,
    pub positions: Vec<[f64; 3]>,
    /// Per-structure energy labels.
    pub energies: Vec<f64>,
    /// Per-atom force labels.
    pub forces: Vec<[f64; 3]>,
    pub free: Vec<bool>,
    /// Node -> structure index within the batch.
    pub seg_ids: Vec<usize>,
    /// Structure -> node range.
    pub ranges: Vec<std::ops::Range<usize>>,
    /// Global frame indices within the split (stable RNG keys).
    pub frame_ids: Vec<usize>,
}

impl Batch {
    pub fn n_structures(&self) -> usize {
        self.ranges.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.species.len()
    }
}

/// Concatenates the frames at `indices` into one batch.
pub fn assemble_batch(frames: &[Structure], indices: &[usize]) -> Batch {
    assert!(!indices.is_empty(), "batch must contain at least one structure");
    let mut b = Batch {
        species: Vec::new(),
        positions: Vec::new(),
        energies: Vec::new(),
        forces: Vec::new(),
        free: Vec::new(),
        seg_ids: Vec::new(),
        ranges: Vec::new(),
        frame_ids: indices.to_vec(),
    };
    for (si, &fi) in indices.iter().enumerate() {
        let s = &frames[fi];
        let start = b.species.len();
        b.species.extend_from_slice(&s.species);
        b.positions.extend_from_slice(&s.positions);
        b.forces.extend_from_slice(&s.forces);
        b.free.extend_from_slice(&s.free);
        b.energies.push(s.energy);
        b.seg_ids.extend(std::iter::repeat(si).take(s.n_atoms()));
        b.ranges.push(start..b.species.len());
    }
    b
}

/// Deterministically shuffled frame-index batches for one epoch; the final
/// partial batch is kept.
pub fn shuffled_batches(n_frames: usize, batch_size: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1);
    let mut order: Vec<usize> = (0..n_frames).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}
