//! Dataset generation: sample random clusters, relax them, write frames and
//! a manifest. Fully reproducible from the master seed.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lj::{lj_energy_forces, LjParams};
use super::relax::{relax, RelaxOutcome, RelaxSettings};
use super::xyz::{read_frames, write_frames};
use super::{DataError, Structure};
use crate::rng::{substream, Stream};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn all() -> [Split; 3] {
        [Split::Train, Split::Val, Split::Test]
    }

    pub fn from_name(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub master_seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_atoms_min: usize,
    pub n_atoms_max: usize,
    /// Box side = box_factor * n_atoms^(1/3) * max pair sigma.
    pub box_factor: f64,
    /// Minimum initial pair distance, in units of the pair sigma.
    pub min_dist_factor: f64,
    /// Whole-configuration rejection-sampling budget.
    pub placement_retries: usize,
    /// Relaxation attempts per trajectory before giving up.
    pub relax_retries: u64,
    pub pair: LjParams,
    pub relax: RelaxSettings,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            master_seed: 0,
            n_train: 300,
            n_val: 50,
            n_test: 50,
            n_atoms_min: 6,
            n_atoms_max: 10,
            box_factor: 1.35,
            min_dist_factor: 0.8,
            placement_retries: 100_000,
            relax_retries: 20,
            pair: LjParams::default(),
            relax: RelaxSettings::default(),
        }
    }
}

impl GenConfig {
    pub fn n_trajectories(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    pub fn split_of(&self, trajectory: usize) -> Split {
        if trajectory < self.n_train {
            Split::Train
        } else if trajectory < self.n_train + self.n_val {
            Split::Val
        } else {
            Split::Test
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub generator: GenConfig,
    /// Split assignment per trajectory, in trajectory order.
    pub splits: Vec<Split>,
    /// Frames written per split file.
    pub frame_counts: BTreeMap<String, usize>,
}

impl DatasetManifest {
    /// Trajectory-level split disjointness (each trajectory appears in
    /// exactly one split by construction of the assignment vector) plus
    /// count consistency.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.format_version != MANIFEST_VERSION {
            return Err(DataError::Manifest(format!(
                "format_version {} unsupported (expected {MANIFEST_VERSION})",
                self.format_version
            )));
        }
        if self.splits.len() != self.generator.n_trajectories() {
            return Err(DataError::Manifest(format!(
                "{} split entries for {} trajectories",
                self.splits.len(),
                self.generator.n_trajectories()
            )));
        }
        for (i, s) in self.splits.iter().enumerate() {
            if *s != self.generator.split_of(i) {
                return Err(DataError::Manifest(format!(
                    "trajectory {i} assigned to {:?}, expected {:?}",
                    s,
                    self.generator.split_of(i)
                )));
            }
        }
        Ok(())
    }
}

/// Samples an initial cluster: uniform positions in a cube with all pair
/// distances at least `min_dist_factor * sigma_ab`.
fn sample_cluster(
    cfg: &GenConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<u8>, Vec<[f64; 3]>), &'static str> {
    let n = rng.gen_range(cfg.n_atoms_min..=cfg.n_atoms_max);
    let species: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
    let side = cfg.box_factor * (n as f64).cbrt() * cfg.pair.max_sigma();
    'attempt: for _ in 0..cfg.placement_retries {
        let positions: Vec<[f64; 3]> =
            (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(0.0..side))).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (0..3)
                    .map(|k| (positions[i][k] - positions[j][k]) * (positions[i][k] - positions[j][k]))
                    .sum::<f64>()
                    .sqrt();
                if d < cfg.min_dist_factor * cfg.pair.sig(species[i], species[j]) {
                    continue 'attempt;
                }
            }
        }
        return Ok((species, positions));
    }
    Err("placement rejection budget exhausted")
}

fn generate_trajectory(cfg: &GenConfig, index: usize) -> Result<Vec<Structure>, DataError> {
    for attempt in 0..cfg.relax_retries {
        let mut rng = substream(cfg.master_seed, Stream::Trajectory { index: index as u64, attempt });
        let (species, positions) = sample_cluster(cfg, &mut rng).map_err(|msg| {
            DataError::Generation { index, seed: cfg.master_seed, msg: msg.into() }
        })?;
        match relax(&species, &positions, &cfg.pair, &cfg.relax, index)? {
            RelaxOutcome::Converged(frames) => return Ok(frames),
            RelaxOutcome::Failed(_) => continue,
        }
    }
    Err(DataError::Generation {
        index,
        seed: cfg.master_seed,
        msg: format!("no convergent relaxation in {} attempts", cfg.relax_retries),
    })
}

/// Generates all trajectories (in parallel, seeded per trajectory), writes
/// one frames file per split plus `manifest.toml`, and returns the manifest.
pub fn generate_dataset(cfg: &GenConfig, dir: &Path) -> Result<DatasetManifest, DataError> {
    std::fs::create_dir_all(dir).map_err(|e| DataError::Io { path: dir.display().to_string(), source: e })?;

    let trajectories: Vec<Result<Vec<Structure>, DataError>> =
        (0..cfg.n_trajectories()).into_par_iter().map(|i| generate_trajectory(cfg, i)).collect();

    let mut per_split: BTreeMap<Split, Vec<Structure>> = BTreeMap::new();
    for (i, t) in trajectories.into_iter().enumerate() {
        per_split.entry(cfg.split_of(i)).or_default().extend(t?);
    }

    let mut frame_counts = BTreeMap::new();
    for split in Split::all() {
        let frames = per_split.remove(&split).unwrap_or_default();
        let path = dir.join(format!("{}.xyz", split.name()));
        write_frames(&path, &frames)?;
        frame_counts.insert(split.name().to_string(), frames.len());
    }

    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        generator: cfg.clone(),
        splits: (0..cfg.n_trajectories()).map(|i| cfg.split_of(i)).collect(),
        frame_counts,
    };
    let text = toml::to_string_pretty(&manifest).expect("manifest serializes");
    let mpath = dir.join("manifest.toml");
    std::fs::write(&mpath, text).map_err(|e| DataError::Io { path: mpath.display().to_string(), source: e })?;
    Ok(manifest)
}

/// Loads a split, validating the manifest, the frame counts, and every
/// stored label against the analytic potential (to 1e-10).
pub fn load_split(dir: &Path, split: Split) -> Result<(DatasetManifest, Vec<Structure>), DataError> {
    let mpath = dir.join("manifest.toml");
    let text = std::fs::read_to_string(&mpath)
        .map_err(|e| DataError::Io { path: mpath.display().to_string(), source: e })?;
    let manifest: DatasetManifest =
        toml::from_str(&text).map_err(|e| DataError::Manifest(e.to_string()))?;
    manifest.validate()?;

    let path = dir.join(format!("{}.xyz", split.name()));
    let frames = read_frames(&path)?;
    let expected = manifest.frame_counts.get(split.name()).copied().unwrap_or(0);
    if frames.len() != expected {
        return Err(DataError::Manifest(format!(
            "{} frames in {}, manifest says {expected}",
            frames.len(),
            path.display()
        )));
    }
    for (i, s) in frames.iter().enumerate() {
        if manifest.generator.split_of(s.trajectory) != split {
            return Err(DataError::Manifest(format!(
                "frame {i} belongs to trajectory {} which is not in split {}",
                s.trajectory,
                split.name()
            )));
        }
        validate_labels(s, &manifest.generator.pair, i)?;
    }
    Ok((manifest, frames))
}

fn validate_labels(s: &Structure, pair: &LjParams, frame_idx: usize) -> Result<(), DataError> {
    let (e, f) = lj_energy_forces(&s.species, &s.positions, pair)?;
    if (e - s.energy).abs() > 1e-10 {
        return Err(DataError::LabelMismatch(format!(
            "frame {frame_idx}: stored energy {} vs analytic {e}",
            s.energy
        )));
    }
    for (a, (fs, fa)) in s.forces.iter().zip(&f).enumerate() {
        for k in 0..3 {
            if (fs[k] - fa[k]).abs() > 1e-10 {
                return Err(DataError::LabelMismatch(format!(
                    "frame {frame_idx} atom {a} component {k}: stored {} vs analytic {}",
                    fs[k], fa[k]
                )));
            }
        }
    }
    Ok(())
}
