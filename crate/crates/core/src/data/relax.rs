//! Gradient-descent relaxation producing trajectory frames with exact
//! labels.

use serde::{Deserialize, Serialize};

use super::lj::{lj_energy_forces, max_force_norm, LjParams};
use super::{DataError, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxSettings {
    /// Base step size multiplying the forces.
    pub step: f64,
    /// Per-step cap on the largest single-atom displacement.
    pub d_cap: f64,
    pub max_steps: usize,
    /// Convergence threshold on the largest per-atom force norm.
    pub f_max_stop: f64,
    /// Record every k-th accepted step (the initial and final frames are
    /// always recorded).
    pub record_stride: usize,
}

impl Default for RelaxSettings {
    fn default() -> Self {
        RelaxSettings { step: 0.02, d_cap: 0.05, max_steps: 5000, f_max_stop: 0.02, record_stride: 12 }
    }
}

pub enum RelaxOutcome {
    Converged(Vec<Structure>),
    /// Did not reach the force threshold (stuck or out of steps); the
    /// caller regenerates with a fresh sub-seed.
    Failed(&'static str),
}

/// Descends the energy with displacement-capped, backtracking gradient
/// steps: a step that would raise the energy is halved until it does not,
/// so recorded frame energies are non-increasing by construction.
pub fn relax(
    species: &[u8],
    initial: &[[f64; 3]],
    params: &LjParams,
    settings: &RelaxSettings,
    trajectory: usize,
) -> Result<RelaxOutcome, DataError> {
    assert!(settings.step > 0.0);
    let n = species.len();
    let mut pos = initial.to_vec();
    let (mut energy, mut forces) = lj_energy_forces(species, &pos, params)?;
    let mut frames: Vec<Structure> = Vec::new();
    let free = vec![true; n];

    let record = |pos: &[[f64; 3]], energy: f64, forces: &[[f64; 3]], frames: &mut Vec<Structure>| {
        frames.push(Structure {
            species: species.to_vec(),
            positions: pos.to_vec(),
            energy,
            forces: forces.to_vec(),
            free: free.clone(),
            trajectory,
            frame: frames.len(),
        });
    };

    record(&pos, energy, &forces, &mut frames);

    for step_idx in 1..=settings.max_steps {
        let f_max = max_force_norm(&forces);
        if f_max <= settings.f_max_stop {
            break;
        }
        let mut alpha = settings.step.min(settings.d_cap / f_max);
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<[f64; 3]> = pos
                .iter()
                .zip(&forces)
                .map(|(p, f)| std::array::from_fn(|k| p[k] + alpha * f[k]))
                .collect();
            match lj_energy_forces(species, &trial, params) {
                Ok((e, f)) if e < energy => {
                    accepted = Some((trial, e, f));
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        let Some((trial, e, f)) = accepted else {
            // Cannot decrease the energy further.
            return if max_force_norm(&forces) <= settings.f_max_stop {
                unreachable!("loop exits before this when converged")
            } else {
                Ok(RelaxOutcome::Failed("stalled before reaching the force threshold"))
            };
        };
        pos = trial;
        energy = e;
        forces = f;
        if step_idx % settings.record_stride == 0 {
            record(&pos, energy, &forces, &mut frames);
        }
    }

    if max_force_norm(&forces) > settings.f_max_stop {
        return Ok(RelaxOutcome::Failed("step budget exhausted"));
    }

    // Always record the converged frame; drop a duplicate stride record at
    // the same geometry.
    if frames.last().map(|s| s.positions != pos).unwrap_or(true) {
        record(&pos, energy, &forces, &mut frames);
    }
    Ok(RelaxOutcome::Converged(frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starting_at_minimum_yields_single_frame() {
        let p = LjParams::default();
        let r = 2.0f64.powf(1.0 / 6.0);
        let out = relax(
            &[0, 0],
            &[[0.0; 3], [r, 0.0, 0.0]],
            &p,
            &RelaxSettings::default(),
            0,
        )
        .unwrap();
        match out {
            RelaxOutcome::Converged(frames) => {
                assert_eq!(frames.len(), 1);
                assert!(max_force_norm(&frames[0].forces) <= 0.02);
            }
            RelaxOutcome::Failed(msg) => panic!("unexpected failure: {msg}"),
        }
    }

    #[test]
    fn dimer_descends_to_minimum_energy() {
        let p = LjParams::default();
        let r0 = 1.5 * 2.0f64.powf(1.0 / 6.0) * p.sig(0, 0);
        let settings = RelaxSettings { f_max_stop: 1e-4, ..Default::default() };
        let out = relax(&[0, 0], &[[0.0; 3], [r0, 0.0, 0.0]], &p, &settings, 0).unwrap();
        let RelaxOutcome::Converged(frames) = out else {
            panic!("dimer failed to relax")
        };
        let final_e = frames.last().unwrap().energy;
        assert!(
            (final_e + p.eps(0, 0)).abs() <= 1e-4,
            "final energy {final_e}, expected about {}",
            -p.eps(0, 0)
        );
        for w in frames.windows(2) {
            assert!(w[1].energy <= w[0].energy, "energy increased between frames");
        }
    }
}
