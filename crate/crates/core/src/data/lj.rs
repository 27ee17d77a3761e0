//! Two-species Lennard-Jones potential with analytic forces.

use serde::{Deserialize, Serialize};

use super::DataError;

/// Pair parameters for a binary mixture, indexed by species id (0 or 1).
/// Defaults are the Kob-Andersen values: a strongly cross-binding mixture
/// with a rugged landscape, so relaxations produce genuinely varied
/// non-equilibrium paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LjParams {
    pub epsilon: [[f64; 2]; 2],
    pub sigma: [[f64; 2]; 2],
}

impl Default for LjParams {
    fn default() -> Self {
        LjParams {
            epsilon: [[1.0, 1.5], [1.5, 0.5]],
            sigma: [[1.0, 0.8], [0.8, 0.88]],
        }
    }
}

impl LjParams {
    pub fn eps(&self, a: u8, b: u8) -> f64 {
        self.epsilon[a as usize][b as usize]
    }

    pub fn sig(&self, a: u8, b: u8) -> f64 {
        self.sigma[a as usize][b as usize]
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().flatten().fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Total energy and analytic per-atom forces:
/// E = sum_{i<j} 4 eps_ab [(sig_ab/r)^12 - (sig_ab/r)^6], F = -grad E.
pub fn lj_energy_forces(
    species: &[u8],
    positions: &[[f64; 3]],
    params: &LjParams,
) -> Result<(f64, Vec<[f64; 3]>), DataError> {
    let n = species.len();
    debug_assert_eq!(n, positions.len());
    let mut energy = 0.0;
    let mut forces = vec![[0.0; 3]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: [f64; 3] = std::array::from_fn(|k| positions[i][k] - positions[j][k]);
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            let r = r2.sqrt();
            if r < 1e-6 {
                return Err(DataError::Singularity { i, j, r });
            }
            let eps = params.eps(species[i], species[j]);
            let sig = params.sig(species[i], species[j]);
            let sr2 = (sig * sig) / r2;
            let sr6 = sr2 * sr2 * sr2;
            let sr12 = sr6 * sr6;
            energy += 4.0 * eps * (sr12 - sr6);
            // dU/dr = -(24 eps / r) (2 (s/r)^12 - (s/r)^6)
            // F_i = -dU/dr * (p_i - p_j)/r
            let coeff = 24.0 * eps * (2.0 * sr12 - sr6) / r2;
            for k in 0..3 {
                let f = coeff * d[k];
                forces[i][k] += f;
                forces[j][k] -= f;
            }
        }
    }
    Ok((energy, forces))
}

pub fn max_force_norm(forces: &[[f64; 3]]) -> f64 {
    forces
        .iter()
        .map(|f| (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use rand::Rng;

    #[test]
    fn two_atoms_at_minimum() {
        let p = LjParams::default();
        let r = 2.0f64.powf(1.0 / 6.0) * p.sig(0, 0);
        let (e, f) = lj_energy_forces(&[0, 0], &[[0.0; 3], [r, 0.0, 0.0]], &p).unwrap();
        assert!((e + p.eps(0, 0)).abs() <= 1e-12);
        assert!(max_force_norm(&f) <= 1e-12);
    }

    #[test]
    fn two_atoms_at_zero_crossing() {
        let p = LjParams::default();
        let r = p.sig(0, 1);
        let (e, _) = lj_energy_forces(&[0, 1], &[[0.0; 3], [0.0, r, 0.0]], &p).unwrap();
        assert!(e.abs() <= 1e-12);
    }

    #[test]
    fn coincident_atoms_rejected() {
        let p = LjParams::default();
        let err = lj_energy_forces(&[0, 0], &[[0.0; 3], [1e-9, 0.0, 0.0]], &p).unwrap_err();
        assert!(matches!(err, DataError::Singularity { .. }));
    }

    /// Analytic forces match central finite differences of the energy.
    #[test]
    fn forces_match_finite_differences() {
        let params = LjParams::default();
        let mut rng = substream(0, Stream::Check { key: 30 });
        let n = 5;
        let species: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        // Loose cluster so no pair sits near the singularity.
        let mut positions = Vec::new();
        'outer: loop {
            positions.clear();
            for _ in 0..n {
                positions.push([
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-1.5..1.5),
                ]);
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = (0..3)
                        .map(|k| (positions[i][k] - positions[j][k]) * (positions[i][k] - positions[j][k]))
                        .sum::<f64>()
                        .sqrt();
                    if d < 0.85 {
                        continue 'outer;
                    }
                }
            }
            break;
        }
        let (_, forces) = lj_energy_forces(&species, &positions, &params).unwrap();
        let h = 1e-6;
        for i in 0..n {
            for k in 0..3 {
                let mut pp = positions.clone();
                pp[i][k] += h;
                let (ep, _) = lj_energy_forces(&species, &pp, &params).unwrap();
                pp[i][k] -= 2.0 * h;
                let (em, _) = lj_energy_forces(&species, &pp, &params).unwrap();
                let numeric = -(ep - em) / (2.0 * h);
                let rel = (forces[i][k] - numeric).abs() / numeric.abs().max(1.0);
                assert!(rel <= 1e-8, "atom {i} coord {k}: rel err {rel}");
            }
        }
    }
}
