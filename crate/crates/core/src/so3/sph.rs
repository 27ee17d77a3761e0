//! Real spherical harmonics, unit-normalized on the sphere.
//!
//! `Y^(0)(u) = [1]`, `Y^(1)(u) = u` (Cartesian order x, y, z), and each
//! higher degree is the ladder coupling of the previous degree with the
//! direction itself, rescaled by a per-degree constant so that
//! `||Y^(L)(u)|| = 1` for every unit `u`. Equivariance makes the norm of
//! the raw coupling constant over the sphere, so one constant per degree
//! suffices.

use std::sync::{Mutex, OnceLock};

use super::cg::coupling;
use super::So3Error;
use crate::autodiff::{NumError, Tape, TensorId};

fn norm_consts() -> &'static Mutex<Vec<f64>> {
    static CONSTS: OnceLock<Mutex<Vec<f64>>> = OnceLock::new();
    CONSTS.get_or_init(|| Mutex::new(vec![1.0, 1.0]))
}

/// The rescale constant applied to the raw ladder coupling at degree `l`.
pub fn sph_norm_const(l: usize) -> f64 {
    {
        let consts = norm_consts().lock().unwrap();
        if l < consts.len() {
            return consts[l];
        }
    }
    // Extend the table by evaluating the raw recursion at the north pole.
    let mut consts = norm_consts().lock().unwrap();
    while consts.len() <= l {
        let next_l = consts.len();
        let k = coupling(next_l - 1, 1, next_l);
        let u = [0.0, 0.0, 1.0];
        let prev = sph_up_to(next_l - 1, u, &consts);
        let prev_block = &prev[(next_l - 1) * (next_l - 1)..];
        let mut raw = vec![0.0; 2 * next_l + 1];
        for &(a, b, c, v) in &k.nnz {
            raw[c as usize] += v * prev_block[a as usize] * u[b as usize];
        }
        let n = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n > 1e-8, "degenerate spherical-harmonic recursion at degree {next_l}");
        consts.push(1.0 / n);
    }
    consts[l]
}

/// Stacked [Y^(0) | ... | Y^(l_max)] for a unit u, using the provided
/// constants table (must cover degrees <= l_max for l_max >= 2).
fn sph_up_to(l_max: usize, u: [f64; 3], consts: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; (l_max + 1) * (l_max + 1)];
    out[0] = 1.0;
    if l_max == 0 {
        return out;
    }
    out[1] = u[0];
    out[2] = u[1];
    out[3] = u[2];
    for l in 2..=l_max {
        let k = coupling(l - 1, 1, l);
        let c = consts[l];
        let prev_off = (l - 1) * (l - 1);
        let off = l * l;
        let (lo, hi) = out.split_at_mut(off);
        let prev = &lo[prev_off..prev_off + 2 * l - 1];
        for &(a, b, cc, v) in &k.nnz {
            hi[cc as usize] += c * v * prev[a as usize] * u[b as usize];
        }
    }
    out
}

/// Stacked spherical harmonics [Y^(0) | Y^(1) | ... | Y^(l_max)] of a unit
/// direction; the caller guarantees normalization.
pub fn sph_stack(l_max: usize, u: [f64; 3]) -> Vec<f64> {
    sph_norm_const(l_max);
    let consts = norm_consts().lock().unwrap();
    sph_up_to(l_max, u, &consts)
}

/// Writes the stacked harmonics into `out` (length (l_max+1)^2).
pub fn sph_stack_into(l_max: usize, u: [f64; 3], out: &mut [f64]) {
    let v = sph_stack(l_max, u);
    out.copy_from_slice(&v);
}

/// Y^(l) of a unit vector. Rejects non-unit input (callers normalize
/// explicitly; the zero vector has no direction).
pub fn real_sph_harm(l: usize, u: [f64; 3]) -> Result<Vec<f64>, So3Error> {
    let n = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(So3Error::NotUnit((n - 1.0).abs()));
    }
    let stack = sph_stack(l, u);
    Ok(stack[l * l..].to_vec())
}

/// On-tape stacked harmonics for a batch of unit directions u (n, 3);
/// differentiable through the ladder couplings. Returns (n, (l_max+1)^2).
pub fn sph_stack_tape(tape: &mut Tape, l_max: usize, u: TensorId) -> Result<TensorId, NumError> {
    let n = tape.shape(u)[0];
    let ones = tape.constant_from(vec![n, 1], vec![1.0; n]);
    let mut blocks = vec![ones];
    if l_max >= 1 {
        blocks.push(u);
    }
    for l in 2..=l_max {
        let k = coupling(l - 1, 1, l);
        let raw = tape.coupled_contract(k, blocks[l - 1], u)?;
        blocks.push(tape.scale(raw, sph_norm_const(l))?);
    }
    tape.concat_cols(&blocks)
}
