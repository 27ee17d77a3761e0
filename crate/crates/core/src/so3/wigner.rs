//! Wigner-D matrices for real irreps in the Cartesian degree-1 basis.

use nalgebra::DMatrix;

use super::cg::{coupling, coupling_matrix};
use super::{Rotation, So3Error};
use crate::autodiff::Tensor;

/// Dense (2l+1) x (2l+1) representation matrix of `r` at degree `l`.
///
/// D^(0) = [1], D^(1) = R, and D^(l) for l >= 2 is the restriction of
/// D^(l-1) (x) D^(1) to the degree-l invariant subspace through the cached
/// ladder coupling.
pub(super) fn wigner_dense(l: usize, r: &Rotation) -> DMatrix<f64> {
    match l {
        0 => DMatrix::from_element(1, 1, 1.0),
        1 => {
            let m = r.matrix();
            DMatrix::from_fn(3, 3, |i, j| m[i][j])
        }
        _ => {
            let prev = wigner_dense(l - 1, r);
            let d_prev = 2 * (l - 1) + 1;
            let m = r.matrix();
            // kron(prev, R) with paired index (a*3 + b).
            let mut kron = DMatrix::zeros(3 * d_prev, 3 * d_prev);
            for a in 0..d_prev {
                for ap in 0..d_prev {
                    let pv = prev[(a, ap)];
                    if pv == 0.0 {
                        continue;
                    }
                    for b in 0..3 {
                        for bp in 0..3 {
                            kron[(a * 3 + b, ap * 3 + bp)] = pv * m[b][bp];
                        }
                    }
                }
            }
            let k = coupling(l - 1, 1, l);
            let khat = coupling_matrix(&k) * ((2 * l + 1) as f64).sqrt();
            khat.transpose() * kron * khat
        }
    }
}

/// Wigner-D matrix as a row-major (2l+1, 2l+1) tensor.
pub fn wigner_d(l: usize, r: &Rotation) -> Result<Tensor, So3Error> {
    // `Rotation` values are validated at construction; re-check cheaply so a
    // hand-built matrix cannot slip through via struct update.
    Rotation::from_matrix(*r.matrix())?;
    let d = wigner_dense(l, r);
    let n = 2 * l + 1;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = d[(i, j)];
        }
    }
    Ok(Tensor::new(vec![n, n], data))
}
