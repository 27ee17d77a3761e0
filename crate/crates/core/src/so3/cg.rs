//! Clebsch-Gordan couplings for real SO(3) irreps, computed numerically at
//! first use and cached.
//!
//! A coupling K for degrees (l1, l2) -> l3 is the sparse 3-tensor with
//! `out_c = sum_{ab} K[a,b,c] x_a y_b` satisfying, for every rotation R,
//!
//! ```text
//! sum_ab K[a,b,c] (D1 x)_a (D2 y)_b = sum_c' D3[c,c'] (K(x ⊗ y))_c'
//! ```
//!
//! Triples with known lower-degree Wigner matrices are solved as the
//! nullspace of that linear constraint stacked over two fixed generic
//! rotations. The ladder triples (l, 1, l+1) that *define* the next Wigner
//! matrix are instead found as the orthogonal complement of the two known
//! invariant subspaces inside the product space; the degree-(l+1) Wigner
//! matrix is then the restriction of the product representation to that
//! complement.
//!
//! Couplings are normalized to unit Frobenius norm. Nullspace-solved
//! couplings get their overall sign fixed by making the lexicographically
//! first nonzero entry positive; complement bases are canonicalized
//! per column the same way.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use super::wigner::wigner_dense;
use super::Rotation;
use crate::autodiff::Coupling;

/// Two fixed generic rotations used to pin the equivariance constraint.
pub(super) fn probe_rotations() -> [Rotation; 2] {
    [
        Rotation::from_axis_angle([1.0, 2.0, 3.0], 0.7431),
        Rotation::from_axis_angle([-2.0, 0.5, 1.0], 1.9173),
    ]
}

fn cache() -> &'static Mutex<HashMap<(usize, usize, usize), Arc<Coupling>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<Coupling>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Returns the cached coupling for (l1, l2) -> l3. Outside the triangle
/// inequality the coupling is identically zero.
pub fn coupling(l1: usize, l2: usize, l3: usize) -> Arc<Coupling> {
    let key = (l1, l2, l3);
    if let Some(k) = cache().lock().unwrap().get(&key) {
        return Arc::clone(k);
    }
    let dims = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
    let k = if !selection_rule(l1, l2, l3) {
        Coupling { dims, nnz: Vec::new() }
    } else if l2 == 1 && l3 == l1 + 1 && l3 >= 2 {
        // This triple is what defines the degree-l3 Wigner matrix, so it
        // cannot be pinned against one; use the complement construction.
        solve_ladder(l1)
    } else {
        solve_nullspace(l1, l2, l3)
    };
    let k = Arc::new(k);
    cache().lock().unwrap().entry(key).or_insert_with(|| Arc::clone(&k));
    k
}

pub fn selection_rule(l1: usize, l2: usize, l3: usize) -> bool {
    l1.abs_diff(l2) <= l3 && l3 <= l1 + l2
}

/// Coupling as a (d1*d2) x d3 matrix with row index a*d2 + b.
pub(super) fn coupling_matrix(k: &Coupling) -> DMatrix<f64> {
    let (d1, d2, d3) = k.dims;
    let mut m = DMatrix::zeros(d1 * d2, d3);
    for &(a, b, c, v) in &k.nnz {
        m[(a as usize * d2 + b as usize, c as usize)] = v;
    }
    m
}

/// Solves the general triple as the nullspace of the stacked constraint.
fn solve_nullspace(l1: usize, l2: usize, l3: usize) -> Coupling {
    let (d1, d2, d3) = (2 * l1 + 1, 2 * l2 + 1, 2 * l3 + 1);
    let d = d1 * d2 * d3;
    let rots = probe_rotations();
    let mut m = DMatrix::zeros(2 * d, d);
    for (ri, rot) in rots.iter().enumerate() {
        let w1 = wigner_dense(l1, rot);
        let w2 = wigner_dense(l2, rot);
        let w3 = wigner_dense(l3, rot);
        // Row (a',b',c), column (a,b,c'):
        //   D1[a,a'] D2[b,b'] delta[c,c'] - delta[a,a'] delta[b,b'] D3[c,c']
        for ap in 0..d1 {
            for bp in 0..d2 {
                for c in 0..d3 {
                    let row = ri * d + (ap * d2 + bp) * d3 + c;
                    for a in 0..d1 {
                        for b in 0..d2 {
                            let col = (a * d2 + b) * d3 + c;
                            m[(row, col)] += w1[(a, ap)] * w2[(b, bp)];
                        }
                    }
                    let base = (ap * d2 + bp) * d3;
                    for cp in 0..d3 {
                        m[(row, base + cp)] -= w3[(c, cp)];
                    }
                }
            }
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("svd computes right singular vectors");
    // Locate the (unique) near-zero singular value.
    let mut idx_min = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < svd.singular_values[idx_min] {
            idx_min = i;
        }
    }
    let second = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != idx_min)
        .map(|(_, &s)| s)
        .fold(f64::INFINITY, f64::min);
    let s_min = svd.singular_values[idx_min];
    assert!(
        s_min < 1e-8 && second > 1e-4,
        "coupling ({l1},{l2},{l3}): nullspace not one-dimensional (sigma_min={s_min:.3e}, next={second:.3e})"
    );
    let mut vec: Vec<f64> = v_t.row(idx_min).iter().copied().collect();
    fix_global_sign(&mut vec);
    drop_noise(&mut vec);
    Coupling::from_dense((d1, d2, d3), &vec)
}

/// Solves the ladder triple (l, 1, l+1): the degree-(l+1) subspace of the
/// product space is the orthogonal complement of the degree-(l-1) and
/// degree-l subspaces, both of which couple through already-known Wigner
/// matrices.
fn solve_ladder(l: usize) -> Coupling {
    assert!(l >= 1);
    let d1 = 2 * l + 1;
    let dim = 3 * d1;
    let d3 = 2 * l + 3;

    let mut p = DMatrix::<f64>::identity(dim, dim);
    for l_low in [l - 1, l] {
        if !selection_rule(l, 1, l_low) {
            continue;
        }
        let k = coupling(l, 1, l_low);
        let km = coupling_matrix(&k);
        // Columns of a unit-Frobenius coupling have norm 1/sqrt(2*l_low+1).
        let khat = km * ((2 * l_low + 1) as f64).sqrt();
        p -= &khat * khat.transpose();
    }

    // P is the orthogonal projector onto the degree-(l+1) subspace; its
    // range is spanned by the singular vectors with singular value ~1.
    let svd = p.clone().svd(true, false);
    let u = svd.u.expect("svd computes left singular vectors");
    let mut cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 0.5)
        .collect();
    assert_eq!(
        cols.len(),
        d3,
        "ladder ({l},1,{}): projector rank {} != {d3}",
        l + 1,
        cols.len()
    );
    cols.sort_unstable();

    let mut b = DMatrix::zeros(dim, d3);
    for (j, &ci) in cols.iter().enumerate() {
        let col = u.column(ci);
        // Deterministic per-column sign: first significant entry positive.
        let mut sign = 1.0;
        for v in col.iter() {
            if v.abs() > 1e-8 {
                sign = v.signum();
                break;
            }
        }
        for i in 0..dim {
            b[(i, j)] = col[i] * sign;
        }
    }

    let k = b / (d3 as f64).sqrt();
    let mut dense = vec![0.0; dim * d3];
    for a in 0..d1 {
        for bb in 0..3 {
            for c in 0..d3 {
                dense[(a * 3 + bb) * d3 + c] = k[(a * 3 + bb, c)];
            }
        }
    }
    drop_noise(&mut dense);
    Coupling::from_dense((d1, 3, d3), &dense)
}

fn fix_global_sign(v: &mut [f64]) {
    for x in v.iter() {
        if x.abs() > 1e-8 {
            if *x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Zeroes entries that are pure numerical noise so the sparse kernels skip
/// them. The cutoff is far below any true coupling coefficient.
fn drop_noise(v: &mut [f64]) {
    for x in v.iter_mut() {
        if x.abs() < 1e-12 {
            *x = 0.0;
        }
    }
}
