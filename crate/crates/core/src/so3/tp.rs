//! Depthwise tensor product between a multi-channel irreps feature and a
//! single-channel irreps vector (edge spherical harmonics), with one scalar
//! weight per (channel, path).

use std::sync::Arc;

use super::cg::{coupling, selection_rule};
use super::So3Error;
use crate::autodiff::{BlockContractSpec, ContractPath, Tape, TensorId};

/// All (l1, l2, l3) triples allowed by the selection rule within the given
/// degree caps, in lexicographic order.
pub fn allowed_paths(l_in_max: usize, l_edge_max: usize, l_out_max: usize) -> Vec<(usize, usize, usize)> {
    let mut paths = Vec::new();
    for l1 in 0..=l_in_max {
        for l2 in 0..=l_edge_max {
            for l3 in 0..=l_out_max {
                if selection_rule(l1, l2, l3) {
                    paths.push((l1, l2, l3));
                }
            }
        }
    }
    paths
}

/// Builds the contraction spec for `channels`-channel input of degrees
/// 0..=l_in_max, edge harmonics of degrees 0..=l_edge_max, and output
/// degrees 0..=l_out_max, over the given paths. Paths violating the
/// selection rule or exceeding the degree caps are rejected.
pub fn build_block_spec(
    channels: usize,
    paths: &[(usize, usize, usize)],
    l_in_max: usize,
    l_edge_max: usize,
    l_out_max: usize,
) -> Result<Arc<BlockContractSpec>, So3Error> {
    let mut contract_paths = Vec::with_capacity(paths.len());
    for &(l1, l2, l3) in paths {
        if !selection_rule(l1, l2, l3) {
            return Err(So3Error::IllegalPath { l1, l2, l3, reason: "selection rule violated" });
        }
        if l1 > l_in_max || l2 > l_edge_max || l3 > l_out_max {
            return Err(So3Error::IllegalPath { l1, l2, l3, reason: "degree exceeds layout maximum" });
        }
        contract_paths.push(ContractPath {
            m1: 2 * l1 + 1,
            m2: 2 * l2 + 1,
            m3: 2 * l3 + 1,
            x_base: channels * l1 * l1,
            y_base: l2 * l2,
            out_base: channels * l3 * l3,
            coupling: (*coupling(l1, l2, l3)).clone(),
        });
    }
    let x_width = channels * (l_in_max + 1) * (l_in_max + 1);
    let y_width = (l_edge_max + 1) * (l_edge_max + 1);
    let out_width = channels * (l_out_max + 1) * (l_out_max + 1);
    Ok(Arc::new(BlockContractSpec::new(channels, contract_paths, x_width, y_width, out_width)))
}

/// Applies the depthwise tensor product on tape: x (n, C*(l_in_max+1)^2),
/// y (n, (l_edge_max+1)^2), w (n, C*n_paths) -> (n, C*(l_out_max+1)^2).
pub fn depthwise_tensor_product(
    tape: &mut Tape,
    spec: &Arc<BlockContractSpec>,
    x: TensorId,
    y: TensorId,
    w: TensorId,
) -> Result<TensorId, So3Error> {
    Ok(tape.block_contract(Arc::clone(spec), x, y, w)?)
}
