//! Equivariant RMS normalization: per node and per degree, every channel
//! is divided by the root-mean-square of that degree block's components
//! plus eps. No mean subtraction, so rotation equivariance is preserved
//! (the RMS of a degree block is rotation-invariant).

use super::{IrrepsLayout, So3Error};
use crate::autodiff::{Tape, TensorId};

pub fn equivariant_rms_norm(
    tape: &mut Tape,
    layout: &IrrepsLayout,
    x: TensorId,
    eps: f64,
) -> Result<TensorId, So3Error> {
    assert!(eps > 0.0, "eps must be positive");
    let got = tape.shape(x).to_vec();
    if got.len() != 2 || got[1] != layout.width() {
        return Err(So3Error::Layout(format!(
            "rms-norm input shape {got:?} does not match layout width {}",
            layout.width()
        )));
    }
    let mut parts = Vec::new();
    for l in 0..=layout.l_max() {
        let w = layout.block_width(l);
        if w == 0 {
            continue;
        }
        let off = layout.block_offset(l);
        let block = tape.slice_cols(x, off, off + w)?;
        let sq = tape.mul(block, block)?;
        let ms = tape.row_mean(sq)?;
        let rms = tape.sqrt(ms)?;
        let denom = tape.add_scalar(rms, eps)?;
        let inv = tape.recip(denom)?;
        parts.push(tape.row_mul(block, inv)?);
    }
    Ok(tape.concat_cols(&parts)?)
}
