//! Gate activation: SiLU on degree-0 feature channels, sigmoid gating of
//! every higher-degree channel by its own extra degree-0 scalar. The gate
//! scalars are consumed.

use super::{IrrepsLayout, So3Error};
use crate::autodiff::{Tape, TensorId};

/// Layout of the pre-gate feature for a desired output layout: degree 0
/// carries the feature channels plus one gate scalar per higher-degree
/// channel; higher degrees are unchanged.
pub fn gated_input_layout(output: &IrrepsLayout) -> IrrepsLayout {
    let extra: usize = (1..=output.l_max()).map(|l| output.channels(l)).sum();
    let mut channels: Vec<usize> = (0..=output.l_max()).map(|l| output.channels(l)).collect();
    channels[0] += extra;
    IrrepsLayout::new(channels)
}

/// Consumes the gate scalars of `x` (laid out per `gated_input_layout`)
/// and returns a feature with layout `output`.
pub fn gate_activation(
    tape: &mut Tape,
    output: &IrrepsLayout,
    x: TensorId,
) -> Result<TensorId, So3Error> {
    let input = gated_input_layout(output);
    let got = tape.shape(x).to_vec();
    if got.len() != 2 || got[1] != input.width() {
        return Err(So3Error::Layout(format!(
            "gate input shape {got:?} missing gate channels (expected width {})",
            input.width()
        )));
    }
    let c0 = output.channels(0);

    let feats0 = tape.slice_cols(x, 0, c0)?;
    let mut parts = vec![tape.silu(feats0)?];

    let mut gate_off = c0;
    for l in 1..=output.l_max() {
        let c = output.channels(l);
        if c == 0 {
            continue;
        }
        let m = 2 * l + 1;
        let gates = tape.slice_cols(x, gate_off, gate_off + c)?;
        gate_off += c;
        let sig = tape.sigmoid(gates)?;
        let off = input.block_offset(l);
        let block = tape.slice_cols(x, off, off + input.block_width(l))?;
        parts.push(tape.chan_mul(block, sig, m)?);
    }
    Ok(tape.concat_cols(&parts)?)
}
