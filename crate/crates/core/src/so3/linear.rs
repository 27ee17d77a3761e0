//! SO(3) linear maps: per-degree channel mixing, identical across the
//! (2L+1) components of each type-L vector, with an optional degree-0 bias.

use super::{IrrepsLayout, So3Error};
use crate::autodiff::{Tape, TensorId};

/// Shapes of an SO(3)-linear map between two layouts.
#[derive(Clone, Debug)]
pub struct So3LinearSpec {
    pub input: IrrepsLayout,
    pub output: IrrepsLayout,
    pub bias: bool,
}

impl So3LinearSpec {
    pub fn new(input: IrrepsLayout, output: IrrepsLayout, bias: bool) -> Result<Self, So3Error> {
        for l in 0..=output.l_max() {
            if output.channels(l) > 0 && input.channels(l) == 0 {
                return Err(So3Error::Layout(format!(
                    "output requires degree-{l} channels but input has none"
                )));
            }
        }
        Ok(So3LinearSpec { input, output, bias })
    }

    /// Degrees carrying a weight matrix, with (c_out, c_in) shapes.
    pub fn weight_shapes(&self) -> Vec<(usize, usize, usize)> {
        (0..=self.output.l_max())
            .filter(|&l| self.output.channels(l) > 0)
            .map(|l| (l, self.output.channels(l), self.input.channels(l)))
            .collect()
    }
}

/// Tape-staged parameters of an SO(3)-linear map: one weight tensor id per
/// degree listed in `So3LinearSpec::weight_shapes`, plus the degree-0 bias.
#[derive(Clone, Debug)]
pub struct StagedSo3Linear {
    pub weights: Vec<TensorId>,
    pub bias: Option<TensorId>,
}

/// Applies the map to x (nodes, input.width()), producing
/// (nodes, output.width()).
pub fn so3_linear(
    tape: &mut Tape,
    spec: &So3LinearSpec,
    staged: &StagedSo3Linear,
    x: TensorId,
) -> Result<TensorId, So3Error> {
    let in_layout = &spec.input;
    let out_layout = &spec.output;
    if tape.shape(x) != [tape.shape(x)[0], in_layout.width()] {
        return Err(So3Error::Layout(format!(
            "input shape {:?} does not match layout width {}",
            tape.shape(x),
            in_layout.width()
        )));
    }
    let nodes = tape.shape(x)[0];
    let shapes = spec.weight_shapes();
    if staged.weights.len() != shapes.len() {
        return Err(So3Error::Layout(format!(
            "{} weight tensors provided, {} degrees require one",
            staged.weights.len(),
            shapes.len()
        )));
    }

    let mut parts = Vec::new();
    for ((l, c_out, c_in), &w) in shapes.iter().zip(&staged.weights) {
        let m = 2 * l + 1;
        if tape.shape(w) != [*c_out, *c_in] {
            return Err(So3Error::Layout(format!(
                "degree-{l} weight shape {:?}, expected [{c_out}, {c_in}]",
                tape.shape(w)
            )));
        }
        let off = in_layout.block_offset(*l);
        let block = tape.slice_cols(x, off, off + in_layout.block_width(*l))?;
        let mut mixed = tape.bmm_shared(w, block, m)?;
        if *l == 0 {
            if let Some(b) = staged.bias {
                if !spec.bias || tape.value(b).len() != *c_out {
                    return Err(So3Error::Layout("bias shape mismatch".into()));
                }
                // Broadcast the bias across rows.
                let ones = tape.constant_from(vec![nodes, 1], vec![1.0; nodes]);
                let brow = tape.reshape(b, vec![1, *c_out])?;
                let bmat = tape.matmul(ones, brow)?;
                mixed = tape.add(mixed, bmat)?;
            }
        }
        parts.push(mixed);
    }
    let _ = out_layout;
    Ok(tape.concat_cols(&parts)?)
}
