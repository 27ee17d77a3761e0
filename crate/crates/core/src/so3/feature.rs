//! Irreps feature layout and rotation.

use super::wigner::wigner_dense;
use super::{Rotation, So3Error};
use crate::autodiff::Tensor;

/// Per-degree channel counts of an equivariant feature. Stored row layout
/// is degree-major, then channel-major: block L holds `channels(L)` groups
/// of (2L+1) components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IrrepsLayout {
    channels: Vec<usize>,
}

impl IrrepsLayout {
    pub fn new(channels: Vec<usize>) -> Self {
        assert!(!channels.is_empty());
        IrrepsLayout { channels }
    }

    /// Uniform channel count for all degrees 0..=l_max.
    pub fn uniform(l_max: usize, c: usize) -> Self {
        IrrepsLayout { channels: vec![c; l_max + 1] }
    }

    /// A single degree-l3 block of `c` channels (zero channels elsewhere).
    pub fn single(l: usize, c: usize) -> Self {
        let mut channels = vec![0; l + 1];
        channels[l] = c;
        IrrepsLayout { channels }
    }

    pub fn l_max(&self) -> usize {
        self.channels.len() - 1
    }

    pub fn channels(&self, l: usize) -> usize {
        self.channels.get(l).copied().unwrap_or(0)
    }

    /// Total feature length: sum over degrees of channels * (2L+1).
    pub fn width(&self) -> usize {
        self.channels.iter().enumerate().map(|(l, c)| c * (2 * l + 1)).sum()
    }

    pub fn block_offset(&self, l: usize) -> usize {
        (0..l).map(|j| self.channels(j) * (2 * j + 1)).sum()
    }

    pub fn block_width(&self, l: usize) -> usize {
        self.channels(l) * (2 * l + 1)
    }
}

/// Per-node equivariant feature: one row per node, laid out per `layout`.
#[derive(Clone, Debug, PartialEq)]
pub struct IrrepsFeature {
    pub layout: IrrepsLayout,
    pub data: Tensor,
}

impl IrrepsFeature {
    pub fn new(layout: IrrepsLayout, data: Tensor) -> Result<Self, So3Error> {
        if data.shape.len() != 2 || data.shape[1] != layout.width() {
            return Err(So3Error::Layout(format!(
                "data shape {:?} does not match layout width {}",
                data.shape,
                layout.width()
            )));
        }
        Ok(IrrepsFeature { layout, data })
    }

    pub fn zeros(layout: IrrepsLayout, nodes: usize) -> Self {
        let w = layout.width();
        IrrepsFeature { layout, data: Tensor::zeros(vec![nodes, w]) }
    }

    pub fn nodes(&self) -> usize {
        self.data.shape[0]
    }
}

/// Applies D^(L)(r) to every channel of every degree-L block.
pub fn rotate_feature(x: &IrrepsFeature, r: &Rotation) -> IrrepsFeature {
    let layout = &x.layout;
    let width = layout.width();
    let nodes = x.nodes();
    let mut out = vec![0.0; nodes * width];
    for l in 0..=layout.l_max() {
        let c = layout.channels(l);
        if c == 0 {
            continue;
        }
        let m = 2 * l + 1;
        let d = wigner_dense(l, r);
        let off = layout.block_offset(l);
        for row in 0..nodes {
            let base = row * width + off;
            for ch in 0..c {
                let src = &x.data.data[base + ch * m..base + (ch + 1) * m];
                let dst = &mut out[base + ch * m..base + (ch + 1) * m];
                for i in 0..m {
                    let mut acc = 0.0;
                    for (j, &s) in src.iter().enumerate() {
                        acc += d[(i, j)] * s;
                    }
                    dst[i] = acc;
                }
            }
        }
    }
    IrrepsFeature {
        layout: layout.clone(),
        data: Tensor::new(vec![nodes, width], out),
    }
}
