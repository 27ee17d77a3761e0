//! Dense f64 tensors with a reverse-mode differentiation tape.
//!
//! The tape is eager and single-graph: every operation appends a node
//! holding its output value, and [`Tape::backward`] replays the recorded
//! nodes in reverse to accumulate adjoints for every grad-tracked leaf.
//! A tape lives for one forward/backward pass and is consumed by
//! `backward`; parameters persist outside the tape as plain [`Tensor`]
//! values and are re-staged as leaves each step.

mod ops;

pub use ops::{BlockContractSpec, ContractPath, Coupling, RadialBasisSpec};

use std::collections::HashMap;
use std::sync::Arc;

/// A plain dense tensor: row-major values plus shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "element count must equal the product of the shape dimensions"
        );
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, data: vec![0.0; n] }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![1], data: vec![v] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct TensorId(pub(crate) usize);

#[derive(Debug, thiserror::Error)]
pub enum NumError {
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch { op: &'static str, lhs: Vec<usize>, rhs: Vec<usize> },
    #[error("{op}: expected {expected}, got shape {got:?}")]
    BadShape { op: &'static str, expected: &'static str, got: Vec<usize> },
    #[error("{op}: index {index} out of bounds for {rows} rows")]
    IndexOutOfBounds { op: &'static str, index: usize, rows: usize },
    #[error("backward: loss must be a scalar, got shape {0:?}")]
    LossNotScalar(Vec<usize>),
    #[error("tensor {0:?} is not on this tape")]
    NotOnTape(TensorId),
    #[error("tape already consumed by backward")]
    Consumed,
    #[error("non-finite value produced by primitive `{0}`")]
    NonFinite(&'static str),
    #[error("{op}: {msg}")]
    Invalid { op: &'static str, msg: String },
}

struct Node {
    op: ops::Op,
    inputs: Vec<TensorId>,
    shape: Vec<usize>,
    data: Vec<f64>,
    /// Auxiliary forward values some adjoints reuse (e.g. sigmoid(x) for SiLU).
    aux: Vec<f64>,
    requires_grad: bool,
}

/// Gradient map returned by [`Tape::backward`]: leaf id -> adjoint.
#[derive(Debug, Default)]
pub struct GradMap {
    grads: HashMap<TensorId, Tensor>,
}

impl GradMap {
    pub fn get(&self, id: TensorId) -> Option<&Tensor> {
        self.grads.get(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }
}

/// Ordered record of primitive operations; replayed in reverse by `backward`.
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), consumed: false }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Grad-tracked leaf; its adjoint appears in the gradient map.
    pub fn leaf(&mut self, t: &Tensor) -> TensorId {
        self.push_leaf(t.shape.clone(), t.data.clone(), true)
    }

    /// Untracked input; backward never propagates into it.
    pub fn constant(&mut self, t: &Tensor) -> TensorId {
        self.push_leaf(t.shape.clone(), t.data.clone(), false)
    }

    pub fn constant_from(&mut self, shape: Vec<usize>, data: Vec<f64>) -> TensorId {
        self.push_leaf(shape, data, false)
    }

    pub fn scalar_const(&mut self, v: f64) -> TensorId {
        self.push_leaf(vec![1], vec![v], false)
    }

    pub fn zeros_const(&mut self, shape: Vec<usize>) -> TensorId {
        let n = shape.iter().product();
        self.push_leaf(shape, vec![0.0; n], false)
    }

    fn push_leaf(&mut self, shape: Vec<usize>, data: Vec<f64>, tracked: bool) -> TensorId {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.push_node(ops::Op::Leaf, vec![], shape, data, Vec::new(), tracked)
    }

    fn push_node(
        &mut self,
        op: ops::Op,
        inputs: Vec<TensorId>,
        shape: Vec<usize>,
        data: Vec<f64>,
        aux: Vec<f64>,
        requires_grad: bool,
    ) -> TensorId {
        let id = TensorId(self.nodes.len());
        self.nodes.push(Node { op, inputs, shape, data, aux, requires_grad });
        id
    }

    pub fn shape(&self, t: TensorId) -> &[usize] {
        &self.nodes[t.0].shape
    }

    pub fn value(&self, t: TensorId) -> &[f64] {
        &self.nodes[t.0].data
    }

    pub fn to_tensor(&self, t: TensorId) -> Tensor {
        Tensor { shape: self.nodes[t.0].shape.clone(), data: self.nodes[t.0].data.clone() }
    }

    pub fn requires_grad(&self, t: TensorId) -> bool {
        self.nodes[t.0].requires_grad
    }

    fn check_live(&self) -> Result<(), NumError> {
        if self.consumed {
            Err(NumError::Consumed)
        } else {
            Ok(())
        }
    }

    fn check_on_tape(&self, t: TensorId) -> Result<(), NumError> {
        if t.0 >= self.nodes.len() {
            Err(NumError::NotOnTape(t))
        } else {
            Ok(())
        }
    }

    fn any_grad(&self, ids: &[TensorId]) -> bool {
        ids.iter().any(|t| self.nodes[t.0].requires_grad)
    }

    /// Reverse pass from a scalar loss. Returns adjoints for every
    /// grad-tracked leaf reached from the loss; the tape is consumed.
    pub fn backward(&mut self, loss: TensorId) -> Result<GradMap, NumError> {
        self.check_live()?;
        self.check_on_tape(loss)?;
        if self.nodes[loss.0].data.len() != 1 {
            return Err(NumError::LossNotScalar(self.nodes[loss.0].shape.clone()));
        }
        self.consumed = true;

        let mut adjoints: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adjoints[loss.0] = Some(vec![1.0]);

        // Tape order is topological by construction; walk it backwards.
        for i in (0..=loss.0).rev() {
            let adj = match adjoints[i].take() {
                Some(a) => a,
                None => continue,
            };
            if !self.nodes[i].requires_grad {
                continue;
            }
            if matches!(self.nodes[i].op, ops::Op::Leaf) {
                adjoints[i] = Some(adj);
                continue;
            }
            ops::backward_node(self, i, &adj, &mut adjoints);
        }

        let mut grads = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, ops::Op::Leaf) {
                if let Some(a) = adjoints[i].take() {
                    grads.insert(TensorId(i), Tensor { shape: node.shape.clone(), data: a });
                }
            }
        }
        Ok(GradMap { grads })
    }

    /// Scans every recorded value and reports the first non-finite one by
    /// the name of the primitive that produced it.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        for node in &self.nodes {
            if node.data.iter().any(|v| !v.is_finite()) {
                return Some(node.op.name());
            }
        }
        None
    }
}

// ---------------------------------------------------------------------------
// Op builders. Shape validation happens here; kernels assume valid input.
// ---------------------------------------------------------------------------

impl Tape {
    fn binary_elementwise(
        &mut self,
        op: ops::Op,
        name: &'static str,
        a: TensorId,
        b: TensorId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        self.check_on_tape(b)?;
        if self.nodes[a.0].shape != self.nodes[b.0].shape {
            return Err(NumError::ShapeMismatch {
                op: name,
                lhs: self.nodes[a.0].shape.clone(),
                rhs: self.nodes[b.0].shape.clone(),
            });
        }
        let data: Vec<f64> = self.nodes[a.0]
            .data
            .iter()
            .zip(&self.nodes[b.0].data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.any_grad(&[a, b]);
        Ok(self.push_node(op, vec![a, b], shape, data, Vec::new(), rg))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, NumError> {
        self.binary_elementwise(ops::Op::Add, "add", a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, NumError> {
        self.binary_elementwise(ops::Op::Sub, "sub", a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, NumError> {
        self.binary_elementwise(ops::Op::Mul, "mul", a, b, |x, y| x * y)
    }

    pub fn scale(&mut self, a: TensorId, c: f64) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|&x| x * c).collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::Scale(c), vec![a], shape, data, Vec::new(), rg))
    }

    pub fn add_scalar(&mut self, a: TensorId, c: f64) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|&x| x + c).collect();
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::AddScalar(c), vec![a], shape, data, Vec::new(), rg))
    }

    fn unary(
        &mut self,
        op: ops::Op,
        a: TensorId,
        f: impl Fn(f64) -> f64,
        aux: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let data: Vec<f64> = self.nodes[a.0].data.iter().map(|&x| f(x)).collect();
        let aux = aux(&self.nodes[a.0].data);
        let shape = self.nodes[a.0].shape.clone();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(op, vec![a], shape, data, aux, rg))
    }

    pub fn sqrt(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.unary(ops::Op::Sqrt, a, f64::sqrt, |_| Vec::new())
    }

    pub fn exp(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.unary(ops::Op::Exp, a, f64::exp, |_| Vec::new())
    }

    pub fn recip(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.unary(ops::Op::Recip, a, |x| 1.0 / x, |_| Vec::new())
    }

    pub fn abs(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.unary(ops::Op::Abs, a, f64::abs, |_| Vec::new())
    }

    pub fn sigmoid(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.unary(ops::Op::Sigmoid, a, ops::sigmoid, |_| Vec::new())
    }

    pub fn silu(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        // aux holds sigmoid(x) so backward avoids recomputing exp.
        self.unary(ops::Op::Silu, a, |x| x * ops::sigmoid(x), |xs| {
            xs.iter().map(|&x| ops::sigmoid(x)).collect()
        })
    }

    /// (m,k) x (k,n) -> (m,n)
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        self.check_on_tape(b)?;
        let sa = &self.nodes[a.0].shape;
        let sb = &self.nodes[b.0].shape;
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(NumError::ShapeMismatch {
                op: "matmul",
                lhs: sa.clone(),
                rhs: sb.clone(),
            });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        ops::mm_nn(&self.nodes[a.0].data, &self.nodes[b.0].data, &mut out, m, k, n);
        let rg = self.any_grad(&[a, b]);
        Ok(self.push_node(ops::Op::Matmul, vec![a, b], vec![m, n], out, Vec::new(), rg))
    }

    /// Batched contraction over one shared index:
    /// `w` (p,c) shared across the batch, `x` (n, c*m) viewed as (n,c,m),
    /// result (n, p*m).
    pub fn bmm_shared(&mut self, w: TensorId, x: TensorId, m: usize) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(w)?;
        self.check_on_tape(x)?;
        let sw = &self.nodes[w.0].shape;
        let sx = &self.nodes[x.0].shape;
        if sw.len() != 2 || sx.len() != 2 || sx[1] != sw[1] * m {
            return Err(NumError::ShapeMismatch {
                op: "bmm_shared",
                lhs: sw.clone(),
                rhs: sx.clone(),
            });
        }
        let (p, c) = (sw[0], sw[1]);
        let n = sx[0];
        let mut out = vec![0.0; n * p * m];
        ops::bmm_shared_fwd(&self.nodes[w.0].data, &self.nodes[x.0].data, &mut out, n, p, c, m);
        let rg = self.any_grad(&[w, x]);
        Ok(self.push_node(ops::Op::BmmShared { m }, vec![w, x], vec![n, p * m], out, Vec::new(), rg))
    }

    pub fn sum_all(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let s: f64 = self.nodes[a.0].data.iter().sum();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::SumAll, vec![a], vec![1], vec![s], Vec::new(), rg))
    }

    pub fn mean_all(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let n = self.nodes[a.0].data.len().max(1);
        let s: f64 = self.nodes[a.0].data.iter().sum::<f64>() / n as f64;
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::MeanAll, vec![a], vec![1], vec![s], Vec::new(), rg))
    }

    /// (n,d) -> (n,): sum over the last axis.
    pub fn row_sum(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let sa = &self.nodes[a.0].shape;
        if sa.len() != 2 {
            return Err(NumError::BadShape { op: "row_sum", expected: "rank-2 tensor", got: sa.clone() });
        }
        let (n, d) = (sa[0], sa[1]);
        let data: Vec<f64> = self.nodes[a.0].data.chunks_exact(d).map(|r| r.iter().sum()).collect();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::RowSum { d }, vec![a], vec![n], data, Vec::new(), rg))
    }

    /// (n,d) -> (n,): mean over the last axis.
    pub fn row_mean(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        let d = {
            let sa = self.shape(a);
            if sa.len() != 2 {
                return Err(NumError::BadShape {
                    op: "row_mean",
                    expected: "rank-2 tensor",
                    got: sa.to_vec(),
                });
            }
            sa[1]
        };
        let s = self.row_sum(a)?;
        self.scale(s, 1.0 / d as f64)
    }

    /// Gathers rows of `a` (n,d) at `idx`, producing (len(idx), d).
    pub fn gather_rows(&mut self, a: TensorId, idx: Arc<Vec<usize>>) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let sa = &self.nodes[a.0].shape;
        if sa.len() != 2 {
            return Err(NumError::BadShape { op: "gather_rows", expected: "rank-2 tensor", got: sa.clone() });
        }
        let (n, d) = (sa[0], sa[1]);
        for &i in idx.iter() {
            if i >= n {
                return Err(NumError::IndexOutOfBounds { op: "gather_rows", index: i, rows: n });
            }
        }
        let mut out = vec![0.0; idx.len() * d];
        let src = &self.nodes[a.0].data;
        for (r, &i) in idx.iter().enumerate() {
            out[r * d..(r + 1) * d].copy_from_slice(&src[i * d..(i + 1) * d]);
        }
        let rg = self.nodes[a.0].requires_grad;
        let rows = idx.len();
        Ok(self.push_node(ops::Op::Gather { idx }, vec![a], vec![rows, d], out, Vec::new(), rg))
    }

    /// Scatter-adds rows of `a` (m,d) into a zeroed (out_rows,d) at `idx`.
    pub fn scatter_add_rows(
        &mut self,
        a: TensorId,
        idx: Arc<Vec<usize>>,
        out_rows: usize,
    ) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let sa = &self.nodes[a.0].shape;
        if sa.len() != 2 || sa[0] != idx.len() {
            return Err(NumError::BadShape {
                op: "scatter_add_rows",
                expected: "rank-2 tensor with one row per index",
                got: sa.clone(),
            });
        }
        let d = sa[1];
        for &i in idx.iter() {
            if i >= out_rows {
                return Err(NumError::IndexOutOfBounds { op: "scatter_add_rows", index: i, rows: out_rows });
            }
        }
        let mut out = vec![0.0; out_rows * d];
        let src = &self.nodes[a.0].data;
        for (r, &i) in idx.iter().enumerate() {
            let dst = &mut out[i * d..(i + 1) * d];
            for (o, &v) in dst.iter_mut().zip(&src[r * d..(r + 1) * d]) {
                *o += v;
            }
        }
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(
            ops::Op::ScatterAdd { idx, out_rows },
            vec![a],
            vec![out_rows, d],
            out,
            Vec::new(),
            rg,
        ))
    }

    /// L2 norm over the last axis: (n,d) -> (n,).
    pub fn l2_norm_rows(&mut self, a: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let sa = &self.nodes[a.0].shape;
        if sa.len() != 2 {
            return Err(NumError::BadShape { op: "l2_norm_rows", expected: "rank-2 tensor", got: sa.clone() });
        }
        let (n, d) = (sa[0], sa[1]);
        let data: Vec<f64> = self.nodes[a.0]
            .data
            .chunks_exact(d)
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::L2NormRows { d }, vec![a], vec![n], data, Vec::new(), rg))
    }

    /// Per-channel scaling: x (n, c*m) viewed (n,c,m), s (n,c) or (n,)
    /// with c inferred from s. Each m-slice of channel c in row r is
    /// multiplied by s[r,c].
    pub fn chan_mul(&mut self, x: TensorId, s: TensorId, m: usize) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(x)?;
        self.check_on_tape(s)?;
        let sx = &self.nodes[x.0].shape;
        let ss = &self.nodes[s.0].shape;
        let n = sx[0];
        let c = self.nodes[s.0].data.len() / n.max(1);
        if sx.len() != 2 || ss.is_empty() || ss[0] != n || c * m != sx[1] || n * c != self.nodes[s.0].data.len() {
            return Err(NumError::ShapeMismatch { op: "chan_mul", lhs: sx.clone(), rhs: ss.clone() });
        }
        let mut out = vec![0.0; n * c * m];
        let xd = &self.nodes[x.0].data;
        let sd = &self.nodes[s.0].data;
        for r in 0..n {
            for ch in 0..c {
                let sv = sd[r * c + ch];
                let base = r * c * m + ch * m;
                for j in 0..m {
                    out[base + j] = xd[base + j] * sv;
                }
            }
        }
        let rg = self.any_grad(&[x, s]);
        let shape = sx.clone();
        Ok(self.push_node(ops::Op::ChanMul { m }, vec![x, s], shape, out, Vec::new(), rg))
    }

    /// Scales every row of x (n,d) elementwise by s (n,) broadcast across columns.
    pub fn row_mul(&mut self, x: TensorId, s: TensorId) -> Result<TensorId, NumError> {
        let d = {
            let sx = self.shape(x);
            if sx.len() != 2 {
                return Err(NumError::BadShape { op: "row_mul", expected: "rank-2 tensor", got: sx.to_vec() });
            }
            sx[1]
        };
        self.chan_mul(x, s, d)
    }

    /// Scales column c of x (n,d) by w[c]; w is (d,).
    pub fn col_mul(&mut self, x: TensorId, w: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(x)?;
        self.check_on_tape(w)?;
        let sx = &self.nodes[x.0].shape;
        let sw = &self.nodes[w.0].shape;
        if sx.len() != 2 || self.nodes[w.0].data.len() != sx[1] {
            return Err(NumError::ShapeMismatch { op: "col_mul", lhs: sx.clone(), rhs: sw.clone() });
        }
        let (n, d) = (sx[0], sx[1]);
        let xd = &self.nodes[x.0].data;
        let wd = &self.nodes[w.0].data;
        let mut out = vec![0.0; n * d];
        for r in 0..n {
            for c in 0..d {
                out[r * d + c] = xd[r * d + c] * wd[c];
            }
        }
        let rg = self.any_grad(&[x, w]);
        let shape = sx.clone();
        Ok(self.push_node(ops::Op::ColMul, vec![x, w], shape, out, Vec::new(), rg))
    }

    /// Concatenates rank-2 tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[TensorId]) -> Result<TensorId, NumError> {
        self.check_live()?;
        if parts.is_empty() {
            return Err(NumError::Invalid { op: "concat_cols", msg: "no inputs".into() });
        }
        for &p in parts {
            self.check_on_tape(p)?;
        }
        let n = self.nodes[parts[0].0].shape[0];
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let sp = &self.nodes[p.0].shape;
            if sp.len() != 2 || sp[0] != n {
                return Err(NumError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: self.nodes[parts[0].0].shape.clone(),
                    rhs: sp.clone(),
                });
            }
            widths.push(sp[1]);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0; n * total];
        let mut off = 0;
        for (&p, &w) in parts.iter().zip(&widths) {
            let src = &self.nodes[p.0].data;
            for r in 0..n {
                out[r * total + off..r * total + off + w].copy_from_slice(&src[r * w..(r + 1) * w]);
            }
            off += w;
        }
        let rg = self.any_grad(parts);
        Ok(self.push_node(
            ops::Op::ConcatCols { widths },
            parts.to_vec(),
            vec![n, total],
            out,
            Vec::new(),
            rg,
        ))
    }

    /// Column slice [from, to) of a rank-2 tensor.
    pub fn slice_cols(&mut self, a: TensorId, from: usize, to: usize) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        let sa = &self.nodes[a.0].shape;
        if sa.len() != 2 || to > sa[1] || from > to {
            return Err(NumError::Invalid {
                op: "slice_cols",
                msg: format!("range {from}..{to} invalid for shape {sa:?}"),
            });
        }
        let (n, d) = (sa[0], sa[1]);
        let w = to - from;
        let mut out = vec![0.0; n * w];
        let src = &self.nodes[a.0].data;
        for r in 0..n {
            out[r * w..(r + 1) * w].copy_from_slice(&src[r * d + from..r * d + to]);
        }
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(
            ops::Op::SliceCols { from, to, full: d },
            vec![a],
            vec![n, w],
            out,
            Vec::new(),
            rg,
        ))
    }

    /// Row-wise bilinear contraction with a constant sparse coupling:
    /// out[r,c] = sum_{a,b} K[a,b,c] x[r,a] y[r,b].
    pub fn coupled_contract(
        &mut self,
        k: Arc<Coupling>,
        x: TensorId,
        y: TensorId,
    ) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(x)?;
        self.check_on_tape(y)?;
        let sx = &self.nodes[x.0].shape;
        let sy = &self.nodes[y.0].shape;
        if sx.len() != 2 || sy.len() != 2 || sx[0] != sy[0] || sx[1] != k.dims.0 || sy[1] != k.dims.1 {
            return Err(NumError::ShapeMismatch {
                op: "coupled_contract",
                lhs: sx.clone(),
                rhs: sy.clone(),
            });
        }
        let n = sx[0];
        let d3 = k.dims.2;
        let mut out = vec![0.0; n * d3];
        ops::coupled_contract_fwd(&k, &self.nodes[x.0].data, &self.nodes[y.0].data, &mut out, n);
        let rg = self.any_grad(&[x, y]);
        Ok(self.push_node(
            ops::Op::CoupledContract { k },
            vec![x, y],
            vec![n, d3],
            out,
            Vec::new(),
            rg,
        ))
    }

    /// Depthwise block-bilinear contraction (the tensor-product kernel of
    /// the equivariant convolution). See [`BlockContractSpec`].
    pub fn block_contract(
        &mut self,
        spec: Arc<BlockContractSpec>,
        x: TensorId,
        y: TensorId,
        w: TensorId,
    ) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(x)?;
        self.check_on_tape(y)?;
        self.check_on_tape(w)?;
        let sx = &self.nodes[x.0].shape;
        let sy = &self.nodes[y.0].shape;
        let sw = &self.nodes[w.0].shape;
        let n = sx[0];
        if sx.len() != 2 || sx[1] != spec.x_width() {
            return Err(NumError::BadShape { op: "block_contract", expected: "x rows matching spec", got: sx.clone() });
        }
        if sy.len() != 2 || sy[0] != n || sy[1] != spec.y_width() {
            return Err(NumError::ShapeMismatch { op: "block_contract", lhs: sx.clone(), rhs: sy.clone() });
        }
        if sw.len() != 2 || sw[0] != n || sw[1] != spec.w_width() {
            return Err(NumError::ShapeMismatch { op: "block_contract", lhs: sx.clone(), rhs: sw.clone() });
        }
        let mut out = vec![0.0; n * spec.out_width()];
        ops::block_contract_fwd(
            &spec,
            &self.nodes[x.0].data,
            &self.nodes[y.0].data,
            &self.nodes[w.0].data,
            &mut out,
            n,
        );
        let rg = self.any_grad(&[x, y, w]);
        let ow = spec.out_width();
        Ok(self.push_node(
            ops::Op::BlockContract { spec },
            vec![x, y, w],
            vec![n, ow],
            out,
            Vec::new(),
            rg,
        ))
    }

    /// Reinterprets the value under a new shape with the same element count.
    pub fn reshape(&mut self, a: TensorId, shape: Vec<usize>) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(a)?;
        if shape.iter().product::<usize>() != self.nodes[a.0].data.len() {
            return Err(NumError::ShapeMismatch {
                op: "reshape",
                lhs: self.nodes[a.0].shape.clone(),
                rhs: shape,
            });
        }
        let data = self.nodes[a.0].data.clone();
        let rg = self.nodes[a.0].requires_grad;
        Ok(self.push_node(ops::Op::Reshape, vec![a], shape, data, Vec::new(), rg))
    }

    /// Gaussian radial basis with smooth cosine cutoff envelope:
    /// d (n,) -> (n, B).
    pub fn radial_basis(&mut self, spec: Arc<RadialBasisSpec>, d: TensorId) -> Result<TensorId, NumError> {
        self.check_live()?;
        self.check_on_tape(d)?;
        let sd = &self.nodes[d.0].shape;
        if sd.len() != 1 {
            return Err(NumError::BadShape { op: "radial_basis", expected: "rank-1 distances", got: sd.clone() });
        }
        for &v in &self.nodes[d.0].data {
            if !(0.0..=spec.cutoff).contains(&v) {
                return Err(NumError::Invalid {
                    op: "radial_basis",
                    msg: format!("distance {v} outside [0, {}]", spec.cutoff),
                });
            }
        }
        let n = sd[0];
        let b = spec.centers.len();
        let mut out = vec![0.0; n * b];
        ops::radial_basis_fwd(&spec, &self.nodes[d.0].data, &mut out);
        let rg = self.nodes[d.0].requires_grad;
        Ok(self.push_node(
            ops::Op::RadialBasis { spec },
            vec![d],
            vec![n, b],
            out,
            Vec::new(),
            rg,
        ))
    }
}

mod gradcheck;
pub use gradcheck::grad_check;
