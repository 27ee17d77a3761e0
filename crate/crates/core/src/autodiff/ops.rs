//! Primitive catalogue: forward kernels and registered adjoints.

use std::sync::Arc;

use super::Tape;

pub(super) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Constant sparse 3-tensor K[a,b,c] used by bilinear contractions.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub dims: (usize, usize, usize),
    /// (a, b, c, value) with value != 0.
    pub nnz: Vec<(u8, u8, u8, f64)>,
}

impl Coupling {
    pub fn from_dense(dims: (usize, usize, usize), dense: &[f64]) -> Self {
        let (d1, d2, d3) = dims;
        assert_eq!(dense.len(), d1 * d2 * d3);
        let mut nnz = Vec::new();
        for a in 0..d1 {
            for b in 0..d2 {
                for c in 0..d3 {
                    let v = dense[(a * d2 + b) * d3 + c];
                    if v != 0.0 {
                        nnz.push((a as u8, b as u8, c as u8, v));
                    }
                }
            }
        }
        Coupling { dims, nnz }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let (d1, d2, d3) = self.dims;
        let mut out = vec![0.0; d1 * d2 * d3];
        for &(a, b, c, v) in &self.nnz {
            out[(a as usize * d2 + b as usize) * d3 + c as usize] = v;
        }
        out
    }
}

/// One (x-block, y-block) -> out-block path of a depthwise block contraction.
#[derive(Clone, Debug)]
pub struct ContractPath {
    /// Widths of the participating blocks.
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
    /// Offsets: x block base (per row, before channel indexing), y block
    /// base, out block base.
    pub x_base: usize,
    pub y_base: usize,
    pub out_base: usize,
    pub coupling: Coupling,
}

/// Depthwise bilinear contraction spec: x rows are `channels` interleaved
/// blocks (block-major, then channel-major within a block), y rows are
/// single-channel blocks, w rows hold one scalar per (channel, path).
/// out[r, out_base + c*m3 + g] += w[r, c*P + p] * K[a,b,g] * x[r, x_base + c*m1 + a] * y[r, y_base + b]
#[derive(Clone, Debug)]
pub struct BlockContractSpec {
    pub channels: usize,
    pub paths: Vec<ContractPath>,
    x_width: usize,
    y_width: usize,
    out_width: usize,
}

impl BlockContractSpec {
    pub fn new(channels: usize, paths: Vec<ContractPath>, x_width: usize, y_width: usize, out_width: usize) -> Self {
        for p in &paths {
            assert!(p.x_base + channels * p.m1 <= x_width);
            assert!(p.y_base + p.m2 <= y_width);
            assert!(p.out_base + channels * p.m3 <= out_width);
            assert_eq!(p.coupling.dims, (p.m1, p.m2, p.m3));
        }
        BlockContractSpec { channels, paths, x_width, y_width, out_width }
    }

    pub fn x_width(&self) -> usize {
        self.x_width
    }

    pub fn y_width(&self) -> usize {
        self.y_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn w_width(&self) -> usize {
        self.channels * self.paths.len()
    }
}

/// Gaussian basis with a smooth cosine cutoff envelope. Centers are evenly
/// spaced on [0, cutoff]; the Gaussian width equals the center spacing.
#[derive(Clone, Debug)]
pub struct RadialBasisSpec {
    pub centers: Vec<f64>,
    pub width: f64,
    pub cutoff: f64,
}

impl RadialBasisSpec {
    pub fn new(n_bases: usize, cutoff: f64) -> Self {
        assert!(n_bases >= 2 && cutoff > 0.0);
        let spacing = cutoff / (n_bases - 1) as f64;
        let centers = (0..n_bases).map(|i| i as f64 * spacing).collect();
        RadialBasisSpec { centers, width: spacing, cutoff }
    }

    #[inline]
    pub fn envelope(&self, d: f64) -> f64 {
        0.5 * (1.0 + (std::f64::consts::PI * d / self.cutoff).cos())
    }

    /// Evaluates the basis row for one distance (plain, off-tape path).
    pub fn eval_into(&self, d: f64, out: &mut [f64]) {
        let env = self.envelope(d);
        let inv2w2 = 1.0 / (2.0 * self.width * self.width);
        for (o, &c) in out.iter_mut().zip(&self.centers) {
            let t = d - c;
            *o = (-t * t * inv2w2).exp() * env;
        }
    }
}

#[derive(Clone)]
pub(super) enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar(#[allow(dead_code)] f64),
    Matmul,
    BmmShared { m: usize },
    SumAll,
    MeanAll,
    RowSum { d: usize },
    Gather { idx: Arc<Vec<usize>> },
    ScatterAdd { idx: Arc<Vec<usize>>, #[allow(dead_code)] out_rows: usize },
    Sqrt,
    Exp,
    Recip,
    Abs,
    Sigmoid,
    Silu,
    L2NormRows { d: usize },
    ChanMul { m: usize },
    ColMul,
    ConcatCols { widths: Vec<usize> },
    SliceCols { from: usize, to: usize, full: usize },
    Reshape,
    CoupledContract { k: Arc<Coupling> },
    BlockContract { spec: Arc<BlockContractSpec> },
    RadialBasis { spec: Arc<RadialBasisSpec> },
}

impl Op {
    pub(super) fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Matmul => "matmul",
            Op::BmmShared { .. } => "bmm_shared",
            Op::SumAll => "sum_all",
            Op::MeanAll => "mean_all",
            Op::RowSum { .. } => "row_sum",
            Op::Gather { .. } => "gather_rows",
            Op::ScatterAdd { .. } => "scatter_add_rows",
            Op::Sqrt => "sqrt",
            Op::Exp => "exp",
            Op::Recip => "recip",
            Op::Abs => "abs",
            Op::Sigmoid => "sigmoid",
            Op::Silu => "silu",
            Op::L2NormRows { .. } => "l2_norm_rows",
            Op::ChanMul { .. } => "chan_mul",
            Op::ColMul => "col_mul",
            Op::ConcatCols { .. } => "concat_cols",
            Op::SliceCols { .. } => "slice_cols",
            Op::Reshape => "reshape",
            Op::CoupledContract { .. } => "coupled_contract",
            Op::BlockContract { .. } => "block_contract",
            Op::RadialBasis { .. } => "radial_basis",
        }
    }
}

// ---------------------------------------------------------------------------
// Dense kernels
// ---------------------------------------------------------------------------

/// out (m,n) += a (m,k) * b (k,n); out must be zeroed by the caller.
pub(super) fn mm_nn(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// out (m,k) += g (m,n) * b^T (n,k)  i.e. out[i,kk] += sum_j g[i,j] b[kk,j]
fn mm_nt(g: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, k: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        let orow = &mut out[i * k..(i + 1) * k];
        for (kk, o) in orow.iter_mut().enumerate() {
            let brow = &b[kk * n..(kk + 1) * n];
            let mut acc = 0.0;
            for (gv, bv) in grow.iter().zip(brow) {
                acc += gv * bv;
            }
            *o += acc;
        }
    }
}

/// out (k,n) += a^T (m,k) * g (m,n)  i.e. out[kk,j] += sum_i a[i,kk] g[i,j]
fn mm_tn(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let grow = &g[i * n..(i + 1) * n];
        for (kk, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[kk * n..(kk + 1) * n];
            for (o, &gv) in orow.iter_mut().zip(grow) {
                *o += av * gv;
            }
        }
    }
}

/// w (p,c) shared, x (n,c,m) -> out (n,p,m)
pub(super) fn bmm_shared_fwd(w: &[f64], x: &[f64], out: &mut [f64], n: usize, p: usize, c: usize, m: usize) {
    for r in 0..n {
        let xr = &x[r * c * m..(r + 1) * c * m];
        let or = &mut out[r * p * m..(r + 1) * p * m];
        for pi in 0..p {
            let wrow = &w[pi * c..(pi + 1) * c];
            let ob = &mut or[pi * m..(pi + 1) * m];
            for (ci, &wv) in wrow.iter().enumerate() {
                if wv == 0.0 {
                    continue;
                }
                let xb = &xr[ci * m..(ci + 1) * m];
                for (o, &xv) in ob.iter_mut().zip(xb) {
                    *o += wv * xv;
                }
            }
        }
    }
}

pub(super) fn coupled_contract_fwd(k: &Coupling, x: &[f64], y: &[f64], out: &mut [f64], n: usize) {
    let (d1, d2, d3) = k.dims;
    for r in 0..n {
        let xr = &x[r * d1..(r + 1) * d1];
        let yr = &y[r * d2..(r + 1) * d2];
        let or = &mut out[r * d3..(r + 1) * d3];
        for &(a, b, c, v) in &k.nnz {
            or[c as usize] += v * xr[a as usize] * yr[b as usize];
        }
    }
}

pub(super) fn block_contract_fwd(
    spec: &BlockContractSpec,
    x: &[f64],
    y: &[f64],
    w: &[f64],
    out: &mut [f64],
    n: usize,
) {
    let ch = spec.channels;
    let np = spec.paths.len();
    let (xw, yw, ow) = (spec.x_width, spec.y_width, spec.out_width);
    for r in 0..n {
        let xr = &x[r * xw..(r + 1) * xw];
        let yr = &y[r * yw..(r + 1) * yw];
        let wr = &w[r * ch * np..(r + 1) * ch * np];
        let or = &mut out[r * ow..(r + 1) * ow];
        for (p, path) in spec.paths.iter().enumerate() {
            let yb = &yr[path.y_base..path.y_base + path.m2];
            for c in 0..ch {
                let wv = wr[c * np + p];
                if wv == 0.0 {
                    continue;
                }
                let xb = &xr[path.x_base + c * path.m1..path.x_base + (c + 1) * path.m1];
                let ob = &mut or[path.out_base + c * path.m3..path.out_base + (c + 1) * path.m3];
                for &(a, b, g, v) in &path.coupling.nnz {
                    ob[g as usize] += wv * v * xb[a as usize] * yb[b as usize];
                }
            }
        }
    }
}

pub(super) fn radial_basis_fwd(spec: &RadialBasisSpec, d: &[f64], out: &mut [f64]) {
    let b = spec.centers.len();
    for (r, &dv) in d.iter().enumerate() {
        spec.eval_into(dv, &mut out[r * b..(r + 1) * b]);
    }
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

fn accum(adjoints: &mut [Option<Vec<f64>>], idx: usize, len: usize) -> &mut Vec<f64> {
    adjoints[idx].get_or_insert_with(|| vec![0.0; len])
}

/// Propagates the adjoint of node `i` into its inputs.
pub(super) fn backward_node(tape: &Tape, i: usize, adj: &[f64], adjoints: &mut [Option<Vec<f64>>]) {
    let node = &tape.nodes[i];
    let ins = &node.inputs;
    let needs = |t: super::TensorId| tape.nodes[t.0].requires_grad;
    match &node.op {
        Op::Leaf => {}
        Op::Add => {
            for &t in ins {
                if needs(t) {
                    let a = accum(adjoints, t.0, adj.len());
                    for (o, &g) in a.iter_mut().zip(adj) {
                        *o += g;
                    }
                }
            }
        }
        Op::Sub => {
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, adj.len());
                for (o, &g) in a.iter_mut().zip(adj) {
                    *o += g;
                }
            }
            if needs(ins[1]) {
                let a = accum(adjoints, ins[1].0, adj.len());
                for (o, &g) in a.iter_mut().zip(adj) {
                    *o -= g;
                }
            }
        }
        Op::Mul => {
            let (xa, xb) = (&tape.nodes[ins[0].0].data, &tape.nodes[ins[1].0].data);
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, adj.len());
                for ((o, &g), &bv) in a.iter_mut().zip(adj).zip(xb) {
                    *o += g * bv;
                }
            }
            if needs(ins[1]) {
                let a = accum(adjoints, ins[1].0, adj.len());
                for ((o, &g), &av) in a.iter_mut().zip(adj).zip(xa) {
                    *o += g * av;
                }
            }
        }
        Op::Scale(c) => {
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, adj.len());
                for (o, &g) in a.iter_mut().zip(adj) {
                    *o += g * c;
                }
            }
        }
        Op::AddScalar(_) => {
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, adj.len());
                for (o, &g) in a.iter_mut().zip(adj) {
                    *o += g;
                }
            }
        }
        Op::Matmul => {
            let sa = &tape.nodes[ins[0].0].shape;
            let sb = &tape.nodes[ins[1].0].shape;
            let (m, k, n) = (sa[0], sa[1], sb[1]);
            if needs(ins[0]) {
                let b = tape.nodes[ins[1].0].data.clone();
                let a = accum(adjoints, ins[0].0, m * k);
                mm_nt(adj, &b, a, m, n, k);
            }
            if needs(ins[1]) {
                let av = tape.nodes[ins[0].0].data.clone();
                let b = accum(adjoints, ins[1].0, k * n);
                mm_tn(&av, adj, b, m, k, n);
            }
        }
        Op::BmmShared { m } => {
            let sw = &tape.nodes[ins[0].0].shape;
            let (p, c) = (sw[0], sw[1]);
            let n = tape.nodes[ins[1].0].shape[0];
            let m = *m;
            if needs(ins[0]) {
                let x = &tape.nodes[ins[1].0].data;
                let dw = accum(adjoints, ins[0].0, p * c);
                // dW[pi,ci] += sum_r sum_j g[r,pi,j] x[r,ci,j]
                for r in 0..n {
                    let gr = &adj[r * p * m..(r + 1) * p * m];
                    let xr = &x[r * c * m..(r + 1) * c * m];
                    for pi in 0..p {
                        let gb = &gr[pi * m..(pi + 1) * m];
                        for ci in 0..c {
                            let xb = &xr[ci * m..(ci + 1) * m];
                            let mut acc = 0.0;
                            for (gv, xv) in gb.iter().zip(xb) {
                                acc += gv * xv;
                            }
                            dw[pi * c + ci] += acc;
                        }
                    }
                }
            }
            if needs(ins[1]) {
                let w = &tape.nodes[ins[0].0].data;
                let dx = accum(adjoints, ins[1].0, n * c * m);
                // dx[r,ci,j] += sum_pi w[pi,ci] g[r,pi,j]
                for r in 0..n {
                    let gr = &adj[r * p * m..(r + 1) * p * m];
                    let dxr = &mut dx[r * c * m..(r + 1) * c * m];
                    for pi in 0..p {
                        let gb = &gr[pi * m..(pi + 1) * m];
                        let wrow = &w[pi * c..(pi + 1) * c];
                        for (ci, &wv) in wrow.iter().enumerate() {
                            if wv == 0.0 {
                                continue;
                            }
                            let dxb = &mut dxr[ci * m..(ci + 1) * m];
                            for (o, &gv) in dxb.iter_mut().zip(gb) {
                                *o += wv * gv;
                            }
                        }
                    }
                }
            }
        }
        Op::SumAll => {
            if needs(ins[0]) {
                let len = tape.nodes[ins[0].0].data.len();
                let a = accum(adjoints, ins[0].0, len);
                let g = adj[0];
                for o in a.iter_mut() {
                    *o += g;
                }
            }
        }
        Op::MeanAll => {
            if needs(ins[0]) {
                let len = tape.nodes[ins[0].0].data.len();
                let a = accum(adjoints, ins[0].0, len);
                let g = adj[0] / len as f64;
                for o in a.iter_mut() {
                    *o += g;
                }
            }
        }
        Op::RowSum { d } => {
            if needs(ins[0]) {
                let len = tape.nodes[ins[0].0].data.len();
                let a = accum(adjoints, ins[0].0, len);
                for (r, &g) in adj.iter().enumerate() {
                    for o in &mut a[r * d..(r + 1) * d] {
                        *o += g;
                    }
                }
            }
        }
        Op::Gather { idx } => {
            if needs(ins[0]) {
                let len = tape.nodes[ins[0].0].data.len();
                let d = node.shape[1];
                let a = accum(adjoints, ins[0].0, len);
                for (r, &i) in idx.iter().enumerate() {
                    let dst = &mut a[i * d..(i + 1) * d];
                    for (o, &g) in dst.iter_mut().zip(&adj[r * d..(r + 1) * d]) {
                        *o += g;
                    }
                }
            }
        }
        Op::ScatterAdd { idx, .. } => {
            if needs(ins[0]) {
                let len = tape.nodes[ins[0].0].data.len();
                let d = node.shape[1];
                let a = accum(adjoints, ins[0].0, len);
                for (r, &i) in idx.iter().enumerate() {
                    let dst = &mut a[r * d..(r + 1) * d];
                    for (o, &g) in dst.iter_mut().zip(&adj[i * d..(i + 1) * d]) {
                        *o += g;
                    }
                }
            }
        }
        Op::Sqrt => {
            if needs(ins[0]) {
                let y = &node.data;
                let a = accum(adjoints, ins[0].0, y.len());
                for ((o, &g), &yv) in a.iter_mut().zip(adj).zip(y) {
                    // Skip zero upstream gradients so y = 0 (infinite slope)
                    // does not turn an unused branch into NaN.
                    if g != 0.0 {
                        *o += g * 0.5 / yv;
                    }
                }
            }
        }
        Op::Exp => {
            if needs(ins[0]) {
                let y = &node.data;
                let a = accum(adjoints, ins[0].0, y.len());
                for ((o, &g), &yv) in a.iter_mut().zip(adj).zip(y) {
                    *o += g * yv;
                }
            }
        }
        Op::Recip => {
            if needs(ins[0]) {
                let y = &node.data;
                let a = accum(adjoints, ins[0].0, y.len());
                for ((o, &g), &yv) in a.iter_mut().zip(adj).zip(y) {
                    *o -= g * yv * yv;
                }
            }
        }
        Op::Abs => {
            if needs(ins[0]) {
                let x = &tape.nodes[ins[0].0].data;
                let a = accum(adjoints, ins[0].0, x.len());
                for ((o, &g), &xv) in a.iter_mut().zip(adj).zip(x) {
                    *o += g * if xv > 0.0 { 1.0 } else if xv < 0.0 { -1.0 } else { 0.0 };
                }
            }
        }
        Op::Sigmoid => {
            if needs(ins[0]) {
                let y = &node.data;
                let a = accum(adjoints, ins[0].0, y.len());
                for ((o, &g), &yv) in a.iter_mut().zip(adj).zip(y) {
                    *o += g * yv * (1.0 - yv);
                }
            }
        }
        Op::Silu => {
            if needs(ins[0]) {
                let x = &tape.nodes[ins[0].0].data;
                let sig = &node.aux;
                let a = accum(adjoints, ins[0].0, x.len());
                for (((o, &g), &xv), &s) in a.iter_mut().zip(adj).zip(x).zip(sig) {
                    *o += g * (s * (1.0 + xv * (1.0 - s)));
                }
            }
        }
        Op::L2NormRows { d } => {
            if needs(ins[0]) {
                let x = &tape.nodes[ins[0].0].data;
                let y = &node.data;
                let a = accum(adjoints, ins[0].0, x.len());
                for (r, (&g, &norm)) in adj.iter().zip(y).enumerate() {
                    if norm == 0.0 {
                        continue;
                    }
                    let s = g / norm;
                    let xr = &x[r * d..(r + 1) * d];
                    for (o, &xv) in a[r * d..(r + 1) * d].iter_mut().zip(xr) {
                        *o += s * xv;
                    }
                }
            }
        }
        Op::ChanMul { m } => {
            let n = node.shape[0];
            let cm = node.shape[1];
            let c = cm / m;
            let x = &tape.nodes[ins[0].0].data;
            let s = &tape.nodes[ins[1].0].data;
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, x.len());
                for r in 0..n {
                    for ch in 0..c {
                        let sv = s[r * c + ch];
                        let base = r * cm + ch * m;
                        for j in 0..*m {
                            a[base + j] += adj[base + j] * sv;
                        }
                    }
                }
            }
            if needs(ins[1]) {
                let a = accum(adjoints, ins[1].0, s.len());
                for r in 0..n {
                    for ch in 0..c {
                        let base = r * cm + ch * m;
                        let mut acc = 0.0;
                        for j in 0..*m {
                            acc += adj[base + j] * x[base + j];
                        }
                        a[r * c + ch] += acc;
                    }
                }
            }
        }
        Op::ColMul => {
            let n = node.shape[0];
            let d = node.shape[1];
            let x = &tape.nodes[ins[0].0].data;
            let w = &tape.nodes[ins[1].0].data;
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, x.len());
                for r in 0..n {
                    for c in 0..d {
                        a[r * d + c] += adj[r * d + c] * w[c];
                    }
                }
            }
            if needs(ins[1]) {
                let a = accum(adjoints, ins[1].0, d);
                for r in 0..n {
                    for c in 0..d {
                        a[c] += adj[r * d + c] * x[r * d + c];
                    }
                }
            }
        }
        Op::ConcatCols { widths } => {
            let n = node.shape[0];
            let total = node.shape[1];
            let mut off = 0;
            for (&t, &w) in ins.iter().zip(widths) {
                if needs(t) {
                    let len = tape.nodes[t.0].data.len();
                    let a = accum(adjoints, t.0, len);
                    for r in 0..n {
                        for (o, &g) in a[r * w..(r + 1) * w]
                            .iter_mut()
                            .zip(&adj[r * total + off..r * total + off + w])
                        {
                            *o += g;
                        }
                    }
                }
                off += w;
            }
        }
        Op::SliceCols { from, to, full } => {
            if needs(ins[0]) {
                let n = node.shape[0];
                let w = to - from;
                let len = tape.nodes[ins[0].0].data.len();
                let a = accum(adjoints, ins[0].0, len);
                for r in 0..n {
                    for (o, &g) in a[r * full + from..r * full + to]
                        .iter_mut()
                        .zip(&adj[r * w..(r + 1) * w])
                    {
                        *o += g;
                    }
                }
            }
        }
        Op::Reshape => {
            if needs(ins[0]) {
                let a = accum(adjoints, ins[0].0, adj.len());
                for (o, &g) in a.iter_mut().zip(adj) {
                    *o += g;
                }
            }
        }
        Op::CoupledContract { k } => {
            let n = node.shape[0];
            let (d1, d2, _) = k.dims;
            let x = &tape.nodes[ins[0].0].data;
            let y = &tape.nodes[ins[1].0].data;
            let (nx, ny) = (needs(ins[0]), needs(ins[1]));
            if nx {
                let a = accum(adjoints, ins[0].0, x.len());
                for r in 0..n {
                    let yr = &y[r * d2..(r + 1) * d2];
                    let gr = &adj[r * k.dims.2..(r + 1) * k.dims.2];
                    let ar = &mut a[r * d1..(r + 1) * d1];
                    for &(ai, bi, ci, v) in &k.nnz {
                        ar[ai as usize] += v * yr[bi as usize] * gr[ci as usize];
                    }
                }
            }
            if ny {
                let a = accum(adjoints, ins[1].0, y.len());
                for r in 0..n {
                    let xr = &x[r * d1..(r + 1) * d1];
                    let gr = &adj[r * k.dims.2..(r + 1) * k.dims.2];
                    let ar = &mut a[r * d2..(r + 1) * d2];
                    for &(ai, bi, ci, v) in &k.nnz {
                        ar[bi as usize] += v * xr[ai as usize] * gr[ci as usize];
                    }
                }
            }
        }
        Op::BlockContract { spec } => {
            block_contract_bwd(tape, spec, ins, adj, adjoints, needs(ins[0]), needs(ins[1]), needs(ins[2]));
        }
        Op::RadialBasis { spec } => {
            if needs(ins[0]) {
                let d = &tape.nodes[ins[0].0].data;
                let b = spec.centers.len();
                let a = accum(adjoints, ins[0].0, d.len());
                let inv2w2 = 1.0 / (2.0 * spec.width * spec.width);
                let pi_over_rc = std::f64::consts::PI / spec.cutoff;
                for (r, &dv) in d.iter().enumerate() {
                    let env = spec.envelope(dv);
                    let denv = -0.5 * pi_over_rc * (pi_over_rc * dv).sin();
                    let mut acc = 0.0;
                    for (j, &c) in spec.centers.iter().enumerate() {
                        let t = dv - c;
                        let gbase = (-t * t * inv2w2).exp();
                        let dfeat = gbase * (denv - env * t / (spec.width * spec.width));
                        acc += adj[r * b + j] * dfeat;
                    }
                    a[r] += acc;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn block_contract_bwd(
    tape: &Tape,
    spec: &BlockContractSpec,
    ins: &[super::TensorId],
    adj: &[f64],
    adjoints: &mut [Option<Vec<f64>>],
    need_x: bool,
    need_y: bool,
    need_w: bool,
) {
    let x = tape.nodes[ins[0].0].data.clone();
    let y = tape.nodes[ins[1].0].data.clone();
    let w = tape.nodes[ins[2].0].data.clone();
    let n = tape.nodes[ins[0].0].shape[0];
    let ch = spec.channels;
    let np = spec.paths.len();
    let (xw, yw, ow) = (spec.x_width, spec.y_width, spec.out_width);

    let mut dx = if need_x { Some(vec![0.0; x.len()]) } else { None };
    let mut dy = if need_y { Some(vec![0.0; y.len()]) } else { None };
    let mut dw = if need_w { Some(vec![0.0; w.len()]) } else { None };

    for r in 0..n {
        let xr = &x[r * xw..(r + 1) * xw];
        let yr = &y[r * yw..(r + 1) * yw];
        let wr = &w[r * ch * np..(r + 1) * ch * np];
        let gr = &adj[r * ow..(r + 1) * ow];
        for (p, path) in spec.paths.iter().enumerate() {
            let yb = &yr[path.y_base..path.y_base + path.m2];
            for c in 0..ch {
                let wv = wr[c * np + p];
                let xb = &xr[path.x_base + c * path.m1..path.x_base + (c + 1) * path.m1];
                let gb = &gr[path.out_base + c * path.m3..path.out_base + (c + 1) * path.m3];
                let mut wacc = 0.0;
                for &(a, b, g, v) in &path.coupling.nnz {
                    let (ai, bi, gi) = (a as usize, b as usize, g as usize);
                    let gv = gb[gi];
                    if need_w {
                        wacc += v * xb[ai] * yb[bi] * gv;
                    }
                    if wv != 0.0 {
                        if let Some(dx) = dx.as_mut() {
                            dx[r * xw + path.x_base + c * path.m1 + ai] += wv * v * yb[bi] * gv;
                        }
                        if let Some(dy) = dy.as_mut() {
                            dy[r * yw + path.y_base + bi] += wv * v * xb[ai] * gv;
                        }
                    }
                }
                if let Some(dw) = dw.as_mut() {
                    dw[r * ch * np + c * np + p] += wacc;
                }
            }
        }
    }

    if let Some(dx) = dx {
        let a = accum(adjoints, ins[0].0, dx.len());
        for (o, v) in a.iter_mut().zip(dx) {
            *o += v;
        }
    }
    if let Some(dy) = dy {
        let a = accum(adjoints, ins[1].0, dy.len());
        for (o, v) in a.iter_mut().zip(dy) {
            *o += v;
        }
    }
    if let Some(dw) = dw {
        let a = accum(adjoints, ins[2].0, dw.len());
        for (o, v) in a.iter_mut().zip(dw) {
            *o += v;
        }
    }
}
