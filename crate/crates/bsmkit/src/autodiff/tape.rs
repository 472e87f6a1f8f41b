//! Reverse-mode tape over real tensors.
//!
//! Nodes are appended in execution order, so the vector itself is a
//! topological order and one reverse sweep computes all adjoints. Complex
//! kernels treat the real and imaginary parts as independent reals
//! (split-complex calculus); the loss is real-valued, so these gradients are
//! the correct descent directions and can be checked by finite differences.
//!
//! Shape mismatches are programming errors and panic; backward-state misuse
//! returns an error. After `backward`, only leaf gradients are retained.

use super::tensor::Tensor;
use crate::error::{BsmError, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    /// a + b with b broadcast over axis 0 of a.
    AddRowBias(Var, Var),
    Scale(Var, f64),
    /// Complex matmul [m,k,2]·[k,n,2] → [m,n,2].
    MatMulCC(Var, Var),
    /// Real matmul [m,k]·[k,n] → [m,n].
    MatMulRR(Var, Var),
    /// Batched adjoint apply: z[f] = a[f]^H·v[f] with a [F,M,E,2],
    /// v [F,M,Q,2] → [F,E,Q,2].
    BmmAdjoint(Var, Var),
    Tanh(Var),
    Square(Var),
    Log10(Var),
    Div(Var, Var),
    /// sqrt(re² + im² + ε²) over the trailing complex axis: [..,2] → [..].
    Magnitude(Var, f64),
    /// (x[i+1] − x[i])·scale along axis 0.
    DiffAxis0(Var, f64),
    /// Swap axes 0 and 1.
    Transpose2(Var),
    Reshape(Var),
    /// Select indices along `axis`.
    GatherAxis(Var, usize, Vec<usize>),
    /// Contiguous [start, start+len) along axis 0.
    SliceAxis0(Var, usize, usize),
    SumAll(Var),
    MeanAll(Var),
}

struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    requires_grad: bool,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last backward target w.r.t. `v`. Present only on
    /// requires-grad leaves after `backward`.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    fn push(&mut self, value: Tensor, requires_grad: bool, op: Op) -> Var {
        debug_assert!(
            value.all_finite(),
            "non-finite value produced by {op:?}"
        );
        self.nodes.push(Node { value, grad: None, requires_grad, op });
        Var(self.nodes.len() - 1)
    }

    fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "add: shape mismatch");
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, rg, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "sub: shape mismatch");
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x - y).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, rg, Op::Sub(a, b))
    }

    pub fn add_row_bias(&mut self, a: Var, bias: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(bias));
        assert!(!ta.shape().is_empty(), "add_row_bias: scalar input");
        assert_eq!(&ta.shape()[1..], tb.shape(), "add_row_bias: shape mismatch");
        let row = tb.len();
        let data = ta
            .data()
            .chunks_exact(row)
            .flat_map(|chunk| chunk.iter().zip(tb.data()).map(|(x, y)| x + y))
            .collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a) || self.requires(bias);
        self.push(value, rg, Op::AddRowBias(a, bias))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * s).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a);
        self.push(value, rg, Op::Scale(a, s))
    }

    pub fn matmul_cc(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        assert!(
            sa.len() == 3 && sa[2] == 2 && sb.len() == 3 && sb[2] == 2 && sa[1] == sb[0],
            "matmul_cc: bad shapes {sa:?} × {sb:?}"
        );
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let value = cgemm(ta.data(), tb.data(), m, k, n, GemmMode::Plain);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, rg, Op::MatMulCC(a, b))
    }

    pub fn matmul_rr(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        assert!(
            sa.len() == 2 && sb.len() == 2 && sa[1] == sb[0],
            "matmul_rr: bad shapes {sa:?} × {sb:?}"
        );
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = Tensor::zeros(&[m, n]);
        rgemm(ta.data(), tb.data(), m, k, n, false, false, out.data_mut());
        let rg = self.requires(a) || self.requires(b);
        self.push(out, rg, Op::MatMulRR(a, b))
    }

    pub fn bmm_adjoint(&mut self, a: Var, v: Var) -> Var {
        let (ta, tv) = (self.value(a), self.value(v));
        let (sa, sv) = (ta.shape(), tv.shape());
        assert!(
            sa.len() == 4 && sv.len() == 4 && sa[3] == 2 && sv[3] == 2,
            "bmm_adjoint: need [F,M,E,2] and [F,M,Q,2]"
        );
        assert!(sa[0] == sv[0] && sa[1] == sv[1], "bmm_adjoint: F/M mismatch");
        let (f, m, e, q) = (sa[0], sa[1], sa[2], sv[2]);
        let mut out = Tensor::zeros(&[f, e, q, 2]);
        {
            let (ad, vd, od) = (ta.data(), tv.data(), out.data_mut());
            od.par_chunks_mut(e * q * 2).enumerate().for_each(|(fi, chunk)| {
                let abase = fi * m * e * 2;
                let vbase = fi * m * q * 2;
                for ei in 0..e {
                    for qi in 0..q {
                        let mut re = 0.0;
                        let mut im = 0.0;
                        for mi in 0..m {
                            let ar = ad[abase + (mi * e + ei) * 2];
                            let ai = ad[abase + (mi * e + ei) * 2 + 1];
                            let vr = vd[vbase + (mi * q + qi) * 2];
                            let vi = vd[vbase + (mi * q + qi) * 2 + 1];
                            // conj(a)·v
                            re += ar * vr + ai * vi;
                            im += ar * vi - ai * vr;
                        }
                        chunk[(ei * q + qi) * 2] = re;
                        chunk[(ei * q + qi) * 2 + 1] = im;
                    }
                }
            });
        }
        let rg = self.requires(a) || self.requires(v);
        self.push(out, rg, Op::BmmAdjoint(a, v))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x.tanh()).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a);
        self.push(value, rg, Op::Tanh(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * x).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a);
        self.push(value, rg, Op::Square(a))
    }

    pub fn log10(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x.log10()).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a);
        self.push(value, rg, Op::Log10(a))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "div: shape mismatch");
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x / y).collect();
        let value = Tensor::from_vec(ta.shape(), data);
        let rg = self.requires(a) || self.requires(b);
        self.push(value, rg, Op::Div(a, b))
    }

    /// Smoothed complex magnitude over the trailing (re, im) axis.
    pub fn magnitude(&mut self, a: Var, eps: f64) -> Var {
        let ta = self.value(a);
        assert_eq!(ta.shape().last(), Some(&2), "magnitude: input not complex");
        let out_shape: Vec<usize> = ta.shape()[..ta.shape().len() - 1].to_vec();
        let data = ta
            .data()
            .chunks_exact(2)
            .map(|p| (p[0] * p[0] + p[1] * p[1] + eps * eps).sqrt())
            .collect();
        let value = Tensor::from_vec(&out_shape, data);
        let rg = self.requires(a);
        self.push(value, rg, Op::Magnitude(a, eps))
    }

    /// Forward first difference along axis 0, scaled: (x[i+1] − x[i])·scale.
    pub fn diff_axis0(&mut self, a: Var, scale: f64) -> Var {
        let ta = self.value(a);
        let shape = ta.shape();
        assert!(shape.len() >= 1 && shape[0] >= 2, "diff_axis0: axis too short");
        let row: usize = shape[1..].iter().product();
        let d0 = shape[0];
        let mut out_shape = shape.to_vec();
        out_shape[0] = d0 - 1;
        let src = ta.data();
        let mut data = Vec::with_capacity((d0 - 1) * row);
        for i in 0..d0 - 1 {
            for j in 0..row {
                data.push((src[(i + 1) * row + j] - src[i * row + j]) * scale);
            }
        }
        let value = Tensor::from_vec(&out_shape, data);
        let rg = self.requires(a);
        self.push(value, rg, Op::DiffAxis0(a, scale))
    }

    pub fn transpose2(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let shape = ta.shape();
        assert!(shape.len() >= 2, "transpose2: need >= 2 axes");
        let value = transpose01(ta);
        let rg = self.requires(a);
        self.push(value, rg, Op::Transpose2(a))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let ta = self.value(a);
        assert_eq!(
            shape.iter().product::<usize>(),
            ta.len(),
            "reshape: element count mismatch"
        );
        let value = Tensor::from_vec(shape, ta.data().to_vec());
        let rg = self.requires(a);
        self.push(value, rg, Op::Reshape(a))
    }

    pub fn gather_axis(&mut self, a: Var, axis: usize, indices: &[usize]) -> Var {
        let ta = self.value(a);
        let shape = ta.shape();
        assert!(axis < shape.len(), "gather_axis: axis out of range");
        assert!(indices.iter().all(|&i| i < shape[axis]), "gather_axis: index OOB");
        let value = gather(ta, axis, indices);
        let rg = self.requires(a);
        self.push(value, rg, Op::GatherAxis(a, axis, indices.to_vec()))
    }

    pub fn slice_axis0(&mut self, a: Var, start: usize, len: usize) -> Var {
        let ta = self.value(a);
        let shape = ta.shape();
        assert!(!shape.is_empty() && start + len <= shape[0], "slice_axis0: OOB");
        let row: usize = shape[1..].iter().product();
        let mut out_shape = shape.to_vec();
        out_shape[0] = len;
        let data = ta.data()[start * row..(start + len) * row].to_vec();
        let value = Tensor::from_vec(&out_shape, data);
        let rg = self.requires(a);
        self.push(value, rg, Op::SliceAxis0(a, start, len))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let s: f64 = self.value(a).data().iter().sum();
        let rg = self.requires(a);
        self.push(Tensor::scalar(s), rg, Op::SumAll(a))
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let ta = self.value(a);
        let s: f64 = ta.data().iter().sum();
        let n = ta.len() as f64;
        let rg = self.requires(a);
        self.push(Tensor::scalar(s / n), rg, Op::MeanAll(a))
    }

    /// Reverse sweep from a scalar target. One backward per tape.
    pub fn backward(&mut self, target: Var) -> Result<()> {
        if self.backward_done {
            return Err(BsmError::invalid(
                "second backward on the same tape; rebuild the forward pass",
            ));
        }
        if self.nodes[target.0].value.len() != 1 {
            return Err(BsmError::invalid("backward target must be scalar"));
        }
        self.backward_done = true;
        self.nodes[target.0].grad = Some(Tensor::scalar(1.0));

        for i in (0..=target.0).rev() {
            if !self.nodes[i].requires_grad {
                self.nodes[i].grad = None;
                continue;
            }
            let is_leaf = matches!(self.nodes[i].op, Op::Leaf);
            if is_leaf {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else { continue };
            let contributions = self.adjoints(i, &g);
            for (parent, contrib) in contributions {
                let slot = &mut self.nodes[parent.0];
                match &mut slot.grad {
                    Some(acc) => {
                        for (dst, src) in acc.data_mut().iter_mut().zip(contrib.data()) {
                            *dst += src;
                        }
                    }
                    None => slot.grad = Some(contrib),
                }
            }
        }
        Ok(())
    }

    /// Parent adjoint contributions of node `i` given its output gradient.
    fn adjoints(&self, i: usize, g: &Tensor) -> Vec<(Var, Tensor)> {
        let mut out = Vec::with_capacity(2);
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if self.requires(*a) {
                    out.push((*a, g.clone()));
                }
                if self.requires(*b) {
                    out.push((*b, g.clone()));
                }
            }
            Op::Sub(a, b) => {
                if self.requires(*a) {
                    out.push((*a, g.clone()));
                }
                if self.requires(*b) {
                    let data = g.data().iter().map(|x| -x).collect();
                    out.push((*b, Tensor::from_vec(g.shape(), data)));
                }
            }
            Op::AddRowBias(a, bias) => {
                if self.requires(*a) {
                    out.push((*a, g.clone()));
                }
                if self.requires(*bias) {
                    let row = self.nodes[bias.0].value.len();
                    let mut acc = vec![0.0; row];
                    for chunk in g.data().chunks_exact(row) {
                        for (dst, src) in acc.iter_mut().zip(chunk) {
                            *dst += src;
                        }
                    }
                    out.push((
                        *bias,
                        Tensor::from_vec(self.nodes[bias.0].value.shape(), acc),
                    ));
                }
            }
            Op::Scale(a, s) => {
                if self.requires(*a) {
                    let data = g.data().iter().map(|x| x * s).collect();
                    out.push((*a, Tensor::from_vec(g.shape(), data)));
                }
            }
            Op::MatMulCC(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let (m, k) = (ta.shape()[0], ta.shape()[1]);
                let n = tb.shape()[1];
                if self.requires(*a) {
                    // Ā = Ḡ·B^H
                    let ga = cgemm(g.data(), tb.data(), m, n, k, GemmMode::AdjointB);
                    out.push((*a, ga));
                }
                if self.requires(*b) {
                    // B̄ = A^H·Ḡ
                    let gb = cgemm(ta.data(), g.data(), k, m, n, GemmMode::AdjointA);
                    out.push((*b, gb));
                }
            }
            Op::MatMulRR(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                let (m, k) = (ta.shape()[0], ta.shape()[1]);
                let n = tb.shape()[1];
                if self.requires(*a) {
                    let mut ga = Tensor::zeros(&[m, k]);
                    rgemm(g.data(), tb.data(), m, n, k, false, true, ga.data_mut());
                    out.push((*a, ga));
                }
                if self.requires(*b) {
                    let mut gb = Tensor::zeros(&[k, n]);
                    rgemm(ta.data(), g.data(), k, m, n, true, false, gb.data_mut());
                    out.push((*b, gb));
                }
            }
            Op::BmmAdjoint(a, v) => {
                let (ta, tv) = (&self.nodes[a.0].value, &self.nodes[v.0].value);
                let (m, e) = (ta.shape()[1], ta.shape()[2]);
                let q = tv.shape()[2];
                if self.requires(*a) {
                    let mut ga = Tensor::zeros(ta.shape());
                    {
                        let (gd, vd, od) = (g.data(), tv.data(), ga.data_mut());
                        od.par_chunks_mut(m * e * 2).enumerate().for_each(|(fi, chunk)| {
                            let gbase = fi * e * q * 2;
                            let vbase = fi * m * q * 2;
                            for mi in 0..m {
                                for ei in 0..e {
                                    let mut re = 0.0;
                                    let mut im = 0.0;
                                    for qi in 0..q {
                                        let gr = gd[gbase + (ei * q + qi) * 2];
                                        let gi = gd[gbase + (ei * q + qi) * 2 + 1];
                                        let vr = vd[vbase + (mi * q + qi) * 2];
                                        let vi = vd[vbase + (mi * q + qi) * 2 + 1];
                                        re += gr * vr + gi * vi;
                                        im += gr * vi - gi * vr;
                                    }
                                    chunk[(mi * e + ei) * 2] = re;
                                    chunk[(mi * e + ei) * 2 + 1] = im;
                                }
                            }
                        });
                    }
                    out.push((*a, ga));
                }
                if self.requires(*v) {
                    let mut gv = Tensor::zeros(tv.shape());
                    {
                        let (gd, ad, od) = (g.data(), ta.data(), gv.data_mut());
                        od.par_chunks_mut(m * q * 2).enumerate().for_each(|(fi, chunk)| {
                            let gbase = fi * e * q * 2;
                            let abase = fi * m * e * 2;
                            for mi in 0..m {
                                for qi in 0..q {
                                    let mut re = 0.0;
                                    let mut im = 0.0;
                                    for ei in 0..e {
                                        let gr = gd[gbase + (ei * q + qi) * 2];
                                        let gi = gd[gbase + (ei * q + qi) * 2 + 1];
                                        let ar = ad[abase + (mi * e + ei) * 2];
                                        let ai = ad[abase + (mi * e + ei) * 2 + 1];
                                        re += gr * ar - gi * ai;
                                        im += gr * ai + gi * ar;
                                    }
                                    chunk[(mi * q + qi) * 2] = re;
                                    chunk[(mi * q + qi) * 2 + 1] = im;
                                }
                            }
                        });
                    }
                    out.push((*v, gv));
                }
            }
            Op::Tanh(a) => {
                if self.requires(*a) {
                    let y = &self.nodes[i].value;
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(gi, yi)| gi * (1.0 - yi * yi))
                        .collect();
                    out.push((*a, Tensor::from_vec(g.shape(), data)));
                }
            }
            Op::Square(a) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    let data = g
                        .data()
                        .iter()
                        .zip(x.data())
                        .map(|(gi, xi)| gi * 2.0 * xi)
                        .collect();
                    out.push((*a, Tensor::from_vec(g.shape(), data)));
                }
            }
            Op::Log10(a) => {
                if self.requires(*a) {
                    let ln10 = std::f64::consts::LN_10;
                    let x = &self.nodes[a.0].value;
                    let data = g
                        .data()
                        .iter()
                        .zip(x.data())
                        .map(|(gi, xi)| gi / (xi * ln10))
                        .collect();
                    out.push((*a, Tensor::from_vec(g.shape(), data)));
                }
            }
            Op::Div(a, b) => {
                let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                if self.requires(*a) {
                    let data = g.data().iter().zip(tb.data()).map(|(gi, bi)| gi / bi).collect();
                    out.push((*a, Tensor::from_vec(g.shape(), data)));
                }
                if self.requires(*b) {
                    let data = g
                        .data()
                        .iter()
                        .zip(ta.data().iter().zip(tb.data()))
                        .map(|(gi, (ai, bi))| -gi * ai / (bi * bi))
                        .collect();
                    out.push((*b, Tensor::from_vec(g.shape(), data)));
                }
            }
            Op::Magnitude(a, _eps) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    let y = &self.nodes[i].value;
                    let mut data = Vec::with_capacity(x.len());
                    for (pair, (gi, yi)) in x
                        .data()
                        .chunks_exact(2)
                        .zip(g.data().iter().zip(y.data()))
                    {
                        if *yi > 0.0 {
                            data.push(gi * pair[0] / yi);
                            data.push(gi * pair[1] / yi);
                        } else {
                            data.push(0.0);
                            data.push(0.0);
                        }
                    }
                    out.push((*a, Tensor::from_vec(x.shape(), data)));
                }
            }
            Op::DiffAxis0(a, scale) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    let row: usize = x.shape()[1..].iter().product();
                    let mut acc = Tensor::zeros(x.shape());
                    let gd = g.data();
                    let ad = acc.data_mut();
                    let d0_out = g.shape()[0];
                    for ii in 0..d0_out {
                        for j in 0..row {
                            let gij = gd[ii * row + j] * scale;
                            ad[(ii + 1) * row + j] += gij;
                            ad[ii * row + j] -= gij;
                        }
                    }
                    out.push((*a, acc));
                }
            }
            Op::Transpose2(a) => {
                if self.requires(*a) {
                    out.push((*a, transpose01(g)));
                }
            }
            Op::Reshape(a) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    out.push((*a, Tensor::from_vec(x.shape(), g.data().to_vec())));
                }
            }
            Op::GatherAxis(a, axis, indices) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    out.push((*a, scatter_add(x.shape(), *axis, indices, g)));
                }
            }
            Op::SliceAxis0(a, start, _len) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    let row: usize = x.shape()[1..].iter().product();
                    let mut acc = Tensor::zeros(x.shape());
                    acc.data_mut()[start * row..start * row + g.len()]
                        .copy_from_slice(g.data());
                    out.push((*a, acc));
                }
            }
            Op::SumAll(a) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    let gv = g.item();
                    out.push((*a, Tensor::from_vec(x.shape(), vec![gv; x.len()])));
                }
            }
            Op::MeanAll(a) => {
                if self.requires(*a) {
                    let x = &self.nodes[a.0].value;
                    let gv = g.item() / x.len() as f64;
                    out.push((*a, Tensor::from_vec(x.shape(), vec![gv; x.len()])));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
enum GemmMode {
    /// C = A·B with A [m,k], B [k,n].
    Plain,
    /// C = A·B^H with A [m,k], B given as [n,k] (its adjoint is [k,n]).
    AdjointB,
    /// C = A^H·B with A given as [k,m] (its adjoint is [m,k]), B [k,n].
    AdjointA,
}

/// Complex matmul on interleaved (re, im) buffers. Parallel over output rows,
/// each row computed sequentially, so results are bit-deterministic.
/// `m`, `k`, `n` are the effective multiply dims (out [m,n], inner k); the
/// mode says how the adjointed operand is stored: AdjointB reads b from an
/// [n,k] buffer, AdjointA reads a from a [k,m] buffer.
fn cgemm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, mode: GemmMode) -> Tensor {
    let mut out = Tensor::zeros(&[m, n, 2]);
    let run = |row: usize, chunk: &mut [f64]| {
        for col in 0..n {
            let mut re = 0.0;
            let mut im = 0.0;
            for kk in 0..k {
                let (ar, ai, br, bi);
                match mode {
                    GemmMode::Plain => {
                        ar = a[(row * k + kk) * 2];
                        ai = a[(row * k + kk) * 2 + 1];
                        br = b[(kk * n + col) * 2];
                        bi = b[(kk * n + col) * 2 + 1];
                    }
                    GemmMode::AdjointB => {
                        ar = a[(row * k + kk) * 2];
                        ai = a[(row * k + kk) * 2 + 1];
                        // b stored [n,k]; adjoint entry (kk,col) = conj(b[col,kk])
                        br = b[(col * k + kk) * 2];
                        bi = -b[(col * k + kk) * 2 + 1];
                    }
                    GemmMode::AdjointA => {
                        // a stored [k,m]; adjoint entry (row,kk) = conj(a[kk,row])
                        ar = a[(kk * m + row) * 2];
                        ai = -a[(kk * m + row) * 2 + 1];
                        br = b[(kk * n + col) * 2];
                        bi = b[(kk * n + col) * 2 + 1];
                    }
                }
                re += ar * br - ai * bi;
                im += ar * bi + ai * br;
            }
            chunk[col * 2] = re;
            chunk[col * 2 + 1] = im;
        }
    };
    if m * n * k >= 1 << 14 {
        out.data_mut()
            .par_chunks_mut(n * 2)
            .enumerate()
            .for_each(|(row, chunk)| run(row, chunk));
    } else {
        for (row, chunk) in out.data_mut().chunks_mut(n * 2).enumerate() {
            run(row, chunk);
        }
    }
    out
}

/// Real matmul with optional transposes: C[m,n] = A'·B' where A' is A or Aᵀ
/// (stored dims follow from the flags) and likewise for B.
fn rgemm(
    a: &[f64],
    b: &[f64],
    m: usize,
    k: usize,
    n: usize,
    ta: bool,
    tb: bool,
    out: &mut [f64],
) {
    let run = |row: usize, chunk: &mut [f64]| {
        for col in 0..n {
            let mut acc = 0.0;
            for kk in 0..k {
                let av = if ta { a[kk * m + row] } else { a[row * k + kk] };
                let bv = if tb { b[col * k + kk] } else { b[kk * n + col] };
                acc += av * bv;
            }
            chunk[col] = acc;
        }
    };
    if m * n * k >= 1 << 14 {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(row, chunk)| run(row, chunk));
    } else {
        for (row, chunk) in out.chunks_mut(n).enumerate() {
            run(row, chunk);
        }
    }
}

fn transpose01(t: &Tensor) -> Tensor {
    let shape = t.shape();
    let (d0, d1) = (shape[0], shape[1]);
    let rest: usize = shape[2..].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape.swap(0, 1);
    let mut out = Tensor::zeros(&out_shape);
    {
        let src = t.data();
        let dst = out.data_mut();
        for i in 0..d0 {
            for j in 0..d1 {
                let s = (i * d1 + j) * rest;
                let d = (j * d0 + i) * rest;
                dst[d..d + rest].copy_from_slice(&src[s..s + rest]);
            }
        }
    }
    out
}

fn gather(t: &Tensor, axis: usize, indices: &[usize]) -> Tensor {
    let shape = t.shape();
    let outer: usize = shape[..axis].iter().product();
    let axis_len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = indices.len();
    let mut out = Tensor::zeros(&out_shape);
    {
        let src = t.data();
        let dst = out.data_mut();
        for o in 0..outer {
            for (new_i, &old_i) in indices.iter().enumerate() {
                let s = (o * axis_len + old_i) * inner;
                let d = (o * indices.len() + new_i) * inner;
                dst[d..d + inner].copy_from_slice(&src[s..s + inner]);
            }
        }
    }
    out
}

fn scatter_add(full_shape: &[usize], axis: usize, indices: &[usize], g: &Tensor) -> Tensor {
    let outer: usize = full_shape[..axis].iter().product();
    let axis_len = full_shape[axis];
    let inner: usize = full_shape[axis + 1..].iter().product();
    let mut out = Tensor::zeros(full_shape);
    {
        let src = g.data();
        let dst = out.data_mut();
        for o in 0..outer {
            for (new_i, &old_i) in indices.iter().enumerate() {
                let s = (o * indices.len() + new_i) * inner;
                let d = (o * axis_len + old_i) * inner;
                for t in 0..inner {
                    dst[d + t] += src[s + t];
                }
            }
        }
    }
    out
}
