//! Define-by-run tape for reverse-mode differentiation.
//!
//! Every operation evaluates eagerly, appends a node holding its value, and
//! remembers its inputs. `backward` sweeps the nodes in reverse order, which is
//! a valid reverse topological order because inputs always precede consumers.

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::tensor::{gemm, Tensor};

use super::params::{ParamId, ParamStore};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Elementwise scalar maps with a recorded derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryFn {
    Act(Activation),
    Square,
    /// Derivative at 0 is taken as 0.
    Sqrt,
}

impl UnaryFn {
    fn value(self, x: f64) -> f64 {
        match self {
            UnaryFn::Act(a) => a.apply(x),
            UnaryFn::Square => x * x,
            UnaryFn::Sqrt => x.sqrt(),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            UnaryFn::Act(a) => a.derivative(x),
            UnaryFn::Square => 2.0 * x,
            UnaryFn::Sqrt => {
                if x > 0.0 {
                    0.5 / x.sqrt()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Constant,
    Input,
    Param(ParamId),
    Add(Var, Var),
    Sub(Var, Var),
    Neg(Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var, f64),
    /// m×n plus a broadcast row of n entries.
    AddRow(Var, Var),
    /// m×n times a broadcast column of m entries.
    MulCol(Var, Var),
    /// Any tensor times a one-element tensor.
    ScaleBy(Var, Var),
    Matmul(Var, Var),
    Gather(Var, Vec<usize>),
    SegmentSum(Var, Vec<usize>, usize),
    Unary(Var, UnaryFn),
    L2Norm(Var),
    RowNorms(Var),
    Sum(Var),
    ConcatCols(Vec<Var>),
    /// Row `i` of the output is `Σ_{k: dst[k] = i} act(edge_k + node_{src[k]} + bias)`.
    EdgeMessage {
        edge: Var,
        node: Var,
        bias: Var,
        src: Vec<usize>,
        dst: Vec<usize>,
        n_out: usize,
        act: Activation,
    },
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Constant | Op::Input | Op::Param(_) => Vec::new(),
            Op::Neg(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a, _)
            | Op::Gather(a, _)
            | Op::SegmentSum(a, _, _)
            | Op::Unary(a, _)
            | Op::L2Norm(a)
            | Op::RowNorms(a)
            | Op::Sum(a) => vec![*a],
            Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRow(a, b)
            | Op::MulCol(a, b)
            | Op::ScaleBy(a, b)
            | Op::Matmul(a, b) => vec![*a, *b],
            Op::ConcatCols(vs) => vs.clone(),
            Op::EdgeMessage { edge, node, bias, .. } => vec![*edge, *node, *bias],
        }
    }

    pub(crate) fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Input => "input",
            Op::Param(_) => "param",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Neg(..) => "neg",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(..) => "add_scalar",
            Op::AddRow(..) => "add_row",
            Op::MulCol(..) => "mul_col",
            Op::ScaleBy(..) => "scale_by",
            Op::Matmul(..) => "matmul",
            Op::Gather(..) => "gather_rows",
            Op::SegmentSum(..) => "segment_sum",
            Op::Unary(..) => "unary",
            Op::L2Norm(..) => "l2_norm",
            Op::RowNorms(..) => "row_norms",
            Op::Sum(..) => "sum",
            Op::ConcatCols(..) => "concat_cols",
            Op::EdgeMessage { .. } => "edge_message",
        }
    }
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Recorded operation graph of one forward evaluation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to the tape's leaves.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of an `input` leaf; `None` when the output does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

/// Forward rule shared by recording and replay.
fn evaluate<'a>(op: &Op, val: &dyn Fn(Var) -> &'a Tensor) -> Result<Tensor> {
    Ok(match op {
        Op::Constant | Op::Input | Op::Param(_) => unreachable!("leaves have no forward rule"),
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => {
            let (a, b) = (val(*a), val(*b));
            if a.shape() != b.shape() {
                return Err(shape_err(op.name(), a, b));
            }
            match op {
                Op::Add(..) => a.zip_map(b, |x, y| x + y),
                Op::Sub(..) => a.zip_map(b, |x, y| x - y),
                _ => a.zip_map(b, |x, y| x * y),
            }
        }
        Op::Neg(a) => val(*a).map(|x| -x),
        Op::Scale(a, c) => {
            let c = *c;
            val(*a).map(|x| x * c)
        }
        Op::AddScalar(a, c) => {
            let c = *c;
            val(*a).map(|x| x + c)
        }
        Op::AddRow(a, r) => {
            let (a, r) = (val(*a), val(*r));
            let (m, n) = a.dims2();
            if r.numel() != n {
                return Err(shape_err("add_row", a, r));
            }
            let mut out = a.clone();
            let rd = r.data();
            for i in 0..m {
                for (o, b) in out.data_mut()[i * n..(i + 1) * n].iter_mut().zip(rd) {
                    *o += *b;
                }
            }
            out
        }
        Op::MulCol(a, c) => {
            let (a, c) = (val(*a), val(*c));
            let (m, n) = a.dims2();
            if c.numel() != m {
                return Err(shape_err("mul_col", a, c));
            }
            let mut out = a.clone();
            for (i, &s) in c.data().iter().enumerate() {
                out.data_mut()[i * n..(i + 1) * n].iter_mut().for_each(|o| *o *= s);
            }
            out
        }
        Op::ScaleBy(a, s) => {
            let (a, s) = (val(*a), val(*s));
            if s.numel() != 1 {
                return Err(shape_err("scale_by", a, s));
            }
            let s = s.item();
            a.map(|x| x * s)
        }
        Op::Matmul(a, b) => {
            let (a, b) = (val(*a), val(*b));
            if a.shape().len() != 2 || b.shape().len() != 2 || a.shape()[1] != b.shape()[0] {
                return Err(shape_err("matmul", a, b));
            }
            let (m, k) = a.dims2();
            let n = b.shape()[1];
            let mut out = vec![0.0; m * n];
            gemm(m, k, n, a.data(), false, b.data(), false, &mut out, 0.0);
            Tensor::matrix(m, n, out)?
        }
        Op::Gather(a, idx) => {
            let a = val(*a);
            let (rows, d) = a.dims2();
            let mut out = Vec::with_capacity(idx.len() * d);
            for &i in idx {
                if i >= rows {
                    return Err(Error::IndexOutOfRange {
                        op: "gather_rows",
                        index: i,
                        len: rows,
                    });
                }
                out.extend_from_slice(&a.data()[i * d..(i + 1) * d]);
            }
            Tensor::matrix(idx.len(), d, out)?
        }
        Op::SegmentSum(a, seg, n) => {
            let a = val(*a);
            let (m, d) = a.dims2();
            if seg.len() != m {
                return Err(Error::ShapeMismatch {
                    op: "segment_sum",
                    left: a.shape().to_vec(),
                    right: vec![seg.len()],
                });
            }
            let mut out = vec![0.0; n * d];
            for (r, &s) in seg.iter().enumerate() {
                if s >= *n {
                    return Err(Error::IndexOutOfRange {
                        op: "segment_sum",
                        index: s,
                        len: *n,
                    });
                }
                let src = &a.data()[r * d..(r + 1) * d];
                for (o, x) in out[s * d..(s + 1) * d].iter_mut().zip(src) {
                    *o += *x;
                }
            }
            Tensor::matrix(*n, d, out)?
        }
        Op::Unary(a, f) => {
            let f = *f;
            val(*a).map(|x| f.value(x))
        }
        Op::L2Norm(a) => Tensor::scalar(val(*a).data().iter().map(|x| x * x).sum::<f64>().sqrt()),
        Op::RowNorms(a) => {
            let a = val(*a);
            let (m, d) = a.dims2();
            let norms = (0..m)
                .map(|i| a.data()[i * d..(i + 1) * d].iter().map(|x| x * x).sum::<f64>().sqrt())
                .collect();
            Tensor::matrix(m, 1, norms)?
        }
        Op::Sum(a) => Tensor::scalar(val(*a).sum()),
        Op::ConcatCols(vs) => {
            let parts: Vec<&Tensor> = vs.iter().map(|v| val(*v)).collect();
            let m = parts[0].rows();
            if let Some(bad) = parts.iter().find(|p| p.rows() != m) {
                return Err(shape_err("concat_cols", parts[0], bad));
            }
            let width: usize = parts.iter().map(|p| p.cols()).sum();
            let mut out = Vec::with_capacity(m * width);
            for i in 0..m {
                for p in &parts {
                    out.extend_from_slice(p.row(i));
                }
            }
            Tensor::matrix(m, width, out)?
        }
        Op::EdgeMessage {
            edge,
            node,
            bias,
            src,
            dst,
            n_out,
            act,
        } => {
            let (e, h, b) = (val(*edge), val(*node), val(*bias));
            check_edge_message(e, h, b, src, dst, *n_out)?;
            let out = with_activation!(*act, f, _df, message_forward(e, h, b, src, dst, *n_out, f));
            Tensor::matrix(*n_out, e.cols(), out)?
        }
    })
}

fn check_edge_message(e: &Tensor, h: &Tensor, b: &Tensor, src: &[usize], dst: &[usize], n_out: usize) -> Result<()> {
    let (m, d) = e.dims2();
    let (rows, dh) = h.dims2();
    if dh != d || b.numel() != d {
        return Err(shape_err("edge_message", e, if dh != d { h } else { b }));
    }
    if src.len() != m || dst.len() != m {
        return Err(Error::ShapeMismatch {
            op: "edge_message",
            left: e.shape().to_vec(),
            right: vec![src.len(), dst.len()],
        });
    }
    if let Some(&s) = src.iter().find(|&&s| s >= rows) {
        return Err(Error::IndexOutOfRange {
            op: "edge_message",
            index: s,
            len: rows,
        });
    }
    if let Some(&t) = dst.iter().find(|&&t| t >= n_out) {
        return Err(Error::IndexOutOfRange {
            op: "edge_message",
            index: t,
            len: n_out,
        });
    }
    Ok(())
}

/// Binds monomorphic value and derivative closures for `act`, so the kernels
/// below are compiled once per activation.
macro_rules! with_activation {
    ($act:expr, $f:ident, $df:ident, $body:expr) => {
        match $act {
            Activation::Silu => {
                let $f = |x: f64| Activation::Silu.apply(x);
                let $df = |x: f64| Activation::Silu.derivative(x);
                $body
            }
            Activation::Mish => {
                let $f = |x: f64| Activation::Mish.apply(x);
                let $df = |x: f64| Activation::Mish.derivative(x);
                $body
            }
            Activation::ShiftedSoftplus => {
                let $f = |x: f64| Activation::ShiftedSoftplus.apply(x);
                let $df = |x: f64| Activation::ShiftedSoftplus.derivative(x);
                $body
            }
            Activation::BentIdentity => {
                let $f = |x: f64| Activation::BentIdentity.apply(x);
                let $df = |x: f64| Activation::BentIdentity.derivative(x);
                $body
            }
            Activation::Identity => {
                let $f = |x: f64| x;
                let $df = |_: f64| 1.0;
                $body
            }
        }
    };
}
use with_activation;

fn message_forward(
    e: &Tensor,
    h: &Tensor,
    b: &Tensor,
    src: &[usize],
    dst: &[usize],
    n_out: usize,
    f: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let d = e.cols();
    let mut out = vec![0.0; n_out * d];
    let mut pre = vec![0.0; d];
    for (k, (&s, &t)) in src.iter().zip(dst).enumerate() {
        edge_pre(&mut pre, e.row(k), &h.data()[s * d..(s + 1) * d], b.data());
        for (o, x) in out[t * d..(t + 1) * d].iter_mut().zip(&pre) {
            *o += f(*x);
        }
    }
    out
}

/// Adjoints of the edge, node and bias inputs of an edge message.
#[allow(clippy::too_many_arguments)]
fn message_backward(
    e: &Tensor,
    h: &Tensor,
    b: &Tensor,
    src: &[usize],
    dst: &[usize],
    g: &[f64],
    df: impl Fn(f64) -> f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = e.cols();
    let mut g_edge = vec![0.0; e.numel()];
    let mut g_node = vec![0.0; h.numel()];
    let mut g_bias = vec![0.0; d];
    let mut pre = vec![0.0; d];
    for (k, (&s, &t)) in src.iter().zip(dst).enumerate() {
        edge_pre(&mut pre, e.row(k), &h.data()[s * d..(s + 1) * d], b.data());
        let gk = &mut g_edge[k * d..(k + 1) * d];
        for ((o, x), gt) in gk.iter_mut().zip(&pre).zip(&g[t * d..(t + 1) * d]) {
            *o = gt * df(*x);
        }
        add_into(&mut g_node[s * d..(s + 1) * d], gk);
        add_into(&mut g_bias, gk);
    }
    (g_edge, g_node, g_bias)
}

/// `out = e + h + b`, summed in that order.
fn edge_pre(out: &mut [f64], e: &[f64], h: &[f64], b: &[f64]) {
    for (((o, x), y), z) in out.iter_mut().zip(e).zip(h).zip(b) {
        *o = x + y + z;
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
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

    fn push_leaf(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, Op::Constant, false)
    }

    /// A leaf whose gradient is reported in [`Gradients`].
    pub fn input(&mut self, value: Tensor) -> Var {
        self.push_leaf(value, Op::Input, true)
    }

    /// A leaf bound to a parameter; `backward` accumulates into the store.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push_leaf(store.value(id).clone(), Op::Param(id), true)
    }

    fn record(&mut self, op: Op) -> Result<Var> {
        let value = {
            let nodes = &self.nodes;
            evaluate(&op, &|v: Var| &nodes[v.0].value)?
        };
        let requires_grad = op.inputs().iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Op::Sub(a, b))
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.record(Op::Neg(a))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        self.record(Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Result<Var> {
        self.record(Op::AddScalar(a, c))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        self.record(Op::AddRow(a, row))
    }

    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        self.record(Op::MulCol(a, col))
    }

    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        self.record(Op::ScaleBy(a, s))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Op::Matmul(a, b))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        self.record(Op::Gather(a, idx.to_vec()))
    }

    /// Sums rows sharing a segment id, visiting rows in ascending order.
    pub fn segment_sum(&mut self, a: Var, seg: &[usize], n_segments: usize) -> Result<Var> {
        self.record(Op::SegmentSum(a, seg.to_vec(), n_segments))
    }

    pub fn unary(&mut self, f: UnaryFn, a: Var) -> Result<Var> {
        self.record(Op::Unary(a, f))
    }

    pub fn activation(&mut self, kind: Activation, a: Var) -> Result<Var> {
        if kind == Activation::Identity {
            return Ok(a);
        }
        self.unary(UnaryFn::Act(kind), a)
    }

    /// Euclidean norm of all entries.
    pub fn l2_norm(&mut self, a: Var) -> Result<Var> {
        self.record(Op::L2Norm(a))
    }

    /// Euclidean norm of every row, as an m×1 column.
    pub fn row_norms(&mut self, a: Var) -> Result<Var> {
        self.record(Op::RowNorms(a))
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        self.record(Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).numel().max(1) as f64;
        let s = self.sum(a)?;
        self.scale(s, 1.0 / n)
    }

    /// Fused message-and-aggregate: `segment_sum(act(edge + node[src] + bias), dst)`
    /// without materializing the per-edge intermediates.
    #[allow(clippy::too_many_arguments)]
    pub fn edge_message(
        &mut self,
        edge: Var,
        node: Var,
        bias: Var,
        src: &[usize],
        dst: &[usize],
        n_out: usize,
        act: Activation,
    ) -> Result<Var> {
        self.record(Op::EdgeMessage {
            edge,
            node,
            bias,
            src: src.to_vec(),
            dst: dst.to_vec(),
            n_out,
            act,
        })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::Invalid("concat_cols needs at least one input".into()));
        }
        self.record(Op::ConcatCols(parts.to_vec()))
    }

    /// Recomputes every non-leaf node from the recorded operations.
    pub fn replay(&self) -> Result<Vec<Tensor>> {
        let mut values: Vec<Tensor> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node.op {
                Op::Constant | Op::Input | Op::Param(_) => node.value.clone(),
                ref op => evaluate(op, &|v: Var| &values[v.0])?,
            };
            values.push(v);
        }
        Ok(values)
    }

    /// Names of the recorded operations, in order.
    pub fn op_names(&self) -> Vec<&'static str> {
        self.nodes.iter().map(|n| n.op.name()).collect()
    }

    /// Reverse sweep from a scalar output.
    ///
    /// Parameter gradients are added to `store` (they accumulate across calls);
    /// gradients of `input` leaves are returned.
    pub fn backward(&self, output: Var, store: &mut ParamStore) -> Result<Gradients> {
        let out = &self.nodes[output.0].value;
        if out.numel() != 1 {
            return Err(Error::NotScalar(out.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Tensor::full(out.shape(), 1.0));

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            let Some(g) = grads[i].take() else { continue };
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Input => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::Param(id) => store.get_mut(*id).grad.accumulate(&g),
                op => self.propagate(op, &node.value, &g, &mut grads),
            }
        }
        Ok(Gradients { grads })
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn val(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Adds the adjoint contribution produced by `fill` into `grads[v]`.
    fn acc(&self, grads: &mut [Option<Tensor>], v: Var, fill: impl FnOnce(&mut [f64])) {
        if !self.needs(v) {
            return;
        }
        let slot = &mut grads[v.0];
        let buf = slot.get_or_insert_with(|| Tensor::zeros(self.nodes[v.0].value.shape()));
        fill(buf.data_mut());
    }

    /// Like [`Tape::acc`] with a full-size contribution, which becomes the
    /// buffer itself when the slot is still empty.
    fn acc_owned(&self, grads: &mut [Option<Tensor>], v: Var, data: Vec<f64>) {
        if !self.needs(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(buf) => add_into(buf.data_mut(), &data),
            slot => {
                let shape = self.nodes[v.0].value.shape().to_vec();
                *slot = Some(Tensor::new(shape, data).expect("adjoint has the value's size"));
            }
        }
    }

    fn acc_copy(&self, grads: &mut [Option<Tensor>], v: Var, gd: &[f64]) {
        if grads[v.0].is_some() {
            self.acc(grads, v, |buf| add_into(buf, gd));
        } else {
            self.acc_owned(grads, v, gd.to_vec());
        }
    }

    fn propagate(&self, op: &Op, out: &Tensor, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let gd = g.data();
        match op {
            Op::Constant | Op::Input | Op::Param(_) => unreachable!(),
            Op::Add(a, b) => {
                self.acc_copy(grads, *a, gd);
                self.acc_copy(grads, *b, gd);
            }
            Op::Sub(a, b) => {
                self.acc_copy(grads, *a, gd);
                self.acc(grads, *b, |buf| buf.iter_mut().zip(gd).for_each(|(o, x)| *o -= *x));
            }
            Op::Neg(a) => self.acc(grads, *a, |buf| buf.iter_mut().zip(gd).for_each(|(o, x)| *o -= *x)),
            Op::Mul(a, b) => {
                let (av, bv) = (self.val(*a).data(), self.val(*b).data());
                self.acc(grads, *a, |buf| {
                    for ((o, x), y) in buf.iter_mut().zip(gd).zip(bv) {
                        *o += x * y;
                    }
                });
                self.acc(grads, *b, |buf| {
                    for ((o, x), y) in buf.iter_mut().zip(gd).zip(av) {
                        *o += x * y;
                    }
                });
            }
            Op::Scale(a, c) => {
                self.acc(grads, *a, |buf| buf.iter_mut().zip(gd).for_each(|(o, x)| *o += c * x))
            }
            Op::AddScalar(a, _) => self.acc_copy(grads, *a, gd),
            Op::AddRow(a, r) => {
                self.acc_copy(grads, *a, gd);
                let n = self.val(*r).numel();
                self.acc(grads, *r, |buf| {
                    for row in gd.chunks_exact(n) {
                        add_into(buf, row);
                    }
                });
            }
            Op::MulCol(a, c) => {
                let av = self.val(*a);
                let n = av.cols();
                let cv = self.val(*c).data();
                self.acc(grads, *a, |buf| {
                    for ((brow, grow), s) in buf.chunks_exact_mut(n).zip(gd.chunks_exact(n)).zip(cv) {
                        brow.iter_mut().zip(grow).for_each(|(o, x)| *o += x * s);
                    }
                });
                self.acc(grads, *c, |buf| {
                    for ((o, grow), arow) in buf.iter_mut().zip(gd.chunks_exact(n)).zip(av.data().chunks_exact(n)) {
                        *o += grow.iter().zip(arow).map(|(x, y)| x * y).sum::<f64>();
                    }
                });
            }
            Op::ScaleBy(a, s) => {
                let sv = self.val(*s).item();
                let av = self.val(*a).data();
                self.acc(grads, *a, |buf| buf.iter_mut().zip(gd).for_each(|(o, x)| *o += x * sv));
                self.acc(grads, *s, |buf| buf[0] += gd.iter().zip(av).map(|(x, y)| x * y).sum::<f64>());
            }
            Op::Matmul(a, b) => {
                let (av, bv) = (self.val(*a), self.val(*b));
                let (m, k) = av.dims2();
                let n = bv.shape()[1];
                // dA = G·Bᵀ, dB = Aᵀ·G
                self.acc(grads, *a, |buf| gemm(m, n, k, gd, false, bv.data(), true, buf, 1.0));
                self.acc(grads, *b, |buf| gemm(k, m, n, av.data(), true, gd, false, buf, 1.0));
            }
            Op::Gather(a, idx) => {
                let d = self.val(*a).cols();
                self.acc(grads, *a, |buf| {
                    for (r, &i) in idx.iter().enumerate() {
                        add_into(&mut buf[i * d..(i + 1) * d], &gd[r * d..(r + 1) * d]);
                    }
                });
            }
            Op::SegmentSum(a, seg, _) => {
                let d = self.val(*a).cols();
                self.acc(grads, *a, |buf| {
                    for (r, &s) in seg.iter().enumerate() {
                        add_into(&mut buf[r * d..(r + 1) * d], &gd[s * d..(s + 1) * d]);
                    }
                });
            }
            Op::Unary(a, f) => {
                let av = self.val(*a).data();
                self.acc(grads, *a, |buf| {
                    for ((o, x), y) in buf.iter_mut().zip(gd).zip(av) {
                        *o += x * f.derivative(*y);
                    }
                });
            }
            Op::L2Norm(a) => {
                let norm = out.item();
                let av = self.val(*a).data();
                let s = if norm > 0.0 { gd[0] / norm } else { 0.0 };
                self.acc(grads, *a, |buf| buf.iter_mut().zip(av).for_each(|(o, x)| *o += s * x));
            }
            Op::RowNorms(a) => {
                let av = self.val(*a);
                let d = av.cols();
                self.acc(grads, *a, |buf| {
                    for (i, (brow, arow)) in buf.chunks_exact_mut(d).zip(av.data().chunks_exact(d)).enumerate() {
                        let norm = out.data()[i];
                        if norm > 0.0 {
                            let s = gd[i] / norm;
                            brow.iter_mut().zip(arow).for_each(|(o, x)| *o += s * x);
                        }
                    }
                });
            }
            Op::Sum(a) => {
                let s = gd[0];
                self.acc(grads, *a, |buf| buf.iter_mut().for_each(|o| *o += s));
            }
            Op::EdgeMessage {
                edge,
                node,
                bias,
                src,
                dst,
                act,
                ..
            } => {
                let (e, h, b) = (self.val(*edge), self.val(*node), self.val(*bias));
                let (g_edge, g_node, g_bias) =
                    with_activation!(*act, _f, df, message_backward(e, h, b, src, dst, gd, df));
                self.acc(grads, *node, |buf| add_into(buf, &g_node));
                self.acc(grads, *bias, |buf| add_into(buf, &g_bias));
                self.acc_owned(grads, *edge, g_edge);
            }
            Op::ConcatCols(vs) => {
                let width = out.cols();
                let mut offset = 0;
                for v in vs {
                    let w = self.val(*v).cols();
                    self.acc(grads, *v, |buf| {
                        for (brow, grow) in buf.chunks_exact_mut(w).zip(gd.chunks_exact(width)) {
                            add_into(brow, &grow[offset..offset + w]);
                        }
                    });
                    offset += w;
                }
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    dst.iter_mut().zip(src).for_each(|(o, x)| *o += *x);
}
