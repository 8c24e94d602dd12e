//! Tape-based reverse-mode automatic differentiation over dense matrices.
//!
//! Every node holds a 2-D `f64` matrix. The backward pass is expressed in
//! terms of the same graph operations as the forward pass, so a gradient
//! returned by [`Graph::backward`] is itself a differentiable [`Var`]. This
//! is what the gradient penalty needs: the critic loss contains the norm of
//! an input gradient and is then differentiated with respect to the critic
//! parameters.
//!
//! Binary element-wise operations broadcast any axis of length one.
//! Batched matrix products treat row blocks as independent matrices, which
//! is how attention runs over a minibatch of sequences stacked row-wise.

use std::cell::RefCell;

use ndarray::{s, Array2, Axis, Zip};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Transposition pattern of a batched product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Product {
    /// `A · B`
    Plain,
    /// `A · Bᵀ`
    RightT,
    /// `Aᵀ · B`
    LeftT,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Offset(Var),
    Bmm { a: Var, b: Var, batch: usize, mode: Product },
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    Relu(Var),
    Sqrt(Var),
    Recip(Var),
    ReduceTo(Var),
    BroadcastTo(Var),
    SliceCols { a: Var, start: usize },
    PadCols { a: Var, start: usize },
    ConcatCols(Vec<Var>),
    Softmax(Var),
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => Vec::new(),
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Bmm { a, b, .. } => vec![*a, *b],
            Op::Scale(a, _)
            | Op::Offset(a)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Exp(a)
            | Op::Relu(a)
            | Op::Sqrt(a)
            | Op::Recip(a)
            | Op::ReduceTo(a)
            | Op::BroadcastTo(a)
            | Op::Softmax(a) => vec![*a],
            Op::SliceCols { a, .. } | Op::PadCols { a, .. } => vec![*a],
            Op::ConcatCols(parts) => parts.clone(),
        }
    }
}

struct Node {
    value: Array2<f64>,
    op: Op,
    tracked: bool,
}

/// A single-use computation tape.
#[derive(Default)]
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
}

fn broadcast_shape(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    let dim = |x: usize, y: usize| {
        assert!(
            x == y || x == 1 || y == 1,
            "incompatible broadcast shapes {a:?} and {b:?}"
        );
        x.max(y)
    };
    (dim(a.0, b.0), dim(a.1, b.1))
}

fn shape_of(a: &Array2<f64>) -> (usize, usize) {
    (a.nrows(), a.ncols())
}

fn zip_broadcast(a: &Array2<f64>, b: &Array2<f64>, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
    let (r, c) = broadcast_shape(shape_of(a), shape_of(b));
    if shape_of(a) == (r, c) && shape_of(b) == (r, c) {
        let mut out = a.clone();
        Zip::from(&mut out).and(b).for_each(|x, &y| *x = f(*x, y));
        return out;
    }
    let av = a.broadcast((r, c)).expect("broadcast checked");
    let bv = b.broadcast((r, c)).expect("broadcast checked");
    Zip::from(&av).and(&bv).map_collect(|&x, &y| f(x, y))
}

fn bmm_value(a: &Array2<f64>, b: &Array2<f64>, batch: usize, mode: Product) -> Array2<f64> {
    assert!(batch >= 1 && a.nrows() % batch == 0 && b.nrows() % batch == 0);
    let (ar, br) = (a.nrows() / batch, b.nrows() / batch);
    let (out_r, out_c) = match mode {
        Product::Plain => {
            assert_eq!(a.ncols(), br, "bmm inner dimension");
            (ar, b.ncols())
        }
        Product::RightT => {
            assert_eq!(a.ncols(), b.ncols(), "bmm inner dimension");
            (ar, br)
        }
        Product::LeftT => {
            assert_eq!(ar, br, "bmm inner dimension");
            (a.ncols(), b.ncols())
        }
    };
    let mut out = Array2::<f64>::zeros((batch * out_r, out_c));
    let inner = match mode {
        Product::Plain | Product::RightT => a.ncols(),
        Product::LeftT => ar,
    };
    if out_r * out_c * inner <= SMALL_BLOCK {
        if let (Some(av), Some(bv)) = (a.as_slice(), b.as_slice()) {
            let ov = out.as_slice_mut().expect("fresh array");
            let (ac, bc) = (a.ncols(), b.ncols());
            for i in 0..batch {
                small_block(
                    &av[i * ar * ac..(i + 1) * ar * ac],
                    &bv[i * br * bc..(i + 1) * br * bc],
                    &mut ov[i * out_r * out_c..(i + 1) * out_r * out_c],
                    (ar, ac, br, bc),
                    mode,
                );
            }
            return out;
        }
    }
    for i in 0..batch {
        let ab = a.slice(s![i * ar..(i + 1) * ar, ..]);
        let bb = b.slice(s![i * br..(i + 1) * br, ..]);
        let mut ob = out.slice_mut(s![i * out_r..(i + 1) * out_r, ..]);
        match mode {
            Product::Plain => ndarray::linalg::general_mat_mul(1.0, &ab, &bb, 0.0, &mut ob),
            Product::RightT => ndarray::linalg::general_mat_mul(1.0, &ab, &bb.t(), 0.0, &mut ob),
            Product::LeftT => ndarray::linalg::general_mat_mul(1.0, &ab.t(), &bb, 0.0, &mut ob),
        }
    }
    out
}

/// Blocks with at most this many multiply-adds skip the packed GEMM path.
const SMALL_BLOCK: usize = 4096;

/// Direct product of one row-major block pair into row-major `out`.
fn small_block(a: &[f64], b: &[f64], out: &mut [f64], dims: (usize, usize, usize, usize), mode: Product) {
    let (ar, ac, br, bc) = dims;
    match mode {
        Product::Plain => {
            for i in 0..ar {
                let o = &mut out[i * bc..(i + 1) * bc];
                for k in 0..ac {
                    let x = a[i * ac + k];
                    for (oj, bj) in o.iter_mut().zip(&b[k * bc..(k + 1) * bc]) {
                        *oj += x * bj;
                    }
                }
            }
        }
        Product::RightT => {
            for i in 0..ar {
                let ai = &a[i * ac..(i + 1) * ac];
                for j in 0..br {
                    out[i * br + j] = ai.iter().zip(&b[j * bc..(j + 1) * bc]).map(|(x, y)| x * y).sum();
                }
            }
        }
        Product::LeftT => {
            for k in 0..ar {
                let bk = &b[k * bc..(k + 1) * bc];
                for i in 0..ac {
                    let x = a[k * ac + i];
                    for (oj, bj) in out[i * bc..(i + 1) * bc].iter_mut().zip(bk) {
                        *oj += x * bj;
                    }
                }
            }
        }
    }
}

fn softmax_rows(a: &Array2<f64>) -> Array2<f64> {
    let mut out = a.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            row.fill(f64::NAN);
            continue;
        }
        let mut total = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        row.mapv_inplace(|x| x / total);
    }
    out
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Array2<f64>, op: Op) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        let tracked = op.inputs().iter().any(|v| nodes[v.0].tracked);
        nodes.push(Node { value, op, tracked });
        Var(nodes.len() - 1)
    }

    /// A leaf that gradients can flow into.
    pub fn param(&self, value: Array2<f64>) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op: Op::Leaf, tracked: true });
        Var(nodes.len() - 1)
    }

    /// A leaf that never receives gradients.
    pub fn constant(&self, value: Array2<f64>) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op: Op::Leaf, tracked: false });
        Var(nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> Array2<f64> {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let nodes = self.nodes.borrow();
        let a = &nodes[v.0].value;
        assert_eq!(shape_of(a), (1, 1), "scalar() on non-scalar node");
        a[[0, 0]]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        shape_of(&self.nodes.borrow()[v.0].value)
    }

    fn unary(&self, a: Var, op: Op, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Var {
        let value = f(&self.nodes.borrow()[a.0].value);
        self.push(value, op)
    }

    fn binary(
        &self,
        a: Var,
        b: Var,
        op: Op,
        f: impl Fn(&Array2<f64>, &Array2<f64>) -> Array2<f64>,
    ) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            f(&nodes[a.0].value, &nodes[b.0].value)
        };
        self.push(value, op)
    }

    pub fn add(&self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Add(a, b), |x, y| zip_broadcast(x, y, |p, q| p + q))
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Sub(a, b), |x, y| zip_broadcast(x, y, |p, q| p - q))
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        self.binary(a, b, Op::Mul(a, b), |x, y| zip_broadcast(x, y, |p, q| p * q))
    }

    pub fn scale(&self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Scale(a, c), |x| x * c)
    }

    /// `a + c` for a constant `c`.
    pub fn offset(&self, a: Var, c: f64) -> Var {
        self.unary(a, Op::Offset(a), |x| x + c)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Var {
        self.bmm(a, b, 1, Product::Plain)
    }

    /// Block-wise product over `batch` row blocks of both operands.
    pub fn bmm(&self, a: Var, b: Var, batch: usize, mode: Product) -> Var {
        self.binary(a, b, Op::Bmm { a, b, batch, mode }, |x, y| bmm_value(x, y, batch, mode))
    }

    pub fn sigmoid(&self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), |x| x.mapv(|v| 1.0 / (1.0 + (-v).exp())))
    }

    pub fn tanh(&self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), |x| x.mapv(f64::tanh))
    }

    pub fn exp(&self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), |x| x.mapv(f64::exp))
    }

    pub fn relu(&self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.mapv(|v| v.max(0.0)))
    }

    /// Square root; the derivative at zero is taken as zero.
    pub fn sqrt(&self, a: Var) -> Var {
        self.unary(a, Op::Sqrt(a), |x| x.mapv(f64::sqrt))
    }

    /// Reciprocal with `1/0 := 0`.
    pub fn recip(&self, a: Var) -> Var {
        self.unary(a, Op::Recip(a), |x| x.mapv(|v| if v == 0.0 { 0.0 } else { 1.0 / v }))
    }

    pub fn square(&self, a: Var) -> Var {
        self.mul(a, a)
    }

    /// Sums broadcast axes away so the result has shape `(rows, cols)`.
    pub fn reduce_to(&self, a: Var, rows: usize, cols: usize) -> Var {
        let (ar, ac) = self.shape(a);
        if (ar, ac) == (rows, cols) {
            return a;
        }
        assert!(
            (rows == ar || rows == 1) && (cols == ac || cols == 1),
            "cannot reduce {ar}x{ac} to {rows}x{cols}"
        );
        self.unary(a, Op::ReduceTo(a), |x| {
            let mut v = x.clone();
            if rows == 1 && ar != 1 {
                v = v.sum_axis(Axis(0)).insert_axis(Axis(0));
            }
            if cols == 1 && ac != 1 {
                v = v.sum_axis(Axis(1)).insert_axis(Axis(1));
            }
            v
        })
    }

    pub fn broadcast_to(&self, a: Var, rows: usize, cols: usize) -> Var {
        if self.shape(a) == (rows, cols) {
            return a;
        }
        self.unary(a, Op::BroadcastTo(a), |x| {
            x.broadcast((rows, cols)).expect("broadcastable shape").to_owned()
        })
    }

    pub fn sum(&self, a: Var) -> Var {
        self.reduce_to(a, 1, 1)
    }

    pub fn mean(&self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let s = self.sum(a);
        self.scale(s, 1.0 / (r * c) as f64)
    }

    /// Row sums as a column vector.
    pub fn sum_cols(&self, a: Var) -> Var {
        let (r, _) = self.shape(a);
        self.reduce_to(a, r, 1)
    }

    pub fn slice_cols(&self, a: Var, start: usize, len: usize) -> Var {
        self.unary(a, Op::SliceCols { a, start }, |x| {
            x.slice(s![.., start..start + len]).to_owned()
        })
    }

    /// Embeds `a` into a zero matrix with `total` columns at column `start`.
    pub fn pad_cols(&self, a: Var, start: usize, total: usize) -> Var {
        self.unary(a, Op::PadCols { a, start }, |x| {
            let mut out = Array2::zeros((x.nrows(), total));
            out.slice_mut(s![.., start..start + x.ncols()]).assign(x);
            out
        })
    }

    pub fn concat_cols(&self, parts: &[Var]) -> Var {
        let value = {
            let nodes = self.nodes.borrow();
            let views: Vec<_> = parts.iter().map(|p| nodes[p.0].value.view()).collect();
            ndarray::concatenate(Axis(1), &views).expect("row counts agree")
        };
        self.push(value, Op::ConcatCols(parts.to_vec()))
    }

    /// Row-wise softmax; `-inf` entries receive zero weight.
    pub fn softmax(&self, a: Var) -> Var {
        self.unary(a, Op::Softmax(a), softmax_rows)
    }

    fn accumulate(&self, grads: &mut [Option<Var>], target: Var, contribution: Var) {
        grads[target.0] = Some(match grads[target.0] {
            Some(existing) => self.add(existing, contribution),
            None => contribution,
        });
    }

    /// Gradients of the scalar `output` with respect to each of `wrt`.
    ///
    /// The returned variables live on this graph and can be differentiated
    /// again. Inputs that `output` does not depend on get a zero gradient.
    pub fn backward(&self, output: Var, wrt: &[Var]) -> Vec<Var> {
        assert_eq!(self.shape(output), (1, 1), "backward() needs a scalar output");
        let end = output.0 + 1;

        // Only nodes on a path from some `wrt` leaf to `output` need gradients.
        let mut relevant = vec![false; end];
        let ops: Vec<Op> = {
            let nodes = self.nodes.borrow();
            nodes[..end].iter().map(|n| n.op.clone()).collect()
        };
        for w in wrt {
            if w.0 < end {
                relevant[w.0] = true;
            }
        }
        for i in 0..end {
            if !relevant[i] && ops[i].inputs().iter().any(|v| relevant[v.0]) {
                relevant[i] = true;
            }
        }

        let mut grads: Vec<Option<Var>> = vec![None; end];
        grads[output.0] = Some(self.constant(Array2::ones((1, 1))));

        for i in (0..end).rev() {
            if !relevant[i] {
                continue;
            }
            let Some(g) = grads[i] else { continue };
            let node = Var(i);
            let wants = |v: &Var| relevant[v.0];
            match ops[i].clone() {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    for x in [a, b] {
                        if wants(&x) {
                            let (r, c) = self.shape(x);
                            let d = self.reduce_to(g, r, c);
                            self.accumulate(&mut grads, x, d);
                        }
                    }
                }
                Op::Sub(a, b) => {
                    if wants(&a) {
                        let (r, c) = self.shape(a);
                        let d = self.reduce_to(g, r, c);
                        self.accumulate(&mut grads, a, d);
                    }
                    if wants(&b) {
                        let (r, c) = self.shape(b);
                        let d = self.reduce_to(g, r, c);
                        let d = self.scale(d, -1.0);
                        self.accumulate(&mut grads, b, d);
                    }
                }
                Op::Mul(a, b) => {
                    if wants(&a) {
                        let (r, c) = self.shape(a);
                        let d = self.mul(g, b);
                        let d = self.reduce_to(d, r, c);
                        self.accumulate(&mut grads, a, d);
                    }
                    if wants(&b) {
                        let (r, c) = self.shape(b);
                        let d = self.mul(g, a);
                        let d = self.reduce_to(d, r, c);
                        self.accumulate(&mut grads, b, d);
                    }
                }
                Op::Scale(a, c) => {
                    let d = self.scale(g, c);
                    self.accumulate(&mut grads, a, d);
                }
                Op::Offset(a) => self.accumulate(&mut grads, a, g),
                Op::Bmm { a, b, batch, mode } => {
                    let (da, db) = match mode {
                        Product::Plain => (
                            wants(&a).then(|| self.bmm(g, b, batch, Product::RightT)),
                            wants(&b).then(|| self.bmm(a, g, batch, Product::LeftT)),
                        ),
                        Product::RightT => (
                            wants(&a).then(|| self.bmm(g, b, batch, Product::Plain)),
                            wants(&b).then(|| self.bmm(g, a, batch, Product::LeftT)),
                        ),
                        Product::LeftT => (
                            wants(&a).then(|| self.bmm(b, g, batch, Product::RightT)),
                            wants(&b).then(|| self.bmm(a, g, batch, Product::Plain)),
                        ),
                    };
                    if let Some(d) = da {
                        self.accumulate(&mut grads, a, d);
                    }
                    if let Some(d) = db {
                        self.accumulate(&mut grads, b, d);
                    }
                }
                Op::Sigmoid(a) => {
                    let one_minus = self.offset(self.scale(node, -1.0), 1.0);
                    let local = self.mul(node, one_minus);
                    let d = self.mul(g, local);
                    self.accumulate(&mut grads, a, d);
                }
                Op::Tanh(a) => {
                    let local = self.offset(self.scale(self.square(node), -1.0), 1.0);
                    let d = self.mul(g, local);
                    self.accumulate(&mut grads, a, d);
                }
                Op::Exp(a) => {
                    let d = self.mul(g, node);
                    self.accumulate(&mut grads, a, d);
                }
                Op::Relu(a) => {
                    let step = self.nodes.borrow()[a.0].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                    let step = self.constant(step);
                    let d = self.mul(g, step);
                    self.accumulate(&mut grads, a, d);
                }
                Op::Sqrt(a) => {
                    let local = self.scale(self.recip(node), 0.5);
                    let d = self.mul(g, local);
                    self.accumulate(&mut grads, a, d);
                }
                Op::Recip(a) => {
                    let local = self.scale(self.square(node), -1.0);
                    let d = self.mul(g, local);
                    self.accumulate(&mut grads, a, d);
                }
                Op::ReduceTo(a) => {
                    let (r, c) = self.shape(a);
                    let d = self.broadcast_to(g, r, c);
                    self.accumulate(&mut grads, a, d);
                }
                Op::BroadcastTo(a) => {
                    let (r, c) = self.shape(a);
                    let d = self.reduce_to(g, r, c);
                    self.accumulate(&mut grads, a, d);
                }
                Op::SliceCols { a, start } => {
                    let (_, total) = self.shape(a);
                    let d = self.pad_cols(g, start, total);
                    self.accumulate(&mut grads, a, d);
                }
                Op::PadCols { a, start } => {
                    let (_, len) = self.shape(a);
                    let d = self.slice_cols(g, start, len);
                    self.accumulate(&mut grads, a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let (_, len) = self.shape(p);
                        if wants(&p) {
                            let d = self.slice_cols(g, start, len);
                            self.accumulate(&mut grads, p, d);
                        }
                        start += len;
                    }
                }
                Op::Softmax(a) => {
                    let gy = self.mul(g, node);
                    let inner = self.sub(g, self.sum_cols(gy));
                    let d = self.mul(node, inner);
                    self.accumulate(&mut grads, a, d);
                }
            }
        }

        wrt.iter()
            .map(|w| match grads.get(w.0).copied().flatten() {
                Some(g) => g,
                None => {
                    let (r, c) = self.shape(*w);
                    self.constant(Array2::zeros((r, c)))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn numeric_grad(f: impl Fn(&Array2<f64>) -> f64, x: &Array2<f64>) -> Array2<f64> {
        let h = 1e-6;
        let mut out = Array2::zeros(x.raw_dim());
        for idx in 0..x.len() {
            let (i, j) = (idx / x.ncols(), idx % x.ncols());
            let mut xp = x.clone();
            xp[[i, j]] += h;
            let mut xm = x.clone();
            xm[[i, j]] -= h;
            out[[i, j]] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        out
    }

    fn assert_close(a: &Array2<f64>, b: &Array2<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())), "{x} vs {y}");
        }
    }

    #[test]
    fn broadcasting_add_and_reduce() {
        let g = Graph::new();
        let a = g.param(array![[1.0, 2.0], [3.0, 4.0]]);
        let b = g.param(array![[10.0, 20.0]]);
        let s = g.add(a, b);
        assert_eq!(g.value(s), array![[11.0, 22.0], [13.0, 24.0]]);
        let loss = g.sum(s);
        let grads = g.backward(loss, &[a, b]);
        assert_eq!(g.value(grads[0]), Array2::<f64>::ones((2, 2)));
        assert_eq!(g.value(grads[1]), array![[2.0, 2.0]]);
    }

    #[test]
    fn batched_products_match_blockwise_dot() {
        let a = Array2::from_shape_fn((6, 2), |(i, j)| (i * 2 + j) as f64 * 0.1);
        let b = Array2::from_shape_fn((6, 3), |(i, j)| (i + j) as f64 * 0.2 - 0.5);
        let out = bmm_value(&a, &b, 2, Product::LeftT);
        let top = a.slice(s![0..3, ..]).t().dot(&b.slice(s![0..3, ..]));
        let bottom = a.slice(s![3..6, ..]).t().dot(&b.slice(s![3..6, ..]));
        let close = |x: ndarray::ArrayView2<f64>, y: &Array2<f64>| x.iter().zip(y).all(|(p, q)| (p - q).abs() < 1e-12);
        assert!(close(out.slice(s![0..2, ..]), &top));
        assert!(close(out.slice(s![2..4, ..]), &bottom));
        let plain = bmm_value(&a.slice(s![0..2, ..]).to_owned(), &a.slice(s![0..2, ..]).t().to_owned(), 1, Product::Plain);
        assert!(close(plain.view(), &a.slice(s![0..2, ..]).dot(&a.slice(s![0..2, ..]).t())));
        let right = bmm_value(&b, &b, 2, Product::RightT);
        let top = b.slice(s![0..3, ..]).dot(&b.slice(s![0..3, ..]).t());
        assert!(close(right.slice(s![0..3, ..]), &top));
    }

    #[test]
    fn gradients_match_finite_differences_through_mixed_ops() {
        let x0 = Array2::from_shape_fn((4, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin());
        let w = Array2::from_shape_fn((3, 3), |(i, j)| ((i + 2 * j) as f64 * 0.53).cos() * 0.5);
        let build = |g: &Graph, x: Var| {
            let wv = g.constant(w.clone());
            let h = g.tanh(g.matmul(x, wv));
            let scores = g.bmm(h, x, 2, Product::RightT);
            let p = g.softmax(scores);
            let o = g.bmm(p, x, 2, Product::Plain);
            let n = g.sqrt(g.offset(g.sum_cols(g.square(o)), 0.1));
            let sg = g.sigmoid(g.slice_cols(o, 1, 2));
            let c = g.concat_cols(&[n, sg]);
            g.mean(g.mul(c, g.exp(g.scale(c, 0.3))))
        };
        let g = Graph::new();
        let x = g.param(x0.clone());
        let loss = build(&g, x);
        let grad = g.value(g.backward(loss, &[x])[0]);
        let numeric = numeric_grad(
            |xv| {
                let g = Graph::new();
                let x = g.constant(xv.clone());
                let l = build(&g, x);
                g.scalar(l)
            },
            &x0,
        );
        assert_close(&grad, &numeric, 1e-6);
    }

    #[test]
    fn second_order_gradient_of_gradient_norm() {
        // f(x, w) = sum(tanh(x w)); check d/dw ||df/dx||^2 numerically.
        let x0 = array![[0.3, -0.2], [0.1, 0.4]];
        let w0 = array![[0.5, -0.7], [0.2, 0.9]];
        let penalty = |g: &Graph, x: Var, w: Var| {
            let f = g.sum(g.tanh(g.matmul(x, w)));
            let gx = g.backward(f, &[x])[0];
            g.sum(g.square(gx))
        };
        let g = Graph::new();
        let x = g.param(x0.clone());
        let w = g.param(w0.clone());
        let p = penalty(&g, x, w);
        let gw = g.value(g.backward(p, &[w])[0]);
        let numeric = numeric_grad(
            |wv| {
                let g = Graph::new();
                let x = g.param(x0.clone());
                let w = g.constant(wv.clone());
                let p = penalty(&g, x, w);
                g.scalar(p)
            },
            &w0,
        );
        assert_close(&gw, &numeric, 1e-6);
    }

    #[test]
    fn masked_softmax_ignores_negative_infinity() {
        let g = Graph::new();
        let a = g.constant(array![[1.0, f64::NEG_INFINITY, 1.0]]);
        let p = g.value(g.softmax(a));
        assert_eq!(p, array![[0.5, 0.0, 0.5]]);
    }

    #[test]
    fn sqrt_at_zero_has_zero_subgradient() {
        let g = Graph::new();
        let a = g.param(array![[0.0]]);
        let s = g.sqrt(a);
        let d = g.backward(s, &[a])[0];
        assert_eq!(g.scalar(d), 0.0);
    }
}
