use crate::error::{Error, Result};

use super::Tensor;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var, m: usize, k: usize, n: usize },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine { a: Var, scale: f64 },
    Sigmoid(Var),
    Tanh(Var),
    Softmax { a: Var, cols: usize },
    Cumsum { a: Var, cols: usize },
    Cumax { a: Var, cols: usize, probs: Vec<f64> },
    Concat { parts: Vec<Var>, outer: usize, inner: usize },
    Narrow { a: Var, offset: usize },
    Repeat { a: Var, times: usize },
    Sum(Var),
    CrossEntropy { logits: Var, target: usize, probs: Vec<f64> },
}

#[derive(Clone, Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Record of primitive operations for one forward pass.
///
/// Nodes are appended in evaluation order, so every operand id precedes the
/// id of the node that consumes it and a single reverse sweep visits each
/// node once.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Reverse-mode gradients indexed by node.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn tensor(&self, v: Var) -> Option<Tensor> {
        let g = self.get(v)?;
        Tensor::new(self.shapes[v.0].clone(), g.to_vec()).ok()
    }

    /// Gradient of `v`, or zeros of the right size when nothing flowed into it.
    pub fn get_or_zeros(&self, v: Var) -> Vec<f64> {
        match self.get(v) {
            Some(g) => g.to_vec(),
            None => vec![0.0; self.shapes[v.0].iter().product()],
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn shape_err(op: &'static str, left: &[usize], right: &[usize]) -> Error {
    Error::Shape {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable input.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf, true)
    }

    /// Input that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        let n = &self.nodes[v.0];
        Tensor::new(n.shape.clone(), n.value.clone()).expect("tape nodes are well-formed")
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    /// Matrix product `[m×k]·[k×n] → [m×n]`; a 1-D right operand of
    /// length `k` is treated as a column and yields a length-`m` vector.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let (m, k) = match sa.as_slice() {
            &[m, k] => (m, k),
            _ => return Err(shape_err("matmul", &sa, &sb)),
        };
        let (kb, n, out_shape) = match sb.as_slice() {
            &[kb] => (kb, 1, vec![m]),
            &[kb, n] => (kb, n, vec![m, n]),
            _ => return Err(shape_err("matmul", &sa, &sb)),
        };
        if k != kb {
            return Err(shape_err("matmul", &sa, &sb));
        }
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        let mut out = vec![0.0; m * n];
        if n == 1 {
            for (i, o) in out.iter_mut().enumerate() {
                let row = &av[i * k..(i + 1) * k];
                *o = row.iter().zip(bv).map(|(x, y)| x * y).sum();
            }
        } else {
            for i in 0..m {
                let orow = &mut out[i * n..(i + 1) * n];
                for p in 0..k {
                    let aip = av[i * k + p];
                    let brow = &bv[p * n..(p + 1) * n];
                    for (o, bj) in orow.iter_mut().zip(brow) {
                        *o += aip * bj;
                    }
                }
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out_shape, out, Op::MatMul { a, b, m, k, n }, rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<(Vec<usize>, Vec<f64>, bool)> {
        self.same_shape(op, a, b)?;
        let out = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Ok((self.shape(a).to_vec(), out, self.rg(a) || self.rg(b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, v, rg) = self.binary("add", a, b, |x, y| x + y)?;
        Ok(self.push(s, v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, v, rg) = self.binary("sub", a, b, |x, y| x - y)?;
        Ok(self.push(s, v, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, v, rg) = self.binary("mul", a, b, |x, y| x * y)?;
        Ok(self.push(s, v, Op::Mul(a, b), rg))
    }

    /// `scale * a + shift`, elementwise.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let v = self.nodes[a.0].value.iter().map(|x| scale * x + shift).collect();
        let s = self.shape(a).to_vec();
        let rg = self.rg(a);
        self.push(s, v, Op::Affine { a, scale }, rg)
    }

    pub fn scale(&mut self, a: Var, scale: f64) -> Var {
        self.affine(a, scale, 0.0)
    }

    /// `1 - a`
    pub fn one_minus(&mut self, a: Var) -> Var {
        self.affine(a, -1.0, 1.0)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.iter().map(|&x| sigmoid(x)).collect();
        let s = self.shape(a).to_vec();
        let rg = self.rg(a);
        self.push(s, v, Op::Sigmoid(a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.iter().map(|x| x.tanh()).collect();
        let s = self.shape(a).to_vec();
        let rg = self.rg(a);
        self.push(s, v, Op::Tanh(a), rg)
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: Var) -> Var {
        let s = self.shape(a).to_vec();
        let cols = *s.last().expect("tensors have at least one axis");
        let mut v = self.nodes[a.0].value.clone();
        for row in v.chunks_mut(cols) {
            softmax_in_place(row);
        }
        let rg = self.rg(a);
        self.push(s, v, Op::Softmax { a, cols }, rg)
    }

    /// Running sum over the last axis.
    pub fn cumsum(&mut self, a: Var) -> Var {
        let s = self.shape(a).to_vec();
        let cols = *s.last().expect("tensors have at least one axis");
        let mut v = self.nodes[a.0].value.clone();
        for row in v.chunks_mut(cols) {
            let mut acc = 0.0;
            for x in row {
                acc += *x;
                *x = acc;
            }
        }
        let rg = self.rg(a);
        self.push(s, v, Op::Cumsum { a, cols }, rg)
    }

    /// `cumsum(softmax(a))` over the last axis, fused: each entry is a
    /// prefix sum of exponentials divided by the full sum, so outputs are
    /// nondecreasing, within `[0, 1]` and end in exactly 1.
    pub fn cumax(&mut self, a: Var) -> Var {
        let s = self.shape(a).to_vec();
        let cols = *s.last().expect("tensors have at least one axis");
        let mut v = self.nodes[a.0].value.clone();
        let mut probs = v.clone();
        for (row, prow) in v.chunks_mut(cols).zip(probs.chunks_mut(cols)) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut acc = 0.0;
            for (x, p) in row.iter_mut().zip(prow.iter_mut()) {
                *p = (*x - max).exp();
                acc += *p;
                *x = acc;
            }
            for (x, p) in row.iter_mut().zip(prow.iter_mut()) {
                *x /= acc;
                *p /= acc;
            }
        }
        let rg = self.rg(a);
        self.push(s, v, Op::Cumax { a, cols, probs }, rg)
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let base = self.shape(*first).to_vec();
        if axis >= base.len() {
            return Err(shape_err("concat", &base, &[axis]));
        }
        let mut axis_len = 0;
        for p in parts {
            let s = self.shape(*p);
            if s.len() != base.len()
                || s.iter().zip(&base).enumerate().any(|(d, (x, y))| d != axis && x != y)
            {
                return Err(shape_err("concat", &base, s));
            }
            axis_len += s[axis];
        }
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut out = Vec::with_capacity(outer * axis_len * inner);
        for o in 0..outer {
            for p in parts {
                let width = self.nodes[p.0].shape[axis] * inner;
                out.extend_from_slice(&self.nodes[p.0].value[o * width..(o + 1) * width]);
            }
        }
        let mut shape = base;
        shape[axis] = axis_len;
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(
            shape,
            out,
            Op::Concat {
                parts: parts.to_vec(),
                outer,
                inner,
            },
            rg,
        ))
    }

    /// Contiguous window `[offset, offset + len)` of the flattened values,
    /// returned as a vector.
    pub fn narrow(&mut self, a: Var, offset: usize, len: usize) -> Result<Var> {
        let n = self.nodes[a.0].value.len();
        if len == 0 || offset + len > n {
            return Err(Error::Index {
                what: "narrow",
                index: offset + len,
                bound: n,
            });
        }
        let v = self.nodes[a.0].value[offset..offset + len].to_vec();
        let rg = self.rg(a);
        Ok(self.push(vec![len], v, Op::Narrow { a, offset }, rg))
    }

    /// Row `i` of a matrix.
    pub fn row(&mut self, a: Var, i: usize) -> Result<Var> {
        let s = self.shape(a).to_vec();
        match s.as_slice() {
            &[rows, cols] if i < rows => self.narrow(a, i * cols, cols),
            &[rows, _] => Err(Error::Index {
                what: "row",
                index: i,
                bound: rows,
            }),
            _ => Err(shape_err("row", &s, &[i])),
        }
    }

    /// Each entry repeated `times` times in place: `[a, b] → [a, a, b, b]`.
    pub fn repeat(&mut self, a: Var, times: usize) -> Result<Var> {
        if times == 0 {
            return Err(Error::contract("repeat count must be positive"));
        }
        let v: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .flat_map(|&x| std::iter::repeat_n(x, times))
            .collect();
        let rg = self.rg(a);
        Ok(self.push(vec![v.len()], v, Op::Repeat { a, times }, rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.iter().sum();
        let rg = self.rg(a);
        self.push(vec![1], vec![v], Op::Sum(a), rg)
    }

    /// Sum of several scalars.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Var> {
        let (first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::contract("sum of zero terms"))?;
        rest.iter().try_fold(*first, |acc, t| self.add(acc, *t))
    }

    /// `-log softmax(logits)[target]` for a 1-D logit vector.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let s = self.shape(logits).to_vec();
        if s.len() != 1 {
            return Err(shape_err("cross_entropy", &s, &[target]));
        }
        if target >= s[0] {
            return Err(Error::Index {
                what: "cross_entropy target",
                index: target,
                bound: s[0],
            });
        }
        let mut probs = self.nodes[logits.0].value.clone();
        let lse = log_sum_exp(&probs);
        let loss = lse - probs[target];
        softmax_in_place(&mut probs);
        let rg = self.rg(logits);
        Ok(self.push(
            vec![1],
            // Clamp rounding below zero without hiding a NaN.
            vec![if loss < 0.0 { 0.0 } else { loss }],
            Op::CrossEntropy {
                logits,
                target,
                probs,
            },
            rg,
        ))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads);
            }
            grads[id] = Some(g);
        }
        let shapes = self.nodes[..=loss.0].iter().map(|n| n.shape.clone()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| self.nodes[v.0].value.as_slice();
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, m, k, n } => {
                let (m, k, n) = (*m, *k, *n);
                if self.rg(*a) {
                    let bv = val(*b);
                    let ga = slot(grads, *a, m * k);
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        let garow = &mut ga[i * k..(i + 1) * k];
                        if n == 1 {
                            let gi = grow[0];
                            if gi != 0.0 {
                                for (x, bp) in garow.iter_mut().zip(bv) {
                                    *x += gi * bp;
                                }
                            }
                        } else {
                            for (p, x) in garow.iter_mut().enumerate() {
                                let brow = &bv[p * n..(p + 1) * n];
                                *x += grow.iter().zip(brow).map(|(u, w)| u * w).sum::<f64>();
                            }
                        }
                    }
                }
                if self.rg(*b) {
                    let av = val(*a);
                    let gb = slot(grads, *b, k * n);
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        let arow = &av[i * k..(i + 1) * k];
                        for (p, aip) in arow.iter().enumerate() {
                            let gbrow = &mut gb[p * n..(p + 1) * n];
                            for (x, gi) in gbrow.iter_mut().zip(grow) {
                                *x += aip * gi;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, self.rg(*a), g, |gi, _| gi);
                accumulate(grads, *b, self.rg(*b), g, |gi, _| gi);
            }
            Op::Sub(a, b) => {
                accumulate(grads, *a, self.rg(*a), g, |gi, _| gi);
                accumulate(grads, *b, self.rg(*b), g, |gi, _| -gi);
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    let bv = val(*b);
                    let ga = slot(grads, *a, g.len());
                    for ((x, gi), y) in ga.iter_mut().zip(g).zip(bv) {
                        *x += gi * y;
                    }
                }
                if self.rg(*b) {
                    let av = val(*a);
                    let gb = slot(grads, *b, g.len());
                    for ((x, gi), y) in gb.iter_mut().zip(g).zip(av) {
                        *x += gi * y;
                    }
                }
            }
            Op::Affine { a, scale } => {
                let s = *scale;
                accumulate(grads, *a, self.rg(*a), g, |gi, _| gi * s);
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                if self.rg(*a) {
                    let ga = slot(grads, *a, g.len());
                    for ((x, gi), yi) in ga.iter_mut().zip(g).zip(y) {
                        *x += gi * yi * (1.0 - yi);
                    }
                }
            }
            Op::Tanh(a) => {
                let y = &node.value;
                if self.rg(*a) {
                    let ga = slot(grads, *a, g.len());
                    for ((x, gi), yi) in ga.iter_mut().zip(g).zip(y) {
                        *x += gi * (1.0 - yi * yi);
                    }
                }
            }
            Op::Softmax { a, cols } => {
                if self.rg(*a) {
                    let y = &node.value;
                    let ga = slot(grads, *a, g.len());
                    for ((grow, yrow), garow) in g
                        .chunks(*cols)
                        .zip(y.chunks(*cols))
                        .zip(ga.chunks_mut(*cols))
                    {
                        let dot: f64 = grow.iter().zip(yrow).map(|(u, w)| u * w).sum();
                        for ((x, gi), yi) in garow.iter_mut().zip(grow).zip(yrow) {
                            *x += yi * (gi - dot);
                        }
                    }
                }
            }
            Op::Cumsum { a, cols } => {
                if self.rg(*a) {
                    let ga = slot(grads, *a, g.len());
                    for (grow, garow) in g.chunks(*cols).zip(ga.chunks_mut(*cols)) {
                        let mut acc = 0.0;
                        for (x, gi) in garow.iter_mut().zip(grow).rev() {
                            acc += gi;
                            *x += acc;
                        }
                    }
                }
            }
            Op::Cumax { a, cols, probs } => {
                if self.rg(*a) {
                    let ga = slot(grads, *a, g.len());
                    let mut gs = vec![0.0; *cols];
                    for ((grow, prow), garow) in g.chunks(*cols).zip(probs.chunks(*cols)).zip(ga.chunks_mut(*cols)) {
                        let mut acc = 0.0;
                        for (k, gi) in grow.iter().enumerate().rev() {
                            acc += gi;
                            gs[k] = acc;
                        }
                        let dot: f64 = gs.iter().zip(prow).map(|(u, p)| u * p).sum();
                        for ((x, gk), p) in garow.iter_mut().zip(&gs).zip(prow) {
                            *x += p * (gk - dot);
                        }
                    }
                }
            }
            Op::Concat {
                parts,
                outer,
                inner,
            } => {
                let axis_total: usize = g.len() / (outer * inner);
                let mut offset = 0;
                for p in parts {
                    let plen = self.nodes[p.0].value.len();
                    let width = plen / outer;
                    if self.rg(*p) {
                        let gp = slot(grads, *p, plen);
                        for o in 0..*outer {
                            let src = &g[o * axis_total * inner + offset..][..width];
                            for (x, gi) in gp[o * width..(o + 1) * width].iter_mut().zip(src) {
                                *x += gi;
                            }
                        }
                    }
                    offset += width;
                }
            }
            Op::Narrow { a, offset } => {
                if self.rg(*a) {
                    let n = self.nodes[a.0].value.len();
                    let ga = slot(grads, *a, n);
                    for (x, gi) in ga[*offset..*offset + g.len()].iter_mut().zip(g) {
                        *x += gi;
                    }
                }
            }
            Op::Repeat { a, times } => {
                if self.rg(*a) {
                    let n = self.nodes[a.0].value.len();
                    let ga = slot(grads, *a, n);
                    for (x, chunk) in ga.iter_mut().zip(g.chunks(*times)) {
                        *x += chunk.iter().sum::<f64>();
                    }
                }
            }
            Op::Sum(a) => {
                let g0 = g[0];
                let n = self.nodes[a.0].value.len();
                if self.rg(*a) {
                    for x in slot(grads, *a, n) {
                        *x += g0;
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                target,
                probs,
            } => {
                if self.rg(*logits) {
                    let g0 = g[0];
                    let gl = slot(grads, *logits, probs.len());
                    for (j, (x, p)) in gl.iter_mut().zip(probs).enumerate() {
                        let onehot = if j == *target { 1.0 } else { 0.0 };
                        *x += g0 * (p - onehot);
                    }
                }
            }
        }
    }
}

fn slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn accumulate(
    grads: &mut [Option<Vec<f64>>],
    v: Var,
    requires_grad: bool,
    g: &[f64],
    f: impl Fn(f64, usize) -> f64,
) {
    if !requires_grad {
        return;
    }
    let gv = slot(grads, v, g.len());
    for (i, (x, gi)) in gv.iter_mut().zip(g).enumerate() {
        *x += f(*gi, i);
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
