//! Reverse-mode tape.
//!
//! Every operation evaluates eagerly and appends a node holding its value and
//! the inputs needed to differentiate it. Nodes are appended in evaluation
//! order, so walking the tape backwards visits each node after all of its
//! consumers and a single sweep suffices.

use super::tensor::Tensor;
use crate::error::{config, input, Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Dense {
        input: Var,
        weights: Var,
        bias: Var,
    },
    Tanh {
        input: Var,
    },
    Embedding {
        table: Var,
        indices: Vec<usize>,
    },
    Conv1d {
        input: Var,
        kernels: Var,
        bias: Var,
    },
    MaxPool1d {
        input: Var,
        /// Flat input offset of the winning element for every output element.
        argmax: Vec<usize>,
    },
    Reshape {
        input: Var,
    },
    ConcatCols {
        left: Var,
        right: Var,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Recording of one forward evaluation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar objective with respect to every recorded value it depends on.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }
}

fn dims2(t: &Tensor, what: &str) -> Result<(usize, usize)> {
    match *t.shape() {
        [a, b] => Ok((a, b)),
        ref s => Err(config(format!("{what} must be 2-d, got shape {s:?}"))),
    }
}

fn dims3(t: &Tensor, what: &str) -> Result<(usize, usize, usize)> {
    match *t.shape() {
        [a, b, c] => Ok((a, b, c)),
        ref s => Err(config(format!("{what} must be 3-d, got shape {s:?}"))),
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

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// `input[B x I] . weights[I x O] + bias[O]`.
    pub fn dense(&mut self, input: Var, weights: Var, bias: Var) -> Result<Var> {
        let (b, i) = dims2(self.value(input), "dense input")?;
        let (wi, o) = dims2(self.value(weights), "dense weights")?;
        if wi != i || self.value(bias).shape() != [o] {
            return Err(config(format!(
                "dense shapes do not conform: input {:?}, weights {:?}, bias {:?}",
                self.value(input).shape(),
                self.value(weights).shape(),
                self.value(bias).shape()
            )));
        }
        let x = self.value(input).values();
        let w = self.value(weights).values();
        let bv = self.value(bias).values();
        let mut out = Vec::with_capacity(b * o);
        for r in 0..b {
            let mut row = bv.to_vec();
            for (k, &xv) in x[r * i..(r + 1) * i].iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                for (acc, &wv) in row.iter_mut().zip(&w[k * o..(k + 1) * o]) {
                    *acc += xv * wv;
                }
            }
            out.extend_from_slice(&row);
        }
        let value = Tensor::new(vec![b, o], out)?;
        Ok(self.push(value, Op::Dense { input, weights, bias }))
    }

    pub fn tanh(&mut self, input: Var) -> Var {
        let src = self.value(input);
        let values = src.values().iter().map(|v| v.tanh()).collect();
        let value = Tensor::new(src.shape().to_vec(), values).expect("same shape");
        self.push(value, Op::Tanh { input })
    }

    /// Gathers rows of `table[N x E]`.
    pub fn embedding(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let (n, e) = dims2(self.value(table), "embedding table")?;
        if indices.is_empty() {
            return Err(input("embedding lookup needs at least one index"));
        }
        if let Some(&bad) = indices.iter().find(|&&ix| ix >= n) {
            return Err(input(format!("class index {bad} out of range [0, {n})")));
        }
        let t = self.value(table).values();
        let mut out = Vec::with_capacity(indices.len() * e);
        for &ix in indices {
            out.extend_from_slice(&t[ix * e..(ix + 1) * e]);
        }
        let value = Tensor::new(vec![indices.len(), e], out)?;
        Ok(self.push(
            value,
            Op::Embedding {
                table,
                indices: indices.to_vec(),
            },
        ))
    }

    /// Stride-1, unpadded cross-correlation of `input[B x C x L]` with `kernels[F x C x K]`.
    pub fn conv1d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let (b, c, l) = dims3(self.value(input), "conv1d input")?;
        let (f, kc, k) = dims3(self.value(kernels), "conv1d kernels")?;
        if kc != c || self.value(bias).shape() != [f] {
            return Err(config(format!(
                "conv1d shapes do not conform: input {:?}, kernels {:?}, bias {:?}",
                self.value(input).shape(),
                self.value(kernels).shape(),
                self.value(bias).shape()
            )));
        }
        if k > l {
            return Err(config(format!("kernel width {k} exceeds input length {l}")));
        }
        let lo = l - k + 1;
        let x = self.value(input).values();
        let w = self.value(kernels).values();
        let bv = self.value(bias).values();
        let mut out = vec![0.0; b * f * lo];
        for bi in 0..b {
            for fi in 0..f {
                let dst = &mut out[(bi * f + fi) * lo..(bi * f + fi + 1) * lo];
                dst.iter_mut().for_each(|v| *v = bv[fi]);
                for ci in 0..c {
                    let src = &x[(bi * c + ci) * l..(bi * c + ci + 1) * l];
                    let ker = &w[(fi * c + ci) * k..(fi * c + ci + 1) * k];
                    for (t, acc) in dst.iter_mut().enumerate() {
                        *acc += ker
                            .iter()
                            .zip(&src[t..t + k])
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    }
                }
            }
        }
        let value = Tensor::new(vec![b, f, lo], out)?;
        Ok(self.push(value, Op::Conv1d { input, kernels, bias }))
    }

    /// Non-overlapping max pooling along the last axis; a trailing partial window is dropped.
    pub fn maxpool1d(&mut self, input: Var, window: usize) -> Result<Var> {
        if window < 1 {
            return Err(config("max-pool window must be at least 1"));
        }
        let (b, c, l) = dims3(self.value(input), "maxpool input")?;
        let lo = l / window;
        if lo == 0 {
            return Err(config(format!("max-pool window {window} exceeds length {l}")));
        }
        let x = self.value(input).values();
        let mut out = Vec::with_capacity(b * c * lo);
        let mut argmax = Vec::with_capacity(b * c * lo);
        for row in 0..b * c {
            let base = row * l;
            for j in 0..lo {
                let start = base + j * window;
                let mut best = start;
                for p in start + 1..start + window {
                    // strict comparison keeps the first maximum on ties
                    if x[p] > x[best] {
                        best = p;
                    }
                }
                out.push(x[best]);
                argmax.push(best);
            }
        }
        let value = Tensor::new(vec![b, c, lo], out)?;
        Ok(self.push(value, Op::MaxPool1d { input, argmax }))
    }

    pub fn reshape(&mut self, input: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(input).reshaped(shape)?;
        Ok(self.push(value, Op::Reshape { input }))
    }

    /// Joins `left[B x P]` and `right[B x Q]` into `[B x (P+Q)]`.
    pub fn concat_cols(&mut self, left: Var, right: Var) -> Result<Var> {
        let (b, p) = dims2(self.value(left), "concat left")?;
        let (b2, q) = dims2(self.value(right), "concat right")?;
        if b != b2 {
            return Err(config(format!("concat batch sizes differ: {b} vs {b2}")));
        }
        let l = self.value(left).values();
        let r = self.value(right).values();
        let mut out = Vec::with_capacity(b * (p + q));
        for i in 0..b {
            out.extend_from_slice(&l[i * p..(i + 1) * p]);
            out.extend_from_slice(&r[i * q..(i + 1) * q]);
        }
        let value = Tensor::new(vec![b, p + q], out)?;
        Ok(self.push(value, Op::ConcatCols { left, right }))
    }

    /// Propagates `seed` (the gradient of the objective with respect to `root`) back through the tape.
    pub fn backward(&self, root: Var, seed: Tensor) -> Result<Gradients> {
        if seed.shape() != self.value(root).shape() {
            return Err(Error::Internal(format!(
                "seed gradient shape {:?} does not match root {:?}",
                seed.shape(),
                self.value(root).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(seed);

        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else {
                continue;
            };
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {}
                Op::Dense { input, weights, bias } => {
                    let x = self.value(*input);
                    let w = self.value(*weights);
                    let (b, i) = dims2(x, "dense input")?;
                    let o = w.shape()[1];
                    let gv = g.values();
                    let xv = x.values();
                    let wv = w.values();

                    let mut gx = vec![0.0; b * i];
                    let mut gw = vec![0.0; i * o];
                    let mut gb = vec![0.0; o];
                    for r in 0..b {
                        let grow = &gv[r * o..(r + 1) * o];
                        for (acc, &gval) in gb.iter_mut().zip(grow) {
                            *acc += gval;
                        }
                        for k in 0..i {
                            let wrow = &wv[k * o..(k + 1) * o];
                            gx[r * i + k] = wrow.iter().zip(grow).map(|(a, b)| a * b).sum();
                            let xval = xv[r * i + k];
                            if xval != 0.0 {
                                for (acc, &gval) in gw[k * o..(k + 1) * o].iter_mut().zip(grow) {
                                    *acc += xval * gval;
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *input, Tensor::new(vec![b, i], gx)?);
                    accumulate(&mut grads, *weights, Tensor::new(vec![i, o], gw)?);
                    accumulate(&mut grads, *bias, Tensor::new(vec![o], gb)?);
                }
                Op::Tanh { input } => {
                    let vals = g
                        .values()
                        .iter()
                        .zip(node.value.values())
                        .map(|(gv, y)| gv * (1.0 - y * y))
                        .collect();
                    accumulate(&mut grads, *input, Tensor::new(g.shape().to_vec(), vals)?);
                }
                Op::Embedding { table, indices } => {
                    let shape = self.value(*table).shape().to_vec();
                    let e = shape[1];
                    let mut gt = Tensor::zeros(&shape);
                    let dst = gt.values_mut();
                    for (row, &ix) in indices.iter().enumerate() {
                        for (acc, &gv) in dst[ix * e..(ix + 1) * e]
                            .iter_mut()
                            .zip(&g.values()[row * e..(row + 1) * e])
                        {
                            *acc += gv;
                        }
                    }
                    accumulate(&mut grads, *table, gt);
                }
                Op::Conv1d { input, kernels, bias } => {
                    let x = self.value(*input);
                    let w = self.value(*kernels);
                    let (b, c, l) = dims3(x, "conv1d input")?;
                    let (f, _, k) = dims3(w, "conv1d kernels")?;
                    let lo = l - k + 1;
                    let xv = x.values();
                    let wv = w.values();
                    let gv = g.values();
                    let mut gx = vec![0.0; xv.len()];
                    let mut gw = vec![0.0; wv.len()];
                    let mut gb = vec![0.0; f];
                    for bi in 0..b {
                        for fi in 0..f {
                            let gout = &gv[(bi * f + fi) * lo..(bi * f + fi + 1) * lo];
                            gb[fi] += gout.iter().sum::<f64>();
                            for ci in 0..c {
                                let xoff = (bi * c + ci) * l;
                                let woff = (fi * c + ci) * k;
                                for (t, &go) in gout.iter().enumerate() {
                                    if go == 0.0 {
                                        continue;
                                    }
                                    for j in 0..k {
                                        gw[woff + j] += go * xv[xoff + t + j];
                                        gx[xoff + t + j] += go * wv[woff + j];
                                    }
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *input, Tensor::new(x.shape().to_vec(), gx)?);
                    accumulate(&mut grads, *kernels, Tensor::new(w.shape().to_vec(), gw)?);
                    accumulate(&mut grads, *bias, Tensor::new(vec![f], gb)?);
                }
                Op::MaxPool1d { input, argmax } => {
                    let mut gx = Tensor::zeros(self.value(*input).shape());
                    let dst = gx.values_mut();
                    for (&pos, &gv) in argmax.iter().zip(g.values()) {
                        dst[pos] += gv;
                    }
                    accumulate(&mut grads, *input, gx);
                }
                Op::Reshape { input } => {
                    let shape = self.value(*input).shape().to_vec();
                    accumulate(&mut grads, *input, g.reshaped(&shape)?);
                }
                Op::ConcatCols { left, right } => {
                    let (b, p) = dims2(self.value(*left), "concat left")?;
                    let q = self.value(*right).shape()[1];
                    let gv = g.values();
                    let mut gl = Vec::with_capacity(b * p);
                    let mut gr = Vec::with_capacity(b * q);
                    for i in 0..b {
                        let row = &gv[i * (p + q)..(i + 1) * (p + q)];
                        gl.extend_from_slice(&row[..p]);
                        gr.extend_from_slice(&row[p..]);
                    }
                    accumulate(&mut grads, *left, Tensor::new(vec![b, p], gl)?);
                    accumulate(&mut grads, *right, Tensor::new(vec![b, q], gr)?);
                }
            }
            // Keep gradients of leaves; interior values are no longer needed.
            if matches!(node.op, Op::Leaf) {
                grads[id] = Some(g);
            }
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], var: Var, g: Tensor) {
    match &mut grads[var.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
