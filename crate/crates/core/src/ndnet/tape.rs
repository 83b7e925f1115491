//! Tape-based reverse-mode differentiation over vector operations.
//!
//! A [`Tape`] borrows a [`ParamSet`] and records every operation of a forward
//! pass as a node. Parameters are never copied onto the tape: nodes created by
//! [`Tape::param`] and [`Tape::gather`] read straight from the borrowed set, and
//! [`Tape::backward`] routes their adjoints into a [`GradBuffer`] that is keyed
//! by [`ParamId`]. Embedding rows are accumulated sparsely.
//!
//! Each tape is single-use: build the graph, read values, call `backward` once.
//! Separate tapes over the same parameters can run on different threads.

use std::collections::{BTreeMap, HashMap};

use super::tensor::{ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Probabilities below this are clamped before taking a logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Gather { table: ParamId, row: usize },
    MatVec { w: NodeId, x: NodeId },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Concat(Vec<NodeId>),
    Slice { x: NodeId, start: usize },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Softmax(NodeId),
    Dot(NodeId, NodeId),
    WeightedSum { weights: NodeId, items: Vec<NodeId> },
    CrossEntropy { target: Vec<f64>, p_hat: NodeId },
    Scale(NodeId, f64),
}

#[derive(Debug)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    // empty for `Op::Param`; those read from the parameter set
    value: Vec<f64>,
    requires_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, NodeId>,
    relu_margin: f64,
    relu_pattern: Vec<bool>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
            relu_margin: f64::INFINITY,
            relu_pattern: Vec::new(),
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<f64>, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            shape,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        let node = &self.nodes[id.0];
        match node.op {
            Op::Param(p) => self.params.get(p).data(),
            _ => &node.value,
        }
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.value(id)[0]
    }

    pub fn tensor(&self, id: NodeId) -> Tensor {
        Tensor::from_vec(self.shape(id), self.value(id).to_vec()).expect("node shape is consistent")
    }

    /// Smallest |x| seen at any ReLU input so far.
    pub fn relu_margin(&self) -> f64 {
        self.relu_margin
    }

    /// Which ReLU inputs were strictly positive, in evaluation order.
    pub fn relu_pattern(&self) -> &[bool] {
        &self.relu_pattern
    }

    /// Every parameter coordinate this graph reads, in ascending order.
    pub(crate) fn touched_coordinates(&self) -> Vec<super::gradcheck::Coordinate> {
        let mut seen = std::collections::BTreeSet::new();
        for node in &self.nodes {
            match node.op {
                Op::Param(p) => {
                    seen.extend((0..self.params.get(p).len()).map(|i| (p, i)));
                }
                Op::Gather { table, row } => {
                    let width = node.value.len();
                    seen.extend((row * width..(row + 1) * width).map(|i| (table, i)));
                }
                _ => {}
            }
        }
        seen.into_iter()
            .map(|(param, index)| super::gradcheck::Coordinate { param, index })
            .collect()
    }

    /// A constant vector that receives no gradient.
    pub fn input(&mut self, values: Vec<f64>) -> NodeId {
        let shape = vec![values.len()];
        self.push(Op::Input, shape, values, false)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.input(vec![0.0; len])
    }

    /// The whole parameter tensor as a node. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(&node) = self.param_nodes.get(&id) {
            return node;
        }
        let shape = self.params.get(id).shape().to_vec();
        let node = self.push(Op::Param(id), shape, Vec::new(), true);
        self.param_nodes.insert(id, node);
        node
    }

    /// Row `row` of a rank-2 parameter (embedding lookup).
    pub fn gather(&mut self, table: ParamId, row: usize) -> Result<NodeId> {
        let values = self.params.get(table).row(row)?.to_vec();
        let shape = vec![values.len()];
        Ok(self.push(Op::Gather { table, row }, shape, values, true))
    }

    /// `w · x` for a matrix node `w` of shape `[m, n]` and a vector `x` of length `n`.
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId> {
        let (m, n) = match self.shape(w) {
            [m, n] => (*m, *n),
            other => return Err(Error::Shape(format!("matvec needs a matrix, got {other:?}"))),
        };
        let xv = self.value(x);
        if xv.len() != n {
            return Err(Error::Shape(format!("matvec: [{m}, {n}] times vector of {}", xv.len())));
        }
        let wv = self.value(w);
        let out: Vec<f64> = wv
            .chunks_exact(n)
            .map(|row| row.iter().zip(xv).map(|(a, b)| a * b).sum())
            .collect();
        let rg = self.needs(&[w, x]);
        Ok(self.push(Op::MatVec { w, x }, vec![m], out, rg))
    }

    fn same_len(&self, a: NodeId, b: NodeId, what: &str) -> Result<()> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la != lb {
            return Err(Error::Shape(format!("{what}: lengths {la} and {lb}")));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b, "add")?;
        let out: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let rg = self.needs(&[a, b]);
        let shape = self.shape(a).to_vec();
        Ok(self.push(Op::Add(a, b), shape, out, rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b, "mul")?;
        let out: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let rg = self.needs(&[a, b]);
        let shape = self.shape(a).to_vec();
        Ok(self.push(Op::Mul(a, b), shape, out, rg))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let out: Vec<f64> = parts.iter().flat_map(|&p| self.value(p).iter().copied()).collect();
        let rg = self.needs(parts);
        let shape = vec![out.len()];
        self.push(Op::Concat(parts.to_vec()), shape, out, rg)
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let xv = self.value(x);
        if start + len > xv.len() {
            return Err(Error::Shape(format!(
                "slice [{start}, {}) of vector of length {}",
                start + len,
                xv.len()
            )));
        }
        let out = xv[start..start + len].to_vec();
        let rg = self.needs(&[x]);
        Ok(self.push(Op::Slice { x, start }, vec![len], out, rg))
    }

    fn unary(&mut self, x: NodeId, op: Op, f: impl Fn(f64) -> f64) -> NodeId {
        let out: Vec<f64> = self.value(x).iter().map(|&v| f(v)).collect();
        let rg = self.needs(&[x]);
        let shape = self.shape(x).to_vec();
        self.push(op, shape, out, rg)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Tanh(x), f64::tanh)
    }

    /// `max(0, x)`; the subgradient at 0 is 0.
    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let mut margin = self.relu_margin;
        for &v in self.value(x) {
            margin = margin.min(v.abs());
        }
        self.relu_margin = margin;
        let signs: Vec<bool> = self.value(x).iter().map(|&v| v > 0.0).collect();
        self.relu_pattern.extend(signs);
        self.unary(x, Op::Relu(x), |v| v.max(0.0))
    }

    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let out = softmax_values(self.value(x))?;
        let rg = self.needs(&[x]);
        let shape = self.shape(x).to_vec();
        Ok(self.push(Op::Softmax(x), shape, out, rg))
    }

    /// Inner product; a length-1 node.
    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_len(a, b, "dot")?;
        let s: f64 = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Op::Dot(a, b), vec![1], vec![s], rg))
    }

    /// `Σ_t weights[t] · items[t]`.
    pub fn weighted_sum(&mut self, weights: NodeId, items: &[NodeId]) -> Result<NodeId> {
        let w = self.value(weights);
        if w.len() != items.len() || items.is_empty() {
            return Err(Error::Shape(format!(
                "weighted_sum: {} weights for {} items",
                w.len(),
                items.len()
            )));
        }
        let width = self.value(items[0]).len();
        let mut out = vec![0.0; width];
        for (&wt, &item) in w.iter().zip(items) {
            let iv = self.value(item);
            if iv.len() != width {
                return Err(Error::Shape("weighted_sum: ragged items".into()));
            }
            for (o, v) in out.iter_mut().zip(iv) {
                *o += wt * v;
            }
        }
        let mut deps = items.to_vec();
        deps.push(weights);
        let rg = self.needs(&deps);
        Ok(self.push(
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
            vec![width],
            out,
            rg,
        ))
    }

    /// `−Σ target_i · ln(max(p_hat_i, LOG_CLAMP))`.
    pub fn cross_entropy(&mut self, target: &[f64], p_hat: NodeId) -> Result<NodeId> {
        let loss = cross_entropy_values(target, self.value(p_hat))?;
        let rg = self.needs(&[p_hat]);
        Ok(self.push(
            Op::CrossEntropy {
                target: target.to_vec(),
                p_hat,
            },
            vec![1],
            vec![loss],
            rg,
        ))
    }

    pub fn scale(&mut self, x: NodeId, factor: f64) -> NodeId {
        self.unary(x, Op::Scale(x, factor), |v| v * factor)
    }

    /// `y = W x + b` with `W`, `b` taken from the parameter set.
    pub fn affine(&mut self, w: ParamId, b: ParamId, x: NodeId) -> Result<NodeId> {
        let wn = self.param(w);
        let bn = self.param(b);
        let wx = self.matvec(wn, x)?;
        self.add(wx, bn)
    }

    /// Reverse sweep from the scalar node `loss`, seeded with `seed`.
    /// Parameter gradients are added into `grads`.
    pub fn backward(&self, loss: NodeId, seed: f64, grads: &mut GradBuffer) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Shape("backward needs a scalar loss".into()));
        }
        let mut adj: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![seed]);
        let mut sweep = Sweep {
            tape: self,
            adj: &mut adj,
            grads,
        };
        for i in (0..=loss.0).rev() {
            let Some(g) = sweep.adj[i].take() else {
                continue;
            };
            sweep.propagate(i, &g);
        }
        Ok(())
    }
}

struct Sweep<'a, 't, 'p> {
    tape: &'t Tape<'p>,
    adj: &'a mut Vec<Option<Vec<f64>>>,
    grads: &'a mut GradBuffer,
}

impl Sweep<'_, '_, '_> {
    /// Adjoint slot for `node`, or `None` when it needs no gradient.
    fn slot(&mut self, node: NodeId) -> Option<&mut [f64]> {
        let n = &self.tape.nodes[node.0];
        if !n.requires_grad {
            return None;
        }
        if let Op::Param(p) = n.op {
            return Some(self.grads.dense_mut(p));
        }
        let len = n.value.len();
        Some(self.adj[node.0].get_or_insert_with(|| vec![0.0; len]))
    }

    fn propagate(&mut self, i: usize, g: &[f64]) {
        let tape = self.tape;
        let node = &tape.nodes[i];
        match &node.op {
            Op::Input | Op::Param(_) => {}
            Op::Gather { table, row } => self.grads.add_row(*table, *row, g),
            Op::MatVec { w, x } => {
                let wv = tape.value(*w);
                let xv = tape.value(*x);
                let n = xv.len();
                if let Some(dw) = self.slot(*w) {
                    for (r, &gr) in g.iter().enumerate() {
                        if gr != 0.0 {
                            for (d, &xc) in dw[r * n..(r + 1) * n].iter_mut().zip(xv) {
                                *d += gr * xc;
                            }
                        }
                    }
                }
                if let Some(dx) = self.slot(*x) {
                    for (r, &gr) in g.iter().enumerate() {
                        if gr != 0.0 {
                            for (d, &wc) in dx.iter_mut().zip(&wv[r * n..(r + 1) * n]) {
                                *d += gr * wc;
                            }
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                for id in [*a, *b] {
                    if let Some(d) = self.slot(id) {
                        add_into(d, g);
                    }
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (tape.value(*a), tape.value(*b));
                if let Some(d) = self.slot(*a) {
                    for ((d, gi), bi) in d.iter_mut().zip(g).zip(bv) {
                        *d += gi * bi;
                    }
                }
                if let Some(d) = self.slot(*b) {
                    for ((d, gi), ai) in d.iter_mut().zip(g).zip(av) {
                        *d += gi * ai;
                    }
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = tape.value(p).len();
                    if let Some(d) = self.slot(p) {
                        add_into(d, &g[offset..offset + len]);
                    }
                    offset += len;
                }
            }
            Op::Slice { x, start } => {
                if let Some(d) = self.slot(*x) {
                    add_into(&mut d[*start..*start + g.len()], g);
                }
            }
            Op::Sigmoid(x) => {
                let y = &node.value;
                if let Some(d) = self.slot(*x) {
                    for ((d, gi), yi) in d.iter_mut().zip(g).zip(y) {
                        *d += gi * yi * (1.0 - yi);
                    }
                }
            }
            Op::Tanh(x) => {
                let y = &node.value;
                if let Some(d) = self.slot(*x) {
                    for ((d, gi), yi) in d.iter_mut().zip(g).zip(y) {
                        *d += gi * (1.0 - yi * yi);
                    }
                }
            }
            Op::Relu(x) => {
                let xv = tape.value(*x);
                if let Some(d) = self.slot(*x) {
                    for ((d, gi), xi) in d.iter_mut().zip(g).zip(xv) {
                        if *xi > 0.0 {
                            *d += gi;
                        }
                    }
                }
            }
            Op::Softmax(x) => {
                let y = &node.value;
                let s: f64 = g.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                if let Some(d) = self.slot(*x) {
                    for ((d, gi), yi) in d.iter_mut().zip(g).zip(y) {
                        *d += yi * (gi - s);
                    }
                }
            }
            Op::Dot(a, b) => {
                let (av, bv) = (tape.value(*a), tape.value(*b));
                let g0 = g[0];
                if let Some(d) = self.slot(*a) {
                    for (d, bi) in d.iter_mut().zip(bv) {
                        *d += g0 * bi;
                    }
                }
                if let Some(d) = self.slot(*b) {
                    for (d, ai) in d.iter_mut().zip(av) {
                        *d += g0 * ai;
                    }
                }
            }
            Op::WeightedSum { weights, items } => {
                let wv = tape.value(*weights);
                if let Some(d) = self.slot(*weights) {
                    for (dt, &item) in d.iter_mut().zip(items) {
                        *dt += g.iter().zip(tape.value(item)).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                for (&wt, &item) in wv.iter().zip(items) {
                    if let Some(d) = self.slot(item) {
                        for (d, gi) in d.iter_mut().zip(g) {
                            *d += wt * gi;
                        }
                    }
                }
            }
            Op::CrossEntropy { target, p_hat } => {
                let pv = tape.value(*p_hat);
                let g0 = g[0];
                if let Some(d) = self.slot(*p_hat) {
                    for ((d, t), p) in d.iter_mut().zip(target).zip(pv) {
                        if *p > LOG_CLAMP {
                            *d -= g0 * t / p;
                        }
                    }
                }
            }
            Op::Scale(x, factor) => {
                if let Some(d) = self.slot(*x) {
                    for (d, gi) in d.iter_mut().zip(g) {
                        *d += factor * gi;
                    }
                }
            }
        }
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_values(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Empty("softmax of an empty vector"));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("softmax input contains {bad}")));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub(crate) fn cross_entropy_values(target: &[f64], p_hat: &[f64]) -> Result<f64> {
    if target.len() != p_hat.len() {
        return Err(Error::Shape(format!(
            "cross entropy: target has {} classes, prediction {}",
            target.len(),
            p_hat.len()
        )));
    }
    let loss: f64 = target
        .iter()
        .zip(p_hat)
        .filter(|(t, _)| **t != 0.0)
        .map(|(t, p)| -t * p.max(LOG_CLAMP).ln())
        .sum();
    // -0.0 for a perfect prediction reads badly in reports
    Ok(loss + 0.0)
}

/// Parameter gradients accumulated by one or more backward sweeps.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    sizes: Vec<usize>,
    dense: Vec<Option<Vec<f64>>>,
    rows: BTreeMap<(ParamId, usize), Vec<f64>>,
}

impl GradBuffer {
    pub fn new(params: &ParamSet) -> Self {
        GradBuffer {
            sizes: params.tensors().iter().map(Tensor::len).collect(),
            dense: vec![None; params.len()],
            rows: BTreeMap::new(),
        }
    }

    fn dense_mut(&mut self, p: ParamId) -> &mut [f64] {
        let size = self.sizes[p.0];
        self.dense[p.0].get_or_insert_with(|| vec![0.0; size])
    }

    fn add_row(&mut self, table: ParamId, row: usize, g: &[f64]) {
        let slot = self
            .rows
            .entry((table, row))
            .or_insert_with(|| vec![0.0; g.len()]);
        add_into(slot, g);
    }

    /// Adds `other` into `self`. Summation order is the call order.
    pub fn merge(&mut self, other: &GradBuffer) {
        for (i, g) in other.dense.iter().enumerate() {
            if let Some(g) = g {
                add_into(self.dense_mut(ParamId(i)), g);
            }
        }
        for (&(table, row), g) in &other.rows {
            self.add_row(table, row, g);
        }
    }

    /// Dense gradient tensors aligned with `params`.
    pub fn to_tensors(&self, params: &ParamSet) -> Vec<Tensor> {
        let mut out = params.zeros_like();
        for (i, g) in self.dense.iter().enumerate() {
            if let Some(g) = g {
                out[i].data_mut().copy_from_slice(g);
            }
        }
        for (&(table, row), g) in &self.rows {
            let cols = g.len();
            add_into(&mut out[table.0].data_mut()[row * cols..(row + 1) * cols], g);
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.dense.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
        for g in self.rows.values_mut() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_with(values: &[(&str, &[usize], Vec<f64>)]) -> ParamSet {
        let mut ps = ParamSet::new();
        for (name, shape, data) in values {
            ps.add(*name, Tensor::from_vec(shape, data.clone()).unwrap());
        }
        ps
    }

    #[test]
    fn matvec_gradients_match_hand_derivation() {
        // loss = sum(W x) with x constant: dL/dW[r][c] = x[c]
        let ps = params_with(&[("w", &[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])]);
        let mut tape = Tape::new(&ps);
        let w = tape.param(ParamId(0));
        let x = tape.input(vec![0.5, -1.0, 2.0]);
        let y = tape.matvec(w, x).unwrap();
        assert_eq!(tape.value(y), &[4.5, 9.0]);
        let ones = tape.input(vec![1.0, 1.0]);
        let loss = tape.dot(y, ones).unwrap();
        let mut grads = GradBuffer::new(&ps);
        tape.backward(loss, 1.0, &mut grads).unwrap();
        let g = grads.to_tensors(&ps);
        assert_eq!(g[0].data(), &[0.5, -1.0, 2.0, 0.5, -1.0, 2.0]);
    }

    #[test]
    fn gather_accumulates_sparse_rows() {
        let ps = params_with(&[("emb", &[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0])]);
        let mut tape = Tape::new(&ps);
        let a = tape.gather(ParamId(0), 1).unwrap();
        let b = tape.gather(ParamId(0), 1).unwrap();
        let s = tape.add(a, b).unwrap();
        let ones = tape.input(vec![1.0, 1.0]);
        let loss = tape.dot(s, ones).unwrap();
        let mut grads = GradBuffer::new(&ps);
        tape.backward(loss, 1.0, &mut grads).unwrap();
        assert_eq!(grads.to_tensors(&ps)[0].data(), &[0.0, 0.0, 2.0, 2.0, 0.0, 0.0]);
        assert!(tape.gather(ParamId(0), 3).is_err());
    }

    #[test]
    fn shape_errors_are_reported() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let a = tape.input(vec![1.0, 2.0]);
        let b = tape.input(vec![1.0]);
        assert!(matches!(tape.add(a, b), Err(Error::Shape(_))));
        assert!(tape.matvec(a, b).is_err());
        assert!(tape.cross_entropy(&[1.0], a).is_err());
    }

    #[test]
    fn merge_preserves_sum() {
        let ps = params_with(&[("w", &[2], vec![1.0, 1.0])]);
        let mut total = GradBuffer::new(&ps);
        for k in 1..=3 {
            let mut tape = Tape::new(&ps);
            let w = tape.param(ParamId(0));
            let x = tape.input(vec![k as f64, 0.0]);
            let loss = tape.dot(w, x).unwrap();
            let mut g = GradBuffer::new(&ps);
            tape.backward(loss, 1.0, &mut g).unwrap();
            total.merge(&g);
        }
        assert_eq!(total.to_tensors(&ps)[0].data(), &[6.0, 0.0]);
    }
}
