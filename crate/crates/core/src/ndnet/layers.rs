//! Recurrent encoder and attention pooling built on the tape.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{NodeId, Tape};
use super::tensor::{ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Uniform in ±√(6 / (rows + cols)).
pub fn xavier_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    uniform(&[rows, cols], bound, rng)
}

pub fn uniform<R: Rng>(shape: &[usize], bound: f64, rng: &mut R) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::from_vec(shape, data).expect("sized from shape")
}

/// How freshly registered weights are filled.
#[derive(Debug)]
pub enum Init<'r, R: Rng> {
    Zeros,
    Random(&'r mut R),
}

impl<R: Rng> Init<'_, R> {
    fn matrix(&mut self, rows: usize, cols: usize) -> Tensor {
        match self {
            Init::Zeros => Tensor::zeros(&[rows, cols]),
            Init::Random(rng) => xavier_uniform(rows, cols, *rng),
        }
    }

    /// A vector used as a single projection row (attention context).
    fn row_vector(&mut self, len: usize) -> Tensor {
        match self {
            Init::Zeros => Tensor::zeros(&[len]),
            Init::Random(rng) => {
                let bound = (6.0 / (len + 1) as f64).sqrt();
                uniform(&[len], bound, *rng)
            }
        }
    }

    /// Embedding table, uniform in ±0.05.
    pub fn embedding(&mut self, rows: usize, cols: usize) -> Tensor {
        match self {
            Init::Zeros => Tensor::zeros(&[rows, cols]),
            Init::Random(rng) => uniform(&[rows, cols], 0.05, *rng),
        }
    }
}

/// Affine map `W x + b`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn register<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        input: usize,
        output: usize,
        init: &mut Init<'_, R>,
    ) -> Self {
        Linear {
            weight: params.add(format!("{name}.weight"), init.matrix(output, input)),
            bias: params.add(format!("{name}.bias"), Tensor::zeros(&[output])),
        }
    }

    pub fn apply(&self, tape: &mut Tape<'_>, x: NodeId) -> Result<NodeId> {
        tape.affine(self.weight, self.bias, x)
    }
}

/// One direction of a long short-term memory recurrence.
///
/// `weight` has shape `[4H, D + H]` and acts on `[x_t, h_{t-1}]`; its row
/// blocks are the input, forget and output gates followed by the candidate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub hidden: usize,
}

impl LstmCell {
    pub fn register<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        input: usize,
        hidden: usize,
        init: &mut Init<'_, R>,
    ) -> Self {
        LstmCell {
            weight: params.add(format!("{name}.weight"), init.matrix(4 * hidden, input + hidden)),
            bias: params.add(format!("{name}.bias"), Tensor::zeros(&[4 * hidden])),
            hidden,
        }
    }

    /// One step; returns `(h_t, c_t)`.
    pub fn step(&self, tape: &mut Tape<'_>, x: NodeId, h: NodeId, c: NodeId) -> Result<(NodeId, NodeId)> {
        let hs = self.hidden;
        let xh = tape.concat(&[x, h]);
        let z = tape.affine(self.weight, self.bias, xh)?;
        let i = tape.slice(z, 0, hs)?;
        let f = tape.slice(z, hs, hs)?;
        let o = tape.slice(z, 2 * hs, hs)?;
        let g = tape.slice(z, 3 * hs, hs)?;
        let i = tape.sigmoid(i);
        let f = tape.sigmoid(f);
        let o = tape.sigmoid(o);
        let g = tape.tanh(g);
        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, g)?;
        let c_next = tape.add(keep, write)?;
        let squashed = tape.tanh(c_next);
        let h_next = tape.mul(o, squashed)?;
        Ok((h_next, c_next))
    }

    /// Runs the cell over `inputs` in order and returns every hidden state.
    pub fn run(&self, tape: &mut Tape<'_>, inputs: &[NodeId]) -> Result<Vec<NodeId>> {
        let mut h = tape.zeros(self.hidden);
        let mut c = tape.zeros(self.hidden);
        let mut out = Vec::with_capacity(inputs.len());
        for &x in inputs {
            (h, c) = self.step(tape, x, h, c)?;
            out.push(h);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstm {
    pub fn register<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        input: usize,
        hidden: usize,
        init: &mut Init<'_, R>,
    ) -> Self {
        BiLstm {
            forward: LstmCell::register(params, &format!("{name}.fwd"), input, hidden, init),
            backward: LstmCell::register(params, &format!("{name}.bwd"), input, hidden, init),
        }
    }

    pub fn state_width(&self) -> usize {
        self.forward.hidden + self.backward.hidden
    }

    /// Per-step `[h_fwd_t, h_bwd_t]` over exactly the given inputs.
    pub fn run(&self, tape: &mut Tape<'_>, inputs: &[NodeId]) -> Result<Vec<NodeId>> {
        let fwd = self.forward.run(tape, inputs)?;
        let reversed: Vec<NodeId> = inputs.iter().rev().copied().collect();
        let mut bwd = self.backward.run(tape, &reversed)?;
        bwd.reverse();
        Ok(fwd.iter().zip(&bwd).map(|(&f, &b)| tape.concat(&[f, b])).collect())
    }
}

/// Embeds `indices` and runs the bidirectional recurrence over the first
/// `true_len` positions. Positions at or beyond `true_len` get zero states.
pub fn bilstm_encode(
    tape: &mut Tape<'_>,
    embedding: ParamId,
    encoder: &BiLstm,
    indices: &[usize],
    true_len: usize,
) -> Result<Vec<NodeId>> {
    if true_len > indices.len() {
        return Err(Error::Shape(format!(
            "true length {true_len} exceeds sequence length {}",
            indices.len()
        )));
    }
    let vocab = tape.params().get(embedding).matrix_dims()?.0;
    if let Some(&bad) = indices.iter().find(|&&i| i >= vocab) {
        return Err(Error::Index { index: bad, len: vocab });
    }
    let inputs = indices[..true_len]
        .iter()
        .map(|&i| tape.gather(embedding, i))
        .collect::<Result<Vec<_>>>()?;
    let mut states = encoder.run(tape, &inputs)?;
    let width = encoder.state_width();
    for _ in true_len..indices.len() {
        states.push(tape.zeros(width));
    }
    Ok(states)
}

/// Additive attention followed by a projection to the sentence width.
///
/// `score_t = u · tanh(W h_t + b)`, `a = softmax(score)`, output
/// `P (Σ_t a_t h_t) + p`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AttentionPool {
    pub score: Linear,
    pub context: ParamId,
    pub projection: Linear,
    pub output: usize,
}

impl AttentionPool {
    pub fn register<R: Rng>(
        params: &mut ParamSet,
        name: &str,
        state: usize,
        attention: usize,
        output: usize,
        init: &mut Init<'_, R>,
    ) -> Self {
        let score = Linear::register(params, &format!("{name}.score"), state, attention, init);
        let context = params.add(format!("{name}.context"), init.row_vector(attention));
        let projection = Linear::register(params, &format!("{name}.proj"), state, output, init);
        AttentionPool {
            score,
            context,
            projection,
            output,
        }
    }

    /// Pools `states[..true_len]`; an empty prefix pools to the zero vector.
    pub fn pool(&self, tape: &mut Tape<'_>, states: &[NodeId], true_len: usize) -> Result<NodeId> {
        let states = &states[..true_len.min(states.len())];
        if states.is_empty() {
            return Ok(tape.zeros(self.output));
        }
        let u = tape.param(self.context);
        let mut scores = Vec::with_capacity(states.len());
        for &h in states {
            let a = self.score.apply(tape, h)?;
            let a = tape.tanh(a);
            scores.push(tape.dot(u, a)?);
        }
        let scores = tape.concat(&scores);
        let weights = tape.softmax(scores)?;
        let pooled = tape.weighted_sum(weights, states)?;
        self.projection.apply(tape, pooled)
    }
}

/// Free-function form of [`AttentionPool::pool`].
pub fn attention_pool(
    tape: &mut Tape<'_>,
    states: &[NodeId],
    true_len: usize,
    pool: &AttentionPool,
) -> Result<NodeId> {
    pool.pool(tape, states, true_len)
}
