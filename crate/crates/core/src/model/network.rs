use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{CiteLabel, Example};
use crate::error::{Error, Result};
use crate::ingest::{resolve_abstract, tokenize_encode, AzCategory, Corpus, Encoded, Vocabulary};
use crate::ndnet::{bilstm_encode, AttentionPool, BiLstm, Init, Linear, NodeId, ParamId, ParamSet, Tape};

/// Layer widths. Defaults follow the published configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub embed: usize,
    /// Per direction; encoder states are twice this wide.
    pub hidden: usize,
    pub attention: usize,
    /// Width of `x_query`, `x_title` and `x_abstract`.
    pub sentence: usize,
    pub l1: usize,
    pub l2: usize,
    pub az_hidden: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            embed: 200,
            hidden: 128,
            attention: 128,
            sentence: 128,
            l1: 256,
            l2: 256,
            az_hidden: 20,
        }
    }
}

impl ModelDims {
    /// A uniform small configuration for tests and desk-scale runs.
    pub fn small(width: usize) -> Self {
        ModelDims {
            embed: width,
            hidden: width,
            attention: width,
            sentence: width,
            l1: 2 * width,
            l2: 2 * width,
            az_hidden: 20.min(2 * width),
        }
    }
}

/// Token budgets per input field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxLens {
    pub query: usize,
    pub title: usize,
    #[serde(rename = "abstract")]
    pub abstract_text: usize,
}

impl Default for MaxLens {
    fn default() -> Self {
        MaxLens {
            query: 64,
            title: 32,
            abstract_text: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub dims: ModelDims,
    pub max_lens: MaxLens,
}

/// Embedding, bidirectional recurrence and attention pooling for one field.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SentenceEncoder {
    pub recurrence: BiLstm,
    pub pool: AttentionPool,
}

impl SentenceEncoder {
    fn register<R: Rng>(params: &mut ParamSet, name: &str, dims: &ModelDims, init: &mut Init<'_, R>) -> Self {
        let recurrence = BiLstm::register(params, &format!("{name}.lstm"), dims.embed, dims.hidden, init);
        let pool = AttentionPool::register(
            params,
            &format!("{name}.attn"),
            recurrence.state_width(),
            dims.attention,
            dims.sentence,
            init,
        );
        SentenceEncoder { recurrence, pool }
    }

    pub fn encode(&self, tape: &mut Tape<'_>, embedding: ParamId, input: &Encoded) -> Result<NodeId> {
        let states = bilstm_encode(tape, embedding, &self.recurrence, &input.indices, input.true_len)?;
        self.pool.pool(tape, &states, input.true_len)
    }
}

/// Parameter handles of the joint network. Values live in a [`ParamSet`].
///
/// The single-task baseline uses the same layout and simply never reads the
/// zoning head, so both variants share checkpoints and initialisation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub embedding: ParamId,
    pub query: SentenceEncoder,
    pub title: SentenceEncoder,
    pub abstract_encoder: SentenceEncoder,
    /// `W1`, `b1` over `[x_title, x_abstract]`.
    pub l1: Linear,
    /// `W2`, `b2` over `[x_query, L1]`.
    pub l2: Linear,
    /// `W3`, `b3`.
    pub cite: Linear,
    pub az_hidden: Linear,
    pub az_out: Linear,
}

/// Tape nodes of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Graph {
    pub x_query: NodeId,
    pub x_title: NodeId,
    pub x_abstract: NodeId,
    pub l1: NodeId,
    pub l2: NodeId,
    pub p_cite: NodeId,
    pub p_az: Option<NodeId>,
}

/// Encoded query, title and abstract of one example.
#[derive(Debug, Clone, Copy)]
pub struct PairInputs<'a> {
    pub query: &'a Encoded,
    pub title: &'a Encoded,
    pub abstract_text: &'a Encoded,
}

/// Values of one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardOutput {
    /// `(cite, not_cite)`.
    pub p_cite: [f64; 2],
    /// Over [`AzCategory::ALL`]; absent for the single-task network.
    pub p_az: Option<[f64; 5]>,
    pub x_query: Vec<f64>,
    pub x_title: Vec<f64>,
    pub x_abstract: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
}

impl Model {
    /// Registers every tensor in a fixed order.
    pub fn new<R: Rng>(config: ModelConfig, init: &mut Init<'_, R>) -> (Self, ParamSet) {
        let d = config.dims;
        let mut params = ParamSet::new();
        let embedding = params.add("embedding", init.embedding(config.vocab_size, d.embed));
        let query = SentenceEncoder::register(&mut params, "query", &d, init);
        let title = SentenceEncoder::register(&mut params, "title", &d, init);
        let abstract_encoder = SentenceEncoder::register(&mut params, "abstract", &d, init);
        let l1 = Linear::register(&mut params, "l1", 2 * d.sentence, d.l1, init);
        let l2 = Linear::register(&mut params, "l2", d.sentence + d.l1, d.l2, init);
        let cite = Linear::register(&mut params, "cite", d.l2, 2, init);
        let az_hidden = Linear::register(&mut params, "az_hidden", d.sentence, d.az_hidden, init);
        let az_out = Linear::register(&mut params, "az_out", d.az_hidden, AzCategory::ALL.len(), init);
        let model = Model {
            config,
            embedding,
            query,
            title,
            abstract_encoder,
            l1,
            l2,
            cite,
            az_hidden,
            az_out,
        };
        (model, params)
    }

    /// Layout with all-zero values, for shape validation.
    pub fn layout(config: ModelConfig) -> (Self, ParamSet) {
        Model::new::<rand_chacha::ChaCha8Rng>(config, &mut Init::Zeros)
    }

    /// The three sentence vectors.
    pub fn encode(&self, tape: &mut Tape<'_>, inputs: &PairInputs<'_>) -> Result<(NodeId, NodeId, NodeId)> {
        let q = self.query.encode(tape, self.embedding, inputs.query)?;
        let t = self.title.encode(tape, self.embedding, inputs.title)?;
        let a = self.abstract_encoder.encode(tape, self.embedding, inputs.abstract_text)?;
        Ok((q, t, a))
    }

    /// Zoning head on an encoded query.
    pub fn zoning(&self, tape: &mut Tape<'_>, x_query: NodeId) -> Result<NodeId> {
        let h = self.az_hidden.apply(tape, x_query)?;
        let h = tape.relu(h);
        let z = self.az_out.apply(tape, h)?;
        tape.softmax(z)
    }

    /// Records the network; the zoning head only when `with_zoning`.
    pub fn build(&self, tape: &mut Tape<'_>, inputs: &PairInputs<'_>, with_zoning: bool) -> Result<Graph> {
        let (x_query, x_title, x_abstract) = self.encode(tape, inputs)?;
        let ta = tape.concat(&[x_title, x_abstract]);
        let l1 = self.l1.apply(tape, ta)?;
        let l1 = tape.relu(l1);
        let ql = tape.concat(&[x_query, l1]);
        let l2 = self.l2.apply(tape, ql)?;
        let l2 = tape.relu(l2);
        let logits = self.cite.apply(tape, l2)?;
        let p_cite = tape.softmax(logits)?;
        let p_az = if with_zoning {
            Some(self.zoning(tape, x_query)?)
        } else {
            None
        };
        Ok(Graph {
            x_query,
            x_title,
            x_abstract,
            l1,
            l2,
            p_cite,
            p_az,
        })
    }

    /// `CE(p_cite) + α·CE(p_az)`. With `α = 0` or without a zoning head the
    /// zoning term is not recorded at all, so gradients match the
    /// single-task network exactly.
    pub fn loss(
        &self,
        tape: &mut Tape<'_>,
        inputs: &PairInputs<'_>,
        cite_label: CiteLabel,
        az_label: AzCategory,
        alpha: Option<f64>,
    ) -> Result<LossNodes> {
        let with_zoning = matches!(alpha, Some(a) if a != 0.0);
        let g = self.build(tape, inputs, with_zoning)?;
        let cite = tape.cross_entropy(&cite_label.one_hot(), g.p_cite)?;
        let (total, az) = match (g.p_az, alpha) {
            (Some(p_az), Some(a)) => {
                let az = tape.cross_entropy(&az_label.one_hot(), p_az)?;
                let weighted = tape.scale(az, a);
                (tape.add(cite, weighted)?, Some(az))
            }
            _ => (cite, None),
        };
        Ok(LossNodes { total, cite, az })
    }

    fn read(tape: &Tape<'_>, g: &Graph) -> ForwardOutput {
        let p = tape.value(g.p_cite);
        ForwardOutput {
            p_cite: [p[0], p[1]],
            p_az: g.p_az.map(|n| {
                let v = tape.value(n);
                [v[0], v[1], v[2], v[3], v[4]]
            }),
            x_query: tape.value(g.x_query).to_vec(),
            x_title: tape.value(g.x_title).to_vec(),
            x_abstract: tape.value(g.x_abstract).to_vec(),
            l1: tape.value(g.l1).to_vec(),
            l2: tape.value(g.l2).to_vec(),
        }
    }

    /// Forward pass of the joint network.
    pub fn forward_multitask(&self, params: &ParamSet, inputs: &PairInputs<'_>) -> Result<ForwardOutput> {
        let mut tape = Tape::new(params);
        let g = self.build(&mut tape, inputs, true)?;
        Ok(Self::read(&tape, &g))
    }

    /// Forward pass of the single-task baseline; `p_az` is `None`.
    pub fn forward_single(&self, params: &ParamSet, inputs: &PairInputs<'_>) -> Result<ForwardOutput> {
        let mut tape = Tape::new(params);
        let g = self.build(&mut tape, inputs, false)?;
        Ok(Self::read(&tape, &g))
    }

    /// Zoning distribution of a query on its own.
    pub fn zoning_probs(&self, params: &ParamSet, query: &Encoded) -> Result<[f64; 5]> {
        let mut tape = Tape::new(params);
        let x = self.query.encode(&mut tape, self.embedding, query)?;
        let p = self.zoning(&mut tape, x)?;
        let v = tape.value(p);
        Ok([v[0], v[1], v[2], v[3], v[4]])
    }

    /// Most probable category for a query.
    pub fn classify_az(&self, params: &ParamSet, query: &Encoded) -> Result<AzCategory> {
        Ok(classify_az(&self.zoning_probs(params, query)?))
    }
}

/// Loss nodes recorded by [`Model::loss`].
#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub total: NodeId,
    pub cite: NodeId,
    pub az: Option<NodeId>,
}

/// `CE(p_cite) + α·CE(p_az)` on computed outputs. With `α = 0` this is
/// exactly the citation loss.
pub fn joint_loss(out: &ForwardOutput, cite_label: CiteLabel, az_label: AzCategory, alpha: f64) -> Result<f64> {
    let cite = crate::ndnet::cross_entropy(
        &crate::ndnet::Tensor::vector(cite_label.one_hot().to_vec()),
        &crate::ndnet::Tensor::vector(out.p_cite.to_vec()),
    )?;
    if alpha == 0.0 {
        return Ok(cite);
    }
    let p_az = out
        .p_az
        .ok_or_else(|| Error::Shape("joint loss needs a zoning distribution".into()))?;
    let az = crate::ndnet::cross_entropy(
        &crate::ndnet::Tensor::vector(az_label.one_hot().to_vec()),
        &crate::ndnet::Tensor::vector(p_az.to_vec()),
    )?;
    Ok(joint_loss_terms(cite, az, alpha))
}

/// `cite + α·az`.
///
/// ```
/// use citeaz::model::joint_loss_terms;
///
/// assert!((joint_loss_terms(0.5, 1.0, 0.2) - 0.7).abs() < 1e-15);
/// ```
pub fn joint_loss_terms(cite: f64, az: f64, alpha: f64) -> f64 {
    cite + alpha * az
}

/// Cite iff `p(cite) > p(not_cite)`; ties are not cited.
pub fn decide(p_cite: [f64; 2]) -> CiteLabel {
    if p_cite[0] > p_cite[1] {
        CiteLabel::Cite
    } else {
        CiteLabel::NotCite
    }
}

/// Arg-max category; ties go to the earlier category in [`AzCategory::ALL`].
pub fn classify_az(p_az: &[f64; 5]) -> AzCategory {
    let mut best = 0;
    for i in 1..5 {
        if p_az[i] > p_az[best] {
            best = i;
        }
    }
    AzCategory::ALL[best]
}

/// Token indices for every query and candidate an experiment touches.
#[derive(Debug, Clone, Default)]
pub struct InputCache {
    queries: HashMap<String, Encoded>,
    titles: HashMap<String, Encoded>,
    abstracts: HashMap<String, Encoded>,
}

impl InputCache {
    /// Encodes the query and candidate of every example. The query text is
    /// that of the first record with the example's `query_id`.
    pub fn build(corpus: &Corpus, vocab: &Vocabulary, lens: MaxLens, examples: &[Example]) -> Result<Self> {
        let mut texts: HashMap<&str, &str> = HashMap::new();
        for q in &corpus.queries {
            texts.entry(q.query_id.as_str()).or_insert(q.text.as_str());
        }
        let mut cache = InputCache::default();
        for e in examples {
            if !cache.queries.contains_key(&e.query_id) {
                let text = texts
                    .get(e.query_id.as_str())
                    .ok_or_else(|| Error::Lookup(format!("query `{}`", e.query_id)))?;
                cache
                    .queries
                    .insert(e.query_id.clone(), tokenize_encode(text, vocab, lens.query)?);
            }
            if !cache.titles.contains_key(&e.candidate_id) {
                let paper = corpus.paper(&e.candidate_id)?;
                let abstract_text = resolve_abstract(paper)?;
                cache
                    .titles
                    .insert(e.candidate_id.clone(), tokenize_encode(&paper.title, vocab, lens.title)?);
                cache.abstracts.insert(
                    e.candidate_id.clone(),
                    tokenize_encode(abstract_text, vocab, lens.abstract_text)?,
                );
            }
        }
        Ok(cache)
    }

    pub fn query(&self, query_id: &str) -> Result<&Encoded> {
        self.queries
            .get(query_id)
            .ok_or_else(|| Error::Lookup(format!("query `{query_id}`")))
    }

    pub fn pair(&self, query_id: &str, candidate_id: &str) -> Result<PairInputs<'_>> {
        let missing = || Error::Lookup(format!("candidate `{candidate_id}`"));
        Ok(PairInputs {
            query: self.query(query_id)?,
            title: self.titles.get(candidate_id).ok_or_else(missing)?,
            abstract_text: self.abstracts.get(candidate_id).ok_or_else(missing)?,
        })
    }

    pub fn example(&self, e: &Example) -> Result<PairInputs<'_>> {
        self.pair(&e.query_id, &e.candidate_id)
    }
}

/// The three sentence vectors of one example under `params`.
pub fn encode_inputs(
    model: &Model,
    params: &ParamSet,
    cache: &InputCache,
    example: &Example,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let inputs = cache.example(example)?;
    let mut tape = Tape::new(params);
    let (q, t, a) = model.encode(&mut tape, &inputs)?;
    Ok((tape.value(q).to_vec(), tape.value(t).to_vec(), tape.value(a).to_vec()))
}
