use crate::attention::{
    attention_param_specs, average_pool, context_attention, self_attention, AttentionTrace, ContextAttention, Pooled,
};
use crate::data::{Interview, Label, Modality, QaPair};
use crate::encoders::{bigru_param_specs, encode_tokens, gru_param_specs, BiGru, GruCell, Sequence};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::params::{Init, ParamSpec, ParamStore};
use crate::tensor::Tensor;

use super::config::{HireNetConfig, Variant, EMBED_ANSWER, EMBED_WORDS};

/// Half-width of the uniform embedding initialiser.
pub const EMBED_INIT: f64 = 0.05;

/// Every parameter a configuration needs, in initialisation order.
pub fn param_specs(c: &HireNetConfig) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    if c.variant.is_hierarchical() || c.modality == Modality::Text {
        specs.push(ParamSpec::new(
            EMBED_WORDS,
            vec![c.vocab_size, c.embed_dim],
            Init::Uniform(EMBED_INIT),
        ));
    }
    if c.answer_embedding() == Some(EMBED_ANSWER) {
        specs.push(ParamSpec::new(
            EMBED_ANSWER,
            vec![c.vocab_size, c.embed_dim],
            Init::Uniform(EMBED_INIT),
        ));
    }
    specs.extend(bigru_param_specs("answer", c.answer_input_dim(), c.low_hidden));
    if c.variant.is_hierarchical() {
        let ctx = |d: usize| c.variant.uses_context().then_some(d);
        specs.extend(gru_param_specs("question.gru", c.embed_dim, c.question_hidden));
        if c.variant.has_attention() {
            specs.extend(attention_param_specs(
                "low_attn",
                c.low_attn(),
                c.low_state_dim(),
                ctx(c.question_hidden),
            ));
        }
        specs.extend(bigru_param_specs("high", c.high_input_dim(), c.high_hidden));
        if c.variant.uses_context() {
            specs.extend(gru_param_specs("job.gru", c.embed_dim, c.job_hidden));
        }
        if c.variant.has_attention() {
            specs.extend(attention_param_specs(
                "high_attn",
                c.high_attn(),
                c.high_state_dim(),
                ctx(c.job_hidden),
            ));
        }
    }
    specs.push(ParamSpec::new("classifier.w", vec![1, c.representation_dim()], Init::Glorot));
    specs.push(ParamSpec::new("classifier.b", vec![1], Init::Zeros));
    specs
}

/// Minimum padded sizes for one forward pass. Each sequence is padded with
/// masked steps up to `max(actual, requested)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Padding {
    pub questions: usize,
    pub answer_frames: usize,
    pub question_tokens: usize,
    pub job_tokens: usize,
}

impl Padding {
    pub fn none() -> Self {
        Padding::default()
    }

    /// Pads every interview to the largest sizes found in `batch`.
    pub fn for_batch(batch: &[&Interview]) -> Self {
        let mut p = Padding::none();
        for i in batch {
            p.questions = p.questions.max(i.qa.len());
            p.job_tokens = p.job_tokens.max(i.job_tokens.len());
            for qa in &i.qa {
                p.answer_frames = p.answer_frames.max(qa.answer.len());
                p.question_tokens = p.question_tokens.max(qa.q_tokens.len());
            }
        }
        p
    }
}

/// Graph handles produced by one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    /// `ỹ`, a one-element node.
    pub score: NodeId,
    /// The vector handed to the classifier (`v` for hierarchical variants,
    /// the mean answer summary for the answer-wise baseline).
    pub representation: NodeId,
    /// Per-answer scores of the answer-wise baseline; empty otherwise.
    pub answer_scores: Vec<NodeId>,
    low_alphas: Vec<NodeId>,
    high_alphas: Option<NodeId>,
    answer_lens: Vec<usize>,
}

impl Forward {
    /// Cross-entropy against `label`. The answer-wise baseline averages the
    /// loss of its per-answer predictions.
    pub fn loss(&self, g: &mut Graph, label: Label) -> Result<NodeId> {
        let y = label.target();
        if self.answer_scores.is_empty() {
            return g.bce(self.score, y);
        }
        let w = 1.0 / self.answer_scores.len() as f64;
        let terms = self
            .answer_scores
            .iter()
            .map(|&s| Ok((w, g.bce(s, y)?)))
            .collect::<Result<Vec<_>>>()?;
        g.combine(&terms, 0.0)
    }

    /// Attention weights restricted to unmasked positions. Empty for the
    /// answer-wise baseline.
    pub fn trace(&self, g: &Graph) -> AttentionTrace {
        let Some(high) = self.high_alphas else {
            return AttentionTrace::default();
        };
        let frames = self
            .low_alphas
            .iter()
            .zip(&self.answer_lens)
            .map(|(&a, &l)| g.value(a).data()[..l].to_vec())
            .collect();
        let n = self.answer_lens.len();
        AttentionTrace::from_alphas(frames, g.value(high).data()[..n].to_vec())
    }
}

fn check_interview(c: &HireNetConfig, interview: &Interview) -> Result<()> {
    let id = &interview.candidate_id;
    if interview.qa.is_empty() {
        return Err(Error::degenerate(format!("interview {id} has no question/answer pairs")));
    }
    if c.variant.is_hierarchical() && interview.job_tokens.is_empty() {
        return Err(Error::degenerate(format!("interview {id} has an empty job title")));
    }
    for (i, qa) in interview.qa.iter().enumerate() {
        if qa.answer.is_empty() {
            return Err(Error::degenerate(format!("answer {i} of {id} has no frames")));
        }
        if c.variant.is_hierarchical() && qa.q_tokens.is_empty() {
            return Err(Error::degenerate(format!("question {i} of {id} has no tokens")));
        }
        if qa.modality != c.modality {
            return Err(Error::contract(format!(
                "answer {i} of {id} is {} but the model reads {}",
                qa.modality, c.modality
            )));
        }
        if let Some(t) = qa.answer.iter().position(|r| r.len() != c.feature_dim) {
            return Err(Error::Shape {
                op: "answer frame",
                left: vec![c.feature_dim],
                right: vec![qa.answer[t].len()],
            });
        }
    }
    Ok(())
}

fn answer_sequence(
    g: &mut Graph,
    c: &HireNetConfig,
    embedding: Option<NodeId>,
    qa: &QaPair,
    padded_len: usize,
) -> Result<Sequence> {
    let len = qa.answer.len();
    let total = padded_len.max(len);
    let mut steps = Vec::with_capacity(total);
    for row in &qa.answer {
        let step = match embedding {
            Some(emb) => {
                let vocab = g.value(emb).rows();
                let id = row[0] as usize;
                if id >= vocab {
                    return Err(Error::Lookup { id, vocab });
                }
                g.row(emb, id)?
            }
            None => g.constant_vector(row.clone())?,
        };
        steps.push(step);
    }
    if total > len {
        let pad = g.constant(Tensor::zeros(vec![c.answer_input_dim()]))?;
        steps.resize(total, pad);
    }
    let mask = (0..total).map(|t| t < len).collect();
    Sequence::new(steps, mask)
}

fn padded_tokens(tokens: &[usize], len: usize) -> Vec<usize> {
    let mut t = tokens.to_vec();
    t.resize(len.max(tokens.len()), 0);
    t
}

fn pool(
    g: &mut Graph,
    variant: Variant,
    att: Option<&ContextAttention>,
    states: &[NodeId],
    mask: &[bool],
    ctx: Option<NodeId>,
) -> Result<Pooled> {
    match (variant, att, ctx) {
        (Variant::HireNet, Some(att), Some(ctx)) => context_attention(g, att, states, mask, ctx),
        (Variant::HnSatt, Some(att), _) => self_attention(g, att, states, mask),
        (Variant::HnAvg, _, _) => average_pool(g, states, mask),
        _ => Err(Error::UnsupportedVariant(variant.as_str().into())),
    }
}

/// Builds the forward pass of `interview` under parameters `store`.
pub fn build_graph(
    g: &mut Graph,
    c: &HireNetConfig,
    store: &ParamStore,
    interview: &Interview,
    padding: &Padding,
) -> Result<Forward> {
    check_interview(c, interview)?;
    let answer_emb = match c.answer_embedding() {
        Some(name) => Some(g.bind(store, name)?),
        None => None,
    };
    let answer_rnn = BiGru::bind(g, store, "answer")?;
    let cls_w = g.bind(store, "classifier.w")?;
    let cls_b = g.bind(store, "classifier.b")?;

    if !c.variant.is_hierarchical() {
        let mut reps = Vec::with_capacity(interview.qa.len());
        let mut scores = Vec::with_capacity(interview.qa.len());
        for qa in &interview.qa {
            let seq = answer_sequence(g, c, answer_emb, qa, padding.answer_frames)?;
            let out = answer_rnn.run(g, &seq)?;
            let rep = g.concat(&[out.forward[seq.true_len() - 1], out.backward[0]])?;
            let logit = g.affine(cls_w, rep, Some(cls_b))?;
            scores.push(g.sigmoid(logit)?);
            reps.push(rep);
        }
        let w = 1.0 / scores.len() as f64;
        let score = g.combine(&scores.iter().map(|&s| (w, s)).collect::<Vec<_>>(), 0.0)?;
        let representation = g.combine(&reps.iter().map(|&r| (w, r)).collect::<Vec<_>>(), 0.0)?;
        return Ok(Forward {
            score,
            representation,
            answer_scores: scores,
            low_alphas: Vec::new(),
            high_alphas: None,
            answer_lens: interview.qa.iter().map(|qa| qa.answer.len()).collect(),
        });
    }

    let words = g.bind(store, EMBED_WORDS)?;
    let question_cell = GruCell::bind(g, store, "question.gru")?;
    let low_att = match c.variant.has_attention() {
        true => Some(ContextAttention::bind(g, store, "low_attn")?),
        false => None,
    };

    let n = interview.qa.len();
    let mut high_steps = Vec::with_capacity(n.max(padding.questions));
    let mut low_alphas = Vec::with_capacity(n);
    for qa in &interview.qa {
        let seq = answer_sequence(g, c, answer_emb, qa, padding.answer_frames)?;
        let states = answer_rnn.run(g, &seq)?.rows;
        let q_tokens = padded_tokens(&qa.q_tokens, padding.question_tokens);
        let h_q = encode_tokens(g, words, &question_cell, &q_tokens, qa.q_tokens.len())?;
        let a = pool(g, c.variant, low_att.as_ref(), &states, seq.mask(), Some(h_q))?;
        low_alphas.push(a.alphas);
        high_steps.push(g.concat(&[h_q, a.pooled])?);
    }
    let total = n.max(padding.questions);
    if total > n {
        let pad = g.constant(Tensor::zeros(vec![c.high_input_dim()]))?;
        high_steps.resize(total, pad);
    }
    let high_seq = Sequence::new(high_steps, (0..total).map(|i| i < n).collect())?;
    let high_states = BiGru::bind(g, store, "high")?.run(g, &high_seq)?.rows;

    let job_ctx = match c.variant.uses_context() {
        true => {
            let job_cell = GruCell::bind(g, store, "job.gru")?;
            let tokens = padded_tokens(&interview.job_tokens, padding.job_tokens);
            Some(encode_tokens(g, words, &job_cell, &tokens, interview.job_tokens.len())?)
        }
        false => None,
    };
    let high_att = match c.variant.has_attention() {
        true => Some(ContextAttention::bind(g, store, "high_attn")?),
        false => None,
    };
    let v = pool(g, c.variant, high_att.as_ref(), &high_states, high_seq.mask(), job_ctx)?;
    let logit = g.affine(cls_w, v.pooled, Some(cls_b))?;
    let score = g.sigmoid(logit)?;
    Ok(Forward {
        score,
        representation: v.pooled,
        answer_scores: Vec::new(),
        low_alphas,
        high_alphas: Some(v.alphas),
        answer_lens: interview.qa.iter().map(|qa| qa.answer.len()).collect(),
    })
}

/// Output of one inference pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub candidate_id: String,
    /// `ỹ ∈ (0, 1)`.
    pub score: f64,
    /// Hirable iff `score >= threshold`.
    pub label: Label,
    pub trace: AttentionTrace,
}

/// Configuration plus parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct HireNet {
    config: HireNetConfig,
    params: ParamStore,
}

impl HireNet {
    /// Fresh parameters drawn from `config.seed`.
    pub fn init(config: HireNetConfig) -> Result<Self> {
        config.validate()?;
        let params = ParamStore::init(&param_specs(&config), config.seed);
        Ok(HireNet { config, params })
    }

    /// Pairs a configuration with existing parameters, checking that every
    /// parameter the configuration implies is present with the right shape.
    pub fn from_parts(config: HireNetConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        params.validate(&param_specs(&config))?;
        Ok(HireNet { config, params })
    }

    pub fn config(&self) -> &HireNetConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_parts(self) -> (HireNetConfig, ParamStore) {
        (self.config, self.params)
    }

    pub fn build(&self, g: &mut Graph, interview: &Interview, padding: &Padding) -> Result<Forward> {
        build_graph(g, &self.config, &self.params, interview, padding)
    }

    pub fn label_for(&self, score: f64) -> Label {
        Label::from_bool(score >= self.config.threshold)
    }

    pub fn predict(&self, interview: &Interview) -> Result<Prediction> {
        self.predict_padded(interview, &Padding::none())
    }

    pub fn predict_padded(&self, interview: &Interview, padding: &Padding) -> Result<Prediction> {
        let mut g = Graph::new();
        let f = self.build(&mut g, interview, padding)?;
        let score = g.scalar(f.score);
        Ok(Prediction {
            candidate_id: interview.candidate_id.clone(),
            score,
            label: self.label_for(score),
            trace: f.trace(&g),
        })
    }

    /// The final representation (`v`) of an interview.
    pub fn representation(&self, interview: &Interview) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let f = self.build(&mut g, interview, &Padding::none())?;
        Ok(g.value(f.representation).data().to_vec())
    }
}

/// Draws fresh parameters for `config`.
pub fn init_model(config: HireNetConfig) -> Result<HireNet> {
    HireNet::init(config)
}

/// One full inference pass.
pub fn forward_interview(model: &HireNet, interview: &Interview) -> Result<Prediction> {
    model.predict(interview)
}

/// Clamped binary cross-entropy `−[y ln ỹ + (1−y) ln(1−ỹ)]`.
pub fn bce_loss(score: f64, label: Label) -> Result<f64> {
    if !score.is_finite() {
        return Err(Error::Numeric(format!("score {score} is not finite")));
    }
    Ok(crate::graph::bce_value(score, label.target()))
}
