//! Additive attention pooling and its ablations.
//!
//! All three poolers reduce a masked sequence of state vectors to a single
//! vector. Context attention scores each state with
//! `u · tanh(W_state h_t + W_ctx c + b)`; self attention drops the context
//! term; average pooling uses uniform weights over the unmasked rows.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::params::{Init, ParamSpec, ParamStore};

/// Parameter declarations for an attention block under `prefix`. With
/// `ctx_dim == None` the block has no `w_ctx` and can only self-attend.
pub fn attention_param_specs(
    prefix: &str,
    attn_dim: usize,
    state_dim: usize,
    ctx_dim: Option<usize>,
) -> Vec<ParamSpec> {
    let mut specs = vec![ParamSpec::new(
        format!("{prefix}.w_state"),
        vec![attn_dim, state_dim],
        Init::Glorot,
    )];
    if let Some(c) = ctx_dim {
        specs.push(ParamSpec::new(format!("{prefix}.w_ctx"), vec![attn_dim, c], Init::Glorot));
    }
    specs.push(ParamSpec::new(format!("{prefix}.b"), vec![attn_dim], Init::Zeros));
    specs.push(ParamSpec::new(format!("{prefix}.u"), vec![attn_dim], Init::Glorot));
    specs
}

/// Attention parameters bound into a graph.
#[derive(Clone, Copy, Debug)]
pub struct ContextAttention {
    pub w_state: NodeId,
    pub w_ctx: Option<NodeId>,
    pub b: NodeId,
    pub u: NodeId,
}

impl ContextAttention {
    /// Binds `{prefix}.{w_state,w_ctx,b,u}`; `w_ctx` is optional.
    pub fn bind(g: &mut Graph, store: &ParamStore, prefix: &str) -> Result<Self> {
        let ws = store.get(&format!("{prefix}.w_state"))?;
        let attn_dim = ws.shape()[0];
        if attn_dim == 0 {
            return Err(Error::Config(format!("{prefix}: attention dimension must be positive")));
        }
        for part in ["b", "u"] {
            let t = store.get(&format!("{prefix}.{part}"))?;
            if t.shape() != [attn_dim] {
                return Err(Error::Shape {
                    op: "attention parameters",
                    left: vec![attn_dim],
                    right: t.shape().to_vec(),
                });
            }
        }
        let ctx_name = format!("{prefix}.w_ctx");
        let w_ctx = if store.contains(&ctx_name) {
            if store.get(&ctx_name)?.shape()[0] != attn_dim {
                return Err(Error::Shape {
                    op: "attention parameters",
                    left: vec![attn_dim],
                    right: store.get(&ctx_name)?.shape().to_vec(),
                });
            }
            Some(g.bind(store, &ctx_name)?)
        } else {
            None
        };
        Ok(ContextAttention {
            w_state: g.bind(store, &format!("{prefix}.w_state"))?,
            w_ctx,
            b: g.bind(store, &format!("{prefix}.b"))?,
            u: g.bind(store, &format!("{prefix}.u"))?,
        })
    }
}

/// A pooled vector and the weights that produced it.
#[derive(Clone, Debug)]
pub struct Pooled {
    pub pooled: NodeId,
    pub alphas: NodeId,
}

fn check_mask(states: &[NodeId], mask: &[bool]) -> Result<()> {
    if states.len() != mask.len() {
        return Err(Error::contract(format!(
            "{} states but a mask of length {}",
            states.len(),
            mask.len()
        )));
    }
    if !mask.iter().any(|m| *m) {
        return Err(Error::degenerate("attention over a fully masked sequence"));
    }
    Ok(())
}

fn attend(
    g: &mut Graph,
    att: &ContextAttention,
    states: &[NodeId],
    mask: &[bool],
    offset: NodeId,
) -> Result<Pooled> {
    let mut scores = Vec::with_capacity(states.len());
    let mut zero = None;
    for (t, &h) in states.iter().enumerate() {
        if mask[t] {
            let pre = g.affine(att.w_state, h, Some(offset))?;
            let hidden = g.tanh(pre)?;
            scores.push(g.dot(att.u, hidden)?);
        } else {
            let z = match zero {
                Some(z) => z,
                None => {
                    let z = g.constant_vector(vec![0.0])?;
                    zero = Some(z);
                    z
                }
            };
            scores.push(z);
        }
    }
    let scores = g.concat(&scores)?;
    let alphas = g.softmax_masked(scores, mask)?;
    let pooled = g.weighted_sum(alphas, states)?;
    Ok(Pooled { pooled, alphas })
}

/// Attention conditioned on a context vector `ctx`.
pub fn context_attention(
    g: &mut Graph,
    att: &ContextAttention,
    states: &[NodeId],
    mask: &[bool],
    ctx: NodeId,
) -> Result<Pooled> {
    check_mask(states, mask)?;
    let w_ctx = att
        .w_ctx
        .ok_or_else(|| Error::Config("context attention needs a w_ctx parameter".into()))?;
    let offset = g.affine(w_ctx, ctx, Some(att.b))?;
    attend(g, att, states, mask, offset)
}

/// Attention without a context term.
pub fn self_attention(
    g: &mut Graph,
    att: &ContextAttention,
    states: &[NodeId],
    mask: &[bool],
) -> Result<Pooled> {
    check_mask(states, mask)?;
    attend(g, att, states, mask, att.b)
}

/// Mean of the unmasked rows. The returned weights are `1/n` on unmasked
/// rows and zero elsewhere.
pub fn average_pool(g: &mut Graph, states: &[NodeId], mask: &[bool]) -> Result<Pooled> {
    check_mask(states, mask)?;
    let n = mask.iter().filter(|m| **m).count() as f64;
    let weights = mask.iter().map(|&m| if m { 1.0 / n } else { 0.0 }).collect();
    let alphas = g.constant_vector(weights)?;
    let pooled = g.weighted_sum(alphas, states)?;
    Ok(Pooled { pooled, alphas })
}

/// Attention weights of one forward pass and the relative values derived
/// from them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttentionTrace {
    /// Per answer, the low-level weights over its unmasked steps.
    pub frame_alphas: Vec<Vec<f64>>,
    /// The high-level weights over questions.
    pub question_alphas: Vec<f64>,
    /// `p_w = α_t · l` per answer step.
    pub relative_word: Vec<Vec<f64>>,
    /// `p_q = α_i · n` per question.
    pub relative_question: Vec<f64>,
    /// `sqrt(p_q) · p_w` per answer step.
    pub combined: Vec<Vec<f64>>,
}

impl AttentionTrace {
    /// Builds the trace and its relative values from raw weights.
    pub fn from_alphas(frame_alphas: Vec<Vec<f64>>, question_alphas: Vec<f64>) -> Self {
        let n = question_alphas.len() as f64;
        let relative_question: Vec<f64> = question_alphas.iter().map(|a| a * n).collect();
        let relative_word: Vec<Vec<f64>> = frame_alphas
            .iter()
            .map(|alphas| {
                let l = alphas.len() as f64;
                alphas.iter().map(|a| a * l).collect()
            })
            .collect();
        let combined = relative_word
            .iter()
            .zip(&relative_question)
            .map(|(pw, pq)| pw.iter().map(|p| pq.sqrt() * p).collect())
            .collect();
        AttentionTrace {
            frame_alphas,
            question_alphas,
            relative_word,
            relative_question,
            combined,
        }
    }
}
