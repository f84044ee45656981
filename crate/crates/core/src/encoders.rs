//! GRU cells, uni- and bidirectional sequence encoders, and token encoders.
//!
//! The cell follows the convention
//!
//! ```text
//! z  = σ(W_z x + U_z h + b_z)
//! r  = σ(W_r x + U_r h + b_r)
//! h̃  = tanh(W_h x + U_h (r ⊙ h) + b_h)
//! h' = (1 - z) ⊙ h + z ⊙ h̃
//! ```
//!
//! Sequences are suffix-padded: the mask is a contiguous run of `true`
//! followed by `false`. A forward pass copies the previous state through
//! masked steps; the backward direction of a [`BiGru`] starts at the last
//! unmasked step, so padding never changes an unmasked output.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::params::{Init, ParamSpec, ParamStore};
use crate::tensor::Tensor;

const GATES: [&str; 3] = ["z", "r", "h"];

/// Parameter declarations for one GRU cell under `prefix`.
pub fn gru_param_specs(prefix: &str, input: usize, hidden: usize) -> Vec<ParamSpec> {
    let mut specs = Vec::with_capacity(9);
    for gate in GATES {
        specs.push(ParamSpec::new(format!("{prefix}.w_{gate}"), vec![hidden, input], Init::Glorot));
        specs.push(ParamSpec::new(format!("{prefix}.u_{gate}"), vec![hidden, hidden], Init::Glorot));
        specs.push(ParamSpec::new(format!("{prefix}.b_{gate}"), vec![hidden], Init::Zeros));
    }
    specs
}

/// Parameter declarations for a bidirectional GRU: `{prefix}.fwd.*` and
/// `{prefix}.bwd.*`.
pub fn bigru_param_specs(prefix: &str, input: usize, hidden: usize) -> Vec<ParamSpec> {
    let mut specs = gru_param_specs(&format!("{prefix}.fwd"), input, hidden);
    specs.extend(gru_param_specs(&format!("{prefix}.bwd"), input, hidden));
    specs
}

/// A sequence of step inputs already registered in a graph, with a suffix
/// padding mask.
#[derive(Clone, Debug)]
pub struct Sequence {
    steps: Vec<NodeId>,
    mask: Vec<bool>,
    true_len: usize,
}

impl Sequence {
    pub fn new(steps: Vec<NodeId>, mask: Vec<bool>) -> Result<Self> {
        if steps.len() != mask.len() {
            return Err(Error::contract(format!(
                "sequence has {} steps but a mask of length {}",
                steps.len(),
                mask.len()
            )));
        }
        let true_len = mask.iter().take_while(|m| **m).count();
        if mask[true_len..].iter().any(|m| *m) {
            return Err(Error::contract("mask must be a contiguous prefix"));
        }
        Ok(Sequence {
            steps,
            mask,
            true_len,
        })
    }

    /// An unpadded sequence.
    pub fn full(steps: Vec<NodeId>) -> Self {
        let n = steps.len();
        Sequence {
            steps,
            mask: vec![true; n],
            true_len: n,
        }
    }

    /// Registers each row of a feature matrix as a constant step; the first
    /// `true_len` rows are unmasked.
    pub fn from_rows(g: &mut Graph, rows: &[Vec<f64>], true_len: usize) -> Result<Self> {
        let steps = rows
            .iter()
            .map(|r| g.constant_vector(r.clone()))
            .collect::<Result<Vec<_>>>()?;
        let mask = (0..rows.len()).map(|t| t < true_len).collect();
        Sequence::new(steps, mask)
    }

    pub fn steps(&self) -> &[NodeId] {
        &self.steps
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn true_len(&self) -> usize {
        self.true_len
    }
}

/// GRU cell parameters bound into a graph.
#[derive(Clone, Copy, Debug)]
pub struct GruCell {
    pub w_z: NodeId,
    pub w_r: NodeId,
    pub w_h: NodeId,
    pub u_z: NodeId,
    pub u_r: NodeId,
    pub u_h: NodeId,
    pub b_z: NodeId,
    pub b_r: NodeId,
    pub b_h: NodeId,
    pub input: usize,
    pub hidden: usize,
}

/// States produced by [`GruCell::run`].
#[derive(Clone, Debug)]
pub struct GruOutput {
    /// One state per step, padded steps included.
    pub states: Vec<NodeId>,
    /// State after the last unmasked step.
    pub last: NodeId,
}

impl GruCell {
    /// Binds `{prefix}.{w,u,b}_{z,r,h}` and checks that their shapes agree.
    pub fn bind(g: &mut Graph, store: &ParamStore, prefix: &str) -> Result<Self> {
        let w_z_t = store.get(&format!("{prefix}.w_z"))?;
        let (hidden, input) = match w_z_t.shape() {
            [h, i] => (*h, *i),
            s => return Err(Error::Config(format!("{prefix}.w_z must be a matrix, got {s:?}"))),
        };
        for gate in GATES {
            let checks = [
                (format!("{prefix}.w_{gate}"), vec![hidden, input]),
                (format!("{prefix}.u_{gate}"), vec![hidden, hidden]),
                (format!("{prefix}.b_{gate}"), vec![hidden]),
            ];
            for (name, shape) in checks {
                let t = store.get(&name)?;
                if t.shape() != shape.as_slice() {
                    return Err(Error::Shape {
                        op: "gru parameters",
                        left: shape,
                        right: t.shape().to_vec(),
                    });
                }
            }
        }
        let mut b = |s: &str| g.bind(store, &format!("{prefix}.{s}"));
        Ok(GruCell {
            w_z: b("w_z")?,
            w_r: b("w_r")?,
            w_h: b("w_h")?,
            u_z: b("u_z")?,
            u_r: b("u_r")?,
            u_h: b("u_h")?,
            b_z: b("b_z")?,
            b_r: b("b_r")?,
            b_h: b("b_h")?,
            input,
            hidden,
        })
    }

    pub fn zero_state(&self, g: &mut Graph) -> Result<NodeId> {
        g.constant(Tensor::zeros(vec![self.hidden]))
    }

    /// One recurrence step.
    pub fn step(&self, g: &mut Graph, x: NodeId, h_prev: NodeId) -> Result<NodeId> {
        let pre_z = g.affine_sum(&[(self.w_z, x), (self.u_z, h_prev)], Some(self.b_z))?;
        let z = g.sigmoid(pre_z)?;
        let pre_r = g.affine_sum(&[(self.w_r, x), (self.u_r, h_prev)], Some(self.b_r))?;
        let r = g.sigmoid(pre_r)?;
        let rh = g.hadamard(r, h_prev)?;
        let pre_h = g.affine_sum(&[(self.w_h, x), (self.u_h, rh)], Some(self.b_h))?;
        let candidate = g.tanh(pre_h)?;
        let keep = g.combine(&[(-1.0, z)], 1.0)?;
        let kept = g.hadamard(keep, h_prev)?;
        let fresh = g.hadamard(z, candidate)?;
        g.add(kept, fresh)
    }

    /// Runs the cell left to right from `h0` (zeros when `None`).
    pub fn run(&self, g: &mut Graph, seq: &Sequence, h0: Option<NodeId>) -> Result<GruOutput> {
        if seq.true_len() == 0 {
            return Err(Error::degenerate("sequence has no unmasked steps"));
        }
        let mut h = match h0 {
            Some(h) => h,
            None => self.zero_state(g)?,
        };
        let mut states = Vec::with_capacity(seq.len());
        let mut last = h;
        for (t, &x) in seq.steps().iter().enumerate() {
            if seq.mask()[t] {
                h = self.step(g, x, h)?;
                last = h;
            }
            states.push(h);
        }
        Ok(GruOutput { states, last })
    }
}

/// Forward and backward GRU cells bound into a graph.
#[derive(Clone, Copy, Debug)]
pub struct BiGru {
    pub forward: GruCell,
    pub backward: GruCell,
}

/// Output of [`BiGru::run`].
#[derive(Clone, Debug)]
pub struct BiGruOutput {
    /// Row `t` is `[→h_t, ←h_t]`.
    pub rows: Vec<NodeId>,
    pub forward: Vec<NodeId>,
    pub backward: Vec<NodeId>,
}

impl BiGru {
    pub fn bind(g: &mut Graph, store: &ParamStore, prefix: &str) -> Result<Self> {
        let forward = GruCell::bind(g, store, &format!("{prefix}.fwd"))?;
        let backward = GruCell::bind(g, store, &format!("{prefix}.bwd"))?;
        if forward.input != backward.input || forward.hidden != backward.hidden {
            return Err(Error::Shape {
                op: "bigru parameters",
                left: vec![forward.hidden, forward.input],
                right: vec![backward.hidden, backward.input],
            });
        }
        Ok(BiGru { forward, backward })
    }

    pub fn output_dim(&self) -> usize {
        self.forward.hidden + self.backward.hidden
    }

    pub fn run(&self, g: &mut Graph, seq: &Sequence) -> Result<BiGruOutput> {
        let fwd = self.forward.run(g, seq, None)?;
        let h0 = self.backward.zero_state(g)?;
        let mut backward = vec![h0; seq.len()];
        let mut h = h0;
        for t in (0..seq.true_len()).rev() {
            h = self.backward.step(g, seq.steps()[t], h)?;
            backward[t] = h;
        }
        let rows = fwd
            .states
            .iter()
            .zip(&backward)
            .map(|(&f, &b)| g.concat(&[f, b]))
            .collect::<Result<Vec<_>>>()?;
        Ok(BiGruOutput {
            rows,
            forward: fwd.states,
            backward,
        })
    }
}

/// Embeds `tokens` (the first `true_len` of them) and returns the last
/// state of `cell` over the embedded sequence.
pub fn encode_tokens(
    g: &mut Graph,
    embedding: NodeId,
    cell: &GruCell,
    tokens: &[usize],
    true_len: usize,
) -> Result<NodeId> {
    if true_len == 0 || tokens.is_empty() {
        return Err(Error::degenerate("token sequence is empty"));
    }
    if true_len > tokens.len() {
        return Err(Error::contract("true length exceeds token count"));
    }
    let vocab = g.value(embedding).rows();
    let mut steps = Vec::with_capacity(tokens.len());
    let mut pad = None;
    for (t, &id) in tokens.iter().enumerate() {
        if t < true_len {
            if id >= vocab {
                return Err(Error::Lookup { id, vocab });
            }
            steps.push(g.row(embedding, id)?);
        } else {
            let p = match pad {
                Some(p) => p,
                None => {
                    let p = g.constant(Tensor::zeros(vec![cell.input]))?;
                    pad = Some(p);
                    p
                }
            };
            steps.push(p);
        }
    }
    let mask = (0..tokens.len()).map(|t| t < true_len).collect();
    let seq = Sequence::new(steps, mask)?;
    Ok(cell.run(g, &seq, None)?.last)
}

/// [`encode_tokens`] over an unpadded token list.
pub fn encode_token_sequence(
    g: &mut Graph,
    embedding: NodeId,
    cell: &GruCell,
    tokens: &[usize],
) -> Result<NodeId> {
    encode_tokens(g, embedding, cell, tokens, tokens.len())
}
