//! Define-by-run computation graph with reverse-mode differentiation.
//!
//! A [`Graph`] is built fresh for every forward pass. Each operation appends a
//! node holding its output tensor, so node ids are already a topological
//! order and [`Graph::backward`] walks them in reverse. Any operation that
//! produces a non-finite value aborts with [`Error::Numeric`] naming the node.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

/// Lower clamp applied to probabilities inside the cross-entropy node.
pub const BCE_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Param(String),
    Constant,
    /// `Σ_k W_k x_k + b`; each `W_k` is `m × n_k`, `x_k` has `n_k` entries and
    /// the optional bias has `m` entries.
    Affine {
        terms: Vec<(NodeId, NodeId)>,
        bias: Option<NodeId>,
    },
    Tanh(NodeId),
    Sigmoid(NodeId),
    Hadamard(NodeId, NodeId),
    Concat(Vec<NodeId>),
    /// `Σ_k c_k x_k + constant` over equally shaped inputs.
    Combine { terms: Vec<(f64, NodeId)> },
    Row {
        matrix: NodeId,
        index: usize,
    },
    Dot(NodeId, NodeId),
    SoftmaxMasked {
        scores: NodeId,
        mask: Vec<bool>,
    },
    WeightedSum {
        weights: NodeId,
        rows: Vec<NodeId>,
    },
    Bce {
        score: NodeId,
        target: f64,
    },
}

impl Op {
    fn kind(&self) -> &'static str {
        match self {
            Op::Param(_) => "param",
            Op::Constant => "constant",
            Op::Affine { .. } => "affine",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Hadamard(..) => "hadamard",
            Op::Concat(_) => "concat",
            Op::Combine { .. } => "scalar-combine",
            Op::Row { .. } => "row",
            Op::Dot(..) => "dot",
            Op::SoftmaxMasked { .. } => "softmax",
            Op::WeightedSum { .. } => "weighted-sum",
            Op::Bce { .. } => "bce",
        }
    }
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
    /// Accumulated gradient; only populated on parameter leaves.
    grad: Option<Vec<f64>>,
}

/// A computation graph confined to a single worker.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: HashMap<String, NodeId>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// The value of a one-element node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value.data()[0]
    }

    fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].value.shape()
    }

    fn data(&self, id: NodeId) -> &[f64] {
        self.nodes[id.0].value.data()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Result<NodeId> {
        let id = NodeId(self.nodes.len());
        if let Some(pos) = value.data().iter().position(|v| !v.is_finite()) {
            let label = match &op {
                Op::Param(name) => format!("param {name}"),
                other => other.kind().to_string(),
            };
            return Err(Error::Numeric(format!(
                "node #{} ({label}) produced a non-finite value at entry {pos}",
                id.0
            )));
        }
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
            grad: None,
        });
        Ok(id)
    }

    fn any_requires(&self, ids: impl IntoIterator<Item = NodeId>) -> bool {
        ids.into_iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// Registers data that takes no gradient.
    pub fn constant(&mut self, value: Tensor) -> Result<NodeId> {
        self.push(Op::Constant, value, false)
    }

    pub fn constant_vector(&mut self, data: Vec<f64>) -> Result<NodeId> {
        self.constant(Tensor::vector(data)?)
    }

    /// Registers a trainable leaf under `name`. Registering the same name
    /// twice returns the original node.
    pub fn param(&mut self, name: &str, value: &Tensor) -> Result<NodeId> {
        if let Some(&id) = self.params.get(name) {
            return Ok(id);
        }
        let id = self.push(Op::Param(name.to_string()), value.clone(), true)?;
        self.params.insert(name.to_string(), id);
        Ok(id)
    }

    /// Registers parameter `name` taken from `store`.
    pub fn bind(&mut self, store: &ParamStore, name: &str) -> Result<NodeId> {
        if let Some(&id) = self.params.get(name) {
            return Ok(id);
        }
        let t = store.get(name)?;
        self.param(name, t)
    }

    pub fn affine(&mut self, w: NodeId, x: NodeId, bias: Option<NodeId>) -> Result<NodeId> {
        self.affine_sum(&[(w, x)], bias)
    }

    /// `Σ_k W_k x_k + b`.
    pub fn affine_sum(&mut self, terms: &[(NodeId, NodeId)], bias: Option<NodeId>) -> Result<NodeId> {
        if terms.is_empty() {
            return Err(Error::contract("affine needs at least one term"));
        }
        let m = {
            let ws = self.shape(terms[0].0);
            if ws.len() != 2 {
                return Err(Error::Shape {
                    op: "affine",
                    left: ws.to_vec(),
                    right: self.shape(terms[0].1).to_vec(),
                });
            }
            ws[0]
        };
        for &(w, x) in terms {
            let ws = self.shape(w);
            let xs = self.shape(x);
            if ws.len() != 2 || ws[0] != m || xs.len() != 1 || xs[0] != ws[1] {
                return Err(Error::Shape {
                    op: "affine",
                    left: ws.to_vec(),
                    right: xs.to_vec(),
                });
            }
        }
        let mut out = match bias {
            Some(b) => {
                let bs = self.shape(b);
                if bs != [m] {
                    return Err(Error::Shape {
                        op: "affine bias",
                        left: vec![m],
                        right: bs.to_vec(),
                    });
                }
                self.data(b).to_vec()
            }
            None => vec![0.0; m],
        };
        for &(w, x) in terms {
            let wd = self.data(w);
            let xd = self.data(x);
            let n = xd.len();
            for (i, o) in out.iter_mut().enumerate() {
                let row = &wd[i * n..(i + 1) * n];
                *o += row.iter().zip(xd).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let mut ids: Vec<NodeId> = terms.iter().flat_map(|&(w, x)| [w, x]).collect();
        ids.extend(bias);
        let rg = self.any_requires(ids);
        self.push(
            Op::Affine {
                terms: terms.to_vec(),
                bias,
            },
            Tensor::from_parts(vec![m], out),
            rg,
        )
    }

    fn unary(&mut self, x: NodeId, op: Op, f: impl Fn(f64) -> f64) -> Result<NodeId> {
        let t = self.value(x);
        let out = Tensor::from_parts(t.shape().to_vec(), t.data().iter().map(|&v| f(v)).collect());
        let rg = self.nodes[x.0].requires_grad;
        self.push(op, out, rg)
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        self.unary(x, Op::Tanh(x), f64::tanh)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape {
                op: "hadamard",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let out: Vec<f64> = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x * y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.any_requires([a, b]);
        self.push(Op::Hadamard(a, b), Tensor::from_parts(shape, out), rg)
    }

    /// Joins vectors end to end.
    pub fn concat(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::contract("concat needs at least one input"));
        }
        let mut out = Vec::new();
        for &p in parts {
            if self.shape(p).len() != 1 {
                return Err(Error::Shape {
                    op: "concat",
                    left: self.shape(parts[0]).to_vec(),
                    right: self.shape(p).to_vec(),
                });
            }
            out.extend_from_slice(self.data(p));
        }
        let rg = self.any_requires(parts.iter().copied());
        let n = out.len();
        self.push(Op::Concat(parts.to_vec()), Tensor::from_parts(vec![n], out), rg)
    }

    /// `Σ_k c_k x_k + constant`.
    pub fn combine(&mut self, terms: &[(f64, NodeId)], constant: f64) -> Result<NodeId> {
        let first = terms
            .first()
            .ok_or_else(|| Error::contract("scalar-combine needs at least one input"))?
            .1;
        let shape = self.shape(first).to_vec();
        let mut out = vec![constant; self.value(first).len()];
        for &(c, x) in terms {
            if self.shape(x) != shape.as_slice() {
                return Err(Error::Shape {
                    op: "scalar-combine",
                    left: shape,
                    right: self.shape(x).to_vec(),
                });
            }
            for (o, v) in out.iter_mut().zip(self.data(x)) {
                *o += c * v;
            }
        }
        let rg = self.any_requires(terms.iter().map(|t| t.1));
        self.push(
            Op::Combine {
                terms: terms.to_vec(),
            },
            Tensor::from_parts(shape, out),
            rg,
        )
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.combine(&[(1.0, a), (1.0, b)], 0.0)
    }

    /// Row `index` of a matrix, as a vector.
    pub fn row(&mut self, matrix: NodeId, index: usize) -> Result<NodeId> {
        let t = self.value(matrix);
        if !t.is_matrix() {
            return Err(Error::Shape {
                op: "row",
                left: t.shape().to_vec(),
                right: vec![index],
            });
        }
        if index >= t.rows() {
            return Err(Error::Lookup {
                id: index,
                vocab: t.rows(),
            });
        }
        let out = t.row(index).to_vec();
        let n = out.len();
        let rg = self.nodes[matrix.0].requires_grad;
        self.push(Op::Row { matrix, index }, Tensor::from_parts(vec![n], out), rg)
    }

    /// Inner product of two equally sized vectors, as a one-element vector.
    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) || self.shape(a).len() != 1 {
            return Err(Error::Shape {
                op: "dot",
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        let v: f64 = self.data(a).iter().zip(self.data(b)).map(|(x, y)| x * y).sum();
        let rg = self.any_requires([a, b]);
        self.push(Op::Dot(a, b), Tensor::from_parts(vec![1], vec![v]), rg)
    }

    /// Softmax over the entries selected by `mask`; masked entries are
    /// exactly zero.
    pub fn softmax_masked(&mut self, scores: NodeId, mask: &[bool]) -> Result<NodeId> {
        let s = self.data(scores);
        if self.shape(scores).len() != 1 || s.len() != mask.len() {
            return Err(Error::Shape {
                op: "softmax",
                left: self.shape(scores).to_vec(),
                right: vec![mask.len()],
            });
        }
        let out = masked_softmax(s, mask)?;
        let n = out.len();
        let rg = self.nodes[scores.0].requires_grad;
        self.push(
            Op::SoftmaxMasked {
                scores,
                mask: mask.to_vec(),
            },
            Tensor::from_parts(vec![n], out),
            rg,
        )
    }

    /// `Σ_t w_t · row_t`. Rows with an exactly zero weight are skipped in
    /// the forward sum.
    pub fn weighted_sum(&mut self, weights: NodeId, rows: &[NodeId]) -> Result<NodeId> {
        let ws = self.shape(weights);
        if ws.len() != 1 || ws[0] != rows.len() || rows.is_empty() {
            return Err(Error::Shape {
                op: "weighted-sum",
                left: ws.to_vec(),
                right: vec![rows.len()],
            });
        }
        let d = self.shape(rows[0]).to_vec();
        if d.len() != 1 {
            return Err(Error::Shape {
                op: "weighted-sum",
                left: vec![rows.len()],
                right: d,
            });
        }
        let mut out = vec![0.0; d[0]];
        for (t, &r) in rows.iter().enumerate() {
            if self.shape(r) != d.as_slice() {
                return Err(Error::Shape {
                    op: "weighted-sum",
                    left: d,
                    right: self.shape(r).to_vec(),
                });
            }
            let w = self.data(weights)[t];
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.data(r)) {
                *o += w * v;
            }
        }
        let mut ids = rows.to_vec();
        ids.push(weights);
        let rg = self.any_requires(ids);
        self.push(
            Op::WeightedSum {
                weights,
                rows: rows.to_vec(),
            },
            Tensor::from_parts(d, out),
            rg,
        )
    }

    /// Binary cross-entropy of a probability node against a 0/1 target. The
    /// probability is clamped to `[BCE_CLAMP, 1 - BCE_CLAMP]`.
    pub fn bce(&mut self, score: NodeId, target: f64) -> Result<NodeId> {
        if target != 0.0 && target != 1.0 {
            return Err(Error::contract(format!("label must be 0 or 1, got {target}")));
        }
        let p = self
            .value(score)
            .item()
            .ok_or_else(|| Error::contract("cross-entropy expects a scalar score"))?;
        let loss = bce_value(p, target);
        let rg = self.nodes[score.0].requires_grad;
        self.push(Op::Bce { score, target }, Tensor::from_parts(vec![1], vec![loss]), rg)
    }

    /// Propagates `d loss / d node` back to every parameter leaf and returns
    /// the accumulated gradient of each registered parameter. Gradients
    /// accumulate across calls until [`Graph::zero_grad`]; parameters the
    /// loss does not reach report zeros.
    pub fn backward(&mut self, loss: NodeId) -> Result<BTreeMap<String, Tensor>> {
        if self.value(loss).len() != 1 {
            return Err(Error::contract(format!(
                "backward needs a scalar root, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut scratch: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        scratch[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = scratch[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Param(_) => {
                    scratch[i] = Some(g);
                }
                Op::Constant => {}
                Op::Affine { terms, bias } => {
                    for &(w, x) in terms {
                        let wd = self.nodes[w.0].value.data();
                        let xd = self.nodes[x.0].value.data();
                        let n = xd.len();
                        if self.nodes[w.0].requires_grad {
                            let gw = slot(&mut scratch, w, wd.len());
                            for (i, gi) in g.iter().enumerate() {
                                if *gi != 0.0 {
                                    let row = &mut gw[i * n..(i + 1) * n];
                                    for (r, xv) in row.iter_mut().zip(xd) {
                                        *r += gi * xv;
                                    }
                                }
                            }
                        }
                        if self.nodes[x.0].requires_grad {
                            let gx = slot(&mut scratch, x, n);
                            for (i, gi) in g.iter().enumerate() {
                                if *gi != 0.0 {
                                    let row = &wd[i * n..(i + 1) * n];
                                    for (r, wv) in gx.iter_mut().zip(row) {
                                        *r += gi * wv;
                                    }
                                }
                            }
                        }
                    }
                    if let Some(b) = *bias {
                        if self.nodes[b.0].requires_grad {
                            add_into(slot(&mut scratch, b, g.len()), &g);
                        }
                    }
                }
                Op::Tanh(x) => {
                    let y = node.value.data();
                    let gx = slot(&mut scratch, *x, y.len());
                    for ((r, gi), yi) in gx.iter_mut().zip(&g).zip(y) {
                        *r += gi * (1.0 - yi * yi);
                    }
                }
                Op::Sigmoid(x) => {
                    let y = node.value.data();
                    let gx = slot(&mut scratch, *x, y.len());
                    for ((r, gi), yi) in gx.iter_mut().zip(&g).zip(y) {
                        *r += gi * yi * (1.0 - yi);
                    }
                }
                Op::Hadamard(a, b) => {
                    let (a, b) = (*a, *b);
                    let ad = self.nodes[a.0].value.data();
                    let bd = self.nodes[b.0].value.data();
                    if self.nodes[a.0].requires_grad {
                        let ga = slot(&mut scratch, a, g.len());
                        for ((r, gi), bv) in ga.iter_mut().zip(&g).zip(bd) {
                            *r += gi * bv;
                        }
                    }
                    if self.nodes[b.0].requires_grad {
                        let gb = slot(&mut scratch, b, g.len());
                        for ((r, gi), av) in gb.iter_mut().zip(&g).zip(ad) {
                            *r += gi * av;
                        }
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.nodes[p.0].value.len();
                        if self.nodes[p.0].requires_grad {
                            add_into(slot(&mut scratch, p, n), &g[off..off + n]);
                        }
                        off += n;
                    }
                }
                Op::Combine { terms, .. } => {
                    for &(c, x) in terms {
                        if self.nodes[x.0].requires_grad {
                            let gx = slot(&mut scratch, x, g.len());
                            for (r, gi) in gx.iter_mut().zip(&g) {
                                *r += c * gi;
                            }
                        }
                    }
                }
                Op::Row { matrix, index } => {
                    let len = self.nodes[matrix.0].value.len();
                    let n = g.len();
                    let gm = slot(&mut scratch, *matrix, len);
                    add_into(&mut gm[index * n..(index + 1) * n], &g);
                }
                Op::Dot(a, b) => {
                    let (a, b) = (*a, *b);
                    let ad = self.nodes[a.0].value.data();
                    let bd = self.nodes[b.0].value.data();
                    if self.nodes[a.0].requires_grad {
                        let ga = slot(&mut scratch, a, ad.len());
                        for (r, bv) in ga.iter_mut().zip(bd) {
                            *r += g[0] * bv;
                        }
                    }
                    if self.nodes[b.0].requires_grad {
                        let gb = slot(&mut scratch, b, bd.len());
                        for (r, av) in gb.iter_mut().zip(ad) {
                            *r += g[0] * av;
                        }
                    }
                }
                Op::SoftmaxMasked { scores, mask } => {
                    let y = node.value.data();
                    let inner: f64 = y
                        .iter()
                        .zip(&g)
                        .zip(mask)
                        .filter(|(_, &m)| m)
                        .map(|((a, b), _)| a * b)
                        .sum();
                    let gs = slot(&mut scratch, *scores, y.len());
                    for (t, r) in gs.iter_mut().enumerate() {
                        if mask[t] {
                            *r += y[t] * (g[t] - inner);
                        }
                    }
                }
                Op::WeightedSum { weights, rows } => {
                    let wd = self.nodes[weights.0].value.data();
                    if self.nodes[weights.0].requires_grad {
                        let dots: Vec<f64> = rows
                            .iter()
                            .map(|r| {
                                self.nodes[r.0]
                                    .value
                                    .data()
                                    .iter()
                                    .zip(&g)
                                    .map(|(a, b)| a * b)
                                    .sum()
                            })
                            .collect();
                        add_into(slot(&mut scratch, *weights, wd.len()), &dots);
                    }
                    for (t, &r) in rows.iter().enumerate() {
                        if self.nodes[r.0].requires_grad {
                            let gr = slot(&mut scratch, r, g.len());
                            for (o, gi) in gr.iter_mut().zip(&g) {
                                *o += wd[t] * gi;
                            }
                        }
                    }
                }
                Op::Bce { score, target } => {
                    let p = self.nodes[score.0].value.data()[0];
                    let d = bce_derivative(p, *target);
                    slot(&mut scratch, *score, 1)[0] += g[0] * d;
                }
            }
        }
        for (i, g) in scratch.into_iter().enumerate() {
            if let (Some(g), Op::Param(_)) = (g, &self.nodes[i].op) {
                match &mut self.nodes[i].grad {
                    Some(acc) => add_into(acc, &g),
                    slot @ None => *slot = Some(g),
                }
            }
        }
        Ok(self.param_grads())
    }

    /// Accumulated gradients of every registered parameter.
    pub fn param_grads(&self) -> BTreeMap<String, Tensor> {
        self.params
            .iter()
            .map(|(name, id)| {
                let node = &self.nodes[id.0];
                let shape = node.value.shape().to_vec();
                let grad = match &node.grad {
                    Some(g) => Tensor::from_parts(shape, g.clone()),
                    None => Tensor::zeros(shape),
                };
                (name.clone(), grad)
            })
            .collect()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }
}

fn slot(scratch: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    scratch[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

/// Numerically stabilised softmax restricted to `mask`.
pub fn masked_softmax(scores: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if scores.len() != mask.len() {
        return Err(Error::Shape {
            op: "softmax",
            left: vec![scores.len()],
            right: vec![mask.len()],
        });
    }
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::degenerate("softmax mask selects no entries"));
    }
    if !max.is_finite() {
        return Err(Error::Numeric("softmax received a non-finite score".into()));
    }
    let exps: Vec<f64> = scores
        .iter()
        .zip(mask)
        .map(|(s, &m)| if m { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub(crate) fn bce_value(p: f64, target: f64) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

fn bce_derivative(p: f64, target: f64) -> f64 {
    if !(BCE_CLAMP..=1.0 - BCE_CLAMP).contains(&p) {
        return 0.0;
    }
    -target / p + (1.0 - target) / (1.0 - p)
}
