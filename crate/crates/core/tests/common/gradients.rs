//! Gradient-check instances covering every primitive, encoder, pooler and
//! the full loss of each variant.

use hirenet::attention::{average_pool, context_attention, self_attention, ContextAttention};
use hirenet::data::Modality;
use hirenet::encoders::{encode_tokens, BiGru, GruCell, Sequence};
use hirenet::gradcheck::{grad_check, GradCheckReport};
use hirenet::model::{build_graph, HireNetConfig, Padding, Variant};
use hirenet::{Graph, NodeId, ParamStore, Result, Tensor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{random_interview, randomise, rng, toy_config};

pub const EPS: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Half-width of the uniform draw for full-network parameters.
pub const NETWORK_SCALE: f64 = 1.0;

type Build = Box<dyn Fn(&mut Graph, &ParamStore) -> Result<NodeId>>;

pub struct Instance {
    pub name: String,
    pub params: ParamStore,
    pub build: Build,
}

impl Instance {
    pub fn check(&self) -> Result<GradCheckReport> {
        grad_check(&self.params, EPS, |g, p| (self.build)(g, p))
    }
}

fn store(rng: &mut ChaCha8Rng, shapes: &[(&str, &[usize])]) -> ParamStore {
    let mut s = ParamStore::new();
    for (name, shape) in shapes {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        s.insert(name, Tensor::new(shape.to_vec(), data).unwrap());
    }
    s
}

fn gru_shapes(prefix: &str, input: usize, hidden: usize) -> Vec<(String, Vec<usize>)> {
    let mut v = Vec::new();
    for gate in ["z", "r", "h"] {
        v.push((format!("{prefix}.w_{gate}"), vec![hidden, input]));
        v.push((format!("{prefix}.u_{gate}"), vec![hidden, hidden]));
        v.push((format!("{prefix}.b_{gate}"), vec![hidden]));
    }
    v
}

fn owned_store(rng: &mut ChaCha8Rng, shapes: &[(String, Vec<usize>)]) -> ParamStore {
    let borrowed: Vec<(&str, &[usize])> = shapes.iter().map(|(n, s)| (n.as_str(), s.as_slice())).collect();
    store(rng, &borrowed)
}

/// Reduces a vector node to a scalar with fixed, non-uniform weights.
fn project(g: &mut Graph, x: NodeId) -> Result<NodeId> {
    let n = g.value(x).len();
    let w = g.constant_vector((0..n).map(|i| ((i + 1) as f64 * 0.7).sin() + 0.3).collect())?;
    g.dot(w, x)
}

fn sum_projections(g: &mut Graph, xs: &[NodeId]) -> Result<NodeId> {
    let mut terms = Vec::with_capacity(xs.len());
    for (k, &x) in xs.iter().enumerate() {
        terms.push((1.0 + 0.25 * k as f64, project(g, x)?));
    }
    g.combine(&terms, 0.0)
}

fn random_mask(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    let mut m: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
    let k = rng.gen_range(0..n);
    m[k] = true;
    m
}

fn push(out: &mut Vec<Instance>, name: &str, seed: u64, params: ParamStore, build: Build) {
    out.push(Instance {
        name: format!("{name}#{seed}"),
        params,
        build,
    });
}

fn primitive_instances(seed: u64, out: &mut Vec<Instance>) {
    let mut r = rng(seed);
    let p = store(&mut r, &[("w", &[3, 4]), ("x", &[4]), ("b", &[3])]);
    push(out, "affine", seed, p, Box::new(|g, p| {
        let (w, x, b) = (g.bind(p, "w")?, g.bind(p, "x")?, g.bind(p, "b")?);
        let y = g.affine(w, x, Some(b))?;
        project(g, y)
    }));

    let p = store(&mut r, &[("w1", &[3, 2]), ("x1", &[2]), ("w2", &[3, 4]), ("x2", &[4]), ("b", &[3])]);
    push(out, "affine_sum", seed, p, Box::new(|g, p| {
        let ids: Vec<NodeId> = ["w1", "x1", "w2", "x2", "b"].iter().map(|n| g.bind(p, n)).collect::<Result<_>>()?;
        let y = g.affine_sum(&[(ids[0], ids[1]), (ids[2], ids[3])], Some(ids[4]))?;
        project(g, y)
    }));

    let p = store(&mut r, &[("x", &[5])]);
    push(out, "tanh", seed, p.clone(), Box::new(|g, p| {
        let x = g.bind(p, "x")?;
        let y = g.tanh(x)?;
        project(g, y)
    }));
    push(out, "sigmoid", seed, p, Box::new(|g, p| {
        let x = g.bind(p, "x")?;
        let y = g.sigmoid(x)?;
        project(g, y)
    }));

    let p = store(&mut r, &[("a", &[4]), ("b", &[4])]);
    push(out, "hadamard", seed, p.clone(), Box::new(|g, p| {
        let (a, b) = (g.bind(p, "a")?, g.bind(p, "b")?);
        let y = g.hadamard(a, b)?;
        project(g, y)
    }));
    push(out, "combine", seed, p.clone(), Box::new(|g, p| {
        let (a, b) = (g.bind(p, "a")?, g.bind(p, "b")?);
        let y = g.combine(&[(0.7, a), (-1.3, b)], 0.4)?;
        let y = g.tanh(y)?;
        project(g, y)
    }));
    push(out, "add", seed, p.clone(), Box::new(|g, p| {
        let (a, b) = (g.bind(p, "a")?, g.bind(p, "b")?);
        let y = g.add(a, b)?;
        let y = g.hadamard(y, a)?;
        project(g, y)
    }));
    push(out, "dot", seed, p, Box::new(|g, p| {
        let (a, b) = (g.bind(p, "a")?, g.bind(p, "b")?);
        let ab = g.hadamard(a, b)?;
        g.dot(ab, b)
    }));

    let p = store(&mut r, &[("a", &[2]), ("b", &[3])]);
    push(out, "concat", seed, p, Box::new(|g, p| {
        let (a, b) = (g.bind(p, "a")?, g.bind(p, "b")?);
        let y = g.concat(&[a, b, a])?;
        let y = g.tanh(y)?;
        project(g, y)
    }));

    let p = store(&mut r, &[("m", &[4, 3])]);
    let index = r.gen_range(0..4);
    push(out, "row", seed, p, Box::new(move |g, p| {
        let m = g.bind(p, "m")?;
        let y = g.row(m, index)?;
        let y = g.sigmoid(y)?;
        project(g, y)
    }));

    let p = store(&mut r, &[("s", &[5])]);
    let mask = random_mask(&mut r, 5);
    push(out, "softmax_masked", seed, p, Box::new(move |g, p| {
        let s = g.bind(p, "s")?;
        let y = g.softmax_masked(s, &mask)?;
        project(g, y)
    }));

    let p = store(&mut r, &[("w", &[4]), ("r0", &[3]), ("r1", &[3]), ("r2", &[3]), ("r3", &[3])]);
    push(out, "weighted_sum", seed, p, Box::new(|g, p| {
        let w = g.bind(p, "w")?;
        let rows: Vec<NodeId> = ["r0", "r1", "r2", "r3"].iter().map(|n| g.bind(p, n)).collect::<Result<_>>()?;
        let y = g.weighted_sum(w, &rows)?;
        project(g, y)
    }));

    let p = store(&mut r, &[("x", &[1])]);
    let target = (seed % 2) as f64;
    push(out, "bce", seed, p, Box::new(move |g, p| {
        let x = g.bind(p, "x")?;
        let s = g.sigmoid(x)?;
        g.bce(s, target)
    }));
}

fn encoder_instances(seed: u64, out: &mut Vec<Instance>) {
    let mut r = rng(seed.wrapping_add(1000));
    let mut shapes = gru_shapes("cell", 2, 3);
    shapes.push(("x".into(), vec![2]));
    shapes.push(("h".into(), vec![3]));
    push(out, "gru_step", seed, owned_store(&mut r, &shapes), Box::new(|g, p| {
        let cell = GruCell::bind(g, p, "cell")?;
        let (x, h) = (g.bind(p, "x")?, g.bind(p, "h")?);
        let y = cell.step(g, x, h)?;
        project(g, y)
    }));

    let mut shapes = gru_shapes("cell", 2, 3);
    for t in 0..4 {
        shapes.push((format!("x{t}"), vec![2]));
    }
    let true_len = r.gen_range(1..=4);
    push(out, "gru_masked_run", seed, owned_store(&mut r, &shapes), Box::new(move |g, p| {
        let cell = GruCell::bind(g, p, "cell")?;
        let steps: Vec<NodeId> = (0..4).map(|t| g.bind(p, &format!("x{t}"))).collect::<Result<_>>()?;
        let seq = Sequence::new(steps, (0..4).map(|t| t < true_len).collect())?;
        let out = cell.run(g, &seq, None)?;
        let mut xs = out.states.clone();
        xs.push(out.last);
        sum_projections(g, &xs)
    }));

    let mut shapes = gru_shapes("bi.fwd", 2, 2);
    shapes.extend(gru_shapes("bi.bwd", 2, 2));
    for t in 0..4 {
        shapes.push((format!("x{t}"), vec![2]));
    }
    let true_len = r.gen_range(1..=4);
    push(out, "bigru", seed, owned_store(&mut r, &shapes), Box::new(move |g, p| {
        let bi = BiGru::bind(g, p, "bi")?;
        let steps: Vec<NodeId> = (0..4).map(|t| g.bind(p, &format!("x{t}"))).collect::<Result<_>>()?;
        let seq = Sequence::new(steps, (0..4).map(|t| t < true_len).collect())?;
        let rows = bi.run(g, &seq)?.rows;
        sum_projections(g, &rows)
    }));

    let mut shapes = gru_shapes("cell", 2, 2);
    shapes.push(("emb".into(), vec![5, 2]));
    let tokens: Vec<usize> = (0..4).map(|_| r.gen_range(0..5)).collect();
    let true_len = r.gen_range(1..=4);
    push(out, "encode_tokens", seed, owned_store(&mut r, &shapes), Box::new(move |g, p| {
        let cell = GruCell::bind(g, p, "cell")?;
        let emb = g.bind(p, "emb")?;
        let h = encode_tokens(g, emb, &cell, &tokens, true_len)?;
        project(g, h)
    }));
}

fn bind_states(g: &mut Graph, p: &ParamStore, states: usize) -> Result<Vec<NodeId>> {
    (0..states).map(|t| g.bind(p, &format!("h{t}"))).collect()
}

fn attention_instances(seed: u64, out: &mut Vec<Instance>) {
    let mut r = rng(seed.wrapping_add(2000));
    let states = 4;
    let mut shapes: Vec<(String, Vec<usize>)> = vec![
        ("att.w_state".into(), vec![3, 4]),
        ("att.w_ctx".into(), vec![3, 2]),
        ("att.b".into(), vec![3]),
        ("att.u".into(), vec![3]),
        ("ctx".into(), vec![2]),
    ];
    for t in 0..states {
        shapes.push((format!("h{t}"), vec![4]));
    }
    let p = owned_store(&mut r, &shapes);
    let mask = random_mask(&mut r, states);

    let m = mask.clone();
    push(out, "context_attention", seed, p.clone(), Box::new(move |g, p| {
        let att = ContextAttention::bind(g, p, "att")?;
        let hs = bind_states(g, p, states)?;
        let ctx = g.bind(p, "ctx")?;
        let pooled = context_attention(g, &att, &hs, &m, ctx)?;
        sum_projections(g, &[pooled.pooled, pooled.alphas])
    }));

    let mut trimmed = ParamStore::new();
    for (name, t) in p.iter() {
        if name != "att.w_ctx" && name != "ctx" {
            trimmed.insert(name, t.clone());
        }
    }
    let m = mask.clone();
    push(out, "self_attention", seed, trimmed, Box::new(move |g, p| {
        let att = ContextAttention::bind(g, p, "att")?;
        let hs = bind_states(g, p, states)?;
        let pooled = self_attention(g, &att, &hs, &m)?;
        sum_projections(g, &[pooled.pooled, pooled.alphas])
    }));

    let mut only_states = ParamStore::new();
    for t in 0..states {
        let name = format!("h{t}");
        only_states.insert(&name, p.get(&name).unwrap().clone());
    }
    push(out, "average_pool", seed, only_states, Box::new(move |g, p| {
        let hs = bind_states(g, p, states)?;
        let pooled = average_pool(g, &hs, &mask)?;
        let y = g.tanh(pooled.pooled)?;
        project(g, y)
    }));
}

fn network_instances(seed: u64, out: &mut Vec<Instance>) {
    let mut r = rng(seed.wrapping_add(3000));
    let modality = if seed.is_multiple_of(2) { Modality::Audio } else { Modality::Text };
    for variant in Variant::ALL {
        let config: HireNetConfig = HireNetConfig {
            seed,
            ..toy_config(variant, modality, 2, 5, 2)
        };
        let mut params = hirenet::model::HireNet::init(config.clone()).unwrap().into_parts().1;
        randomise(&mut params, &mut r, NETWORK_SCALE);
        let interview = random_interview(&mut r, "g", modality, 2, 5, 3, 3);
        let label = interview.label;
        push(out, &format!("loss_{variant}_{modality}"), seed, params, Box::new(move |g, p| {
            let f = build_graph(g, &config, p, &interview, &Padding::none())?;
            f.loss(g, label)
        }));
    }
}

/// Every instance for seeds `0..seeds`.
pub fn instances(seeds: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        primitive_instances(seed, &mut out);
        encoder_instances(seed, &mut out);
        attention_instances(seed, &mut out);
        network_instances(seed, &mut out);
    }
    out
}
