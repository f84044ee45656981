//! Seeded sweep over the attention invariants: normalisation, masked
//! zeros, convex-hull containment and the `u = 0` reduction to averaging.

use hirenet::attention::{average_pool, context_attention, self_attention, ContextAttention};
use hirenet::graph::masked_softmax;
use hirenet::{Graph, NodeId, ParamStore, Tensor};
use rand::Rng;

use super::rng;

pub const NORMALISATION_TOL: f64 = 1e-12;
pub const AVERAGE_TOL: f64 = 1e-12;

#[derive(Debug, Default)]
pub struct InvariantReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl InvariantReport {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn attention_store(r: &mut impl Rng, attn: usize, state: usize, ctx: usize, zero_u: bool) -> ParamStore {
    let mut s = ParamStore::new();
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| r.gen_range(-2.0..2.0)).collect() };
    s.insert("att.w_state", Tensor::matrix(attn, state, draw(attn * state)).unwrap());
    s.insert("att.w_ctx", Tensor::matrix(attn, ctx, draw(attn * ctx)).unwrap());
    s.insert("att.b", Tensor::vector(draw(attn)).unwrap());
    let u = if zero_u { vec![0.0; attn] } else { draw(attn) };
    s.insert("att.u", Tensor::vector(u).unwrap());
    s
}

fn check_weights(report: &mut InvariantReport, label: &str, alphas: &[f64], mask: &[bool]) {
    let total: f64 = alphas.iter().sum();
    report.expect((total - 1.0).abs() <= NORMALISATION_TOL, || format!("{label}: weights sum to {total}"));
    for (t, (&a, &m)) in alphas.iter().zip(mask).enumerate() {
        if !m {
            report.expect(a == 0.0, || format!("{label}: masked step {t} has weight {a}"));
        }
    }
}

fn check_hull(report: &mut InvariantReport, label: &str, pooled: &[f64], states: &[Vec<f64>], mask: &[bool]) {
    for (k, &v) in pooled.iter().enumerate() {
        let live = states.iter().zip(mask).filter(|(_, m)| **m).map(|(s, _)| s[k]);
        let (lo, hi) = live.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        report.expect(v >= lo - 1e-12 && v <= hi + 1e-12, || {
            format!("{label}: coordinate {k} = {v} outside [{lo}, {hi}]")
        });
    }
}

/// Runs `cases` random configurations through every pooler.
pub fn attention_invariants(cases: usize, seed: u64) -> InvariantReport {
    let mut report = InvariantReport::default();
    let mut r = rng(seed);
    for case in 0..cases {
        let n = r.gen_range(1..=8);
        let dim = r.gen_range(1..=4);
        let mut mask: Vec<bool> = (0..n).map(|_| r.gen_bool(0.6)).collect();
        let keep = r.gen_range(0..n);
        mask[keep] = true;
        let states: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect())
            .collect();
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(-30.0..30.0)).collect();
        let ctx: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();

        let soft = masked_softmax(&scores, &mask).unwrap();
        check_weights(&mut report, &format!("case {case} softmax"), &soft, &mask);

        let mut g = Graph::new();
        let s = g.constant_vector(scores.clone()).unwrap();
        let node = g.softmax_masked(s, &mask).unwrap();
        let graph_soft = g.value(node).data().to_vec();
        check_weights(&mut report, &format!("case {case} graph softmax"), &graph_soft, &mask);

        for zero_u in [false, true] {
            let store = attention_store(&mut r, r_dim(case), dim, 2, zero_u);
            let mut g = Graph::new();
            let att = ContextAttention::bind(&mut g, &store, "att").unwrap();
            let hs: Vec<NodeId> = states.iter().map(|h| g.constant_vector(h.clone()).unwrap()).collect();
            let c = g.constant_vector(ctx.clone()).unwrap();
            let pooled = [
                ("context", context_attention(&mut g, &att, &hs, &mask, c).unwrap()),
                ("self", self_attention(&mut g, &att, &hs, &mask).unwrap()),
                ("average", average_pool(&mut g, &hs, &mask).unwrap()),
            ];
            for (name, p) in &pooled {
                let label = format!("case {case} {name} u0={zero_u}");
                check_weights(&mut report, &label, g.value(p.alphas).data(), &mask);
                check_hull(&mut report, &label, g.value(p.pooled).data(), &states, &mask);
            }
            if zero_u {
                let avg = g.value(pooled[2].1.pooled).data().to_vec();
                for (name, p) in &pooled[..2] {
                    let v = g.value(p.pooled).data();
                    let diff = v.iter().zip(&avg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    report.expect(diff < AVERAGE_TOL, || {
                        format!("case {case} {name}: u = 0 differs from the average by {diff}")
                    });
                }
            }
        }
    }
    report
}

fn r_dim(case: usize) -> usize {
    1 + case % 3
}
