mod common;

use common::{random_interview, random_model, rng, toy_config};
use hirenet::attention::{context_attention, ContextAttention};
use hirenet::data::{Label, Modality};
use hirenet::encoders::{BiGru, Sequence};
use hirenet::graph::masked_softmax;
use hirenet::harness::compute_metrics;
use hirenet::model::{late_fusion, Padding, Variant};
use hirenet::{Graph, NodeId, ParamStore, Tensor};
use proptest::prelude::*;

fn labels(bits: &[bool]) -> Vec<Label> {
    bits.iter().map(|&b| Label::from_bool(b)).collect()
}

fn gru_store(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, values: &[f64]) {
    let mut it = values.iter().copied().cycle();
    for gate in ["z", "r", "h"] {
        let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
        store.insert(&format!("{prefix}.w_{gate}"), Tensor::matrix(hidden, input, take(hidden * input)).unwrap());
        store.insert(&format!("{prefix}.u_{gate}"), Tensor::matrix(hidden, hidden, take(hidden * hidden)).unwrap());
        store.insert(&format!("{prefix}.b_{gate}"), Tensor::vector(take(hidden)).unwrap());
    }
}

fn bigru_rows(store: &ParamStore, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut g = Graph::new();
    let bi = BiGru::bind(&mut g, store, "bi").unwrap();
    let steps: Vec<NodeId> = xs.iter().map(|x| g.constant_vector(x.clone()).unwrap()).collect();
    let rows = bi.run(&mut g, &Sequence::full(steps)).unwrap().rows;
    rows.iter().map(|&r| g.value(r).data().to_vec()).collect()
}

fn pooled_attention(states: &[Vec<f64>], params: &[f64], ctx: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dim = states[0].len();
    let mut store = ParamStore::new();
    let mut it = params.iter().copied().cycle();
    let mut take = |n: usize| -> Vec<f64> { (0..n).map(|_| it.next().unwrap()).collect() };
    store.insert("a.w_state", Tensor::matrix(3, dim, take(3 * dim)).unwrap());
    store.insert("a.w_ctx", Tensor::matrix(3, ctx.len(), take(3 * ctx.len())).unwrap());
    store.insert("a.b", Tensor::vector(take(3)).unwrap());
    store.insert("a.u", Tensor::vector(take(3)).unwrap());
    let mut g = Graph::new();
    let att = ContextAttention::bind(&mut g, &store, "a").unwrap();
    let hs: Vec<NodeId> = states.iter().map(|h| g.constant_vector(h.clone()).unwrap()).collect();
    let c = g.constant_vector(ctx.to_vec()).unwrap();
    let p = context_attention(&mut g, &att, &hs, &vec![true; hs.len()], c).unwrap();
    (g.value(p.alphas).data().to_vec(), g.value(p.pooled).data().to_vec())
}

fn states_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3).prop_flat_map(|dim| prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), 1..7))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn softmax_is_normalised_and_respects_the_mask(
        scores in prop::collection::vec(-50.0..50.0f64, 1..12),
        mask_bits in prop::collection::vec(any::<bool>(), 12),
        keep in 0usize..12,
    ) {
        let n = scores.len();
        let mut mask = mask_bits[..n].to_vec();
        mask[keep % n] = true;
        let p = masked_softmax(&scores, &mask).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (w, m) in p.iter().zip(&mask) {
            if !m {
                prop_assert_eq!(*w, 0.0);
            } else {
                prop_assert!(*w > 0.0 || scores.iter().cloned().fold(f64::MIN, f64::max) > 30.0);
            }
        }
        let mut g = Graph::new();
        let s = g.constant_vector(scores.clone()).unwrap();
        let node = g.softmax_masked(s, &mask).unwrap();
        prop_assert_eq!(g.value(node).data(), p.as_slice());
    }

    #[test]
    fn bigru_on_reversed_input_mirrors_with_swapped_directions(
        xs in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), 1..6),
        fwd in prop::collection::vec(-1.0..1.0f64, 30),
        bwd in prop::collection::vec(-1.0..1.0f64, 30),
    ) {
        let mut a = ParamStore::new();
        gru_store(&mut a, "bi.fwd", 2, 2, &fwd);
        gru_store(&mut a, "bi.bwd", 2, 2, &bwd);
        let mut b = ParamStore::new();
        gru_store(&mut b, "bi.fwd", 2, 2, &bwd);
        gru_store(&mut b, "bi.bwd", 2, 2, &fwd);
        let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let ra = bigru_rows(&a, &xs);
        let rb = bigru_rows(&b, &rev);
        let n = xs.len();
        for t in 0..n {
            let mirrored = &rb[n - 1 - t];
            prop_assert_eq!(&ra[t][..2], &mirrored[2..]);
            prop_assert_eq!(&ra[t][2..], &mirrored[..2]);
        }
    }

    #[test]
    fn attention_commutes_with_permutation_and_stays_in_the_hull(
        states in states_strategy(),
        params in prop::collection::vec(-2.0..2.0f64, 40),
        ctx in prop::collection::vec(-1.0..1.0f64, 2),
        rotate in 0usize..7,
    ) {
        let n = states.len();
        let k = rotate % n;
        let mut permuted = states.clone();
        permuted.rotate_left(k);
        let (alphas, pooled) = pooled_attention(&states, &params, &ctx);
        let (p_alphas, p_pooled) = pooled_attention(&permuted, &params, &ctx);
        for t in 0..n {
            prop_assert!((p_alphas[t] - alphas[(t + k) % n]).abs() <= 1e-12);
        }
        for (d, v) in pooled.iter().enumerate() {
            prop_assert!((v - p_pooled[d]).abs() <= 1e-12);
            let lo = states.iter().map(|s| s[d]).fold(f64::INFINITY, f64::min);
            let hi = states.iter().map(|s| s[d]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
    }

    #[test]
    fn late_fusion_is_monotone_and_bounded(
        scores in prop::collection::vec(prop::option::of(0.0..1.0f64), 3),
        bump in 0.0..0.5f64,
        which in 0usize..3,
    ) {
        prop_assume!(scores.iter().any(Option::is_some));
        let (base, _) = late_fusion(&scores, 0.5).unwrap();
        let present: Vec<f64> = scores.iter().flatten().copied().collect();
        let lo = present.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = present.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(base >= lo - 1e-15 && base <= hi + 1e-15);
        let mut raised = scores.clone();
        if let Some(s) = raised[which].as_mut() {
            *s += bump;
        }
        let (after, label) = late_fusion(&raised, 0.5).unwrap();
        prop_assert!(after >= base);
        prop_assert_eq!(label, Label::from_bool(after >= 0.5));
    }

    #[test]
    fn metrics_match_a_confusion_recount(
        pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200),
    ) {
        let (pred, truth): (Vec<bool>, Vec<bool>) = pairs.iter().copied().unzip();
        let m = compute_metrics(&labels(&pred), &labels(&truth)).unwrap();
        let count = |p: bool, t: bool| pairs.iter().filter(|&&x| x == (p, t)).count();
        let (tp, fp, fn_, tn) = (count(true, true), count(true, false), count(false, true), count(false, false));
        prop_assert_eq!((m.tp, m.fp, m.fn_, m.tn), (tp, fp, fn_, tn));
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
        prop_assert!((m.precision - precision).abs() <= 1e-15);
        prop_assert!((m.recall - recall).abs() <= 1e-15);
        prop_assert!((m.f1 - f1).abs() <= 1e-12);
    }

    #[test]
    fn backward_is_linear_in_the_loss(
        x in prop::collection::vec(-2.0..2.0f64, 4),
        w in prop::collection::vec(-2.0..2.0f64, 8),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let mut store = ParamStore::new();
        store.insert("x", Tensor::vector(x).unwrap());
        store.insert("w", Tensor::matrix(2, 4, w).unwrap());
        let grads = |ca: f64, cb: f64| {
            let mut g = Graph::new();
            let xn = g.bind(&store, "x").unwrap();
            let wn = g.bind(&store, "w").unwrap();
            let y = g.affine(wn, xn, None).unwrap();
            let f = g.tanh(y).unwrap();
            let f = g.dot(f, f).unwrap();
            let h = g.sigmoid(xn).unwrap();
            let h = g.dot(h, xn).unwrap();
            let root = g.combine(&[(ca, f), (cb, h)], 0.0).unwrap();
            g.backward(root).unwrap()
        };
        let (gf, gh, both) = (grads(1.0, 0.0), grads(0.0, 1.0), grads(a, b));
        for name in ["x", "w"] {
            for ((p, q), r) in gf[name].data().iter().zip(gh[name].data()).zip(both[name].data()) {
                prop_assert!((a * p + b * q - r).abs() <= 1e-12 * (1.0 + r.abs()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn padding_never_changes_a_prediction(
        seed in 0u64..10_000,
        extra_questions in 0usize..3,
        extra_frames in 0usize..4,
        extra_tokens in 0usize..3,
        variant_index in 0usize..4,
        text in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let modality = if text { Modality::Text } else { Modality::Video };
        let variant = Variant::ALL[variant_index];
        let model = random_model(toy_config(variant, modality, 3, 7, 2), &mut r, 1.0);
        let interview = random_interview(&mut r, "p", modality, 3, 7, 3, 4);
        let base = model.predict(&interview).unwrap();
        let mut padding = Padding::for_batch(&[&interview]);
        padding.questions += extra_questions;
        padding.answer_frames += extra_frames;
        padding.question_tokens += extra_tokens;
        padding.job_tokens += extra_tokens;
        let padded = model.predict_padded(&interview, &padding).unwrap();
        prop_assert_eq!(base, padded);
    }
}
