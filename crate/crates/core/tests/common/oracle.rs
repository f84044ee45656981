//! Plain-arithmetic forward pass over a parameter store, written without
//! the graph so it can cross-check the network.

use hirenet::data::{Interview, Modality};
use hirenet::model::{HireNetConfig, Variant};
use hirenet::ParamStore;

pub struct ScalarForward {
    pub score: f64,
    pub question_alphas: Vec<f64>,
    pub frame_alphas: Vec<Vec<f64>>,
}

struct Reader<'a>(&'a ParamStore);

impl Reader<'_> {
    fn mat(&self, name: &str) -> Vec<Vec<f64>> {
        let t = self.0.get(name).unwrap();
        let cols = t.shape()[1];
        t.data().chunks(cols).map(<[f64]>::to_vec).collect()
    }

    fn vec(&self, name: &str) -> Vec<f64> {
        self.0.get(name).unwrap().data().to_vec()
    }

    fn has(&self, name: &str) -> bool {
        self.0.contains(name)
    }
}

fn matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| {
            assert_eq!(row.len(), x.len());
            row.iter().zip(x).map(|(a, b)| a * b).sum()
        })
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gru_step(p: &Reader, prefix: &str, x: &[f64], h: &[f64]) -> Vec<f64> {
    let gate = |g: &str, hin: &[f64]| -> Vec<f64> {
        let wx = matvec(&p.mat(&format!("{prefix}.w_{g}")), x);
        let uh = matvec(&p.mat(&format!("{prefix}.u_{g}")), hin);
        let b = p.vec(&format!("{prefix}.b_{g}"));
        (0..b.len()).map(|i| wx[i] + uh[i] + b[i]).collect()
    };
    let z: Vec<f64> = gate("z", h).into_iter().map(sig).collect();
    let r: Vec<f64> = gate("r", h).into_iter().map(sig).collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let cand: Vec<f64> = gate("h", &rh).into_iter().map(f64::tanh).collect();
    (0..h.len()).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect()
}

fn hidden_of(p: &Reader, prefix: &str) -> usize {
    p.vec(&format!("{prefix}.b_z")).len()
}

fn gru_states(p: &Reader, prefix: &str, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut h = vec![0.0; hidden_of(p, prefix)];
    xs.iter()
        .map(|x| {
            h = gru_step(p, prefix, x, &h);
            h.clone()
        })
        .collect()
}

fn bigru(p: &Reader, prefix: &str, xs: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let fwd = gru_states(p, &format!("{prefix}.fwd"), xs);
    let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
    let mut bwd = gru_states(p, &format!("{prefix}.bwd"), &rev);
    bwd.reverse();
    (fwd, bwd)
}

fn join(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().chain(b).copied().collect()
}

fn attend(p: &Reader, prefix: &str, states: &[Vec<f64>], ctx: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let w = p.mat(&format!("{prefix}.w_state"));
    let u = p.vec(&format!("{prefix}.u"));
    let mut offset = p.vec(&format!("{prefix}.b"));
    if let Some(c) = ctx {
        let wc = matvec(&p.mat(&format!("{prefix}.w_ctx")), c);
        offset.iter_mut().zip(wc).for_each(|(o, v)| *o += v);
    }
    let scores: Vec<f64> = states
        .iter()
        .map(|h| {
            let pre = matvec(&w, h);
            pre.iter().zip(&offset).zip(&u).map(|((a, o), uu)| uu * (a + o).tanh()).sum()
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let alphas: Vec<f64> = exps.iter().map(|e| e / total).collect();
    (alphas.clone(), pooled(&alphas, states))
}

fn pooled(alphas: &[f64], states: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; states[0].len()];
    for (a, h) in alphas.iter().zip(states) {
        out.iter_mut().zip(h).for_each(|(o, v)| *o += a * v);
    }
    out
}

fn average(states: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let alphas = vec![1.0 / states.len() as f64; states.len()];
    (alphas.clone(), pooled(&alphas, states))
}

fn pool(p: &Reader, variant: Variant, prefix: &str, states: &[Vec<f64>], ctx: &[f64]) -> (Vec<f64>, Vec<f64>) {
    match variant {
        Variant::HireNet => attend(p, prefix, states, Some(ctx)),
        Variant::HnSatt => attend(p, prefix, states, None),
        Variant::HnAvg => average(states),
        Variant::BigruAnswerwise => unreachable!(),
    }
}

fn embed(table: &[Vec<f64>], tokens: &[usize]) -> Vec<Vec<f64>> {
    tokens.iter().map(|&t| table[t].clone()).collect()
}

fn classify(p: &Reader, rep: &[f64]) -> f64 {
    let w = p.mat("classifier.w");
    sig(matvec(&w, rep)[0] + p.vec("classifier.b")[0])
}

/// Score and attention weights of `interview` under `store`.
pub fn scalar_forward(config: &HireNetConfig, store: &ParamStore, interview: &Interview) -> ScalarForward {
    let p = Reader(store);
    let answer_table = match config.modality {
        Modality::Text if p.has("embed.answer") => Some(p.mat("embed.answer")),
        Modality::Text => Some(p.mat("embed.words")),
        _ => None,
    };
    let answer_inputs = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
        match &answer_table {
            Some(t) => rows.iter().map(|r| t[r[0] as usize].clone()).collect(),
            None => rows.to_vec(),
        }
    };

    if config.variant == Variant::BigruAnswerwise {
        let scores: Vec<f64> = interview
            .qa
            .iter()
            .map(|qa| {
                let (f, b) = bigru(&p, "answer", &answer_inputs(&qa.answer));
                classify(&p, &join(f.last().unwrap(), &b[0]))
            })
            .collect();
        return ScalarForward {
            score: scores.iter().sum::<f64>() / scores.len() as f64,
            question_alphas: Vec::new(),
            frame_alphas: Vec::new(),
        };
    }

    let words = p.mat("embed.words");
    let mut high_inputs = Vec::new();
    let mut frame_alphas = Vec::new();
    for qa in &interview.qa {
        let (f, b) = bigru(&p, "answer", &answer_inputs(&qa.answer));
        let states: Vec<Vec<f64>> = f.iter().zip(&b).map(|(x, y)| join(x, y)).collect();
        let h_q = gru_states(&p, "question.gru", &embed(&words, &qa.q_tokens)).pop().unwrap();
        let (alphas, a) = pool(&p, config.variant, "low_attn", &states, &h_q);
        frame_alphas.push(alphas);
        high_inputs.push(join(&h_q, &a));
    }
    let (f, b) = bigru(&p, "high", &high_inputs);
    let states: Vec<Vec<f64>> = f.iter().zip(&b).map(|(x, y)| join(x, y)).collect();
    let job = match config.variant {
        Variant::HireNet => gru_states(&p, "job.gru", &embed(&words, &interview.job_tokens)).pop().unwrap(),
        _ => Vec::new(),
    };
    let (question_alphas, v) = pool(&p, config.variant, "high_attn", &states, &job);
    ScalarForward {
        score: classify(&p, &v),
        question_alphas,
        frame_alphas,
    }
}
