use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::graph::sigmoid;

/// `σ(w·x + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        LogisticModel { w: vec![0.0; dim], b: 0.0 }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticSettings {
    pub l2: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticSettings {
    fn default() -> Self {
        LogisticSettings {
            l2: 1e-3,
            max_iters: 20_000,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting at the zero model.
    pub losses: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

struct Problem<'a> {
    xs: &'a [Vec<f64>],
    ys: Vec<f64>,
    l2: f64,
}

impl Problem<'_> {
    fn objective(&self, m: &LogisticModel) -> f64 {
        let n = self.xs.len() as f64;
        let data: f64 = self
            .xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| {
                let z = m.logit(x);
                softplus(z) - y * z
            })
            .sum::<f64>()
            / n;
        data + self.l2 * m.w.iter().map(|w| w * w).sum::<f64>()
    }

    fn gradient(&self, m: &LogisticModel) -> (Vec<f64>, f64) {
        let n = self.xs.len() as f64;
        let mut gw: Vec<f64> = m.w.iter().map(|w| 2.0 * self.l2 * w).collect();
        let mut gb = 0.0;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            let r = (m.score(x) - y) / n;
            for (g, xv) in gw.iter_mut().zip(x) {
                *g += r * xv;
            }
            gb += r;
        }
        (gw, gb)
    }
}

/// Minimises mean cross-entropy plus `l2·‖w‖²` (bias unpenalised) by
/// full-batch gradient descent with backtracking line search.
pub fn fit_logistic(xs: &[Vec<f64>], ys: &[Label], settings: LogisticSettings) -> Result<LogisticFit> {
    if xs.len() != ys.len() {
        return Err(Error::contract(format!("{} vectors for {} labels", xs.len(), ys.len())));
    }
    if !ys.iter().any(|y| y.is_hirable()) || ys.iter().all(|y| y.is_hirable()) {
        return Err(Error::contract("logistic training needs both classes"));
    }
    if !(settings.l2 >= 0.0) || !settings.l2.is_finite() {
        return Err(Error::Config(format!("l2 must be finite and non-negative, got {}", settings.l2)));
    }
    let dim = xs[0].len();
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::contract("feature vectors differ in width"));
    }
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite feature value".into()));
    }
    let p = Problem {
        xs,
        ys: ys.iter().map(|y| y.target()).collect(),
        l2: settings.l2,
    };
    let mut model = LogisticModel::zeros(dim);
    let mut loss = p.objective(&model);
    let mut losses = vec![loss];
    let mut step: f64 = 1.0;
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let (gw, gb) = p.gradient(&model);
        let sq = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        grad_norm = sq.sqrt();
        if grad_norm < settings.tol || iterations >= settings.max_iters {
            break;
        }
        step = (step * 2.0).min(1e6);
        let accepted = loop {
            let cand = LogisticModel {
                w: model.w.iter().zip(&gw).map(|(w, g)| w - step * g).collect(),
                b: model.b - step * gb,
            };
            let l = p.objective(&cand);
            if l <= loss - 0.5 * step * sq {
                break Some((cand, l));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((cand, l)) = accepted else { break };
        model = cand;
        loss = l;
        losses.push(l);
        iterations += 1;
    }
    Ok(LogisticFit {
        model,
        loss,
        grad_norm,
        iterations,
        losses,
    })
}

/// [`fit_logistic`] with default stopping rules.
pub fn train_linear_classifier(xs: &[Vec<f64>], ys: &[Label], l2: f64) -> Result<LogisticModel> {
    Ok(fit_logistic(
        xs,
        ys,
        LogisticSettings {
            l2,
            ..LogisticSettings::default()
        },
    )?
    .model)
}
