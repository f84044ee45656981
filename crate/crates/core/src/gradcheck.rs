//! Central finite-difference verification of graph gradients.

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::params::ParamStore;

/// Result of a gradient check: the worst coordinate and its error, plus the
/// error of the gradient as a whole.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// `‖a − n‖ / (‖a‖ + ‖n‖)` over every coordinate at once.
    pub norm_rel_error: f64,
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
}

/// Relative error used by [`grad_check`].
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

fn evaluate<F>(f: &F, params: &ParamStore) -> Result<f64>
where
    F: Fn(&mut Graph, &ParamStore) -> Result<NodeId>,
{
    let mut g = Graph::new();
    let root = f(&mut g, params)?;
    let v = g.value(root);
    if v.len() != 1 {
        return Err(Error::contract("grad_check needs a scalar-valued function"));
    }
    let value = v.data()[0];
    if !value.is_finite() {
        return Err(Error::Numeric("grad_check function returned a non-finite value".into()));
    }
    Ok(value)
}

/// Compares reverse-mode gradients of the scalar function `f` against
/// central differences `(f(θ+ε) - f(θ-ε)) / 2ε` on every coordinate of
/// every parameter in `params`.
///
/// `f` builds a fresh graph from the given parameters and returns the
/// scalar root. It must be deterministic.
pub fn grad_check<F>(params: &ParamStore, eps: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &ParamStore) -> Result<NodeId>,
{
    if !(eps > 0.0) {
        return Err(Error::contract(format!("finite-difference step must be positive, got {eps}")));
    }
    let mut g = Graph::new();
    let root = f(&mut g, params)?;
    let grads = g.backward(root)?;

    let mut report = GradCheckReport {
        norm_rel_error: 0.0,
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
    };
    let (mut diff_sq, mut analytic_sq, mut numeric_sq) = (0.0, 0.0, 0.0);
    let mut probe = params.clone();
    for (name, tensor) in params.iter() {
        let analytic = grads.get(name);
        for i in 0..tensor.len() {
            let orig = tensor.data()[i];
            probe.get_mut(name)?.data_mut()[i] = orig + eps;
            let plus = evaluate(&f, &probe)?;
            probe.get_mut(name)?.data_mut()[i] = orig - eps;
            let minus = evaluate(&f, &probe)?;
            probe.get_mut(name)?.data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic.map_or(0.0, |t| t.data()[i]);
            let err = relative_error(a, numeric);
            diff_sq += (a - numeric).powi(2);
            analytic_sq += a * a;
            numeric_sq += numeric * numeric;
            report.coordinates += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = err.max(report.max_rel_error);
                report.worst_param = name.clone();
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    let scale = analytic_sq.sqrt() + numeric_sq.sqrt();
    report.norm_rel_error = if scale > 0.0 { diff_sq.sqrt() / scale } else { 0.0 };
    Ok(report)
}
