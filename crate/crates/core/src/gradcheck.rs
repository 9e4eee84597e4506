//! Central finite-difference verification of analytic gradients.

use ndarray::Array2;
use rand::Rng;
use serde::Serialize;

use crate::augment::LayerPlan;
use crate::encoder::{Mode, Model};
use crate::error::Result;
use crate::graph::{Graph, NodeFeatures};
use crate::loss::{bp_balanced_loss_with_grad, edge_clamp_pattern};

/// Below this magnitude the absolute error is reported instead of the
/// relative one.
pub const ABS_FALLBACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    pub max_error: f64,
    pub worst_coordinate: Option<usize>,
    pub probed: usize,
    /// Coordinates skipped because a ±h step crossed a nondifferentiable point.
    pub excluded: usize,
}

/// `|a − n| / max(|a|, |n|)`, or `|a − n|` when both are tiny.
pub fn gradient_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < ABS_FALLBACK {
        diff
    } else {
        diff / scale
    }
}

/// Compares `grad` against `(L(θ + h e_i) − L(θ − h e_i)) / 2h` on `coords`.
/// `loss` returns `None` when the perturbed point left the differentiable
/// region of `θ`; such coordinates are excluded.
pub fn probe<F>(theta: &[f64], grad: &[f64], coords: &[usize], h: f64, mut loss: F) -> FdReport
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut work = theta.to_vec();
    let mut report = FdReport {
        max_error: 0.0,
        worst_coordinate: None,
        probed: 0,
        excluded: 0,
    };
    for &i in coords {
        work[i] = theta[i] + h;
        let plus = loss(&work);
        work[i] = theta[i] - h;
        let minus = loss(&work);
        work[i] = theta[i];
        let (Some(plus), Some(minus)) = (plus, minus) else {
            report.excluded += 1;
            continue;
        };
        let numeric = (plus - minus) / (2.0 * h);
        let err = gradient_error(grad[i], numeric);
        report.probed += 1;
        if err > report.max_error || report.worst_coordinate.is_none() {
            report.max_error = report.max_error.max(err);
            report.worst_coordinate = Some(i);
        }
    }
    report
}

fn region(model: &Model, plan: &LayerPlan, x: &NodeFeatures, g: &Graph) -> Result<(f64, Vec<bool>)> {
    let (f, tape) = model.forward(plan, x, Mode::Train)?;
    let (report, _) = bp_balanced_loss_with_grad(g, f.view())?;
    let mut pattern = tape.activation_pattern(model);
    pattern.extend(edge_clamp_pattern(g, f.view()));
    Ok((report.value, pattern))
}

/// Analytic balanced-loss gradient of every model parameter, in the order of
/// [`Model::flat_params`].
pub fn model_gradient(model: &Model, plan: &LayerPlan, x: &NodeFeatures, g: &Graph) -> Result<(f64, Vec<f64>)> {
    let (f, tape) = model.forward(plan, x, Mode::Train)?;
    let (report, d_f) = bp_balanced_loss_with_grad(g, f.view())?;
    let grads = model.backward(plan, x, &tape, d_f.view())?;
    Ok((report.value, grads.flatten()))
}

/// Checks the encoder gradient on `n_probes` random coordinates (drawn
/// without replacement; coordinates at ReLU kinks or the loss floor are
/// excluded and replaced while untried coordinates remain).
pub fn finite_difference_check<R: Rng + ?Sized>(
    model: &Model,
    plan: &LayerPlan,
    x: &NodeFeatures,
    g: &Graph,
    h: f64,
    n_probes: usize,
    rng: &mut R,
) -> Result<FdReport> {
    let (_, grad) = model_gradient(model, plan, x, g)?;
    let (_, base_pattern) = region(model, plan, x, g)?;
    let theta = model.flat_params();
    let mut order: Vec<usize> = (0..theta.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);

    let mut scratch = model.clone();
    let mut eval = |params: &[f64]| -> Option<f64> {
        scratch.set_flat_params(params).ok()?;
        let (value, pattern) = region(&scratch, plan, x, g).ok()?;
        (pattern == base_pattern).then_some(value)
    };

    let mut total = FdReport {
        max_error: 0.0,
        worst_coordinate: None,
        probed: 0,
        excluded: 0,
    };
    for chunk in order.chunks(n_probes.max(1)) {
        let need = n_probes - total.probed;
        let coords = &chunk[..need.min(chunk.len())];
        let r = probe(&theta, &grad, coords, h, &mut eval);
        if r.max_error >= total.max_error && r.worst_coordinate.is_some() {
            total.max_error = r.max_error;
            total.worst_coordinate = r.worst_coordinate;
        }
        total.probed += r.probed;
        total.excluded += r.excluded;
        if total.probed >= n_probes {
            break;
        }
    }
    Ok(total)
}

/// Finite-difference check of `∂L/∂F` for the balanced loss, bypassing the
/// encoder. Returns the worst error over all entries.
pub fn affiliation_gradient_check(g: &Graph, f: &Array2<f64>, h: f64) -> Result<f64> {
    let (_, grad) = bp_balanced_loss_with_grad(g, f.view())?;
    let theta: Vec<f64> = f.iter().copied().collect();
    let coords: Vec<usize> = (0..theta.len()).collect();
    let shape = f.raw_dim();
    let base_pattern = edge_clamp_pattern(g, f.view());
    let report = probe(
        &theta,
        grad.as_slice().expect("standard layout"),
        &coords,
        h,
        |p| {
            let m = Array2::from_shape_vec(shape, p.to_vec()).ok()?;
            if m.iter().any(|&v| v < 0.0) || edge_clamp_pattern(g, m.view()) != base_pattern {
                return None;
            }
            bp_balanced_loss_with_grad(g, m.view()).ok().map(|(r, _)| r.value)
        },
    );
    Ok(report.max_error)
}
