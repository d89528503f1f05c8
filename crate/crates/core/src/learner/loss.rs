//! Class- and boundary-weighted cross-entropy and its exact gradient.

use super::PredictorParams;
use crate::error::{Error, Result};
use crate::fields::{Grid, LabelMap, Stack};
use crate::metrics::boundary_mask;
use crate::scalar::Real;

/// Probabilities below this are clamped before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median-frequency balancing plus one on label boundaries:
/// `median(f) / f[class] + [pixel on a boundary]`.
///
/// A class with non-positive frequency gets a balancing term of 1.
pub fn class_weights<T: Real>(gt: &LabelMap, n_classes: usize, frequencies: &[f64]) -> Result<Grid<T>> {
    if frequencies.len() != n_classes || n_classes == 0 {
        return Err(Error::InvalidInput(format!(
            "{} frequencies for {n_classes} classes",
            frequencies.len()
        )));
    }
    gt.check_classes(n_classes)?;
    let med = median(frequencies);
    let balance: Vec<f64> = frequencies
        .iter()
        .map(|&f| if f > 0.0 { med / f } else { 1.0 })
        .collect();
    let boundary = boundary_mask(gt);
    let (h, w) = gt.shape();
    let data = gt
        .data()
        .iter()
        .zip(boundary.bits())
        .map(|(&l, &b)| T::lit(balance[l as usize] + if b { 1.0 } else { 0.0 }))
        .collect();
    Grid::new(h, w, data)
}

fn check_inputs<T: Real>(scores: &Stack<T>, gt: &LabelMap, weights: &Grid<T>, params: &PredictorParams<T>) -> Result<()> {
    gt.check_shape(scores.shape())?;
    weights.check_shape(scores.shape())?;
    if scores.n_planes() != params.n_classes() {
        return Err(Error::PlaneMismatch {
            expected: params.n_classes(),
            got: scores.n_planes(),
        });
    }
    gt.check_classes(params.n_classes())
}

/// `-(1/L) sum_p w_p log max(s_p[y_p], 1e-12) + lambda ||W||^2`.
pub fn wce_loss<T: Real>(
    scores: &Stack<T>,
    gt: &LabelMap,
    weights: &Grid<T>,
    params: &PredictorParams<T>,
    lambda: T,
) -> Result<T> {
    check_inputs(scores, gt, weights, params)?;
    let floor = T::lit(LOG_FLOOR);
    let data: T = gt
        .data()
        .iter()
        .enumerate()
        .map(|(p, &y)| weights.data()[p] * scores.at(y as usize, p).max(floor).ln())
        .sum();
    Ok(-data / T::from_usize_lossy(gt.len()) + lambda * params.weight_norm_sq())
}

/// Gradient of [`wce_loss`] with respect to the weights and bias, where
/// `scores = predict(features, params)`.
pub fn wce_grad<T: Real>(
    scores: &Stack<T>,
    gt: &LabelMap,
    weights: &Grid<T>,
    features: &Stack<T>,
    params: &PredictorParams<T>,
    lambda: T,
) -> Result<PredictorParams<T>> {
    check_inputs(scores, gt, weights, params)?;
    features.check_shape(scores.shape())?;
    if features.n_planes() != params.n_features() {
        return Err(Error::PlaneMismatch {
            expected: params.n_features(),
            got: features.n_planes(),
        });
    }
    let k = params.n_classes();
    let nf = params.n_features();
    let floor = T::lit(LOG_FLOOR);
    let inv_l = T::one() / T::from_usize_lossy(gt.len());

    let mut gw = vec![T::zero(); nf * k];
    let mut gb = vec![T::zero(); k];
    let mut delta = vec![T::zero(); k];
    for (p, &y) in gt.data().iter().enumerate() {
        let y = y as usize;
        let wp = weights.data()[p];
        // The clamped log is flat below the floor.
        if wp == T::zero() || scores.at(y, p) < floor {
            continue;
        }
        for (c, d) in delta.iter_mut().enumerate() {
            let target = if c == y { T::one() } else { T::zero() };
            *d = wp * (scores.at(c, p) - target) * inv_l;
        }
        for (g, &d) in gb.iter_mut().zip(&delta) {
            *g += d;
        }
        for f in 0..nf {
            let x = features.at(f, p);
            if x == T::zero() {
                continue;
            }
            for (g, &d) in gw[f * k..(f + 1) * k].iter_mut().zip(&delta) {
                *g += x * d;
            }
        }
    }
    let two_lambda = lambda + lambda;
    for (g, &w) in gw.iter_mut().zip(params.weights()) {
        *g += two_lambda * w;
    }
    PredictorParams::from_parts(nf, k, gw, gb)
}
