//! Per-pixel linear-softmax coarse predictor with a prior-prediction input.
//!
//! The feature vector of a pixel is: the raw image channels, a 5x5 box mean of
//! each channel, one plane per class carrying the previous prediction
//! (uniform `1/N` when there is none), and a constant 1.

mod loss;
mod train;

pub use loss::{class_weights, wce_grad, wce_loss, LOG_FLOOR};
pub use train::{train, train_with_history, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::fields::{box_mean, Grid, LabelMap, Stack};
use crate::mls::CoarsePredictor;
use crate::scalar::Real;

/// Radius of the smoothed-channel features.
pub const SMOOTHING_RADIUS: usize = 2;

/// Number of features for an image with `channels` planes and `n_classes` classes.
pub fn feature_count(channels: usize, n_classes: usize) -> usize {
    2 * channels + n_classes + 1
}

/// Linear map from features to class logits.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorParams<T> {
    n_features: usize,
    n_classes: usize,
    /// Row-major `[n_features x n_classes]`.
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T: Real> PredictorParams<T> {
    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        Self {
            n_features,
            n_classes,
            weights: vec![T::zero(); n_features * n_classes],
            bias: vec![T::zero(); n_classes],
        }
    }

    /// Zero parameters sized for an image with `channels` planes.
    pub fn for_image(channels: usize, n_classes: usize) -> Self {
        Self::zeros(feature_count(channels, n_classes), n_classes)
    }

    pub fn from_parts(n_features: usize, n_classes: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if n_classes == 0 || weights.len() != n_features * n_classes || bias.len() != n_classes {
            return Err(Error::InvalidInput(format!(
                "parameter sizes {} / {} do not match {n_features} features x {n_classes} classes",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("parameters must be finite".into()));
        }
        Ok(Self {
            n_features,
            n_classes,
            weights,
            bias,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    #[inline]
    pub fn weight(&self, feature: usize, class: usize) -> T {
        self.weights[feature * self.n_classes + class]
    }

    /// Squared Frobenius norm of the weight matrix (bias excluded).
    pub fn weight_norm_sq(&self) -> T {
        self.weights.iter().map(|&w| w * w).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> PredictorParams<U> {
        PredictorParams {
            n_features: self.n_features,
            n_classes: self.n_classes,
            weights: self.weights.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
            bias: self.bias.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

/// Stacks the feature planes for every pixel of `image`.
pub fn extract_features<T: Real>(image: &Stack<T>, prior: Option<&Stack<T>>, n_classes: usize) -> Result<Stack<T>> {
    let (h, w) = image.shape();
    let mut planes: Vec<Grid<T>> = image.planes().to_vec();
    planes.extend(image.planes().iter().map(|p| box_mean(p, SMOOTHING_RADIUS)));
    match prior {
        Some(prior) => {
            prior.check_shape(image.shape())?;
            if prior.n_planes() != n_classes {
                return Err(Error::PlaneMismatch {
                    expected: n_classes,
                    got: prior.n_planes(),
                });
            }
            planes.extend(prior.planes().iter().cloned());
        }
        None => {
            let uniform = T::one() / T::from_usize_lossy(n_classes);
            planes.extend((0..n_classes).map(|_| Grid::filled(h, w, uniform)));
        }
    }
    planes.push(Grid::filled(h, w, T::one()));
    Stack::new(planes)
}

/// Softmax of the per-pixel logits.
pub fn predict<T: Real>(features: &Stack<T>, params: &PredictorParams<T>) -> Result<Stack<T>> {
    if features.n_planes() != params.n_features {
        return Err(Error::PlaneMismatch {
            expected: params.n_features,
            got: features.n_planes(),
        });
    }
    let (h, w) = features.shape();
    let k = params.n_classes;
    let mut out = vec![T::zero(); h * w * k];
    for (p, logits) in out.chunks_exact_mut(k).enumerate() {
        logits.copy_from_slice(&params.bias);
        for f in 0..params.n_features {
            let x = features.at(f, p);
            if x == T::zero() {
                continue;
            }
            let row = &params.weights[f * k..(f + 1) * k];
            for (l, &wt) in logits.iter_mut().zip(row) {
                *l += x * wt;
            }
        }
        softmax_in_place(logits);
    }
    Stack::from_pixel_major(h, w, k, &out)
}

pub(crate) fn softmax_in_place<T: Real>(logits: &mut [T]) {
    let max = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let mut total = T::zero();
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    for l in logits.iter_mut() {
        *l /= total;
    }
}

/// [`PredictorParams`] wrapped as a [`CoarsePredictor`]: the prior labels are
/// fed back as one-hot score planes.
#[derive(Clone, Debug)]
pub struct LinearPredictor<T> {
    pub params: PredictorParams<T>,
}

impl<T: Real> LinearPredictor<T> {
    pub fn new(params: PredictorParams<T>) -> Self {
        Self { params }
    }
}

impl<T: Real> CoarsePredictor<T> for LinearPredictor<T> {
    fn n_classes(&self) -> usize {
        self.params.n_classes
    }

    fn predict(&self, image: &Stack<T>, prior: Option<&LabelMap>) -> Result<Stack<T>> {
        let n = self.params.n_classes;
        let prior = prior.map(|l| l.one_hot(n)).transpose()?;
        let features = extract_features(image, prior.as_ref(), n)?;
        predict(&features, &self.params)
    }
}
