//! Momentum SGD with deep supervision over the unrolled refinement steps.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{class_weights, extract_features, predict, wce_grad, wce_loss, PredictorParams};
use crate::error::{Error, Result};
use crate::fields::{Grid, LabelMap, Stack};
use crate::metrics::class_frequencies;
use crate::mls::{refine_scores, EvolutionConfig};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// L2 penalty on the weights.
    pub weight_decay: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Unrolled prediction steps per example.
    pub steps: usize,
    /// Loss weight of each step; sums to 1.
    pub per_step_loss_weights: Vec<f64>,
    /// Seeds the per-epoch example order.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::with_steps(4)
    }
}

impl TrainConfig {
    /// Defaults with `steps` equally weighted steps.
    pub fn with_steps(steps: usize) -> Self {
        Self {
            learning_rate: 0.01,
            weight_decay: 0.0005,
            momentum: 0.9,
            epochs: 40,
            steps,
            per_step_loss_weights: vec![1.0 / steps.max(1) as f64; steps],
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("train config: {msg}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0".into());
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be >= 0".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)".into());
        }
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if self.per_step_loss_weights.len() != self.steps {
            return bad(format!(
                "{} per-step weights for {} steps",
                self.per_step_loss_weights.len(),
                self.steps
            ));
        }
        if self.per_step_loss_weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return bad("per-step weights must be >= 0".into());
        }
        let total: f64 = self.per_step_loss_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("per-step weights sum to {total}, not 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport<T> {
    pub params: PredictorParams<T>,
    /// Mean deeply supervised loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

/// Trains from zero parameters and returns the final parameters.
pub fn train<T: Real>(
    dataset: &[(Stack<T>, LabelMap)],
    n_classes: usize,
    cfg: &TrainConfig,
    evo: &EvolutionConfig,
) -> Result<PredictorParams<T>> {
    Ok(train_with_history(dataset, n_classes, None, cfg, evo)?.params)
}

/// Trains with batch size one. Each example is unrolled for `cfg.steps`
/// predictions; between steps the scores are refined by the level-set
/// evolution and fed back as a one-hot prior. The refinement is not
/// differentiated, so the gradient of each step flows through `predict`
/// only.
pub fn train_with_history<T: Real>(
    dataset: &[(Stack<T>, LabelMap)],
    n_classes: usize,
    initial: Option<PredictorParams<T>>,
    cfg: &TrainConfig,
    evo: &EvolutionConfig,
) -> Result<TrainReport<T>> {
    cfg.validate()?;
    evo.validate()?;
    let Some((first, _)) = dataset.first() else {
        return Err(Error::InvalidInput("training set is empty".into()));
    };
    let channels = first.n_planes();
    for (image, gt) in dataset {
        if image.n_planes() != channels {
            return Err(Error::PlaneMismatch {
                expected: channels,
                got: image.n_planes(),
            });
        }
        gt.check_shape(image.shape())?;
        gt.check_classes(n_classes)?;
    }
    let mut params = initial.unwrap_or_else(|| PredictorParams::for_image(channels, n_classes));
    if params.n_classes() != n_classes || params.n_features() != super::feature_count(channels, n_classes) {
        return Err(Error::InvalidInput("initial parameters do not fit the dataset".into()));
    }

    let gts: Vec<LabelMap> = dataset.iter().map(|(_, gt)| gt.clone()).collect();
    let frequencies = class_frequencies(&gts, n_classes)?;
    let pixel_weights: Vec<Grid<T>> = gts
        .iter()
        .map(|gt| class_weights(gt, n_classes, &frequencies))
        .collect::<Result<_>>()?;

    // Steps after the last weighted one contribute nothing.
    let last_step = cfg
        .per_step_loss_weights
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(0);
    let lambda = T::lit(cfg.weight_decay);
    let lr = T::lit(cfg.learning_rate);
    let mu = T::lit(cfg.momentum);
    let mut velocity = PredictorParams::<T>::zeros(params.n_features(), n_classes);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &idx in &order {
            let (image, gt) = &dataset[idx];
            let weights = &pixel_weights[idx];
            let mut grad = PredictorParams::<T>::zeros(params.n_features(), n_classes);
            let mut loss = T::zero();
            let mut prior: Option<Stack<T>> = None;

            for (step, &alpha) in cfg.per_step_loss_weights[..=last_step].iter().enumerate() {
                let features = extract_features(image, prior.as_ref(), n_classes)?;
                let scores = predict(&features, &params)?;
                if alpha > 0.0 {
                    let a = T::lit(alpha);
                    loss += a * wce_loss(&scores, gt, weights, &params, lambda)?;
                    let g = wce_grad(&scores, gt, weights, &features, &params, lambda)?;
                    axpy(grad.weights_mut(), a, g.weights());
                    axpy(grad.bias_mut(), a, g.bias());
                }
                if step < last_step {
                    let (labels, _) = refine_scores(&scores, evo)?;
                    prior = Some(labels.one_hot(n_classes)?);
                }
            }

            let loss = loss.to_f64_lossy();
            if !loss.is_finite() || !grad.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss;
            momentum_update(velocity.weights_mut(), params.weights_mut(), grad.weights(), mu, lr);
            momentum_update(velocity.bias_mut(), params.bias_mut(), grad.bias(), mu, lr);
        }
        epoch_losses.push(epoch_loss / dataset.len() as f64);
    }
    Ok(TrainReport { params, epoch_losses })
}

fn axpy<T: Real>(acc: &mut [T], a: T, x: &[T]) {
    for (y, &x) in acc.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// `v <- mu v - lr g; theta <- theta + v`.
fn momentum_update<T: Real>(velocity: &mut [T], theta: &mut [T], grad: &[T], mu: T, lr: T) {
    for ((v, t), &g) in velocity.iter_mut().zip(theta.iter_mut()).zip(grad) {
        *v = mu * *v - lr * g;
        *t += *v;
    }
}
