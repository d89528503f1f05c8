//! Recurrent refinement: predict, evolve, assign, feed the labels back.

use super::evolve::{evolve, EvolutionTrace};
use super::speed::DeepSpeed;
use super::{assign, EvolutionConfig};
use crate::dtrans::init_phi;
use crate::error::{Error, Result};
use crate::fields::{LabelMap, Stack};
use crate::scalar::Real;

/// Coarse per-class score predictor, optionally conditioned on a previous
/// partition of the same image.
pub trait CoarsePredictor<T: Real> {
    fn n_classes(&self) -> usize;

    /// Scores in `[0, 1]` with one plane per class.
    fn predict(&self, image: &Stack<T>, prior: Option<&LabelMap>) -> Result<Stack<T>>;
}

#[derive(Clone, Debug)]
pub struct RefineStep<T> {
    /// Predictor output at this step.
    pub scores: Stack<T>,
    /// Labels after the level-set evolution of those scores.
    pub labels: LabelMap,
    pub trace: EvolutionTrace,
}

#[derive(Clone, Debug)]
pub struct Refinement<T> {
    pub labels: LabelMap,
    pub steps: Vec<RefineStep<T>>,
}

/// Scores to level sets, deep-mode evolution, then the partition.
pub fn refine_scores<T: Real>(scores: &Stack<T>, cfg: &EvolutionConfig) -> Result<(LabelMap, EvolutionTrace)> {
    let phi0 = init_phi(scores)?;
    let speed = DeepSpeed::new(scores, T::lit(cfg.rho))?;
    let (phi, trace) = evolve(&phi0, &speed, cfg)?;
    Ok((assign(&phi), trace))
}

/// Runs `steps` rounds of prediction and level-set refinement. The first
/// prediction sees the image alone; every later one also sees the refined
/// labels of the round before.
pub fn refine<T: Real, P: CoarsePredictor<T> + ?Sized>(
    image: &Stack<T>,
    predictor: &P,
    steps: usize,
    cfg: &EvolutionConfig,
) -> Result<Refinement<T>> {
    if steps == 0 {
        return Err(Error::InvalidInput("refine needs at least one step".into()));
    }
    let mut out: Vec<RefineStep<T>> = Vec::with_capacity(steps);
    for _ in 0..steps {
        let prior = out.last().map(|s| &s.labels);
        let scores = predictor.predict(image, prior)?;
        if scores.n_planes() != predictor.n_classes() {
            return Err(Error::PlaneMismatch {
                expected: predictor.n_classes(),
                got: scores.n_planes(),
            });
        }
        scores.check_shape(image.shape())?;
        let (labels, trace) = refine_scores(&scores, cfg)?;
        out.push(RefineStep { scores, labels, trace });
    }
    Ok(Refinement {
        labels: out.last().expect("steps >= 1").labels.clone(),
        steps: out,
    })
}
