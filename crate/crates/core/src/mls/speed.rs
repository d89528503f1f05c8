//! Propagation speeds: each class is pushed outward where it is the most
//! likely class and beats the threshold, inward everywhere else.

use crate::dtrans::validate_scores;
use crate::error::Result;
use crate::fields::{Grid, LabelMap, Stack};
use crate::region::{fit_regions, loglik};
use crate::scalar::Real;

/// Threshold on the log-likelihood scale used by classic mode.
pub const DEFAULT_CLASSIC_RHO: f64 = -10.0;

/// `F_i = v_i - max(rho, max_{j != i} v_j)` per pixel.
fn thresholded_margin<T: Real>(values: &Stack<T>, rho: T) -> Stack<T> {
    let (h, w) = values.shape();
    let n = values.n_planes();
    let mut out = vec![Grid::zeros(h, w); n];
    for p in 0..h * w {
        // Best and runner-up; the runner-up is the "others" max for the best.
        let (mut best, mut best_i, mut second) = (T::neg_infinity(), 0, T::neg_infinity());
        for i in 0..n {
            let v = values.at(i, p);
            if v > best {
                second = best;
                best = v;
                best_i = i;
            } else if v > second {
                second = v;
            }
        }
        for (i, plane) in out.iter_mut().enumerate() {
            let others = if i == best_i { second } else { best };
            plane.data_mut()[p] = values.at(i, p) - rho.max(others);
        }
    }
    Stack::new(out).expect("non-empty")
}

/// Deep-mode speed from network confidences in `[0, 1]`.
pub fn speed_deep<T: Real>(scores: &Stack<T>, rho: T) -> Result<Stack<T>> {
    validate_scores(scores)?;
    Ok(thresholded_margin(scores, rho))
}

/// Classic-mode speed from per-class log-likelihood planes.
pub fn speed_classic<T: Real>(loglik: &Stack<T>, rho: T) -> Stack<T> {
    thresholded_margin(loglik, rho)
}

/// Source of the speed field during evolution.
pub trait SpeedProvider<T: Real> {
    /// Speed for the current partition.
    fn speed(&self, labels: &LabelMap) -> Result<Stack<T>>;

    /// True when [`SpeedProvider::speed`] ignores the labels, so the
    /// evolution may compute it once.
    fn is_static(&self) -> bool {
        false
    }
}

/// Speed fixed by a score stack for the whole evolution.
#[derive(Clone, Debug)]
pub struct DeepSpeed<T> {
    speed: Stack<T>,
}

impl<T: Real> DeepSpeed<T> {
    pub fn new(scores: &Stack<T>, rho: T) -> Result<Self> {
        Ok(Self {
            speed: speed_deep(scores, rho)?,
        })
    }

    pub fn field(&self) -> &Stack<T> {
        &self.speed
    }
}

impl<T: Real> SpeedProvider<T> for DeepSpeed<T> {
    fn speed(&self, _labels: &LabelMap) -> Result<Stack<T>> {
        Ok(self.speed.clone())
    }

    fn is_static(&self) -> bool {
        true
    }
}

/// Speed re-derived from Gaussian region models of the current partition.
#[derive(Clone, Debug)]
pub struct ClassicSpeed<'a, T> {
    image: &'a Stack<T>,
    n_classes: usize,
    rho: T,
}

impl<'a, T: Real> ClassicSpeed<'a, T> {
    pub fn new(image: &'a Stack<T>, n_classes: usize, rho: T) -> Self {
        Self {
            image,
            n_classes,
            rho,
        }
    }
}

impl<T: Real> SpeedProvider<T> for ClassicSpeed<'_, T> {
    fn speed(&self, labels: &LabelMap) -> Result<Stack<T>> {
        let models = fit_regions(self.image, labels, self.n_classes)?;
        Ok(speed_classic(&loglik(self.image, &models)?, self.rho))
    }
}
