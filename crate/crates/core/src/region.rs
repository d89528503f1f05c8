//! Per-region diagonal Gaussian intensity models for classic-mode speeds.

use crate::error::{Error, Result};
use crate::fields::{Grid, LabelMap, Stack};
use crate::scalar::Real;

/// Lower bound on every per-channel variance.
pub const VARIANCE_FLOOR: f64 = 1e-4;

/// Log-likelihood assigned to every pixel for a class with no pixels, so an
/// absent class never wins the partition.
pub const EMPTY_REGION_LOGLIK: f64 = -1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionModel<T> {
    pub class_index: u32,
    pub mean: Vec<T>,
    pub variance: Vec<T>,
    pub pixel_count: usize,
}

impl<T: Real> RegionModel<T> {
    /// Placeholder for a class that owns no pixels.
    pub fn empty(class_index: u32, channels: usize) -> Self {
        Self {
            class_index,
            mean: vec![T::zero(); channels],
            variance: vec![T::lit(VARIANCE_FLOOR); channels],
            pixel_count: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pixel_count == 0
    }

    /// Diagonal-Gaussian log density of one pixel, summed over channels.
    pub fn log_density(&self, pixel: &[T]) -> T {
        let log_two_pi = T::lit((2.0 * std::f64::consts::PI).ln());
        let half = T::lit(0.5);
        pixel
            .iter()
            .zip(self.mean.iter().zip(&self.variance))
            .map(|(&x, (&m, &v))| -half * (log_two_pi + v.ln() + (x - m) * (x - m) / v))
            .sum()
    }
}

/// Channel-wise maximum-likelihood mean and variance for each class.
pub fn fit_regions<T: Real>(
    image: &Stack<T>,
    labels: &LabelMap,
    n_classes: usize,
) -> Result<Vec<RegionModel<T>>> {
    labels.check_shape(image.shape())?;
    labels.check_classes(n_classes)?;
    let channels = image.n_planes();
    let floor = T::lit(VARIANCE_FLOOR);

    let mut counts = vec![0usize; n_classes];
    let mut sums = vec![T::zero(); n_classes * channels];
    for (p, &l) in labels.data().iter().enumerate() {
        let l = l as usize;
        counts[l] += 1;
        for ch in 0..channels {
            sums[l * channels + ch] += image.at(ch, p);
        }
    }
    let means: Vec<T> = sums
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let n = counts[k / channels];
            if n == 0 {
                T::zero()
            } else {
                s / T::from_usize_lossy(n)
            }
        })
        .collect();

    let mut sq = vec![T::zero(); n_classes * channels];
    for (p, &l) in labels.data().iter().enumerate() {
        let l = l as usize;
        for ch in 0..channels {
            let d = image.at(ch, p) - means[l * channels + ch];
            sq[l * channels + ch] += d * d;
        }
    }

    Ok((0..n_classes)
        .map(|k| {
            if counts[k] == 0 {
                return RegionModel::empty(k as u32, channels);
            }
            let n = T::from_usize_lossy(counts[k]);
            RegionModel {
                class_index: k as u32,
                mean: means[k * channels..(k + 1) * channels].to_vec(),
                variance: sq[k * channels..(k + 1) * channels]
                    .iter()
                    .map(|&s| (s / n).max(floor))
                    .collect(),
                pixel_count: counts[k],
            }
        })
        .collect())
}

/// One log-likelihood plane per model; empty models produce the sentinel plane.
pub fn loglik<T: Real>(image: &Stack<T>, models: &[RegionModel<T>]) -> Result<Stack<T>> {
    let channels = image.n_planes();
    if let Some(m) = models.iter().find(|m| m.mean.len() != channels) {
        return Err(Error::PlaneMismatch {
            expected: channels,
            got: m.mean.len(),
        });
    }
    let (h, w) = image.shape();
    let mut pixel = vec![T::zero(); channels];
    let planes = models
        .iter()
        .map(|m| {
            if m.is_empty() {
                return Grid::filled(h, w, T::lit(EMPTY_REGION_LOGLIK));
            }
            let mut g = Grid::zeros(h, w);
            for (p, out) in g.data_mut().iter_mut().enumerate() {
                for (ch, v) in pixel.iter_mut().enumerate() {
                    *v = image.at(ch, p);
                }
                *out = m.log_density(&pixel);
            }
            g
        })
        .collect();
    Stack::new(planes)
}
