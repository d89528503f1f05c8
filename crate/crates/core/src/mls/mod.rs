//! Multiphase level-set evolution.
//!
//! Each class `i` owns a level-set plane `phi_i`, negative inside its
//! territory. A pixel belongs to the class whose plane is smallest there, so
//! every pixel gets exactly one label no matter how the planes evolve.

mod evolve;
mod refine;
mod regularizer;
mod speed;

pub use evolve::{
    evolution_update, evolve, evolve_step, evolve_with_observer, stable_dt, EvolutionTrace, IterationRecord,
    INSTABILITY_LIMIT,
};
pub use refine::{refine, refine_scores, CoarsePredictor, Refinement, RefineStep};
pub use regularizer::{mean_curvature, regularizer, NORMAL_FLOOR};
pub use speed::{speed_classic, speed_deep, ClassicSpeed, DeepSpeed, SpeedProvider, DEFAULT_CLASSIC_RHO};

use crate::error::{Error, Result};
use crate::fields::{LabelMap, Stack};
use crate::scalar::Real;

/// Knobs of the explicit evolution loop.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    /// Weight of the vector-field regularizer.
    pub epsilon: f64,
    /// Confidence threshold of the deep-mode speed.
    pub rho: f64,
    /// Requested time step; the loop caps it by [`stable_dt`].
    pub dt: f64,
    /// Zero means "do not evolve".
    pub max_iters: usize,
    /// Stop once fewer than this fraction of labels change over one unit of
    /// evolution time.
    pub stop_frac: f64,
    /// Re-initialize from the current labels every this many iterations; 0 disables.
    pub reinit_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            rho: 0.5,
            dt: 0.2,
            max_iters: 200,
            stop_frac: 1e-4,
            reinit_every: 50,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("evolution config: {msg}")));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be finite and >= 0");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be finite and > 0");
        }
        if !(0.0..1.0).contains(&self.stop_frac) {
            return bad("stop_frac must lie in [0, 1)");
        }
        if !self.rho.is_finite() {
            return bad("rho must be finite");
        }
        Ok(())
    }
}

/// Per-pixel argmin over the planes; ties go to the lowest class index.
pub fn assign<T: Real>(phi: &Stack<T>) -> LabelMap {
    let (h, w) = phi.shape();
    let n = phi.n_planes();
    let mut labels = vec![0u32; h * w];
    let mut best = phi.plane(0).data().to_vec();
    for i in 1..n {
        for (p, &v) in phi.plane(i).data().iter().enumerate() {
            if v < best[p] {
                best[p] = v;
                labels[p] = i as u32;
            }
        }
    }
    LabelMap::new(h, w, labels).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use proptest::prelude::*;

    fn stack_from_pixels(pixels: &[&[f64]]) -> Stack<f64> {
        let n = pixels[0].len();
        let flat: Vec<f64> = pixels.iter().flat_map(|p| p.iter().copied()).collect();
        Stack::from_pixel_major(1, pixels.len(), n, &flat).unwrap()
    }

    #[test]
    fn strict_argmin_and_tie_break() {
        let s = stack_from_pixels(&[&[-0.2, 0.1, 0.3], &[0.1, 0.1, 0.4], &[0.5, 0.2, 0.2]]);
        assert_eq!(assign(&s).data(), &[0, 0, 1]);
    }

    #[test]
    fn works_for_f32() {
        let s = Stack::new(vec![Grid::filled(2, 2, 0.5f32), Grid::filled(2, 2, -0.5f32)]).unwrap();
        assert!(assign(&s).data().iter().all(|&l| l == 1));
    }

    #[test]
    fn config_validation() {
        assert!(EvolutionConfig::default().validate().is_ok());
        let mut c = EvolutionConfig::default();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = EvolutionConfig::default();
        c.stop_frac = 1.0;
        assert!(c.validate().is_err());
        let mut c = EvolutionConfig::default();
        c.epsilon = -1.0;
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn argmin_oracle_and_shift_invariance(
            n in 1usize..6,
            h in 1usize..9,
            w in 1usize..9,
            seed in any::<u64>(),
            shift in -5.0f64..5.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let planes = (0..n)
                .map(|_| Grid::from_fn(h, w, |_, _| (rng.random_range(-4i32..4) as f64) * 0.25))
                .collect();
            let phi = Stack::new(planes).unwrap();
            let labels = assign(&phi);
            for p in 0..h * w {
                let mut best = 0;
                for i in 1..n {
                    if phi.at(i, p) < phi.at(best, p) {
                        best = i;
                    }
                }
                prop_assert_eq!(labels.data()[p] as usize, best);
            }
            prop_assert_eq!(assign(&phi.map(|v| v + shift)), labels.clone());
            prop_assert_eq!(assign(&phi.map(|v| v.powi(3) * 2.0 - 1.0)), labels);
        }
    }
}
