//! Explicit Euler stepping of `phi_t + (F - eps K) |grad phi| = 0`.

use super::regularizer::regularizer;
use super::speed::SpeedProvider;
use super::{assign, EvolutionConfig};
use crate::dtrans::init_phi;
use crate::error::{Error, Result};
use crate::fields::{godunov_magnitude, Grid, LabelMap, Stack};
use crate::scalar::Real;

/// A single step changing any `phi` value by more than this is reported as
/// an instability.
pub const INSTABILITY_LIMIT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Fraction of pixels whose label changed in this iteration.
    pub changed_fraction: f64,
    pub max_delta: f64,
    /// Time step actually taken.
    pub dt: f64,
    /// Largest `|F|` over pixels where the plane is not flat.
    pub max_speed: f64,
    pub reinitialized: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolutionTrace {
    pub records: Vec<IterationRecord>,
    /// True when the loop stopped on the label-change criterion rather than
    /// the iteration cap.
    pub converged: bool,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Largest explicit time step allowed for a front speed bound and
/// regularizer weight: `0.5 / (max|F| + 4 eps)`.
pub fn stable_dt(max_speed: f64, epsilon: f64) -> f64 {
    let denom = max_speed.abs() + 4.0 * epsilon;
    if denom > 0.0 {
        0.5 / denom
    } else {
        f64::INFINITY
    }
}

/// `-(F - eps K) |grad phi|_upwind` for one plane, written into `out`.
/// Returns the largest `|F|` over pixels with a nonzero one-sided difference.
fn plane_rate<T: Real>(phi: &Grid<T>, speed: &Grid<T>, curvature: Option<(&Grid<T>, T)>, out: &mut [T]) -> T {
    let (h, w) = phi.shape();
    let f = phi.data();
    let z = T::zero();
    let mut max_speed = z;
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let c = f[i];
            let left = if col > 0 { f[i - 1] } else { c };
            let right = if col + 1 < w { f[i + 1] } else { c };
            let up = if row > 0 { f[i - w] } else { c };
            let down = if row + 1 < h { f[i + w] } else { c };
            let (dxm, dxp, dym, dyp) = (c - left, right - c, c - up, down - c);

            let s = speed.data()[i];
            let v = match curvature {
                Some((k, eps)) => s - eps * k.data()[i],
                None => s,
            };
            if dxm != z || dxp != z || dym != z || dyp != z {
                max_speed = max_speed.max(s.abs());
            }
            out[i] = -v * godunov_magnitude(v, dxm, dxp, dym, dyp);
        }
    }
    max_speed
}

/// Time derivative of every plane plus the active speed bound.
fn rates<T: Real>(phi: &Stack<T>, speed: &Stack<T>, epsilon: T) -> Result<(Stack<T>, T)> {
    speed.check_like(phi)?;
    let curvature = (epsilon > T::zero()).then(|| regularizer(phi));
    let (h, w) = phi.shape();
    let mut max_speed = T::zero();
    let mut planes = Vec::with_capacity(phi.n_planes());
    for i in 0..phi.n_planes() {
        let mut out = vec![T::zero(); h * w];
        let k = curvature.as_ref().map(|k| (k.plane(i), epsilon));
        max_speed = max_speed.max(plane_rate(phi.plane(i), speed.plane(i), k, &mut out));
        planes.push(Grid::new(h, w, out).expect("shape"));
    }
    Ok((Stack::new(planes)?, max_speed))
}

/// The change `dt * phi_t` one explicit step applies to every plane.
pub fn evolution_update<T: Real>(phi: &Stack<T>, speed: &Stack<T>, epsilon: T, dt: T) -> Result<Stack<T>> {
    let (rate, _) = rates(phi, speed, epsilon)?;
    Ok(rate.map(|r| dt * r))
}

/// Adds `update` to `phi` in place, returning `max |update|`.
fn apply<T: Real>(phi: &mut Stack<T>, rate: &Stack<T>, dt: T) -> T {
    let mut max_delta = T::zero();
    for i in 0..phi.n_planes() {
        for (v, &r) in phi.plane_mut(i).data_mut().iter_mut().zip(rate.plane(i).data()) {
            let d = dt * r;
            *v += d;
            // NaN compares false; surface it through max_delta.
            max_delta = if d.abs() > max_delta || d.is_nan() { d.abs() } else { max_delta };
        }
    }
    max_delta
}

fn check_stable<T: Real>(max_delta: T, iteration: usize) -> Result<()> {
    let m = max_delta.to_f64_lossy();
    if !m.is_finite() || m > INSTABILITY_LIMIT {
        return Err(Error::Instability {
            iteration,
            max_delta: m,
        });
    }
    Ok(())
}

/// One explicit step with exactly `cfg.dt` (no stability cap).
pub fn evolve_step<T: Real>(phi: &Stack<T>, speed: &Stack<T>, cfg: &EvolutionConfig) -> Result<Stack<T>> {
    cfg.validate()?;
    let (rate, _) = rates(phi, speed, T::lit(cfg.epsilon))?;
    let mut next = phi.clone();
    let max_delta = apply(&mut next, &rate, T::lit(cfg.dt));
    check_stable(max_delta, 0)?;
    Ok(next)
}

/// Runs the evolution loop; see [`evolve_with_observer`].
pub fn evolve<T: Real, S: SpeedProvider<T> + ?Sized>(
    phi0: &Stack<T>,
    speed_source: &S,
    cfg: &EvolutionConfig,
) -> Result<(Stack<T>, EvolutionTrace)> {
    evolve_with_observer(phi0, speed_source, cfg, |_, _, _| {})
}

/// Iterates explicit steps until the labels settle or `cfg.max_iters` is hit.
///
/// * The step is `min(cfg.dt, stable_dt(max|F|, eps))`, with `max|F|` taken
///   over pixels where the plane is not flat (a flat plane does not move).
/// * Non-static speeds are recomputed from the current labels every
///   iteration.
/// * Every `cfg.reinit_every` iterations, and whenever a class loses its last
///   pixel, the planes are rebuilt from the one-hot of the current labels.
/// * Convergence is tested once per unit of accumulated evolution time by
///   comparing labels with the previous checkpoint.
///
/// `observer` sees every iteration's record, planes and labels.
pub fn evolve_with_observer<T: Real, S: SpeedProvider<T> + ?Sized>(
    phi0: &Stack<T>,
    speed_source: &S,
    cfg: &EvolutionConfig,
    mut observer: impl FnMut(&IterationRecord, &Stack<T>, &LabelMap),
) -> Result<(Stack<T>, EvolutionTrace)> {
    cfg.validate()?;
    let mut trace = EvolutionTrace::default();
    let mut phi = phi0.clone();
    if cfg.max_iters == 0 {
        return Ok((phi, trace));
    }
    let n = phi.n_planes();
    let pixels = phi.pixel_count() as f64;
    let epsilon = T::lit(cfg.epsilon);

    let mut labels = assign(&phi);
    let mut speed = speed_source.speed(&labels)?;
    let mut checkpoint = labels.clone();
    let mut elapsed = 0.0;

    for iteration in 0..cfg.max_iters {
        if iteration > 0 && !speed_source.is_static() {
            speed = speed_source.speed(&labels)?;
        }
        let (rate, max_speed) = rates(&phi, &speed, epsilon)?;
        let max_speed = max_speed.to_f64_lossy();
        let dt = cfg.dt.min(stable_dt(max_speed, cfg.epsilon));
        let max_delta = apply(&mut phi, &rate, T::lit(dt));
        check_stable(max_delta, iteration)?;

        let next = assign(&phi);
        let changed = next.count_changed(&labels);
        let vanished = n > 1 && class_vanished(&labels, &next, n);
        labels = next;

        let periodic = cfg.reinit_every > 0 && (iteration + 1) % cfg.reinit_every == 0;
        let reinitialized = n > 1 && (periodic || vanished);
        if reinitialized {
            phi = init_phi(&labels.one_hot(n)?)?;
        }

        let record = IterationRecord {
            iteration,
            changed_fraction: changed as f64 / pixels,
            max_delta: max_delta.to_f64_lossy(),
            dt,
            max_speed,
            reinitialized,
        };
        observer(&record, &phi, &labels);
        trace.records.push(record);

        elapsed += dt;
        if elapsed >= 1.0 {
            let frac = labels.count_changed(&checkpoint) as f64 / pixels;
            if frac < cfg.stop_frac {
                trace.converged = true;
                break;
            }
            checkpoint = labels.clone();
            elapsed = 0.0;
        }
    }
    Ok((phi, trace))
}

fn class_vanished(before: &LabelMap, after: &LabelMap, n: usize) -> bool {
    let mut had = vec![false; n];
    let mut has = vec![false; n];
    for (&a, &b) in before.data().iter().zip(after.data()) {
        had[a as usize] = true;
        has[b as usize] = true;
    }
    had.iter().zip(&has).any(|(&a, &b)| a && !b)
}
