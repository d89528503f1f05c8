//! Exact Euclidean distance transform and score-to-level-set initialization.
//!
//! The transform is the separable lower-envelope-of-parabolas algorithm:
//! a 1-D squared-distance pass down every column, then a second pass along
//! every row over the column results. Squared distances are integers, so the
//! result is exact in `f64`.

use crate::error::{Error, Result};
use crate::fields::{Grid, Stack};
use crate::scalar::Real;

/// Boolean per-pixel mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "mask length {} does not match {height}x{width}",
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self {
            height,
            width,
            bits: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        Self {
            height,
            width,
            bits,
        }
    }

    /// `grid >= threshold`, pixel-wise.
    pub fn threshold<T: Real>(grid: &Grid<T>, threshold: T) -> Self {
        Self {
            height: grid.height(),
            width: grid.width(),
            bits: grid.data().iter().map(|&v| v >= threshold).collect(),
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn invert(&self) -> Self {
        Self {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// Squared distance along one line to the nearest finite site of `f`.
/// Sites equal to `+inf` are absent; a line without sites stays at `+inf`.
fn envelope_1d(f: &[f64], out: &mut [f64], sites: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    sites.clear();
    bounds.clear();
    let parabola = |q: usize| f[q] + (q * q) as f64;

    for (q, fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let mut s = f64::NEG_INFINITY;
        while let Some(&v) = sites.last() {
            s = (parabola(q) - parabola(v)) / (2.0 * (q as f64 - v as f64));
            if s <= *bounds.last().unwrap() {
                sites.pop();
                bounds.pop();
            } else {
                break;
            }
        }
        if sites.is_empty() {
            s = f64::NEG_INFINITY;
        }
        sites.push(q);
        bounds.push(s);
    }

    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < sites.len() && bounds[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - sites[k] as f64;
        *o = d * d + f[sites[k]];
    }
}

/// Exact squared Euclidean distance to the nearest TRUE pixel, or `None` when
/// the mask has no TRUE pixel.
pub fn squared_distance_transform(mask: &BinaryMask) -> Option<Grid<f64>> {
    let (h, w) = mask.shape();
    if !mask.bits.iter().any(|&b| b) {
        return None;
    }
    let mut sites = Vec::with_capacity(h.max(w));
    let mut bounds = Vec::with_capacity(h.max(w));

    let mut cols = vec![0.0; h * w];
    let mut line = vec![0.0; h];
    let mut line_out = vec![0.0; h];
    for c in 0..w {
        for (r, v) in line.iter_mut().enumerate() {
            *v = if mask.bits[r * w + c] { 0.0 } else { f64::INFINITY };
        }
        envelope_1d(&line, &mut line_out, &mut sites, &mut bounds);
        for r in 0..h {
            cols[r * w + c] = line_out[r];
        }
    }

    let mut out = vec![0.0; h * w];
    for r in 0..h {
        envelope_1d(&cols[r * w..(r + 1) * w], &mut out[r * w..(r + 1) * w], &mut sites, &mut bounds);
    }
    Some(Grid::new(h, w, out).expect("shape preserved"))
}

/// Euclidean distance (pixels) to the nearest TRUE pixel. An empty mask yields
/// the cap `max(height, width)` everywhere.
pub fn edt<T: Real>(mask: &BinaryMask) -> Grid<T> {
    let (h, w) = mask.shape();
    match squared_distance_transform(mask) {
        Some(sq) => Grid::new(h, w, sq.data().iter().map(|&d| T::lit(d.sqrt())).collect())
            .expect("shape preserved"),
        None => Grid::filled(h, w, T::from_usize_lossy(h.max(w))),
    }
}

/// Tolerance on the `[0, 1]` score range accepted by [`init_phi`].
pub const SCORE_TOLERANCE: f64 = 1e-6;

pub(crate) fn validate_scores<T: Real>(scores: &Stack<T>) -> Result<()> {
    let tol = T::lit(SCORE_TOLERANCE);
    for (plane, g) in scores.planes().iter().enumerate() {
        for (index, &v) in g.data().iter().enumerate() {
            if !(v >= -tol && v <= T::one() + tol) {
                return Err(Error::ScoreOutOfRange {
                    plane,
                    index,
                    value: v.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

/// Converts class scores into a level-set stack, negative inside each class.
///
/// Per plane: binarize at 0.5, take the signed distance `edt(B) - edt(!B)`,
/// normalize by `max(height, width)` and clamp to `[-0.5, 0.5]`, then add the
/// score shift `0.5 - S` and clamp the sum to `[-1, 1]`.
pub fn init_phi<T: Real>(scores: &Stack<T>) -> Result<Stack<T>> {
    validate_scores(scores)?;
    let (h, w) = scores.shape();
    let cap = T::from_usize_lossy(h.max(w));
    let half = T::lit(0.5);
    let one = T::one();

    let planes = scores
        .planes()
        .iter()
        .map(|s| {
            let inside = BinaryMask::threshold(s, half);
            let to_inside: Grid<T> = edt(&inside);
            let to_outside: Grid<T> = edt(&inside.invert());
            let data = s
                .data()
                .iter()
                .zip(to_inside.data().iter().zip(to_outside.data()))
                .map(|(&score, (&d_out, &d_in))| {
                    let signed = ((d_out - d_in) / cap).max(-half).min(half);
                    (signed + half - score.min(one).max(T::zero())).max(-one).min(one)
                })
                .collect();
            Grid::new(h, w, data).expect("shape preserved")
        })
        .collect();
    Stack::new(planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::LabelMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_sq(mask: &BinaryMask) -> Vec<f64> {
        let (h, w) = mask.shape();
        let mut out = vec![f64::INFINITY; h * w];
        for r in 0..h {
            for c in 0..w {
                for rr in 0..h {
                    for cc in 0..w {
                        if mask.get(rr, cc) {
                            let dr = r as f64 - rr as f64;
                            let dc = c as f64 - cc as f64;
                            out[r * w + c] = out[r * w + c].min(dr * dr + dc * dc);
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn strip_example() {
        let mask = BinaryMask::new(1, 4, vec![false, true, false, false]).unwrap();
        let d: Grid<f64> = edt(&mask);
        assert_eq!(d.data(), &[1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn full_and_empty_masks() {
        let d: Grid<f64> = edt(&BinaryMask::filled(5, 7, true));
        assert!(d.data().iter().all(|&v| v == 0.0));
        let d: Grid<f32> = edt(&BinaryMask::filled(5, 7, false));
        assert!(d.data().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for density in [0.01, 0.1, 0.5, 0.9] {
            let mask = BinaryMask::from_fn(32, 32, |_, _| rng.random_bool(density));
            if mask.count() == 0 {
                continue;
            }
            let sq = squared_distance_transform(&mask).unwrap();
            assert_eq!(sq.data(), brute_force_sq(&mask).as_slice());
        }
    }

    #[test]
    fn edt_is_one_lipschitz_and_zero_on_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mask = BinaryMask::from_fn(24, 20, |_, _| rng.random_bool(0.05));
        let d: Grid<f64> = edt(&mask);
        for r in 0..24 {
            for c in 0..20 {
                let v = d.get(r, c);
                if mask.get(r, c) {
                    assert_eq!(v, 0.0);
                } else {
                    assert!(v > 0.0);
                }
                if c + 1 < 20 {
                    assert!((v - d.get(r, c + 1)).abs() <= 1.0 + 1e-12);
                }
                if r + 1 < 24 {
                    assert!((v - d.get(r + 1, c)).abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn init_phi_degenerate_planes() {
        let s = Stack::new(vec![Grid::filled(6, 6, 1.0), Grid::filled(6, 6, 0.0)]).unwrap();
        let phi = init_phi(&s).unwrap();
        assert!(phi.plane(0).data().iter().all(|&v| v == -1.0));
        assert!(phi.plane(1).data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn init_phi_square_sign_and_monotonicity() {
        let n = 32;
        let inside = |r: usize, c: usize| (12..20).contains(&r) && (12..20).contains(&c);
        let s = Grid::from_fn(n, n, |r, c| if inside(r, c) { 0.9f64 } else { 0.1 });
        let phi = init_phi(&Stack::new(vec![s]).unwrap()).unwrap();
        let p = phi.plane(0);

        // Distance oracle: brute-force distance to the square / its complement.
        let mask = BinaryMask::from_fn(n, n, inside);
        let d_out = brute_force_sq(&mask);
        let d_in = brute_force_sq(&mask.invert());
        for r in 0..n {
            for c in 0..n {
                let v = p.get(r, c);
                if inside(r, c) {
                    assert!(v < 0.0);
                } else {
                    assert!(v > 0.0);
                }
                for (rr, cc) in [(r, c + 1), (r + 1, c)] {
                    if rr >= n || cc >= n || inside(r, c) != inside(rr, cc) {
                        continue;
                    }
                    let (a, b) = (r * n + c, rr * n + cc);
                    let (da, db) = if inside(r, c) {
                        (d_in[a], d_in[b])
                    } else {
                        (d_out[a], d_out[b])
                    };
                    // Distances beyond half the side are clamped, so only
                    // weak monotonicity holds out there.
                    let (va, vb) = (v.abs(), p.get(rr, cc).abs());
                    let unclamped = da.max(db).sqrt() < n as f64 / 2.0;
                    if da < db {
                        assert!(if unclamped { va < vb } else { va <= vb });
                    } else if da > db {
                        assert!(if unclamped { va > vb } else { va >= vb });
                    }
                }
            }
        }
    }

    #[test]
    fn init_phi_rejects_out_of_range_scores() {
        let s = Stack::new(vec![Grid::filled(2, 2, 1.1)]).unwrap();
        assert!(matches!(init_phi(&s), Err(Error::ScoreOutOfRange { .. })));
        let s = Stack::new(vec![Grid::filled(2, 2, 1.0 + 1e-7)]).unwrap();
        assert!(init_phi(&s).is_ok());
    }

    #[test]
    fn init_phi_bounded_and_sign_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let planes = (0..3)
            .map(|_| Grid::from_fn(20, 17, |_, _| rng.random_range(0.0..=1.0)))
            .collect();
        let s: Stack<f64> = Stack::new(planes).unwrap();
        let phi = init_phi(&s).unwrap();
        for i in 0..3 {
            for p in 0..s.pixel_count() {
                let v = phi.at(i, p);
                assert!((-1.0..=1.0).contains(&v));
                assert_eq!(v < 0.0, s.at(i, p) >= 0.5);
            }
        }
    }

    #[test]
    fn one_hot_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let labels = LabelMap::from_fn(19, 23, |_, _| rng.random_range(0..5));
        let phi = init_phi(&labels.one_hot::<f64>(5).unwrap()).unwrap();
        assert_eq!(crate::mls::assign(&phi), labels);
    }
}
