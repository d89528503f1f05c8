//! Confusion matrices, pixel accuracy, mean IoU and label boundaries.

use std::fmt::Write as _;

use crate::dtrans::BinaryMask;
use crate::error::{Error, Result};
use crate::fields::LabelMap;

/// Entry `(i, j)` counts pixels of true class `i` predicted as `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    /// Builds a matrix from rows of counts.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("confusion matrix must be square".into()));
        }
        Ok(Self {
            n_classes: n,
            counts: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|i| self.get(i, i)).sum()
    }

    /// Pixels of true class `i`.
    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.n_classes).map(|j| self.get(i, j)).sum()
    }

    /// Pixels predicted as class `j`.
    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.n_classes).map(|i| self.get(i, j)).sum()
    }

    /// Adds the counts of `other` into `self`.
    pub fn accumulate(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes != self.n_classes {
            return Err(Error::InvalidInput(format!(
                "cannot add a {}-class confusion matrix to a {}-class one",
                other.n_classes, self.n_classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

pub fn confusion(pred: &LabelMap, gt: &LabelMap, n_classes: usize) -> Result<ConfusionMatrix> {
    pred.check_shape(gt.shape())?;
    pred.check_classes(n_classes)?;
    gt.check_classes(n_classes)?;
    let mut m = ConfusionMatrix::zeros(n_classes);
    for (&p, &t) in pred.data().iter().zip(gt.data()) {
        m.counts[t as usize * n_classes + p as usize] += 1;
    }
    Ok(m)
}

pub fn pixel_accuracy(m: &ConfusionMatrix) -> Result<f64> {
    let total = m.total();
    if total == 0 {
        return Err(Error::InvalidInput("pixel accuracy of an empty confusion matrix".into()));
    }
    Ok(m.trace() as f64 / total as f64)
}

/// IoU of each class, `None` where the class is absent from both prediction
/// and truth.
pub fn class_iou(m: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..m.n_classes)
        .map(|i| {
            let hit = m.get(i, i);
            let union = m.row_sum(i) + m.col_sum(i) - hit;
            (union > 0).then(|| hit as f64 / union as f64)
        })
        .collect()
}

/// Mean of [`class_iou`] over the classes that occur. An empty matrix gives 0.
pub fn mean_iou(m: &ConfusionMatrix) -> f64 {
    let present: Vec<f64> = class_iou(m).into_iter().flatten().collect();
    if present.is_empty() {
        return 0.0;
    }
    present.iter().sum::<f64>() / present.len() as f64
}

/// Pixel share of each class over all maps.
pub fn class_frequencies(gts: &[LabelMap], n_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; n_classes];
    for gt in gts {
        gt.check_classes(n_classes)?;
        for &l in gt.data() {
            counts[l as usize] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidInput("class frequencies of an empty dataset".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Pixels with a 4-neighbor of a different label.
pub fn boundary_mask(labels: &LabelMap) -> BinaryMask {
    let (h, w) = labels.shape();
    BinaryMask::from_fn(h, w, |r, c| {
        let l = labels.get(r, c);
        (r > 0 && labels.get(r - 1, c) != l)
            || (r + 1 < h && labels.get(r + 1, c) != l)
            || (c > 0 && labels.get(r, c - 1) != l)
            || (c + 1 < w && labels.get(r, c + 1) != l)
    })
}

/// Text report: one `class_i_iou = v` line per class, then `pixel_acc` and
/// `mean_iou`. Absent classes print `nan`.
pub fn report(m: &ConfusionMatrix) -> Result<String> {
    let acc = pixel_accuracy(m)?;
    let mut out = String::new();
    for (i, iou) in class_iou(m).into_iter().enumerate() {
        match iou {
            Some(v) => writeln!(out, "class_{i}_iou = {v:.6}"),
            None => writeln!(out, "class_{i}_iou = nan"),
        }
        .expect("writing to a String");
    }
    writeln!(out, "pixel_acc = {acc:.6}").expect("writing to a String");
    writeln!(out, "mean_iou = {:.6}", mean_iou(m)).expect("writing to a String");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(h: usize, w: usize, n: u32, rng: &mut ChaCha8Rng) -> LabelMap {
        LabelMap::from_fn(h, w, |_, _| rng.random_range(0..n))
    }

    #[test]
    fn worked_two_class_case() {
        let m = ConfusionMatrix::from_rows(&[vec![3, 1], vec![2, 4]]).unwrap();
        assert_abs_diff_eq!(pixel_accuracy(&m).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(mean_iou(&m), (3.0 / 6.0 + 4.0 / 7.0) / 2.0, epsilon = 1e-15);
        assert!((mean_iou(&m) - 0.5357).abs() < 1e-4);
    }

    #[test]
    fn perfect_and_degenerate_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let gt = random_map(8, 8, 2, &mut rng);
        let m = confusion(&gt, &gt, 2).unwrap();
        assert_eq!(m.get(0, 1) + m.get(1, 0), 0);
        assert_eq!(pixel_accuracy(&m).unwrap(), 1.0);
        assert_eq!(mean_iou(&m), 1.0);

        let zero = LabelMap::filled(8, 8, 0);
        let m = confusion(&zero, &gt, 2).unwrap();
        assert_eq!(m.col_sum(1), 0);
        for i in 0..2 {
            assert_eq!(m.row_sum(i), gt.data().iter().filter(|&&l| l == i as u32).count() as u64);
        }
    }

    #[test]
    fn fully_wrong_is_zero() {
        let m = ConfusionMatrix::from_rows(&[vec![0, 5], vec![3, 0]]).unwrap();
        assert_eq!(pixel_accuracy(&m).unwrap(), 0.0);
        assert_eq!(mean_iou(&m), 0.0);
    }

    #[test]
    fn absent_classes_are_excluded() {
        let gt = LabelMap::filled(4, 4, 1);
        let m = confusion(&gt, &gt, 5).unwrap();
        assert_eq!(class_iou(&m), vec![None, Some(1.0), None, None, None]);
        assert_eq!(mean_iou(&m), 1.0);
    }

    #[test]
    fn guards() {
        let a = LabelMap::filled(3, 3, 0);
        let b = LabelMap::filled(3, 4, 0);
        assert!(confusion(&a, &b, 2).is_err());
        assert!(confusion(&LabelMap::filled(3, 3, 2), &a, 2).is_err());
        assert!(pixel_accuracy(&ConfusionMatrix::zeros(3)).is_err());
        assert!(class_frequencies(&[], 3).is_err());
    }

    #[test]
    fn frequencies() {
        let half = LabelMap::from_fn(4, 4, |_, c| (c >= 2) as u32);
        assert_eq!(class_frequencies(&[half], 2).unwrap(), vec![0.5, 0.5]);
        let one = LabelMap::filled(3, 3, 0);
        assert_eq!(class_frequencies(&[one], 3).unwrap(), vec![1.0, 0.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let maps: Vec<LabelMap> = (0..5).map(|_| random_map(7, 9, 4, &mut rng)).collect();
        let f = class_frequencies(&maps, 4).unwrap();
        for k in 0..4u32 {
            let mut count = 0;
            for m in &maps {
                for r in 0..7 {
                    for c in 0..9 {
                        count += (m.get(r, c) == k) as usize;
                    }
                }
            }
            assert_abs_diff_eq!(f[k as usize], count as f64 / 315.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(f.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boundary_cases() {
        assert_eq!(boundary_mask(&LabelMap::filled(5, 6, 3)).count(), 0);
        let split = LabelMap::from_fn(5, 6, |_, c| (c >= 3) as u32);
        let b = boundary_mask(&split);
        for r in 0..5 {
            for c in 0..6 {
                assert_eq!(b.get(r, c), c == 2 || c == 3);
            }
        }
    }

    #[test]
    fn boundary_matches_neighbor_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_map(11, 13, 3, &mut rng);
        let b = boundary_mask(&m);
        let offsets = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)];
        for r in 0..11i64 {
            for c in 0..13i64 {
                let l = m.get(r as usize, c as usize);
                let expect = offsets.iter().any(|(dr, dc)| {
                    let (rr, cc) = (r + dr, c + dc);
                    (0..11).contains(&rr) && (0..13).contains(&cc) && m.get(rr as usize, cc as usize) != l
                });
                assert_eq!(b.get(r as usize, c as usize), expect);
            }
        }
    }

    #[test]
    fn report_lines() {
        let gt = LabelMap::from_fn(2, 2, |r, _| r as u32);
        let text = report(&confusion(&gt, &gt, 3).unwrap()).unwrap();
        assert_eq!(
            text,
            "class_0_iou = 1.000000\nclass_1_iou = 1.000000\nclass_2_iou = nan\npixel_acc = 1.000000\nmean_iou = 1.000000\n"
        );
    }

    proptest! {
        #[test]
        fn counts_match_brute_force(seed in any::<u64>(), n in 1u32..6, h in 1usize..12, w in 1usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pred = random_map(h, w, n, &mut rng);
            let gt = random_map(h, w, n, &mut rng);
            let m = confusion(&pred, &gt, n as usize).unwrap();
            prop_assert_eq!(m.total(), (h * w) as u64);
            for i in 0..n {
                for j in 0..n {
                    let brute = (0..h * w).filter(|&p| gt.data()[p] == i && pred.data()[p] == j).count();
                    prop_assert_eq!(m.get(i as usize, j as usize), brute as u64);
                }
            }
            let acc = pixel_accuracy(&m).unwrap();
            let miou = mean_iou(&m);
            prop_assert!((0.0..=1.0).contains(&acc) && (0.0..=1.0).contains(&miou));
        }

        #[test]
        fn relabeling_invariance(seed in any::<u64>(), n in 2u32..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pred = random_map(9, 9, n, &mut rng);
            let gt = random_map(9, 9, n, &mut rng);
            // Cyclic shift is a permutation of the class indices.
            let shift = |m: &LabelMap| LabelMap::new(9, 9, m.data().iter().map(|&l| (l + 1) % n).collect()).unwrap();
            let a = confusion(&pred, &gt, n as usize).unwrap();
            let b = confusion(&shift(&pred), &shift(&gt), n as usize).unwrap();
            prop_assert_eq!(pixel_accuracy(&a).unwrap(), pixel_accuracy(&b).unwrap());
            prop_assert!((mean_iou(&a) - mean_iou(&b)).abs() < 1e-12);
        }
    }
}
