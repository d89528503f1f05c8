//! Seeded synthetic scenes of colored rectangles and discs with exact labels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fields::{Grid, LabelMap, Stack};
use crate::scalar::Real;

const LO: f64 = 0.15;
const HI: f64 = 0.85;
const MID: f64 = 0.5;

/// Base colors: the corners of the `[LO, HI]` cube, then its face centers.
/// Any two entries differ by at least 0.35 in some channel.
pub const PALETTE: [[f64; 3]; 14] = [
    [LO, LO, LO],
    [HI, HI, HI],
    [HI, LO, LO],
    [LO, HI, LO],
    [LO, LO, HI],
    [HI, HI, LO],
    [HI, LO, HI],
    [LO, HI, HI],
    [MID, MID, LO],
    [MID, MID, HI],
    [MID, LO, MID],
    [MID, HI, MID],
    [LO, MID, MID],
    [HI, MID, MID],
];

pub const MIN_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    /// Side length in pixels.
    pub size: usize,
    pub n_classes: usize,
    pub shapes_per_class: usize,
    /// Standard deviation of the additive noise, intensities on `[0, 1]`.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Mirror the scene left to right.
    pub flip: bool,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=PALETTE.len()).contains(&self.n_classes) {
            return Err(Error::InvalidInput(format!(
                "scenes support 2..={} classes, got {}",
                PALETTE.len(),
                self.n_classes
            )));
        }
        if self.size < MIN_SIZE {
            return Err(Error::InvalidInput(format!(
                "scene size must be at least {MIN_SIZE}, got {}",
                self.size
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid noise sigma {}", self.noise_sigma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    Rect { top: usize, left: usize, height: usize, width: usize },
    Disc { row: f64, col: f64, radius: f64 },
}

impl Shape {
    fn random(size: usize, rng: &mut ChaCha8Rng) -> Self {
        let s = size as f64;
        if rng.random_bool(0.5) {
            let height = rng.random_range(size / 6..=size / 3);
            let width = rng.random_range(size / 6..=size / 3);
            Shape::Rect {
                top: rng.random_range(0..=size - height),
                left: rng.random_range(0..=size - width),
                height,
                width,
            }
        } else {
            let radius = rng.random_range(s / 12.0..=s / 6.0);
            Shape::Disc {
                row: rng.random_range(0.0..s),
                col: rng.random_range(0.0..s),
                radius,
            }
        }
    }

    fn contains(&self, r: usize, c: usize) -> bool {
        match *self {
            Shape::Rect { top, left, height, width } => {
                (top..top + height).contains(&r) && (left..left + width).contains(&c)
            }
            Shape::Disc { row, col, radius } => {
                let dr = r as f64 + 0.5 - row;
                let dc = c as f64 + 0.5 - col;
                dr * dr + dc * dc <= radius * radius
            }
        }
    }
}

/// Class 0 fills the background; every other class gets `shapes_per_class`
/// shapes, painted in a shuffled order so later shapes occlude earlier ones.
/// Returns a 3-channel image and its labels.
pub fn generate<T: Real>(spec: &SceneSpec) -> Result<(Stack<T>, LabelMap)> {
    spec.validate()?;
    Ok(render(spec, spec.n_classes))
}

/// Like [`generate`], but class `n_classes - 1` is never painted.
pub fn generate_void_case<T: Real>(spec: &SceneSpec) -> Result<(Stack<T>, LabelMap)> {
    spec.validate()?;
    if spec.n_classes < 3 {
        return Err(Error::InvalidInput("void scenes need at least 3 classes".into()));
    }
    Ok(render(spec, spec.n_classes - 1))
}

fn render<T: Real>(spec: &SceneSpec, painted: usize) -> (Stack<T>, LabelMap) {
    let n = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut shapes: Vec<(u32, Shape)> = Vec::new();
    for class in 1..painted {
        for _ in 0..spec.shapes_per_class {
            shapes.push((class as u32, Shape::random(n, &mut rng)));
        }
    }
    shapes.shuffle(&mut rng);

    let mut labels = LabelMap::filled(n, n, 0);
    for (class, shape) in &shapes {
        for r in 0..n {
            for c in 0..n {
                if shape.contains(r, c) {
                    labels.set(r, c, *class);
                }
            }
        }
    }
    if spec.flip {
        labels = LabelMap::from_fn(n, n, |r, c| labels.get(r, n - 1 - c));
    }

    let mut channels = vec![vec![0.0f64; n * n]; 3];
    for (p, &l) in labels.data().iter().enumerate() {
        for (ch, plane) in channels.iter_mut().enumerate() {
            plane[p] = PALETTE[l as usize][ch];
        }
    }
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("sigma validated");
        for p in 0..n * n {
            for plane in channels.iter_mut() {
                plane[p] = (plane[p] + noise.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
    }
    let planes = channels
        .into_iter()
        .map(|c| Grid::new(n, n, c.into_iter().map(T::lit).collect()).expect("sized above"))
        .collect();
    (Stack::new(planes).expect("three planes"), labels)
}
