//! Grid containers and the finite-difference stencils used by the evolution.
//!
//! All stencils treat the image border with replicate (Neumann) handling:
//! central differences in the interior, one-sided differences on the
//! outermost rows and columns.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major `height x width` grid of reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "grid data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, T::zero())
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            height,
            width,
            data,
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn cast<U: Real>(&self) -> Grid<U> {
        Grid {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                got: self.shape(),
            });
        }
        Ok(())
    }
}

/// `N` same-shaped grids: image channels, score planes, level-set planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Stack<T> {
    planes: Vec<Grid<T>>,
}

impl<T: Real> Stack<T> {
    pub fn new(planes: Vec<Grid<T>>) -> Result<Self> {
        let Some(first) = planes.first() else {
            return Err(Error::InvalidInput("a stack needs at least one plane".into()));
        };
        let shape = first.shape();
        for p in &planes[1..] {
            p.check_shape(shape)?;
        }
        Ok(Self { planes })
    }

    pub fn filled(height: usize, width: usize, n_planes: usize, value: T) -> Self {
        assert!(n_planes >= 1, "a stack needs at least one plane");
        Self {
            planes: vec![Grid::filled(height, width, value); n_planes],
        }
    }

    /// Builds a stack from per-pixel vectors laid out pixel-major: `data[p * n + i]`.
    pub fn from_pixel_major(height: usize, width: usize, n_planes: usize, data: &[T]) -> Result<Self> {
        if n_planes == 0 || data.len() != height * width * n_planes {
            return Err(Error::InvalidInput(format!(
                "pixel-major data length {} does not match {height}x{width}x{n_planes}",
                data.len()
            )));
        }
        let planes = (0..n_planes)
            .map(|i| Grid {
                height,
                width,
                data: data.iter().skip(i).step_by(n_planes).copied().collect(),
            })
            .collect();
        Ok(Self { planes })
    }

    #[inline]
    pub fn n_planes(&self) -> usize {
        self.planes.len()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.planes[0].shape()
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.planes[0].len()
    }

    #[inline]
    pub fn plane(&self, i: usize) -> &Grid<T> {
        &self.planes[i]
    }

    #[inline]
    pub fn plane_mut(&mut self, i: usize) -> &mut Grid<T> {
        &mut self.planes[i]
    }

    pub fn planes(&self) -> &[Grid<T>] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Grid<T>> {
        self.planes
    }

    /// Value of plane `i` at flat pixel index `p`.
    #[inline]
    pub fn at(&self, i: usize, p: usize) -> T {
        self.planes[i].data[p]
    }

    pub fn is_finite(&self) -> bool {
        self.planes.iter().all(Grid::is_finite)
    }

    pub fn max_abs(&self) -> T {
        self.planes
            .iter()
            .fold(T::zero(), |acc, p| acc.max(p.max_abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            planes: self.planes.iter().map(|p| p.map(&f)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Stack<U> {
        Stack {
            planes: self.planes.iter().map(Grid::cast).collect(),
        }
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        self.planes[0].check_shape(shape)
    }

    pub(crate) fn check_like(&self, other: &Self) -> Result<()> {
        self.check_shape(other.shape())?;
        if self.n_planes() != other.n_planes() {
            return Err(Error::PlaneMismatch {
                expected: other.n_planes(),
                got: self.n_planes(),
            });
        }
        Ok(())
    }
}

/// Two-component vector field over a grid (gradients, unit normals).
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2<T> {
    pub ux: Grid<T>,
    pub uy: Grid<T>,
}

impl<T: Real> VectorField2<T> {
    pub fn new(ux: Grid<T>, uy: Grid<T>) -> Result<Self> {
        uy.check_shape(ux.shape())?;
        Ok(Self { ux, uy })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.ux.shape()
    }
}

/// Per-pixel class indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u32>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidInput(format!(
                "label data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, label: u32) -> Self {
        Self {
            height,
            width,
            data: vec![label; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            height,
            width,
            data,
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
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, label: u32) {
        self.data[row * self.width + col] = label;
    }

    #[inline]
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }

    pub fn max_label(&self) -> Option<u32> {
        self.data.iter().copied().max()
    }

    pub fn check_classes(&self, n_classes: usize) -> Result<()> {
        match self
            .data
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= n_classes)
        {
            Some((index, &label)) => Err(Error::LabelOutOfRange {
                label,
                index,
                n_classes,
            }),
            None => Ok(()),
        }
    }

    /// Crisp one-hot score stack with `n_classes` planes.
    pub fn one_hot<T: Real>(&self, n_classes: usize) -> Result<Stack<T>> {
        if n_classes == 0 {
            return Err(Error::InvalidInput("one-hot needs at least one class".into()));
        }
        self.check_classes(n_classes)?;
        let mut planes = vec![Grid::zeros(self.height, self.width); n_classes];
        for (p, &l) in self.data.iter().enumerate() {
            planes[l as usize].data[p] = T::one();
        }
        Ok(Stack { planes })
    }

    /// Number of pixels whose label differs from `other`.
    pub fn count_changed(&self, other: &LabelMap) -> usize {
        self.data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                got: self.shape(),
            });
        }
        Ok(())
    }
}

/// d/dx along rows of a row-major buffer.
fn diff_x<T: Real>(f: &[T], height: usize, width: usize, out: &mut [T]) {
    let half = T::lit(0.5);
    for row in 0..height {
        let r = &f[row * width..(row + 1) * width];
        let o = &mut out[row * width..(row + 1) * width];
        if width < 2 {
            o.iter_mut().for_each(|v| *v = T::zero());
            continue;
        }
        o[0] = r[1] - r[0];
        for c in 1..width - 1 {
            o[c] = (r[c + 1] - r[c - 1]) * half;
        }
        o[width - 1] = r[width - 1] - r[width - 2];
    }
}

/// d/dy down columns of a row-major buffer.
fn diff_y<T: Real>(f: &[T], height: usize, width: usize, out: &mut [T]) {
    let half = T::lit(0.5);
    if height < 2 {
        out.iter_mut().for_each(|v| *v = T::zero());
        return;
    }
    for c in 0..width {
        out[c] = f[width + c] - f[c];
        let last = (height - 1) * width + c;
        out[last] = f[last] - f[last - width];
    }
    for row in 1..height - 1 {
        for c in 0..width {
            let i = row * width + c;
            out[i] = (f[i + width] - f[i - width]) * half;
        }
    }
}

/// Central-difference gradient; one-sided on the border.
pub fn gradient_central<T: Real>(f: &Grid<T>) -> VectorField2<T> {
    let (h, w) = f.shape();
    let mut ux = Grid::zeros(h, w);
    let mut uy = Grid::zeros(h, w);
    diff_x(&f.data, h, w, &mut ux.data);
    diff_y(&f.data, h, w, &mut uy.data);
    VectorField2 { ux, uy }
}

/// Central-difference divergence `d(ux)/dx + d(uy)/dy`, same border rule as
/// [`gradient_central`].
pub fn divergence<T: Real>(v: &VectorField2<T>) -> Grid<T> {
    let (h, w) = v.shape();
    let mut out = Grid::zeros(h, w);
    let mut tmp = vec![T::zero(); h * w];
    diff_x(&v.ux.data, h, w, &mut out.data);
    diff_y(&v.uy.data, h, w, &mut tmp);
    for (o, t) in out.data.iter_mut().zip(tmp) {
        *o += t;
    }
    out
}

/// Godunov upwind magnitude for one pixel given backward (`dm`) and forward
/// (`dp`) differences on each axis.
///
/// For `speed > 0` the front moves along the outward normal, so information
/// comes from the side where `phi` is lower; `speed < 0` mirrors this.
/// A zero speed has no upwind side, so the larger of the two one-sided
/// constructions is returned (its product with the speed is zero anyway).
#[inline]
pub fn godunov_magnitude<T: Real>(speed: T, dxm: T, dxp: T, dym: T, dyp: T) -> T {
    let z = T::zero();
    let expanding =
        || (dxm.max(z).powi(2) + dxp.min(z).powi(2) + dym.max(z).powi(2) + dyp.min(z).powi(2)).sqrt();
    let shrinking =
        || (dxm.min(z).powi(2) + dxp.max(z).powi(2) + dym.min(z).powi(2) + dyp.max(z).powi(2)).sqrt();
    if speed > z {
        expanding()
    } else if speed < z {
        shrinking()
    } else {
        expanding().max(shrinking())
    }
}

/// Upwind `|grad phi|` for the advection `phi_t + speed * |grad phi| = 0`.
pub fn upwind_grad_mag<T: Real>(phi: &Grid<T>, speed: &Grid<T>) -> Result<Grid<T>> {
    speed.check_shape(phi.shape())?;
    let (h, w) = phi.shape();
    let f = &phi.data;
    let mut out = Grid::zeros(h, w);
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let c = f[i];
            let left = if col > 0 { f[i - 1] } else { c };
            let right = if col + 1 < w { f[i + 1] } else { c };
            let up = if row > 0 { f[i - w] } else { c };
            let down = if row + 1 < h { f[i + w] } else { c };
            out.data[i] = godunov_magnitude(speed.data[i], c - left, right - c, c - up, down - c);
        }
    }
    Ok(out)
}

/// Mean over the `(2r+1)^2` window with replicated borders.
pub fn box_mean<T: Real>(f: &Grid<T>, radius: usize) -> Grid<T> {
    if radius == 0 {
        return f.clone();
    }
    let (h, w) = f.shape();
    let norm = T::from_usize_lossy(2 * radius + 1);
    let r = radius as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut horiz = Grid::zeros(h, w);
    for row in 0..h {
        for col in 0..w {
            let mut acc = T::zero();
            for k in -r..=r {
                acc += f.data[row * w + clamp(col as isize + k, w)];
            }
            horiz.data[row * w + col] = acc / norm;
        }
    }
    let mut out = Grid::zeros(h, w);
    for row in 0..h {
        for col in 0..w {
            let mut acc = T::zero();
            for k in -r..=r {
                acc += horiz.data[clamp(row as isize + k, h) * w + col];
            }
            out.data[row * w + col] = acc / norm;
        }
    }
    out
}
