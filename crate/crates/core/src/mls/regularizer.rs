//! Curvature-like smoothing term coupling all planes through the averaged
//! projection matrix of their unit normals.

use crate::fields::{divergence, gradient_central, Grid, Stack, VectorField2};
use crate::scalar::Real;

/// Floor on `|grad phi|` when forming unit normals.
pub const NORMAL_FLOOR: f64 = 1e-8;

fn unit_normals<T: Real>(phi: &Grid<T>) -> (Vec<T>, Vec<T>) {
    let g = gradient_central(phi);
    let floor = T::lit(NORMAL_FLOOR);
    g.ux
        .data()
        .iter()
        .zip(g.uy.data())
        .map(|(&x, &y)| {
            let norm = (x * x + y * y).sqrt().max(floor);
            (x / norm, y / norm)
        })
        .unzip()
}

/// Discrete mean curvature `div(grad phi / |grad phi|)`.
pub fn mean_curvature<T: Real>(phi: &Grid<T>) -> Grid<T> {
    let (h, w) = phi.shape();
    let (nx, ny) = unit_normals(phi);
    let field = VectorField2::new(
        Grid::new(h, w, nx).expect("shape"),
        Grid::new(h, w, ny).expect("shape"),
    )
    .expect("shape");
    divergence(&field)
}

/// `K_i = div(M n_i)` with `M = (1/N) sum_j n_j n_j^T`.
///
/// With a single plane `M n = n |n|^2 = n`, so this is the mean curvature.
pub fn regularizer<T: Real>(phi: &Stack<T>) -> Stack<T> {
    let (h, w) = phi.shape();
    let len = h * w;
    let normals: Vec<(Vec<T>, Vec<T>)> = phi.planes().iter().map(unit_normals).collect();
    let inv_n = T::one() / T::from_usize_lossy(phi.n_planes());

    let mut mxx = vec![T::zero(); len];
    let mut mxy = vec![T::zero(); len];
    let mut myy = vec![T::zero(); len];
    for (nx, ny) in &normals {
        for p in 0..len {
            mxx[p] += nx[p] * nx[p];
            mxy[p] += nx[p] * ny[p];
            myy[p] += ny[p] * ny[p];
        }
    }
    for p in 0..len {
        mxx[p] *= inv_n;
        mxy[p] *= inv_n;
        myy[p] *= inv_n;
    }

    let planes = normals
        .iter()
        .map(|(nx, ny)| {
            let vx = (0..len).map(|p| mxx[p] * nx[p] + mxy[p] * ny[p]).collect();
            let vy = (0..len).map(|p| mxy[p] * nx[p] + myy[p] * ny[p]).collect();
            let field = VectorField2::new(Grid::new(h, w, vx).expect("shape"), Grid::new(h, w, vy).expect("shape"))
                .expect("shape");
            divergence(&field)
        })
        .collect();
    Stack::new(planes).expect("non-empty")
}
