//! Gaussian kernels, bandwidth selection and Gram matrices.
//!
//! The kernel is parameterized as `k(x, y) = exp(-|x - y|^2 / (2 sigma^2))`.
//! Bandwidths default to the median of pairwise distances over distinct
//! pairs of the relevant sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A state in `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub(crate) Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InsufficientData {
                what: "point coordinates",
                needed: 1,
                got: 0,
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        Ok(Point(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Point::new(vec![x])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn scaled(&self, factor: f64) -> Point {
        Point(self.0.iter().map(|c| c * factor).collect())
    }

    /// Concatenate a window of points into a single point.
    pub fn concat(window: &[Point]) -> Result<Point> {
        let d = common_dim(window)?;
        let mut coords = Vec::with_capacity(d * window.len());
        for p in window {
            coords.extend_from_slice(&p.0);
        }
        Ok(Point(coords))
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Shared dimension of a nonempty point set.
pub fn common_dim(points: &[Point]) -> Result<usize> {
    let first = points.first().ok_or(Error::InsufficientData {
        what: "point set",
        needed: 1,
        got: 0,
    })?;
    let d = first.dim();
    for p in &points[1..] {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.dim(),
            });
        }
    }
    Ok(d)
}

fn check_same_dim(x: &[Point], y: &[Point]) -> Result<usize> {
    let dx = common_dim(x)?;
    let dy = common_dim(y)?;
    if dx != dy {
        return Err(Error::DimensionMismatch {
            expected: dx,
            found: dy,
        });
    }
    Ok(dx)
}

/// Anything that can fill a Gram matrix. Inputs are assumed
/// dimension-checked by the caller.
pub trait Kernel: Sync {
    fn eval(&self, x: &Point, y: &Point) -> f64;
}

/// Gaussian (RBF) kernel with bandwidth `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernel {
    bandwidth: f64,
}

impl GaussianKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::invalid(format!(
                "kernel bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(GaussianKernel { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    pub(crate) fn eval_slices(&self, x: &[f64], y: &[f64]) -> f64 {
        (-sq_dist(x, y) / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

impl Kernel for GaussianKernel {
    #[inline]
    fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.eval_slices(&x.0, &y.0)
    }
}

/// Product of Gaussian kernels over the time slices of a window.
///
/// Windows are stored as concatenated points of length `window * dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorGaussianKernel {
    pub base: GaussianKernel,
    pub dim: usize,
}

impl Kernel for TensorGaussianKernel {
    fn eval(&self, x: &Point, y: &Point) -> f64 {
        x.0.chunks(self.dim)
            .zip(y.0.chunks(self.dim))
            .map(|(a, b)| self.base.eval_slices(a, b))
            .product()
    }
}

pub fn gaussian_kernel(x: &Point, y: &Point, cfg: &GaussianKernel) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(cfg.eval(x, y))
}

/// Product of factor kernels over two equal-length subtrajectories.
pub fn tensor_kernel(a: &[Point], b: &[Point], cfg: &GaussianKernel) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "tensor kernel windows differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    check_same_dim(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| cfg.eval(x, y)).product())
}

/// Median of pairwise Euclidean distances over distinct pairs.
///
/// Falls back to the smallest nonzero distance when the median is zero,
/// and to `sigma = 1` when every point coincides.
pub fn median_heuristic(points: &[Point]) -> Result<GaussianKernel> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            what: "median heuristic",
            needed: 2,
            got: points.len(),
        });
    }
    common_dim(points)?;
    let n = points.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist(&points[i].0, &points[j].0).sqrt());
        }
    }
    let median = median_in_place(&mut dists);
    if median > 0.0 {
        return GaussianKernel::new(median);
    }
    let smallest_nonzero = dists
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .min_by(f64::total_cmp);
    GaussianKernel::new(smallest_nonzero.unwrap_or(1.0))
}

/// Median (mean of the two middle values for even counts). Reorders `v`.
pub(crate) fn median_in_place(v: &mut [f64]) -> f64 {
    let n = v.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (lower, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let below = lower.iter().copied().max_by(f64::total_cmp).unwrap_or(upper);
        0.5 * (below + upper)
    }
}

/// Dense row-major matrix of kernel evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// True when every entry equals the first one.
    pub fn is_constant(&self) -> bool {
        match self.data.first() {
            Some(&v) => self.data.iter().all(|&x| x == v),
            None => true,
        }
    }
}

pub fn gram(x: &[Point], y: &[Point], cfg: &GaussianKernel) -> Result<GramMatrix> {
    check_same_dim(x, y)?;
    Ok(gram_with(x, y, cfg))
}

/// Gram matrix for an arbitrary kernel; rows are filled in parallel and
/// each entry is a single kernel evaluation, so the result does not depend
/// on scheduling.
pub fn gram_with<K: Kernel>(x: &[Point], y: &[Point], kernel: &K) -> GramMatrix {
    let cols = y.len();
    let mut data = vec![0.0; x.len() * cols];
    if cols > 0 {
        data.par_chunks_mut(cols)
            .zip(x.par_iter())
            .for_each(|(row, xi)| {
                for (out, yj) in row.iter_mut().zip(y) {
                    *out = kernel.eval(xi, yj);
                }
            });
    }
    GramMatrix {
        rows: x.len(),
        cols,
        data,
    }
}
