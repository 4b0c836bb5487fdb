//! Biased empirical MMD and the permutation two-sample test.
//!
//! ```text
//! MMD_b^2 = 1/n^2 sum k(x_i, x_j) + 1/m^2 sum k(y_i, y_j) - 2/(nm) sum k(x_i, y_j)
//! ```
//!
//! All statistics are computed from the Gram matrix of the pooled sample
//! (X followed by Y). The observed value and every permuted value go
//! through the same accumulation routine, which is exactly symmetric in
//! the two samples and returns exactly zero for identical ordered samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{common_dim, gram_with, median_heuristic, GaussianKernel, GramMatrix, Point};
use crate::permutation::{permutation_threshold_with, Calibration};

/// Outcome of a permutation-calibrated hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub reject: bool,
    pub n_permutations: usize,
    pub seed: u64,
}

impl TestResult {
    pub(crate) fn new(statistic: f64, threshold: f64, calib: &Calibration) -> Self {
        TestResult {
            statistic,
            threshold,
            alpha: calib.alpha,
            reject: statistic > threshold,
            n_permutations: calib.n_perm,
            seed: calib.seed,
        }
    }
}

fn pool(x: &[Point], y: &[Point]) -> Result<Vec<Point>> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InsufficientData {
            what: "two-sample statistic",
            needed: 1,
            got: 0,
        });
    }
    let dx = common_dim(x)?;
    let dy = common_dim(y)?;
    if dx != dy {
        return Err(Error::DimensionMismatch {
            expected: dx,
            found: dy,
        });
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(canonical_cmp);
    ys.sort_by(canonical_cmp);
    xs.extend(ys);
    Ok(xs)
}

/// Lexicographic order on coordinates. Each sample is sorted before pooling
/// so statistics and thresholds do not depend on the input order.
fn canonical_cmp(a: &Point, b: &Point) -> std::cmp::Ordering {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// MMD_b^2 from a pooled Gram matrix where `in_y[k]` marks membership of
/// pooled point `k` in the second sample.
pub(crate) fn mmd_from_pooled(g: &GramMatrix, in_y: &[bool], n: usize, m: usize) -> f64 {
    let (mut s_xx, mut s_yy, mut s_xy, mut s_yx) = (0.0, 0.0, 0.0, 0.0);
    for (a, &a_in_y) in in_y.iter().enumerate() {
        let row = g.row(a);
        let (mut r_x, mut r_y) = (0.0, 0.0);
        for (&v, &b_in_y) in row.iter().zip(in_y) {
            if b_in_y {
                r_y += v;
            } else {
                r_x += v;
            }
        }
        if a_in_y {
            s_yy += r_y;
            s_yx += r_x;
        } else {
            s_xx += r_x;
            s_xy += r_y;
        }
    }
    let (nf, mf) = (n as f64, m as f64);
    let cross = 0.5 * (s_xy + s_yx);
    let value = (s_xx / (nf * nf) + s_yy / (mf * mf)) - 2.0 * cross / (nf * mf);
    value.max(0.0)
}

fn identity_membership(n: usize, m: usize) -> Vec<bool> {
    let mut v = vec![false; n + m];
    v[n..].iter_mut().for_each(|b| *b = true);
    v
}

pub fn mmd_biased(x: &[Point], y: &[Point], cfg: &GaussianKernel) -> Result<f64> {
    let pooled = pool(x, y)?;
    let g = gram_with(&pooled, &pooled, cfg);
    Ok(mmd_from_pooled(&g, &identity_membership(x.len(), y.len()), x.len(), y.len()))
}

/// Permutation threshold on a precomputed pooled Gram matrix.
pub(crate) fn pooled_threshold(
    g: &GramMatrix,
    n: usize,
    m: usize,
    observed: f64,
    calib: &Calibration,
) -> Result<f64> {
    permutation_threshold_with(n + m, observed, calib, |perm| {
        let mut in_y = vec![false; n + m];
        for &k in &perm[n..] {
            in_y[k] = true;
        }
        mmd_from_pooled(g, &in_y, n, m)
    })
}

/// Threshold from `calib.n_perm` seeded random relabelings of the pool
/// into sizes `(n, m)`.
pub fn permutation_threshold(
    x: &[Point],
    y: &[Point],
    cfg: &GaussianKernel,
    calib: &Calibration,
) -> Result<f64> {
    calib.validate()?;
    let pooled = pool(x, y)?;
    let (n, m) = (x.len(), y.len());
    let g = gram_with(&pooled, &pooled, cfg);
    let observed = mmd_from_pooled(&g, &identity_membership(n, m), n, m);
    pooled_threshold(&g, n, m, observed, calib)
}

/// Two-sample test with a median-heuristic bandwidth on the pooled sample.
pub fn two_sample_test(x: &[Point], y: &[Point], calib: &Calibration) -> Result<TestResult> {
    calib.validate()?;
    let pooled = pool(x, y)?;
    let cfg = median_heuristic(&pooled)?;
    two_sample_test_with_kernel(x, y, &cfg, calib)
}

pub fn two_sample_test_with_kernel(
    x: &[Point],
    y: &[Point],
    cfg: &GaussianKernel,
    calib: &Calibration,
) -> Result<TestResult> {
    calib.validate()?;
    let pooled = pool(x, y)?;
    let (n, m) = (x.len(), y.len());
    let g = gram_with(&pooled, &pooled, cfg);
    let statistic = mmd_from_pooled(&g, &identity_membership(n, m), n, m);
    let threshold = pooled_threshold(&g, n, m, statistic, calib)?;
    Ok(TestResult::new(statistic, threshold, calib))
}
