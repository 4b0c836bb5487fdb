//! Biased HSIC statistic `(m-1)^-2 tr(K H L H)` and its permutation test.

use crate::error::{Error, Result};
use crate::kernel::{common_dim, gram_with, median_heuristic, GaussianKernel, GramMatrix, Point};
use crate::mmd::TestResult;
use crate::permutation::{permutation_threshold_with, Calibration};

/// Index-paired samples; the sides may differ in dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    left: Vec<Point>,
    right: Vec<Point>,
}

impl PairedSample {
    pub fn new(left: Vec<Point>, right: Vec<Point>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::invalid(format!(
                "paired sample sides differ in length: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        if left.len() < 2 {
            return Err(Error::InsufficientData {
                what: "HSIC",
                needed: 2,
                got: left.len(),
            });
        }
        common_dim(&left)?;
        common_dim(&right)?;
        Ok(PairedSample { left, right })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn left(&self) -> &[Point] {
        &self.left
    }

    pub fn right(&self) -> &[Point] {
        &self.right
    }

    pub fn swapped(&self) -> PairedSample {
        PairedSample {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }
}

/// `H K H` for a symmetric Gram matrix, kept dense.
pub(crate) struct CenteredGram {
    m: usize,
    data: Vec<f64>,
    constant: bool,
}

impl CenteredGram {
    pub(crate) fn new(k: &GramMatrix) -> Self {
        let m = k.rows();
        let row_means: Vec<f64> = (0..m).map(|i| k.row(i).iter().sum::<f64>() / m as f64).collect();
        let grand = row_means.iter().sum::<f64>() / m as f64;
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            let row = k.row(i);
            for j in 0..m {
                data[i * m + j] = row[j] - row_means[i] - row_means[j] + grand;
            }
        }
        CenteredGram {
            m,
            data,
            constant: k.is_constant(),
        }
    }
}

/// HSIC with the right side re-paired through `perm`
/// (left `i` is paired with right `perm[i]`).
pub(crate) fn hsic_from_grams(kc: &CenteredGram, l: &GramMatrix, perm: &[usize]) -> f64 {
    let m = kc.m;
    if kc.constant || l.is_constant() {
        return 0.0;
    }
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..m {
        let krow = &kc.data[i * m..(i + 1) * m];
        let lrow = l.row(perm[i]);
        diag += krow[i] * lrow[perm[i]];
        for j in (i + 1)..m {
            off += krow[j] * lrow[perm[j]];
        }
    }
    let denom = (m - 1) as f64;
    ((diag + 2.0 * off) / (denom * denom)).max(0.0)
}

fn grams(s: &PairedSample, cfg_left: &GaussianKernel, cfg_right: &GaussianKernel) -> (CenteredGram, GramMatrix) {
    let k = gram_with(&s.left, &s.left, cfg_left);
    let l = gram_with(&s.right, &s.right, cfg_right);
    (CenteredGram::new(&k), l)
}

fn identity(m: usize) -> Vec<usize> {
    (0..m).collect()
}

pub fn hsic_statistic(
    s: &PairedSample,
    cfg_left: &GaussianKernel,
    cfg_right: &GaussianKernel,
) -> Result<f64> {
    let (kc, l) = grams(s, cfg_left, cfg_right);
    Ok(hsic_from_grams(&kc, &l, &identity(s.len())))
}

/// Permutation threshold: the right side's pairing is shuffled while the
/// left side stays fixed.
pub fn hsic_threshold(
    s: &PairedSample,
    cfg_left: &GaussianKernel,
    cfg_right: &GaussianKernel,
    calib: &Calibration,
) -> Result<f64> {
    calib.validate()?;
    let (kc, l) = grams(s, cfg_left, cfg_right);
    let observed = hsic_from_grams(&kc, &l, &identity(s.len()));
    permutation_threshold_with(s.len(), observed, calib, |perm| hsic_from_grams(&kc, &l, perm))
}

pub(crate) fn hsic_test_on_grams(kc: &CenteredGram, l: &GramMatrix, calib: &Calibration) -> Result<TestResult> {
    let m = kc.m;
    let statistic = hsic_from_grams(kc, l, &identity(m));
    let threshold = permutation_threshold_with(m, statistic, calib, |perm| hsic_from_grams(kc, l, perm))?;
    Ok(TestResult::new(statistic, threshold, calib))
}

/// Independence test with one median-heuristic bandwidth per side.
pub fn independence_test(s: &PairedSample, calib: &Calibration) -> Result<TestResult> {
    calib.validate()?;
    let cfg_left = median_heuristic(&s.left)?;
    let cfg_right = median_heuristic(&s.right)?;
    let (kc, l) = grams(s, &cfg_left, &cfg_right);
    hsic_test_on_grams(&kc, &l, calib)
}
