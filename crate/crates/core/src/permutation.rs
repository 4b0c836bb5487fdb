//! Permutation calibration shared by the MMD and HSIC tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from, substream};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_PERMUTATIONS: usize = 500;
pub const MIN_PERMUTATIONS: usize = 100;

/// Significance level, permutation count and seed of a permutation test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub alpha: f64,
    pub n_perm: usize,
    pub seed: u64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            alpha: DEFAULT_ALPHA,
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 0,
        }
    }
}

impl Calibration {
    pub fn new(alpha: f64, n_perm: usize, seed: u64) -> Result<Self> {
        let c = Calibration { alpha, n_perm, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Calibration { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n_perm < MIN_PERMUTATIONS {
            return Err(Error::invalid(format!(
                "at least {MIN_PERMUTATIONS} permutations are required, got {}",
                self.n_perm
            )));
        }
        Ok(())
    }

    /// 1-based rank `ceil((1 - alpha)(n_perm + 1))` of the threshold among
    /// the permuted statistics together with the observed one.
    pub fn threshold_rank(&self) -> usize {
        let total = self.n_perm + 1;
        let raw = (1.0 - self.alpha) * total as f64;
        // guard against representation error, e.g. 0.95 * 200 = 190.00000000000003
        let rank = (raw - 1e-9).ceil() as usize;
        rank.clamp(1, total)
    }
}

/// Evaluate `statistic` on `n_perm` seeded permutations of `0..len` and
/// return the threshold order statistic of permuted values plus `observed`.
///
/// Permutation `p` is drawn from substream `(seed, p)`, so the result is
/// independent of how rayon schedules the work.
pub(crate) fn permutation_threshold_with<F>(
    len: usize,
    observed: f64,
    calib: &Calibration,
    statistic: F,
) -> Result<f64>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    calib.validate()?;
    let mut values: Vec<f64> = (0..calib.n_perm as u64)
        .into_par_iter()
        .map_init(
            || (0..len).collect::<Vec<usize>>(),
            |perm, p| {
                use rand::seq::SliceRandom;
                for (i, slot) in perm.iter_mut().enumerate() {
                    *slot = i;
                }
                let mut rng = rng_from(substream(calib.seed, p));
                perm.shuffle(&mut rng);
                statistic(perm)
            },
        )
        .collect();
    values.push(observed);
    values.sort_by(f64::total_cmp);
    Ok(values[calib.threshold_rank() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_arithmetic() {
        let c = Calibration::new(0.05, 199, 0).unwrap();
        assert_eq!(c.threshold_rank(), 190);
        let c = Calibration::new(0.05, 500, 0).unwrap();
        assert_eq!(c.threshold_rank(), 476);
        let c = Calibration::new(0.5, 100, 0).unwrap();
        assert_eq!(c.threshold_rank(), 51);
    }

    #[test]
    fn validation() {
        assert!(Calibration::new(0.05, 99, 0).is_err());
        assert!(Calibration::new(0.0, 500, 0).is_err());
        assert!(Calibration::new(1.0, 500, 0).is_err());
        assert!(Calibration::new(0.05, 100, 0).is_ok());
    }

    #[test]
    fn threshold_picks_order_statistic() {
        // statistic = position of element 0 after shuffling; values in 0..len
        let c = Calibration::new(0.05, 199, 3).unwrap();
        let t = permutation_threshold_with(10, -1.0, &c, |p| {
            p.iter().position(|&i| i == 0).unwrap() as f64
        })
        .unwrap();
        let mut values: Vec<f64> = (0..199u64)
            .map(|p| {
                use rand::seq::SliceRandom;
                let mut perm: Vec<usize> = (0..10).collect();
                perm.shuffle(&mut rng_from(substream(3, p)));
                perm.iter().position(|&i| i == 0).unwrap() as f64
            })
            .collect();
        values.push(-1.0);
        values.sort_by(f64::total_cmp);
        assert_eq!(t, values[189]);
    }
}
