//! Weak MMD-mixing estimation from an ensemble of independent trajectories.
//!
//! For a shift `a`, the states `X_s^(i)` and `X_{s+a}^(i)` of every
//! trajectory `i` form a paired sample; the HSIC between the two sides
//! measures how much of the past survives `a` steps later. The decorrelation
//! shift `a*` is the first tested shift whose statistic falls below its
//! own permutation threshold.
//!
//! Seeding: the test at shift `a` of a single estimate draws from substream
//! `(seed, SHIFT, a)`. Repeat `r` of a profile uses seed
//! `(seed, REPEAT, r)` for its shifts and `(seed, REPEAT, r, START)` for its
//! start index. Extending the shift list therefore never changes results at
//! shifts already tested.

use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::hsic::{hsic_test_on_grams, CenteredGram};
use crate::kernel::{gram_with, median_heuristic, Point, TensorGaussianKernel};
use crate::permutation::Calibration;
use crate::rng::{rng_from, substream_path, tag};
use crate::trajectory::Trajectory;

pub const RECOMMENDED_ENSEMBLE: usize = 10;

/// Rule used for the dependence threshold epsilon.
pub const EPSILON_RULE: &str = "hsic_permutation_threshold";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingOptions {
    /// Subtrajectory length; 1 estimates weak mixing.
    pub window: usize,
    /// Stop sweeping shifts once `a*` is found.
    pub stop_at_first_crossing: bool,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            window: 1,
            stop_at_first_crossing: false,
        }
    }
}

/// Per-shift HSIC statistics and thresholds at one start index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub start: usize,
    pub shifts: Vec<usize>,
    pub statistics: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub a_star: Option<usize>,
}

/// Aggregate of repeated estimates at random start indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub shifts: Vec<usize>,
    pub stat_mean: Vec<f64>,
    pub stat_upper95: Vec<f64>,
    pub threshold: Vec<f64>,
    pub a_star: Option<usize>,
    pub n_repeats: usize,
    pub starts: Vec<usize>,
    pub window: usize,
    pub epsilon_rule: String,
}

impl MixingProfile {
    pub fn is_non_mixing(&self) -> bool {
        detect_non_mixing(self)
    }
}

/// True iff no tested shift brought the dependence below threshold.
pub fn detect_non_mixing(profile: &MixingProfile) -> bool {
    profile.a_star.is_none()
}

/// `1, 2, 5, 10, 20, 50, ...` up to and including `a_max`.
pub fn default_shift_grid(a_max: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut decade = 1usize;
    'outer: loop {
        for m in [1, 2, 5] {
            let a = m * decade;
            if a > a_max {
                break 'outer;
            }
            grid.push(a);
        }
        decade *= 10;
    }
    if grid.last() != Some(&a_max) && a_max > 0 {
        grid.push(a_max);
    }
    grid
}

fn validate_shifts(shifts: &[usize]) -> Result<usize> {
    if shifts.is_empty() {
        return Err(Error::invalid("shift list is empty"));
    }
    if shifts[0] == 0 || shifts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("shifts must be positive and strictly increasing"));
    }
    Ok(*shifts.last().unwrap())
}

fn validate_ensemble(trajs: &[Trajectory], last_start: usize, max_shift: usize, window: usize) -> Result<()> {
    if trajs.len() < 2 {
        return Err(Error::InsufficientData {
            what: "mixing estimation (independent trajectories)",
            needed: 2,
            got: trajs.len(),
        });
    }
    if trajs.len() < RECOMMENDED_ENSEMBLE {
        log::warn!(
            "mixing estimation with only {} trajectories; at least {} are recommended",
            trajs.len(),
            RECOMMENDED_ENSEMBLE
        );
    }
    if window == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let d = trajs[0].dim();
    let required = last_start + max_shift + window;
    for t in trajs {
        if t.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: t.dim(),
            });
        }
        if t.len() < required {
            return Err(Error::TrajectoryTooShort {
                id: t.id().to_string(),
                len: t.len(),
                required,
            });
        }
    }
    Ok(())
}

fn window_points(trajs: &[&Trajectory], at: usize, window: usize) -> Vec<Point> {
    trajs
        .iter()
        .map(|t| {
            if window == 1 {
                t.states()[at].clone()
            } else {
                Point::concat(&t.states()[at..at + window]).expect("dimension checked")
            }
        })
        .collect()
}

fn side_kernel(trajs: &[&Trajectory], at: usize, window: usize) -> Result<TensorGaussianKernel> {
    let slices: Vec<Point> = trajs
        .iter()
        .flat_map(|t| t.states()[at..at + window].iter().cloned())
        .collect();
    Ok(TensorGaussianKernel {
        base: median_heuristic(&slices)?,
        dim: trajs[0].dim(),
    })
}

/// Canonical ensemble order at start `s`: by the left point, then id.
/// Makes results independent of the order trajectories were supplied in.
fn canonical_order(trajs: &[Trajectory], s: usize) -> Vec<&Trajectory> {
    let mut order: Vec<&Trajectory> = trajs.iter().collect();
    order.sort_by(|a, b| {
        let pa = a.states()[s].coords();
        let pb = b.states()[s].coords();
        pa.iter()
            .zip(pb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.id().cmp(b.id()))
    });
    order
}

struct Repeat<'a> {
    seed: u64,
    ensemble: Vec<&'a Trajectory>,
    start: usize,
    left: CenteredGram,
}

struct ShiftRow {
    shift: usize,
    statistics: Vec<f64>,
    thresholds: Vec<f64>,
}

/// Shift-major sweep over all repeats. `crossed` decides, per shift,
/// whether the criterion is met (used only for early stopping).
fn sweep<F>(
    trajs: &[Trajectory],
    plan: &[(usize, u64)],
    shifts: &[usize],
    window: usize,
    calib: &Calibration,
    stop_early: bool,
    crossed: F,
) -> Result<Vec<ShiftRow>>
where
    F: Fn(&[f64], &[f64]) -> bool,
{
    calib.validate()?;
    let repeats: Vec<Repeat> = plan
        .iter()
        .map(|&(start, seed)| {
            let ensemble = canonical_order(trajs, start);
            let left_points = window_points(&ensemble, start, window);
            let kernel = side_kernel(&ensemble, start, window)?;
            let left = CenteredGram::new(&gram_with(&left_points, &left_points, &kernel));
            Ok(Repeat {
                seed,
                ensemble,
                start,
                left,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(shifts.len());
    for &shift in shifts {
        let results: Vec<(f64, f64)> = repeats
            .par_iter()
            .map(|r| {
                let at = r.start + shift;
                let right_points = window_points(&r.ensemble, at, window);
                let kernel = side_kernel(&r.ensemble, at, window)?;
                let l = gram_with(&right_points, &right_points, &kernel);
                let c = calib.with_seed(substream_path(r.seed, &[tag::SHIFT, shift as u64]));
                let t = hsic_test_on_grams(&r.left, &l, &c)?;
                Ok((t.statistic, t.threshold))
            })
            .collect::<Result<_>>()?;
        let (statistics, thresholds): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
        let done = crossed(&statistics, &thresholds);
        rows.push(ShiftRow {
            shift,
            statistics,
            thresholds,
        });
        if stop_early && done {
            break;
        }
    }
    Ok(rows)
}

/// HSIC-vs-shift sweep at start index `s`; `a*` is the smallest shift with
/// statistic strictly below its threshold.
pub fn estimate_weak_mixing(
    trajs: &[Trajectory],
    s: usize,
    shifts: &[usize],
    calib: &Calibration,
) -> Result<MixingEstimate> {
    estimate_mixing_with(trajs, s, shifts, calib, &MixingOptions::default())
}

pub fn estimate_mixing_with(
    trajs: &[Trajectory],
    s: usize,
    shifts: &[usize],
    calib: &Calibration,
    opts: &MixingOptions,
) -> Result<MixingEstimate> {
    let max_shift = validate_shifts(shifts)?;
    validate_ensemble(trajs, s, max_shift, opts.window)?;
    let rows = sweep(
        trajs,
        &[(s, calib.seed)],
        shifts,
        opts.window,
        calib,
        opts.stop_at_first_crossing,
        |st, th| st[0] < th[0],
    )?;
    let a_star = rows
        .iter()
        .find(|r| r.statistics[0] < r.thresholds[0])
        .map(|r| r.shift);
    Ok(MixingEstimate {
        start: s,
        shifts: rows.iter().map(|r| r.shift).collect(),
        statistics: rows.iter().map(|r| r.statistics[0]).collect(),
        thresholds: rows.iter().map(|r| r.thresholds[0]).collect(),
        a_star,
    })
}

/// Mean and one-sided 95% upper confidence bound of the mean
/// (Student t with `n - 1` degrees of freedom). A single value is its own
/// bound.
fn mean_and_upper95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, mean);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom positive")
        .inverse_cdf(0.95);
    (mean, mean + t * (var / n as f64).sqrt())
}

fn below(values: &[f64], thresholds: &[f64]) -> bool {
    let (_, upper) = mean_and_upper95(values);
    let th = thresholds.iter().sum::<f64>() / thresholds.len() as f64;
    upper < th
}

/// Repeat the estimate `n_repeats` times at start indices drawn uniformly
/// from `s_range` and aggregate per shift.
pub fn mixing_profile(
    trajs: &[Trajectory],
    s_range: RangeInclusive<usize>,
    shifts: &[usize],
    n_repeats: usize,
    calib: &Calibration,
) -> Result<MixingProfile> {
    mixing_profile_with(trajs, s_range, shifts, n_repeats, calib, &MixingOptions::default())
}

pub fn mixing_profile_with(
    trajs: &[Trajectory],
    s_range: RangeInclusive<usize>,
    shifts: &[usize],
    n_repeats: usize,
    calib: &Calibration,
    opts: &MixingOptions,
) -> Result<MixingProfile> {
    if n_repeats == 0 {
        return Err(Error::invalid("at least one repeat is required"));
    }
    if s_range.is_empty() {
        return Err(Error::invalid("start range is empty"));
    }
    let max_shift = validate_shifts(shifts)?;
    validate_ensemble(trajs, *s_range.end(), max_shift, opts.window)?;

    let plan: Vec<(usize, u64)> = (0..n_repeats as u64)
        .map(|r| {
            let start_seed = substream_path(calib.seed, &[tag::REPEAT, r, tag::START]);
            let start = rng_from(start_seed).random_range(s_range.clone());
            (start, substream_path(calib.seed, &[tag::REPEAT, r]))
        })
        .collect();

    let rows = sweep(
        trajs,
        &plan,
        shifts,
        opts.window,
        calib,
        opts.stop_at_first_crossing,
        below,
    )?;

    let mut profile = MixingProfile {
        shifts: Vec::with_capacity(rows.len()),
        stat_mean: Vec::with_capacity(rows.len()),
        stat_upper95: Vec::with_capacity(rows.len()),
        threshold: Vec::with_capacity(rows.len()),
        a_star: None,
        n_repeats,
        starts: plan.iter().map(|p| p.0).collect(),
        window: opts.window,
        epsilon_rule: format!("{EPSILON_RULE}(alpha={}, n_perm={})", calib.alpha, calib.n_perm),
    };
    for row in &rows {
        let (mean, upper) = mean_and_upper95(&row.statistics);
        let th = row.thresholds.iter().sum::<f64>() / row.thresholds.len() as f64;
        if profile.a_star.is_none() && upper < th {
            profile.a_star = Some(row.shift);
        }
        profile.shifts.push(row.shift);
        profile.stat_mean.push(mean);
        profile.stat_upper95.push(upper);
        profile.threshold.push(th);
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_grid() {
        assert_eq!(default_shift_grid(200), vec![1, 2, 5, 10, 20, 50, 100, 200]);
        assert_eq!(default_shift_grid(75), vec![1, 2, 5, 10, 20, 50, 75]);
        assert_eq!(default_shift_grid(1), vec![1]);
    }

    #[test]
    fn upper_bound_single_value() {
        assert_eq!(mean_and_upper95(&[0.25]), (0.25, 0.25));
        let (m, u) = mean_and_upper95(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        // t_{0.95, 2} = 2.919986
        assert!((u - (2.0 + 2.919_985_580_353_7 * (1.0f64 / 3.0).sqrt())).abs() < 1e-6);
    }

    #[test]
    fn non_mixing_is_absence_of_a_star() {
        let mut p = MixingProfile {
            shifts: vec![1, 2],
            stat_mean: vec![0.1, 0.05],
            stat_upper95: vec![0.1, 0.05],
            threshold: vec![0.08, 0.08],
            a_star: Some(2),
            n_repeats: 1,
            starts: vec![0],
            window: 1,
            epsilon_rule: EPSILON_RULE.into(),
        };
        assert!(!detect_non_mixing(&p));
        p.a_star = None;
        assert!(detect_non_mixing(&p));
    }

    #[test]
    fn rejects_bad_shifts() {
        assert!(validate_shifts(&[]).is_err());
        assert!(validate_shifts(&[0, 1]).is_err());
        assert!(validate_shifts(&[2, 2]).is_err());
        assert_eq!(validate_shifts(&[1, 3, 9]).unwrap(), 9);
    }
}
