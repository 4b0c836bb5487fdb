//! Scaled-down benchmark harnesses.
//!
//! * `lti`: random slowly mixing LTI systems. `a*` is estimated from an
//!   ensemble, then points thinned from one trajectory are tested against
//!   direct draws from the stationary Gaussian. Every rejection is a false
//!   positive; systems whose `a*` exceeds the budget are excluded.
//! * `lorenz`: the standard Lorenz system against a perturbed one
//!   (accuracy), against an independent copy of itself (false positives),
//!   and against a copy sampled far more densely than `a*` allows.
//! * `circle`: a deterministic rotation that never mixes.
//! * `two_regime`: nearest-MMD leave-one-out classification of two LTI
//!   regimes that differ in stationary scale, plus the feature baselines.
//!
//! Each run draws from its own substream of the bench seed, so any run can
//! be reproduced in isolation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    cross_validate, extract_features, leave_one_out, summarize, LabeledDataset, LinearSvm, LogisticRegression,
    NearestMmdConfig, StartRule,
};
use crate::error::{Error, Result};
use crate::kernel::Point;
use crate::mixing::{estimate_mixing_with, mixing_profile, MixingOptions};
use crate::mmd::two_sample_test;
use crate::permutation::Calibration;
use crate::rng::{rng_from, substream, substream_path, tag};
use crate::systems::{
    lorenz_initial_point, random_lti, sample_stationary, simulate_circle, simulate_lorenz, simulate_lti,
    simulate_lti_ensemble, stationary_covariance, LorenzParams, LtiPreset, LtiSystem, NoiseScale,
};
use crate::trajectory::{thin, Trajectory};

fn linear_grid(step: usize, max: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (1..=max / step).map(|k| k * step).collect();
    if step > 1 {
        g.insert(0, 1);
    }
    if g.last() != Some(&max) {
        g.push(max);
    }
    g
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

// ---------------------------------------------------------------- lti

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiBenchConfig {
    pub systems: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub r_weight: f64,
    /// Trajectories used to estimate `a*`.
    pub ensemble: usize,
    pub a_max: usize,
    pub shift_step: usize,
    /// Thinned points and stationary draws per test.
    pub n_points: usize,
    /// New system draws allowed when the Riccati or Lyapunov solve fails.
    pub max_redraws: usize,
}

impl Default for LtiBenchConfig {
    fn default() -> Self {
        LtiBenchConfig {
            systems: 50,
            dim_min: 1,
            dim_max: 20,
            r_weight: 1e7,
            ensemble: 100,
            a_max: 200,
            shift_step: 1,
            n_points: 100,
            max_redraws: 10,
        }
    }
}

impl LtiBenchConfig {
    /// Ensemble trajectory length; `a*` is estimated at its end.
    pub fn trajectory_length(&self) -> usize {
        5 * self.a_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiRun {
    pub index: usize,
    pub dim: usize,
    pub redraws: usize,
    pub spectral_radius: f64,
    pub a_star: Option<usize>,
    pub excluded: bool,
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    pub false_positive: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiBenchReport {
    pub config: LtiBenchConfig,
    pub runs: Vec<LtiRun>,
    pub evaluated: usize,
    pub excluded: usize,
    pub false_positives: usize,
    pub false_positive_rate: f64,
}

fn draw_system(cfg: &LtiBenchConfig, seed: u64) -> Result<(LtiSystem, nalgebra::DMatrix<f64>, usize, usize)> {
    let dim = rng_from(substream(seed, tag::SYSTEM)).random_range(cfg.dim_min..=cfg.dim_max);
    let mut last = None;
    for redraw in 0..=cfg.max_redraws {
        let s = substream_path(seed, &[tag::SYSTEM, redraw as u64]);
        let attempt = random_lti(dim, cfg.r_weight, NoiseScale::MaxEigenvalue, s)
            .and_then(|sys| stationary_covariance(&sys).map(|z| (sys, z)));
        match attempt {
            Ok((sys, z)) => return Ok((sys, z, dim, redraw)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one draw"))
}

fn lti_run(cfg: &LtiBenchConfig, index: usize, seed: u64, calib: &Calibration) -> Result<LtiRun> {
    let (sys, z, dim, redraws) = draw_system(cfg, seed)?;
    let len = cfg.trajectory_length();
    let x0 = Point(vec![0.0; dim]);
    let ens_seed = substream(seed, tag::TRAJECTORY);
    let ensemble = simulate_lti_ensemble(&sys, &x0, cfg.ensemble, len, "lti", ens_seed)?;
    let shifts = linear_grid(cfg.shift_step, cfg.a_max);
    let opts = MixingOptions {
        window: 1,
        stop_at_first_crossing: true,
    };
    let est = estimate_mixing_with(
        &ensemble,
        len - 1 - cfg.a_max,
        &shifts,
        &calib.with_seed(substream(seed, tag::SHIFT)),
        &opts,
    )?;
    let mut run = LtiRun {
        index,
        dim,
        redraws,
        spectral_radius: sys.spectral_radius(),
        a_star: est.a_star,
        excluded: est.a_star.is_none(),
        statistic: None,
        threshold: None,
        false_positive: None,
    };
    let Some(a) = est.a_star else {
        return Ok(run);
    };
    // extend the first ensemble member; same seed, so the prefix is identical
    let first = simulate_lti(
        &sys,
        &x0,
        len + cfg.n_points * a,
        substream_path(ens_seed, &[tag::TRAJECTORY, 0]),
    )?;
    let x = thin(&first, a, len, cfg.n_points)?;
    let y = sample_stationary(&z, cfg.n_points, substream(seed, tag::NOISE))?;
    let t = two_sample_test(&x, &y, &calib.with_seed(substream(seed, tag::TEST)))?;
    run.statistic = Some(t.statistic);
    run.threshold = Some(t.threshold);
    run.false_positive = Some(t.reject);
    Ok(run)
}

pub fn run_lti_bench(cfg: &LtiBenchConfig, calib: &Calibration) -> Result<LtiBenchReport> {
    calib.validate()?;
    if cfg.dim_min == 0 || cfg.dim_min > cfg.dim_max {
        return Err(Error::invalid("invalid dimension range"));
    }
    if cfg.shift_step == 0 || cfg.a_max == 0 {
        return Err(Error::invalid("shift step and a_max must be positive"));
    }
    let runs: Vec<LtiRun> = (0..cfg.systems)
        .map(|i| lti_run(cfg, i, substream_path(calib.seed, &[tag::REPEAT, i as u64]), calib))
        .collect::<Result<_>>()?;
    let excluded = runs.iter().filter(|r| r.excluded).count();
    let false_positives = runs.iter().filter(|r| r.false_positive == Some(true)).count();
    let evaluated = runs.len() - excluded;
    Ok(LtiBenchReport {
        config: cfg.clone(),
        runs,
        evaluated,
        excluded,
        false_positives,
        false_positive_rate: rate(false_positives, evaluated),
    })
}

// ---------------------------------------------------------------- lorenz

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzBenchConfig {
    pub repetitions: usize,
    pub perturbed_sigma_coef: f64,
    /// Thinning interval in time units.
    pub a_star_time: f64,
    pub dt_out: f64,
    pub n_points: usize,
    /// Earliest sampled time.
    pub t_start: f64,
    /// End of the densely sampled window of the violation case.
    pub dense_t_end: f64,
}

impl Default for LorenzBenchConfig {
    fn default() -> Self {
        LorenzBenchConfig {
            repetitions: 40,
            perturbed_sigma_coef: 6.0,
            a_star_time: 20.0,
            dt_out: 0.1,
            n_points: 100,
            t_start: 20.0,
            dense_t_end: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LorenzCase {
    /// Standard against perturbed system; rejection is correct.
    Discrimination,
    /// Two independent standard trajectories; rejection is a false positive.
    SameSystem,
    /// As `SameSystem` but sampled densely, ignoring `a*`.
    DenseSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzRun {
    pub repetition: usize,
    pub case: LorenzCase,
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorenzBenchReport {
    pub config: LorenzBenchConfig,
    pub runs: Vec<LorenzRun>,
    pub accuracy: f64,
    pub false_positive_rate: f64,
    pub dense_false_positive_rate: f64,
}

fn steps_of(time: f64, dt: f64) -> usize {
    (time / dt).round() as usize
}

fn lorenz_repetition(cfg: &LorenzBenchConfig, r: usize, seed: u64, calib: &Calibration) -> Result<Vec<LorenzRun>> {
    let mut rng = rng_from(substream(seed, tag::TRAJECTORY));
    let x_std = lorenz_initial_point(&mut rng);
    let x_pert = lorenz_initial_point(&mut rng);
    let x_copy = lorenz_initial_point(&mut rng);

    let stride = steps_of(cfg.a_star_time, cfg.dt_out);
    let start = steps_of(cfg.t_start, cfg.dt_out);
    let t_max = cfg.t_start + (cfg.n_points - 1) as f64 * cfg.a_star_time;
    let standard = LorenzParams::default();
    let perturbed = LorenzParams::with_sigma_coef(cfg.perturbed_sigma_coef);

    let a = simulate_lorenz(&standard, &x_std, t_max, cfg.dt_out)?;
    let b = simulate_lorenz(&perturbed, &x_pert, t_max, cfg.dt_out)?;
    let c = simulate_lorenz(&standard, &x_copy, t_max, cfg.dt_out)?;

    let dense_stride = steps_of((cfg.dense_t_end - cfg.t_start) / cfg.n_points as f64, cfg.dt_out).max(1);
    let cases = [
        (LorenzCase::Discrimination, &a, &b, stride),
        (LorenzCase::SameSystem, &a, &c, stride),
        (LorenzCase::DenseSampling, &a, &c, dense_stride),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(k, (case, p, q, s))| {
            let x = thin(p, *s, start, cfg.n_points)?;
            let y = thin(q, *s, start, cfg.n_points)?;
            let t = two_sample_test(&x, &y, &calib.with_seed(substream_path(seed, &[tag::TEST, k as u64])))?;
            Ok(LorenzRun {
                repetition: r,
                case: case.clone(),
                statistic: t.statistic,
                threshold: t.threshold,
                reject: t.reject,
            })
        })
        .collect()
}

pub fn run_lorenz_bench(cfg: &LorenzBenchConfig, calib: &Calibration) -> Result<LorenzBenchReport> {
    calib.validate()?;
    if cfg.n_points < 2 || !(cfg.dense_t_end > cfg.t_start) {
        return Err(Error::invalid("Lorenz bench needs n_points >= 2 and a nonempty dense window"));
    }
    let per_rep: Vec<Vec<LorenzRun>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| lorenz_repetition(cfg, r, substream_path(calib.seed, &[tag::REPEAT, r as u64]), calib))
        .collect::<Result<_>>()?;
    let runs: Vec<LorenzRun> = per_rep.into_iter().flatten().collect();
    let rate_of = |case: LorenzCase| {
        let sel: Vec<&LorenzRun> = runs.iter().filter(|r| r.case == case).collect();
        rate(sel.iter().filter(|r| r.reject).count(), sel.len())
    };
    Ok(LorenzBenchReport {
        config: cfg.clone(),
        accuracy: rate_of(LorenzCase::Discrimination),
        false_positive_rate: rate_of(LorenzCase::SameSystem),
        dense_false_positive_rate: rate_of(LorenzCase::DenseSampling),
        runs,
    })
}

// ---------------------------------------------------------------- circle

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleBenchConfig {
    pub seeds: usize,
    pub trajectories: usize,
    pub a_max: usize,
    pub n_repeats: usize,
}

impl Default for CircleBenchConfig {
    fn default() -> Self {
        CircleBenchConfig {
            seeds: 10,
            trajectories: 100,
            a_max: 100,
            n_repeats: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleRun {
    pub seed_index: usize,
    /// Smallest per-shift margin `stat_mean - threshold`.
    pub min_margin: f64,
    pub above_at_every_shift: bool,
    pub non_mixing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleBenchReport {
    pub config: CircleBenchConfig,
    pub runs: Vec<CircleRun>,
    pub non_mixing_detected: usize,
}

/// `count` rotations with initial angles uniform on `[0, 2 pi)`.
pub fn circle_ensemble(count: usize, n: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let mut rng = rng_from(substream(seed, tag::TRAJECTORY));
    (0..count)
        .map(|i| {
            let theta0 = rng.random_range(0.0..std::f64::consts::TAU);
            Ok(simulate_circle(theta0, n)?.with_id(format!("circle_{i}")))
        })
        .collect()
}

pub fn run_circle_bench(cfg: &CircleBenchConfig, calib: &Calibration) -> Result<CircleBenchReport> {
    calib.validate()?;
    let shifts: Vec<usize> = (1..=cfg.a_max).collect();
    let runs: Vec<CircleRun> = (0..cfg.seeds)
        .map(|k| {
            let seed = substream_path(calib.seed, &[tag::REPEAT, k as u64]);
            let trajs = circle_ensemble(cfg.trajectories, 2 * cfg.a_max + 1, seed)?;
            let p = mixing_profile(&trajs, 0..=cfg.a_max, &shifts, cfg.n_repeats, &calib.with_seed(seed))?;
            let min_margin = p
                .stat_mean
                .iter()
                .zip(&p.threshold)
                .map(|(s, t)| s - t)
                .fold(f64::INFINITY, f64::min);
            Ok(CircleRun {
                seed_index: k,
                min_margin,
                above_at_every_shift: min_margin > 0.0,
                non_mixing: p.is_non_mixing(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CircleBenchReport {
        config: cfg.clone(),
        non_mixing_detected: runs.iter().filter(|r| r.non_mixing).count(),
        runs,
    })
}

// ---------------------------------------------------------------- two regimes

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoRegimeConfig {
    pub runs: usize,
    pub per_class: usize,
    pub length: usize,
    /// Shift budget for estimating `a*`.
    pub a_max: usize,
    pub count: usize,
    pub start: StartRule,
    /// Cross-validation repeats per run; 0 skips the baselines.
    pub cv_repeats: usize,
}

impl Default for TwoRegimeConfig {
    fn default() -> Self {
        TwoRegimeConfig {
            runs: 100,
            per_class: 20,
            length: 1000,
            a_max: 50,
            count: 30,
            start: StartRule::Uniform { lo: 100, hi: 200 },
            cv_repeats: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoRegimeRun {
    pub run: usize,
    pub a_star: usize,
    pub accuracy: f64,
    pub logistic_mean: Option<f64>,
    pub logistic_std: Option<f64>,
    pub svm_mean: Option<f64>,
    pub svm_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoRegimeReport {
    pub config: TwoRegimeConfig,
    pub runs: Vec<TwoRegimeRun>,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub logistic_mean: Option<f64>,
    pub logistic_std: Option<f64>,
    pub svm_mean: Option<f64>,
    pub svm_std: Option<f64>,
}

pub const REGIME_LABELS: [&str; 2] = ["regime_a", "regime_b"];

/// Labelled trajectories of the two regimes, `per_class` each.
pub fn two_regime_dataset(per_class: usize, length: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let mut out = Vec::with_capacity(2 * per_class);
    for (c, preset) in [LtiPreset::RegimeA, LtiPreset::RegimeB].iter().enumerate() {
        let sys = preset.system();
        let x0 = Point(vec![0.0; sys.dim()]);
        let s = substream_path(seed, &[tag::CLASS, c as u64]);
        for t in simulate_lti_ensemble(&sys, &x0, per_class, length, REGIME_LABELS[c], s)? {
            out.push(t.with_label(REGIME_LABELS[c]));
        }
    }
    Ok(out)
}

/// Larger of the per-class `a*` values estimated at the end of the
/// trajectories.
pub fn ensemble_a_star(trajs: &[Trajectory], a_max: usize, calib: &Calibration) -> Result<usize> {
    let mut labels: Vec<Option<&str>> = trajs.iter().map(|t| t.class_label()).collect();
    labels.sort();
    labels.dedup();
    let shifts: Vec<usize> = (1..=a_max).collect();
    let mut worst = 0;
    for (k, label) in labels.iter().enumerate() {
        let group: Vec<Trajectory> = trajs.iter().filter(|t| t.class_label() == *label).cloned().collect();
        let len = group.iter().map(Trajectory::len).min().unwrap_or(0);
        if len <= a_max {
            return Err(Error::TrajectoryTooShort {
                id: group.first().map_or_else(String::new, |t| t.id().to_string()),
                len,
                required: a_max + 1,
            });
        }
        let est = estimate_mixing_with(
            &group,
            len - 1 - a_max,
            &shifts,
            &calib.with_seed(substream_path(calib.seed, &[tag::CLASS, k as u64])),
            &MixingOptions {
                window: 1,
                stop_at_first_crossing: true,
            },
        )?;
        worst = worst.max(est.a_star.ok_or(Error::NonMixing)?);
    }
    Ok(worst)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Feature dataset of labelled trajectories.
pub fn feature_dataset(trajs: &[Trajectory]) -> Result<LabeledDataset> {
    let mut features = Vec::with_capacity(trajs.len());
    let mut labels = Vec::with_capacity(trajs.len());
    for t in trajs {
        features.push(extract_features(t)?.values().to_vec());
        labels.push(
            t.class_label()
                .ok_or_else(|| Error::MissingLabel(t.id().to_string()))?
                .to_string(),
        );
    }
    LabeledDataset::new(features, labels)
}

pub fn run_two_regime_bench(cfg: &TwoRegimeConfig, calib: &Calibration) -> Result<TwoRegimeReport> {
    calib.validate()?;
    let mut all_lr = Vec::new();
    let mut all_svm = Vec::new();
    let mut runs = Vec::with_capacity(cfg.runs);
    for r in 0..cfg.runs {
        let seed = substream_path(calib.seed, &[tag::REPEAT, r as u64]);
        let trajs = two_regime_dataset(cfg.per_class, cfg.length, seed)?;
        let a_star = ensemble_a_star(&trajs, cfg.a_max, &calib.with_seed(substream(seed, tag::SHIFT)))?;
        let nn = NearestMmdConfig {
            a_star,
            start: cfg.start,
            count: cfg.count,
        };
        let preds = leave_one_out(&trajs, &nn, substream(seed, tag::QUERY))?;
        let accuracy = summarize(&preds).accuracy.unwrap_or(0.0);
        let mut run = TwoRegimeRun {
            run: r,
            a_star,
            accuracy,
            logistic_mean: None,
            logistic_std: None,
            svm_mean: None,
            svm_std: None,
        };
        if cfg.cv_repeats > 0 {
            let data = feature_dataset(&trajs)?;
            let fold_seed = substream(seed, tag::FOLD);
            let lr = cross_validate(&data, 3, &LogisticRegression::default(), cfg.cv_repeats, fold_seed)?;
            let svm = cross_validate(&data, 3, &LinearSvm::default(), cfg.cv_repeats, fold_seed)?;
            run.logistic_mean = Some(lr.mean_accuracy);
            run.logistic_std = Some(lr.std_accuracy);
            run.svm_mean = Some(svm.mean_accuracy);
            run.svm_std = Some(svm.std_accuracy);
            all_lr.extend(lr.fold_accuracies);
            all_svm.extend(svm.fold_accuracies);
        }
        runs.push(run);
    }
    let accs: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
    let (mean_accuracy, _) = mean_std(&accs);
    let lr = (!all_lr.is_empty()).then(|| mean_std(&all_lr));
    let svm = (!all_svm.is_empty()).then(|| mean_std(&all_svm));
    Ok(TwoRegimeReport {
        config: cfg.clone(),
        mean_accuracy,
        min_accuracy: accs.iter().copied().fold(f64::INFINITY, f64::min),
        logistic_mean: lr.map(|v| v.0),
        logistic_std: lr.map(|v| v.1),
        svm_mean: svm.map(|v| v.0),
        svm_std: svm.map(|v| v.1),
        runs,
    })
}
