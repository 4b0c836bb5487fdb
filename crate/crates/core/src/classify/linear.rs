use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from, substream_path, tag};

/// Feature rows with a binary class label each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let p = features.first().map_or(0, |r| r.len());
        if features.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("feature rows differ in length"));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// The two class names, sorted.
    fn classes(&self) -> Result<[String; 2]> {
        let set: BTreeSet<&String> = self.labels.iter().collect();
        if set.len() != 2 {
            return Err(Error::ClassCount(set.len()));
        }
        let mut it = set.into_iter();
        Ok([it.next().unwrap().clone(), it.next().unwrap().clone()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Final gradient norm (logistic) or final objective (SVM).
    pub final_value: f64,
    /// SVM objective of the suffix-averaged iterate at doubling checkpoints.
    pub objective_trace: Vec<f64>,
}

/// Linear classifier acting on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: [String; 2],
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub diagnostics: FitDiagnostics,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        standardize_row(x, &self.mean, &self.scale)
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| z * w)
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> &str {
        if self.decision(x) > 0.0 {
            &self.classes[1]
        } else {
            &self.classes[0]
        }
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let hits = data
            .features
            .iter()
            .zip(&data.labels)
            .filter(|(x, y)| self.predict(x) == y.as_str())
            .count();
        hits as f64 / data.len() as f64
    }
}

fn standardize_row(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

/// Standardized design matrix plus +-1 targets.
struct Prepared {
    classes: [String; 2],
    mean: Vec<f64>,
    scale: Vec<f64>,
    z: Vec<Vec<f64>>,
    y: Vec<f64>,
}

fn prepare(data: &LabeledDataset) -> Result<Prepared> {
    let classes = data.classes()?;
    let n = data.len() as f64;
    let p = data.features[0].len();
    let mut mean = vec![0.0; p];
    for row in &data.features {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; p];
    for row in &data.features {
        for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in &mut scale {
        *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
    }
    let z = data.features.iter().map(|r| standardize_row(r, &mean, &scale)).collect();
    let y = data
        .labels
        .iter()
        .map(|l| if *l == classes[1] { 1.0 } else { -1.0 })
        .collect();
    Ok(Prepared {
        classes,
        mean,
        scale,
        z,
        y,
    })
}

pub trait Trainer: Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, data: &LabeledDataset) -> Result<LinearModel>;
}

/// L2-regularized logistic regression by full-batch gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub l2: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogisticRegression {
    fn default() -> Self {
        LogisticRegression {
            l2: 1e-2,
            tolerance: 1e-6,
            max_iter: 100_000,
        }
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Gradient of `mean log(1 + exp(-y s)) + l2/2 |w|^2` (bias unpenalized).
fn logistic_gradient(prep: &Prepared, w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = prep.y.len() as f64;
    let mut gw: Vec<f64> = w.iter().map(|wi| l2 * wi).collect();
    let mut gb = 0.0;
    for (zi, &yi) in prep.z.iter().zip(&prep.y) {
        let s: f64 = zi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let coef = -yi * sigmoid(-yi * s) / n;
        for (g, a) in gw.iter_mut().zip(zi) {
            *g += coef * a;
        }
        gb += coef;
    }
    (gw, gb)
}

/// Largest eigenvalue of the augmented second-moment matrix `[z 1]^T [z 1] / n`.
fn design_curvature(prep: &Prepared) -> f64 {
    let p = prep.z[0].len() + 1;
    let n = prep.z.len() as f64;
    let mut m = DMatrix::<f64>::zeros(p, p);
    for zi in &prep.z {
        let aug: Vec<f64> = zi.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..p {
            for j in 0..p {
                m[(i, j)] += aug[i] * aug[j] / n;
            }
        }
    }
    m.symmetric_eigenvalues().iter().copied().fold(0.0, f64::max)
}

pub fn train_logistic(data: &LabeledDataset, cfg: &LogisticRegression) -> Result<LinearModel> {
    if !(cfg.l2 > 0.0 && cfg.tolerance > 0.0) {
        return Err(Error::invalid("logistic regression needs positive l2 and tolerance"));
    }
    let prep = prepare(data)?;
    let p = prep.z[0].len();
    let step = 1.0 / (0.25 * design_curvature(&prep) + cfg.l2);
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    while iterations < cfg.max_iter {
        let (gw, gb) = logistic_gradient(&prep, &w, b, cfg.l2);
        grad_norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if grad_norm <= cfg.tolerance {
            break;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        b -= step * gb;
        iterations += 1;
    }
    Ok(LinearModel {
        classes: prep.classes,
        mean: prep.mean,
        scale: prep.scale,
        weights: w,
        bias: b,
        diagnostics: FitDiagnostics {
            iterations,
            converged: grad_norm <= cfg.tolerance,
            final_value: grad_norm,
            objective_trace: Vec::new(),
        },
    })
}

impl Trainer for LogisticRegression {
    fn name(&self) -> &'static str {
        "logistic_regression"
    }

    fn fit(&self, data: &LabeledDataset) -> Result<LinearModel> {
        train_logistic(data, self)
    }
}

/// L2-regularized hinge loss `l2/2 |(w, b)|^2 + mean max(0, 1 - y s)` by
/// deterministic full-batch projected subgradient descent with step
/// `1 / (l2 t)`; the returned model is the average of the second half of
/// the iterates. The objective trace holds the same suffix average taken at
/// doubling checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub l2: f64,
    pub iterations: usize,
}

impl Default for LinearSvm {
    fn default() -> Self {
        LinearSvm {
            l2: 1e-2,
            iterations: 4000,
        }
    }
}

fn svm_objective(prep: &Prepared, u: &[f64], l2: f64) -> f64 {
    let p = u.len() - 1;
    let n = prep.y.len() as f64;
    let hinge: f64 = prep
        .z
        .iter()
        .zip(&prep.y)
        .map(|(zi, yi)| {
            let s: f64 = zi.iter().zip(&u[..p]).map(|(a, b)| a * b).sum::<f64>() + u[p];
            (1.0 - yi * s).max(0.0)
        })
        .sum::<f64>()
        / n;
    0.5 * l2 * u.iter().map(|v| v * v).sum::<f64>() + hinge
}

pub fn train_linear_svm(data: &LabeledDataset, cfg: &LinearSvm) -> Result<LinearModel> {
    if !(cfg.l2 > 0.0) || cfg.iterations < 2 {
        return Err(Error::invalid("linear SVM needs positive l2 and at least two iterations"));
    }
    let prep = prepare(data)?;
    let p = prep.z[0].len();
    let n = prep.y.len() as f64;
    let radius = 1.0 / cfg.l2.sqrt();
    // u = (w, b); every iterate is kept so suffix averages can be formed
    let mut u = vec![0.0; p + 1];
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(cfg.iterations);
    for t in 1..=cfg.iterations {
        let mut g: Vec<f64> = u.iter().map(|v| cfg.l2 * v).collect();
        for (zi, &yi) in prep.z.iter().zip(&prep.y) {
            let s: f64 = zi.iter().zip(&u[..p]).map(|(a, b)| a * b).sum::<f64>() + u[p];
            if yi * s < 1.0 {
                for (gj, a) in g[..p].iter_mut().zip(zi) {
                    *gj -= yi * a / n;
                }
                g[p] -= yi / n;
            }
        }
        let eta = 1.0 / (cfg.l2 * t as f64);
        for (v, gj) in u.iter_mut().zip(&g) {
            *v -= eta * gj;
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > radius {
            u.iter_mut().for_each(|v| *v *= radius / norm);
        }
        history.push(u.clone());
    }
    let suffix_average = |t: usize| -> Vec<f64> {
        let tail = &history[t / 2..t];
        let mut avg = vec![0.0; p + 1];
        for it in tail {
            for (a, v) in avg.iter_mut().zip(it) {
                *a += v / tail.len() as f64;
            }
        }
        avg
    };
    let mut trace = Vec::new();
    let mut t = 16.min(cfg.iterations);
    while t < cfg.iterations {
        trace.push(svm_objective(&prep, &suffix_average(t), cfg.l2));
        t *= 2;
    }
    let avg = suffix_average(cfg.iterations);
    trace.push(svm_objective(&prep, &avg, cfg.l2));
    let final_value = svm_objective(&prep, &avg, cfg.l2);
    Ok(LinearModel {
        classes: prep.classes,
        mean: prep.mean,
        scale: prep.scale,
        weights: avg[..p].to_vec(),
        bias: avg[p],
        diagnostics: FitDiagnostics {
            iterations: cfg.iterations,
            converged: true,
            final_value,
            objective_trace: trace,
        },
    })
}

impl Trainer for LinearSvm {
    fn name(&self) -> &'static str {
        "linear_svm"
    }

    fn fit(&self, data: &LabeledDataset) -> Result<LinearModel> {
        train_linear_svm(data, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub trainer: String,
    pub k_folds: usize,
    pub repeats: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Stratified folds: each class is shuffled and dealt round-robin.
fn stratified_folds(data: &LabeledDataset, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng_from(seed);
    let classes: BTreeSet<&String> = data.labels.iter().collect();
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for c in classes {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| &data.labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds
}

/// Repeated k-fold cross-validation; repeat `r` shuffles with substream
/// `(seed, FOLD, r)`. Mean and sample standard deviation are taken over all
/// repeats and folds.
pub fn cross_validate(
    data: &LabeledDataset,
    k_folds: usize,
    trainer: &dyn Trainer,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    if k_folds < 2 {
        return Err(Error::invalid("cross-validation needs at least two folds"));
    }
    if repeats == 0 {
        return Err(Error::invalid("cross-validation needs at least one repeat"));
    }
    if data.len() < k_folds {
        return Err(Error::InsufficientData {
            what: "cross-validation",
            needed: k_folds,
            got: data.len(),
        });
    }
    data.classes()?;
    let per_repeat: Vec<Vec<f64>> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let folds = stratified_folds(data, k_folds, substream_path(seed, &[tag::FOLD, r]));
            folds
                .iter()
                .enumerate()
                .map(|(f, test)| {
                    let train: Vec<usize> = folds
                        .iter()
                        .enumerate()
                        .filter(|(g, _)| *g != f)
                        .flat_map(|(_, v)| v.iter().copied())
                        .collect();
                    let model = trainer.fit(&data.subset(&train))?;
                    Ok(model.accuracy(&data.subset(test)))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let fold_accuracies: Vec<f64> = per_repeat.into_iter().flatten().collect();
    let n = fold_accuracies.len() as f64;
    let mean = fold_accuracies.iter().sum::<f64>() / n;
    let var = if fold_accuracies.len() > 1 {
        fold_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(CvReport {
        trainer: trainer.name().to_string(),
        k_folds,
        repeats,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        fold_accuracies,
    })
}
