use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{median_heuristic, Point};
use crate::mmd::mmd_biased;
use crate::rng::{rng_from, substream_path, tag};
use crate::trajectory::{thin, Trajectory};

/// How the thinning start index is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    Fixed(usize),
    /// Uniform over `lo..=hi`.
    Uniform { lo: usize, hi: usize },
}

impl StartRule {
    fn draw(&self, seed: u64) -> Result<usize> {
        match *self {
            StartRule::Fixed(s) => Ok(s),
            StartRule::Uniform { lo, hi } if lo <= hi => Ok(rng_from(seed).random_range(lo..=hi)),
            StartRule::Uniform { lo, hi } => Err(Error::invalid(format!("empty start interval {lo}..={hi}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearestMmdConfig {
    pub a_star: usize,
    pub start: StartRule,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestMatch {
    pub label: String,
    pub nearest_id: String,
    pub min_mmd: f64,
    pub start: usize,
}

/// Label of the reference closest to `query` in thinned-sample MMD.
///
/// The query and every reference are thinned from the same start index;
/// ties go to the lowest reference id.
pub fn nearest_mmd_classify(
    query: &Trajectory,
    labeled: &[Trajectory],
    cfg: &NearestMmdConfig,
    seed: u64,
) -> Result<NearestMatch> {
    let refs: Vec<&Trajectory> = labeled.iter().collect();
    nearest_among(query, &refs, cfg, seed)
}

fn nearest_among(query: &Trajectory, refs: &[&Trajectory], cfg: &NearestMmdConfig, seed: u64) -> Result<NearestMatch> {
    if refs.is_empty() {
        return Err(Error::InsufficientData {
            what: "labeled reference set",
            needed: 1,
            got: 0,
        });
    }
    let start = cfg.start.draw(seed)?;
    let q = thin(query, cfg.a_star, start, cfg.count)?;
    let scored: Vec<(f64, &str, &str)> = refs
        .par_iter()
        .map(|r| {
            let label = r
                .class_label()
                .ok_or_else(|| Error::MissingLabel(r.id().to_string()))?;
            let x = thin(r, cfg.a_star, start, cfg.count)?;
            if x[0].dim() != q[0].dim() {
                return Err(Error::DimensionMismatch {
                    expected: q[0].dim(),
                    found: x[0].dim(),
                });
            }
            let pooled: Vec<Point> = q.iter().chain(&x).cloned().collect();
            let k = median_heuristic(&pooled)?;
            Ok((mmd_biased(&q, &x, &k)?, r.id(), label))
        })
        .collect::<Result<_>>()?;
    let best = scored
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .expect("nonempty");
    Ok(NearestMatch {
        label: best.2.to_string(),
        nearest_id: best.1.to_string(),
        min_mmd: best.0,
        start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub predicted: String,
    pub truth: Option<String>,
    pub min_mmd: f64,
    pub nearest_id: String,
}

/// Classify each trajectory against all the others. Query `i` draws its
/// start from substream `(seed, QUERY, i)`.
pub fn leave_one_out(trajs: &[Trajectory], cfg: &NearestMmdConfig, seed: u64) -> Result<Vec<Prediction>> {
    if trajs.len() < 2 {
        return Err(Error::InsufficientData {
            what: "leave-one-out",
            needed: 2,
            got: trajs.len(),
        });
    }
    (0..trajs.len())
        .map(|i| {
            let refs: Vec<&Trajectory> = trajs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| t)
                .collect();
            debug_assert!(!refs.iter().any(|r| std::ptr::eq(*r, &trajs[i])));
            let q = &trajs[i];
            let m = nearest_among(q, &refs, cfg, substream_path(seed, &[tag::QUERY, i as u64]))?;
            Ok(Prediction {
                id: q.id().to_string(),
                predicted: m.label,
                truth: q.class_label().map(str::to_string),
                min_mmd: m.min_mmd,
                nearest_id: m.nearest_id,
            })
        })
        .collect()
}

/// Classify queries against a fixed labeled set; query `i` uses substream
/// `(seed, QUERY, i)`.
pub fn classify_queries(
    queries: &[Trajectory],
    labeled: &[Trajectory],
    cfg: &NearestMmdConfig,
    seed: u64,
) -> Result<Vec<Prediction>> {
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let m = nearest_mmd_classify(q, labeled, cfg, substream_path(seed, &[tag::QUERY, i as u64]))?;
            Ok(Prediction {
                id: q.id().to_string(),
                predicted: m.label,
                truth: q.class_label().map(str::to_string),
                min_mmd: m.min_mmd,
                nearest_id: m.nearest_id,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSummary {
    /// Over predictions that carry a true label; `None` if there are none.
    pub accuracy: Option<f64>,
    pub evaluated: usize,
    pub per_class: BTreeMap<String, f64>,
}

pub fn summarize(predictions: &[Prediction]) -> ClassificationSummary {
    let mut per: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for p in predictions {
        if let Some(t) = &p.truth {
            let e = per.entry(t.clone()).or_default();
            e.1 += 1;
            if *t == p.predicted {
                e.0 += 1;
            }
        }
    }
    let (hits, total) = per.values().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    ClassificationSummary {
        accuracy: (total > 0).then(|| hits as f64 / total as f64),
        evaluated: total,
        per_class: per
            .into_iter()
            .map(|(k, (h, n))| (k, h as f64 / n as f64))
            .collect(),
    }
}
