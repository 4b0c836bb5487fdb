use std::collections::BTreeMap;

use clap::Args;
use dynmmd::bench::{ensemble_a_star, feature_dataset};
use dynmmd::classify::{
    classify_queries, cross_validate, leave_one_out, summarize, CvReport, LinearSvm, LogisticRegression,
    NearestMmdConfig, StartRule,
};
use dynmmd::rng::{substream, tag};
use dynmmd::Trajectory;
use serde::Serialize;

use super::{load_all, setup, RunConfig};
use crate::config::{display_paths, expand_inputs, CommonArgs};
use crate::error::{CliError, CliResult};
use crate::output::{in_dir, write_json, write_rows};

pub const DEFAULT_A_MAX: usize = 50;
pub const DEFAULT_CV_REPEATS: usize = 5;
const CV_FOLDS: usize = 3;

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Labelled reference trajectories (files or glob patterns)
    #[arg(long, required = true, num_args = 1..)]
    pub labeled: Vec<String>,

    /// Trajectories to classify against the labelled set
    #[arg(long, num_args = 1..)]
    pub query: Vec<String>,

    /// Classify each labelled trajectory against all the others
    #[arg(long = "leave-one-out")]
    pub leave_one_out: bool,

    /// Thinning stride, or `auto` (default) to estimate it per class
    #[arg(long = "a-star")]
    pub a_star: Option<String>,

    /// Shift budget of the auto estimate
    #[arg(long = "a-max")]
    pub a_max: Option<usize>,

    /// First thinned index, or the lower end of the random range with --start-max
    #[arg(long)]
    pub start: Option<usize>,

    /// Draw each query's start uniformly from start..=start-max
    #[arg(long = "start-max")]
    pub start_max: Option<usize>,

    /// Thinned points per trajectory; defaults to the most that always fit
    #[arg(long)]
    pub count: Option<usize>,

    /// Also cross-validate logistic regression and a linear SVM on spectral features
    #[arg(long)]
    pub baselines: bool,

    #[arg(long = "cv-repeats")]
    pub cv_repeats: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Params {
    mode: &'static str,
    labeled: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    query: Vec<String>,
    a_star_mode: &'static str,
    a_star: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_max: Option<usize>,
    start: StartRule,
    count: usize,
    baselines: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv_repeats: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Row<'a> {
    id: &'a str,
    predicted: &'a str,
    true_label: Option<&'a str>,
    min_mmd: f64,
    nearest_id: &'a str,
}

#[derive(Debug, Serialize)]
struct Baseline {
    mean_accuracy: f64,
    std_accuracy: f64,
    k_folds: usize,
    repeats: usize,
}

impl From<CvReport> for Baseline {
    fn from(r: CvReport) -> Self {
        Baseline {
            mean_accuracy: r.mean_accuracy,
            std_accuracy: r.std_accuracy,
            k_folds: r.k_folds,
            repeats: r.repeats,
        }
    }
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    config: RunConfig<'a, Params>,
    accuracy: Option<f64>,
    evaluated: usize,
    predictions: usize,
    per_class: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    baselines: BTreeMap<&'static str, Baseline>,
}

fn fit_count(trajs: &[Trajectory], stride: usize, last_start: usize) -> usize {
    trajs
        .iter()
        .map(|t| {
            if last_start < t.len() {
                (t.len() - 1 - last_start) / stride + 1
            } else {
                0
            }
        })
        .min()
        .unwrap_or(0)
}

pub fn run(args: &ClassifyArgs) -> CliResult<()> {
    let (file, common) = setup(&args.common)?;
    let calib = common.calibration()?;
    let mode = match (args.leave_one_out, args.query.is_empty()) {
        (true, true) => "leave_one_out",
        (false, false) => "query",
        (true, false) => return Err(CliError::usage("--leave-one-out and --query are mutually exclusive")),
        (false, true) => return Err(CliError::usage("give --query files or --leave-one-out")),
    };
    let labeled_paths = expand_inputs(&args.labeled)?;
    let labeled = load_all(&labeled_paths)?;
    let (query_paths, queries) = if mode == "query" {
        let p = expand_inputs(&args.query)?;
        let q = load_all(&p)?;
        (p, q)
    } else {
        (Vec::new(), Vec::new())
    };
    if let Some(t) = labeled.iter().find(|t| t.class_label().is_none()) {
        return Err(dynmmd::Error::MissingLabel(t.id().to_string()).into());
    }

    let a_mode = args.a_star.clone().or_else(|| file.a_star.clone()).unwrap_or_else(|| "auto".into());
    let (a_star, a_max, a_star_mode) = if a_mode == "auto" {
        let a_max = args.a_max.or(file.a_max).unwrap_or(DEFAULT_A_MAX);
        if a_max == 0 {
            return Err(CliError::usage("--a-max must be positive"));
        }
        let a = match ensemble_a_star(&labeled, a_max, &calib.with_seed(substream(calib.seed, tag::SHIFT))) {
            Ok(a) => a,
            Err(dynmmd::Error::NonMixing) => {
                return Err(CliError::Infeasible(format!(
                    "a labelled class shows no decorrelation within shift {a_max}: a* is undefined"
                )))
            }
            Err(e) => return Err(e.into()),
        };
        (a, Some(a_max), "auto")
    } else {
        let a: usize = a_mode
            .parse()
            .map_err(|_| CliError::usage(format!("--a-star must be a positive integer or 'auto', got '{a_mode}'")))?;
        if a == 0 {
            return Err(CliError::usage("--a-star must be positive"));
        }
        (a, None, "fixed")
    };

    let lo = args.start.or(file.start).unwrap_or(0);
    let start = match args.start_max.or(file.start_max) {
        Some(hi) if hi < lo => return Err(CliError::usage(format!("empty start range {lo}..={hi}"))),
        Some(hi) => StartRule::Uniform { lo, hi },
        None => StartRule::Fixed(lo),
    };
    let last_start = match start {
        StartRule::Fixed(s) => s,
        StartRule::Uniform { hi, .. } => hi,
    };
    let count = match args.count.or(file.count) {
        Some(c) => c,
        None => fit_count(labeled.iter().chain(&queries).cloned().collect::<Vec<_>>().as_slice(), a_star, last_start),
    };
    if count < 2 {
        return Err(CliError::Infeasible(format!(
            "thinning at stride {a_star} from index {last_start} leaves {count} point(s); at least 2 are needed"
        )));
    }
    let cfg = NearestMmdConfig { a_star, start, count };
    let query_seed = substream(calib.seed, tag::QUERY);
    let predictions = if mode == "leave_one_out" {
        leave_one_out(&labeled, &cfg, query_seed)?
    } else {
        classify_queries(&queries, &labeled, &cfg, query_seed)?
    };
    let summary = summarize(&predictions);

    let mut baselines = BTreeMap::new();
    let cv_repeats = args.baselines.then(|| args.cv_repeats.or(file.cv_repeats).unwrap_or(DEFAULT_CV_REPEATS));
    if let Some(repeats) = cv_repeats {
        if repeats == 0 {
            return Err(CliError::usage("--cv-repeats must be positive"));
        }
        let data = feature_dataset(&labeled)?;
        let fold_seed = substream(calib.seed, tag::FOLD);
        let lr = cross_validate(&data, CV_FOLDS, &LogisticRegression::default(), repeats, fold_seed)?;
        let svm = cross_validate(&data, CV_FOLDS, &LinearSvm::default(), repeats, fold_seed)?;
        baselines.insert("logistic_regression", lr.into());
        baselines.insert("linear_svm", svm.into());
    }

    let rows: Vec<Row> = predictions
        .iter()
        .map(|p| Row {
            id: &p.id,
            predicted: &p.predicted,
            true_label: p.truth.as_deref(),
            min_mmd: p.min_mmd,
            nearest_id: &p.nearest_id,
        })
        .collect();
    write_rows(&in_dir(&common.out, "classification.csv"), &rows)?;
    let params = Params {
        mode,
        labeled: display_paths(&labeled_paths),
        query: display_paths(&query_paths),
        a_star_mode,
        a_star,
        a_max,
        start,
        count,
        baselines: args.baselines,
        cv_repeats,
    };
    let report = Report {
        config: RunConfig {
            command: "classify",
            common: &common,
            params: &params,
        },
        accuracy: summary.accuracy,
        evaluated: summary.evaluated,
        predictions: predictions.len(),
        per_class: summary.per_class,
        baselines,
    };
    write_json(&in_dir(&common.out, "classification.json"), &report)
}
