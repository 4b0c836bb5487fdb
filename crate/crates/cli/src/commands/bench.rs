use clap::{Args, ValueEnum};
use dynmmd::bench::{
    run_circle_bench, run_lorenz_bench, run_lti_bench, run_two_regime_bench, CircleBenchConfig, LorenzBenchConfig,
    LtiBenchConfig, TwoRegimeConfig,
};
use serde::Serialize;

use super::{setup, RunConfig};
use crate::config::CommonArgs;
use crate::error::{CliError, CliResult};
use crate::output::{in_dir, summary_csv, write_json, write_rows, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lti,
    Lorenz,
    Circle,
    TwoRegime,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Lti => "lti",
            Suite::Lorenz => "lorenz",
            Suite::Circle => "circle",
            Suite::TwoRegime => "two_regime",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, value_enum)]
    pub suite: Option<Suite>,

    /// Systems (lti), repetitions (lorenz), seeds (circle) or runs (two-regime)
    #[arg(long)]
    pub scale: Option<usize>,

    /// Shift budget (lti, circle, two-regime)
    #[arg(long = "a-max")]
    pub a_max: Option<usize>,

    /// Cross-validation repeats of the feature baselines (two-regime)
    #[arg(long = "cv-repeats")]
    pub cv_repeats: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Params<C: Serialize> {
    suite: Suite,
    suite_config: C,
}

#[derive(Debug, Serialize)]
struct Report<'a, C: Serialize, S: Serialize> {
    config: RunConfig<'a, Params<C>>,
    summary: S,
}

fn f(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let (file, common) = setup(&args.common)?;
    let calib = common.calibration()?;
    let suite = match (args.suite, file.suite.as_deref()) {
        (Some(s), _) => s,
        (None, Some(s)) => Suite::from_str(s, true).map_err(|_| CliError::usage(format!("unknown suite '{s}'")))?,
        (None, None) => return Err(CliError::usage("--suite is required (lti, lorenz, circle, two-regime)")),
    };
    let scale = args.scale.or(file.scale);
    if scale == Some(0) {
        return Err(CliError::usage("--scale must be positive"));
    }
    let a_max = args.a_max.or(file.a_max);
    let stem = format!("bench_{}", suite.name());
    let runs_path = in_dir(&common.out, &format!("{stem}.csv"));
    let summary_path = in_dir(&common.out, &format!("{stem}_summary.csv"));
    let json_path = in_dir(&common.out, &format!("{stem}.json"));

    macro_rules! finish {
        ($cfg:expr, $summary:expr, $lines:expr) => {{
            write_text(&summary_path, &summary_csv(&$lines))?;
            let report = Report {
                config: RunConfig {
                    command: "bench",
                    common: &common,
                    params: &Params {
                        suite,
                        suite_config: $cfg,
                    },
                },
                summary: $summary,
            };
            write_json(&json_path, &report)
        }};
    }

    match suite {
        Suite::Lti => {
            let mut cfg = LtiBenchConfig::default();
            cfg.systems = scale.unwrap_or(cfg.systems);
            cfg.a_max = a_max.unwrap_or(cfg.a_max);
            let r = run_lti_bench(&cfg, &calib)?;
            write_rows(&runs_path, &r.runs)?;
            #[derive(Serialize)]
            struct S {
                systems: usize,
                evaluated: usize,
                excluded: usize,
                false_positives: usize,
                false_positive_rate: f64,
            }
            let s = S {
                systems: r.runs.len(),
                evaluated: r.evaluated,
                excluded: r.excluded,
                false_positives: r.false_positives,
                false_positive_rate: r.false_positive_rate,
            };
            let lines = [
                ("systems", s.systems.to_string()),
                ("evaluated", s.evaluated.to_string()),
                ("excluded", s.excluded.to_string()),
                ("false_positives", s.false_positives.to_string()),
                ("false_positive_rate", f(s.false_positive_rate)),
            ];
            finish!(cfg, s, lines)
        }
        Suite::Lorenz => {
            let mut cfg = LorenzBenchConfig::default();
            cfg.repetitions = scale.unwrap_or(cfg.repetitions);
            let r = run_lorenz_bench(&cfg, &calib)?;
            write_rows(&runs_path, &r.runs)?;
            #[derive(Serialize)]
            struct S {
                repetitions: usize,
                accuracy: f64,
                false_positive_rate: f64,
                dense_false_positive_rate: f64,
            }
            let s = S {
                repetitions: cfg.repetitions,
                accuracy: r.accuracy,
                false_positive_rate: r.false_positive_rate,
                dense_false_positive_rate: r.dense_false_positive_rate,
            };
            let lines = [
                ("repetitions", s.repetitions.to_string()),
                ("accuracy", f(s.accuracy)),
                ("false_positive_rate", f(s.false_positive_rate)),
                ("dense_false_positive_rate", f(s.dense_false_positive_rate)),
            ];
            finish!(cfg, s, lines)
        }
        Suite::Circle => {
            let mut cfg = CircleBenchConfig::default();
            cfg.seeds = scale.unwrap_or(cfg.seeds);
            cfg.a_max = a_max.unwrap_or(cfg.a_max);
            let r = run_circle_bench(&cfg, &calib)?;
            write_rows(&runs_path, &r.runs)?;
            #[derive(Serialize)]
            struct S {
                seeds: usize,
                non_mixing_detected: usize,
                non_mixing_rate: f64,
            }
            let s = S {
                seeds: cfg.seeds,
                non_mixing_detected: r.non_mixing_detected,
                non_mixing_rate: r.non_mixing_detected as f64 / cfg.seeds as f64,
            };
            let lines = [
                ("seeds", s.seeds.to_string()),
                ("non_mixing_detected", s.non_mixing_detected.to_string()),
                ("non_mixing_rate", f(s.non_mixing_rate)),
            ];
            finish!(cfg, s, lines)
        }
        Suite::TwoRegime => {
            let mut cfg = TwoRegimeConfig::default();
            cfg.runs = scale.unwrap_or(cfg.runs);
            cfg.a_max = a_max.unwrap_or(cfg.a_max);
            cfg.cv_repeats = args.cv_repeats.or(file.cv_repeats).unwrap_or(cfg.cv_repeats);
            let r = run_two_regime_bench(&cfg, &calib)?;
            write_rows(&runs_path, &r.runs)?;
            #[derive(Serialize)]
            struct S {
                runs: usize,
                mean_accuracy: f64,
                min_accuracy: f64,
                logistic_mean: Option<f64>,
                logistic_std: Option<f64>,
                svm_mean: Option<f64>,
                svm_std: Option<f64>,
            }
            let s = S {
                runs: cfg.runs,
                mean_accuracy: r.mean_accuracy,
                min_accuracy: r.min_accuracy,
                logistic_mean: r.logistic_mean,
                logistic_std: r.logistic_std,
                svm_mean: r.svm_mean,
                svm_std: r.svm_std,
            };
            let lines = [
                ("runs", s.runs.to_string()),
                ("mean_accuracy", f(s.mean_accuracy)),
                ("min_accuracy", f(s.min_accuracy)),
                ("logistic_mean", opt(s.logistic_mean)),
                ("logistic_std", opt(s.logistic_std)),
                ("svm_mean", opt(s.svm_mean)),
                ("svm_std", opt(s.svm_std)),
            ];
            finish!(cfg, s, lines)
        }
    }
}
