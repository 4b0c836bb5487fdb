use std::path::PathBuf;

use clap::Args;
use dynmmd::io::read_trajectory;
use dynmmd::mmd::two_sample_test;
use dynmmd::trajectory::thin;
use dynmmd::{Error, TestResult, Trajectory};
use serde::Serialize;

use super::mixing::{ProfileArgs, ProfileParams};
use super::{load_all, setup, RunConfig};
use crate::config::{display_paths, expand_inputs, CommonArgs};
use crate::error::{CliError, CliResult};
use crate::output::{in_dir, write_json};

#[derive(Debug, Clone, Args)]
pub struct TwoSampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Thinning stride, or `auto` to estimate it from the ensembles
    #[arg(long = "a-star")]
    pub a_star: Option<String>,

    /// First thinned index
    #[arg(long)]
    pub start: Option<usize>,

    /// Points per side; defaults to the most that fit in both trajectories
    #[arg(long)]
    pub count: Option<usize>,

    /// Independent trajectories of the first system (auto mode)
    #[arg(long = "ensemble-x")]
    pub ensemble_x: Vec<String>,

    /// Independent trajectories of the second system (auto mode)
    #[arg(long = "ensemble-y")]
    pub ensemble_y: Vec<String>,

    #[command(flatten)]
    pub profile: ProfileArgs,

    /// First trajectory CSV
    pub x: PathBuf,

    /// Second trajectory CSV
    pub y: PathBuf,
}

#[derive(Debug, Serialize)]
struct AutoInfo {
    ensemble_x: Vec<String>,
    ensemble_y: Vec<String>,
    a_star_x: usize,
    a_star_y: usize,
    profile: ProfileParams,
}

#[derive(Debug, Serialize)]
struct Params {
    x: String,
    y: String,
    a_star_mode: String,
    a_star: usize,
    start: usize,
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    auto: Option<AutoInfo>,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    config: RunConfig<'a, Params>,
    result: TestResult,
}

fn max_count(t: &Trajectory, stride: usize, start: usize) -> usize {
    if start < t.len() {
        (t.len() - 1 - start) / stride + 1
    } else {
        0
    }
}

pub fn run(args: &TwoSampleArgs) -> CliResult<()> {
    let (file, common) = setup(&args.common)?;
    let calib = common.calibration()?;
    let x = read_trajectory(&args.x)?;
    let y = read_trajectory(&args.y)?;
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        }
        .into());
    }

    let mode = args
        .a_star
        .clone()
        .or_else(|| file.a_star.clone())
        .ok_or_else(|| CliError::usage("--a-star is required (a positive integer or 'auto')"))?;
    let (a_star, auto) = if mode == "auto" {
        if args.ensemble_x.is_empty() || args.ensemble_y.is_empty() {
            return Err(CliError::usage(
                "--a-star auto needs --ensemble-x and --ensemble-y: a* cannot be estimated from a single pair",
            ));
        }
        let px = expand_inputs(&args.ensemble_x)?;
        let py = expand_inputs(&args.ensemble_y)?;
        let ex = load_all(&px)?;
        let ey = load_all(&py)?;
        // one grid for both ensembles so the two a* values are comparable
        let mut both = ex.clone();
        both.extend(ey.iter().cloned());
        let profile = args.profile.resolve(&file, &both)?;
        let mut stars = Vec::new();
        for (name, ens) in [("x", &ex), ("y", &ey)] {
            let p = profile.profile(ens, &calib)?;
            match p.a_star {
                Some(a) => stars.push(a),
                None => {
                    return Err(CliError::Infeasible(format!(
                        "ensemble {name} shows no decorrelation within shift {}: the system does not mix detectably",
                        profile.shifts.last().unwrap()
                    )))
                }
            }
        }
        let info = AutoInfo {
            ensemble_x: display_paths(&px),
            ensemble_y: display_paths(&py),
            a_star_x: stars[0],
            a_star_y: stars[1],
            profile,
        };
        (stars[0].max(stars[1]), Some(info))
    } else {
        let a: usize = mode
            .parse()
            .map_err(|_| CliError::usage(format!("--a-star must be a positive integer or 'auto', got '{mode}'")))?;
        if a == 0 {
            return Err(CliError::usage("--a-star must be positive"));
        }
        (a, None)
    };

    let start = args.start.or(file.start).unwrap_or(0);
    let count = match args.count.or(file.count) {
        Some(c) => c,
        None => max_count(&x, a_star, start).min(max_count(&y, a_star, start)),
    };
    if count < 2 {
        return Err(CliError::Infeasible(format!(
            "thinning at stride {a_star} from index {start} leaves {count} point(s); at least 2 per side are needed"
        )));
    }
    let xs = thin(&x, a_star, start, count)?;
    let ys = thin(&y, a_star, start, count)?;
    let result = two_sample_test(&xs, &ys, &calib)?;
    let params = Params {
        x: args.x.display().to_string(),
        y: args.y.display().to_string(),
        a_star_mode: if auto.is_some() { "auto".into() } else { "fixed".into() },
        a_star,
        start,
        count,
        auto,
    };
    let report = Report {
        config: RunConfig {
            command: "two-sample",
            common: &common,
            params: &params,
        },
        result,
    };
    write_json(&in_dir(&common.out, "test_result.json"), &report)
}
