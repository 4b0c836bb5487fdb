use std::ops::RangeInclusive;

use clap::Args;
use dynmmd::mixing::{default_shift_grid, mixing_profile_with, MixingOptions, EPSILON_RULE};
use dynmmd::{Calibration, MixingProfile, Trajectory};
use serde::Serialize;

use super::{load_all, setup, RunConfig};
use crate::config::{display_paths, expand_inputs, parse_shifts, CommonArgs, FileConfig};
use crate::error::{CliError, CliResult};
use crate::output::{in_dir, profile_csv, write_json, write_text};

pub const DEFAULT_A_MAX: usize = 100;
pub const DEFAULT_REPEATS: usize = 10;

/// Options shared by `mixing` and the auto mode of `two-sample`.
#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Largest shift of the default grid 1, 2, 5, 10, 20, 50, ...
    #[arg(long = "a-max")]
    pub a_max: Option<usize>,

    /// Explicit shifts: comma-separated `a`, `lo:hi` or `lo:hi:step`
    #[arg(long)]
    pub shifts: Option<String>,

    /// Number of random start indices
    #[arg(long)]
    pub repeats: Option<usize>,

    #[arg(long = "start-min")]
    pub start_min: Option<usize>,

    /// Defaults to the last start that fits every shift
    #[arg(long = "start-max")]
    pub start_max: Option<usize>,

    /// Subtrajectory window length (1 = single states)
    #[arg(long)]
    pub window: Option<usize>,

    /// Stop at the first shift that meets the criterion
    #[arg(long = "stop-early")]
    pub stop_early: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileParams {
    pub shifts: Vec<usize>,
    pub repeats: usize,
    pub start_min: usize,
    pub start_max: usize,
    pub window: usize,
    pub stop_early: bool,
    pub epsilon_rule: &'static str,
}

impl ProfileArgs {
    /// Merge with the file config, filling the start range from the
    /// shortest trajectory.
    pub fn resolve(&self, file: &FileConfig, trajs: &[Trajectory]) -> CliResult<ProfileParams> {
        let shifts = match (&self.shifts, file.shifts()?) {
            (Some(s), _) => parse_shifts(s)?,
            (None, Some(s)) => s,
            (None, None) => {
                let a_max = self.a_max.or(file.a_max).unwrap_or(DEFAULT_A_MAX);
                if a_max == 0 {
                    return Err(CliError::usage("--a-max must be positive"));
                }
                default_shift_grid(a_max)
            }
        };
        let window = self.window.or(file.window).unwrap_or(1);
        let repeats = self.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS);
        if window == 0 || repeats == 0 {
            return Err(CliError::usage("--window and --repeats must be positive"));
        }
        let max_shift = *shifts.last().expect("nonempty");
        let min_len = trajs.iter().map(Trajectory::len).min().unwrap_or(0);
        let need = max_shift + window;
        if min_len < need {
            let short = trajs.iter().min_by_key(|t| t.len()).expect("nonempty");
            return Err(CliError::Core(dynmmd::Error::TrajectoryTooShort {
                id: short.id().to_string(),
                len: short.len(),
                required: need,
            }));
        }
        let start_min = self.start_min.or(file.start_min).unwrap_or(0);
        let start_max = self.start_max.or(file.start_max).unwrap_or(min_len - need);
        if start_min > start_max {
            return Err(CliError::usage(format!("empty start range {start_min}..={start_max}")));
        }
        Ok(ProfileParams {
            shifts,
            repeats,
            start_min,
            start_max,
            window,
            stop_early: self.stop_early,
            epsilon_rule: EPSILON_RULE,
        })
    }
}

impl ProfileParams {
    pub fn range(&self) -> RangeInclusive<usize> {
        self.start_min..=self.start_max
    }

    pub fn profile(&self, trajs: &[Trajectory], calib: &Calibration) -> CliResult<MixingProfile> {
        let opts = MixingOptions {
            window: self.window,
            stop_at_first_crossing: self.stop_early,
        };
        Ok(mixing_profile_with(trajs, self.range(), &self.shifts, self.repeats, calib, &opts)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MixingArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(flatten)]
    pub profile: ProfileArgs,

    /// Trajectory CSV files or glob patterns (one independent run each)
    #[arg(required = true)]
    pub inputs: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Params {
    inputs: Vec<String>,
    #[serde(flatten)]
    profile: ProfileParams,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: RunConfig<'a, Params>,
    a_star: Option<usize>,
    non_mixing: bool,
    trajectories: usize,
    starts: &'a [usize],
}

pub fn run(args: &MixingArgs) -> CliResult<()> {
    let (file, common) = setup(&args.common)?;
    let paths = expand_inputs(&args.inputs)?;
    let trajs = load_all(&paths)?;
    let params = Params {
        inputs: display_paths(&paths),
        profile: args.profile.resolve(&file, &trajs)?,
    };
    let profile = params.profile.profile(&trajs, &common.calibration()?)?;
    write_text(&in_dir(&common.out, "mixing_profile.csv"), &profile_csv(&profile))?;
    let summary = Summary {
        a_star: profile.a_star,
        non_mixing: profile.is_non_mixing(),
        trajectories: trajs.len(),
        starts: &profile.starts,
        config: RunConfig {
            command: "mixing",
            common: &common,
            params: &params,
        },
    };
    write_json(&in_dir(&common.out, "mixing_summary.json"), &summary)
}
