use clap::{Args, ValueEnum};
use dynmmd::bench::circle_ensemble;
use dynmmd::io::write_trajectory;
use dynmmd::rng::{rng_from, substream, substream_path, tag};
use dynmmd::systems::{lorenz_initial_point, simulate_lorenz, simulate_lti_ensemble, LorenzParams};
use dynmmd::{LtiPreset, Point, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use super::{setup, RunConfig};
use crate::config::CommonArgs;
use crate::error::{CliError, CliResult};
use crate::output::{in_dir, write_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Lti,
    Lorenz,
    Circle,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, value_enum)]
    pub system: Option<SystemKind>,

    /// LTI preset: fig1, fig1-half, regime-a, regime-b, white-noise
    #[arg(long)]
    pub preset: Option<String>,

    /// Number of trajectories
    #[arg(long)]
    pub count: Option<usize>,

    /// Steps per trajectory (lti, circle)
    #[arg(long)]
    pub length: Option<usize>,

    /// Time horizon (lorenz)
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,

    /// Output sampling interval (lorenz)
    #[arg(long)]
    pub dt: Option<f64>,

    /// Coefficient of the x equation (lorenz)
    #[arg(long = "sigma-coef")]
    pub sigma_coef: Option<f64>,

    /// File name prefix; files are <prefix>_<index>.csv
    #[arg(long)]
    pub prefix: Option<String>,

    /// Class label stored in each sidecar
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Serialize)]
struct Params {
    system: SystemKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_coef: Option<f64>,
    prefix: String,
    label: Option<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: RunConfig<'a, Params>,
    files: Vec<String>,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let (file, common) = setup(&args.common)?;
    let system = match (args.system, file.system.as_deref()) {
        (Some(s), _) => s,
        (None, Some(s)) => SystemKind::from_str(s, true).map_err(|_| CliError::usage(format!("unknown system '{s}'")))?,
        (None, None) => SystemKind::Lti,
    };
    let count = args.count.or(file.count).unwrap_or(1);
    if count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let label = args.label.clone().or_else(|| file.label.clone());
    let seed = common.seed;

    let (params, trajs): (Params, Vec<Trajectory>) = match system {
        SystemKind::Lti => {
            let preset_name = args.preset.clone().or_else(|| file.preset.clone()).unwrap_or_else(|| "fig1".into());
            let preset = LtiPreset::from_name(&preset_name)?;
            let length = args.length.or(file.length).unwrap_or(1000);
            let prefix = args.prefix.clone().or_else(|| file.prefix.clone()).unwrap_or_else(|| preset_name.clone());
            let sys = preset.system();
            let x0 = Point::new(vec![0.0; sys.dim()])?;
            let trajs = simulate_lti_ensemble(&sys, &x0, count, length, &prefix, seed)?;
            let p = Params {
                system,
                preset: Some(preset_name),
                count,
                length: Some(length),
                t_max: None,
                dt: None,
                sigma_coef: None,
                prefix,
                label: label.clone(),
            };
            (p, trajs)
        }
        SystemKind::Lorenz => {
            let t_max = args.t_max.or(file.t_max).unwrap_or(200.0);
            let dt = args.dt.or(file.dt).unwrap_or(0.1);
            let coef = args.sigma_coef.or(file.sigma_coef).unwrap_or(10.0);
            let prefix = args.prefix.clone().or_else(|| file.prefix.clone()).unwrap_or_else(|| "lorenz".into());
            let params = LorenzParams::with_sigma_coef(coef);
            let trajs = (0..count)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng_from(substream_path(seed, &[tag::TRAJECTORY, i as u64]));
                    let x0 = lorenz_initial_point(&mut rng);
                    Ok(simulate_lorenz(&params, &x0, t_max, dt)?.with_id(format!("{prefix}_{i}")))
                })
                .collect::<dynmmd::Result<Vec<_>>>()?;
            let p = Params {
                system,
                preset: None,
                count,
                length: None,
                t_max: Some(t_max),
                dt: Some(dt),
                sigma_coef: Some(coef),
                prefix,
                label: label.clone(),
            };
            (p, trajs)
        }
        SystemKind::Circle => {
            let length = args.length.or(file.length).unwrap_or(201);
            let prefix = args.prefix.clone().or_else(|| file.prefix.clone()).unwrap_or_else(|| "circle".into());
            let trajs = circle_ensemble(count, length, substream(seed, tag::SYSTEM))?
                .into_iter()
                .enumerate()
                .map(|(i, t)| t.with_id(format!("{prefix}_{i}")))
                .collect();
            let p = Params {
                system,
                preset: None,
                count,
                length: Some(length),
                t_max: None,
                dt: None,
                sigma_coef: None,
                prefix,
                label: label.clone(),
            };
            (p, trajs)
        }
    };

    let mut files = Vec::with_capacity(trajs.len());
    for (i, mut t) in trajs.into_iter().enumerate() {
        t.set_class_label(label.clone());
        let path = in_dir(&common.out, &format!("{}_{i}.csv", params.prefix));
        write_trajectory(&path, &t)?;
        files.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    let manifest = Manifest {
        config: RunConfig {
            command: "simulate",
            common: &common,
            params: &params,
        },
        files,
    };
    write_json(&in_dir(&common.out, "simulate.json"), &manifest)
}
