pub mod bench;
pub mod classify;
pub mod mixing;
pub mod simulate;
pub mod two_sample;

use std::path::Path;

use dynmmd::io::read_trajectory;
use dynmmd::Trajectory;
use serde::Serialize;

use crate::config::{resolve_common, Common, CommonArgs, FileConfig};
use crate::error::CliResult;
use crate::output::ensure_dir;

/// Effective configuration embedded in every JSON output.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a, P: Serialize> {
    pub command: &'static str,
    #[serde(flatten)]
    pub common: &'a Common,
    #[serde(flatten)]
    pub params: &'a P,
}

/// Load the config file, merge the shared options, size the thread pool
/// and create the output directory.
pub fn setup(args: &CommonArgs) -> CliResult<(FileConfig, Common)> {
    let file = FileConfig::load(args.config.as_deref())?;
    let (common, threads) = resolve_common(args, &file)?;
    if let Some(n) = threads {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    ensure_dir(&common.out)?;
    Ok((file, common))
}

pub fn load_all(paths: &[impl AsRef<Path>]) -> CliResult<Vec<Trajectory>> {
    Ok(paths
        .iter()
        .map(|p| read_trajectory(p.as_ref()))
        .collect::<dynmmd::Result<_>>()?)
}
