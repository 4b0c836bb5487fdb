//! Run configuration: flags, an optional TOML file, and defaults, in that
//! order of precedence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use dynmmd::permutation::{DEFAULT_ALPHA, DEFAULT_PERMUTATIONS};
use dynmmd::Calibration;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file with default values for any of the options
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Significance level
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Number of permutations for every threshold
    #[arg(long = "n-perm", value_name = "N")]
    pub n_perm: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory, created if missing
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads (results do not depend on it)
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Either `[1, 2, 5]` or `"1,2,5"` / `"5:200:5"` in the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ShiftsValue {
    List(Vec<usize>),
    Text(String),
}

/// Keys accepted in the config file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub n_perm: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub a_max: Option<usize>,
    pub shifts: Option<ShiftsValue>,
    pub repeats: Option<usize>,
    pub start_min: Option<usize>,
    pub start_max: Option<usize>,
    pub window: Option<usize>,
    pub a_star: Option<String>,
    pub start: Option<usize>,
    pub count: Option<usize>,
    pub system: Option<String>,
    pub preset: Option<String>,
    pub length: Option<usize>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub sigma_coef: Option<f64>,
    pub prefix: Option<String>,
    pub label: Option<String>,
    pub suite: Option<String>,
    pub scale: Option<usize>,
    pub cv_repeats: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    pub fn shifts(&self) -> CliResult<Option<Vec<usize>>> {
        match &self.shifts {
            None => Ok(None),
            Some(ShiftsValue::List(v)) => Ok(Some(v.clone())),
            Some(ShiftsValue::Text(s)) => parse_shifts(s).map(Some),
        }
    }
}

/// Settings shared by every command, after merging.
#[derive(Debug, Clone, Serialize)]
pub struct Common {
    pub alpha: f64,
    pub n_perm: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Common {
    pub fn calibration(&self) -> CliResult<Calibration> {
        Ok(Calibration::new(self.alpha, self.n_perm, self.seed)?)
    }
}

pub const DEFAULT_OUT: &str = "dynmmd-out";

pub fn resolve_common(args: &CommonArgs, file: &FileConfig) -> CliResult<(Common, Option<usize>)> {
    let seed = match args.seed.or(file.seed) {
        Some(s) => s,
        None => {
            log::warn!("no seed given; using seed 0");
            0
        }
    };
    let common = Common {
        alpha: args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
        n_perm: args.n_perm.or(file.n_perm).unwrap_or(DEFAULT_PERMUTATIONS),
        seed,
        out: args
            .out
            .clone()
            .or_else(|| file.out.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    common.calibration()?;
    let threads = args.threads.or(file.threads);
    if threads == Some(0) {
        return Err(CliError::usage("--threads must be positive"));
    }
    Ok((common, threads))
}

/// Comma-separated items, each `a`, `lo:hi` or `lo:hi:step`.
pub fn parse_shifts(text: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::usage(format!("invalid shift list '{text}'"));
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<usize> = item
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?;
        match parts[..] {
            [a] => out.push(a),
            [lo, hi] => out.extend(lo..=hi),
            [lo, hi, step] if step > 0 => out.extend((lo..=hi).step_by(step)),
            _ => return Err(bad()),
        }
    }
    if out.is_empty() || out[0] == 0 || out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::usage(format!(
            "shifts must be positive and strictly increasing: '{text}'"
        )));
    }
    Ok(out)
}

/// Expand glob patterns into a sorted, de-duplicated file list.
pub fn expand_inputs(patterns: &[String]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for pat in patterns {
        let matches = glob::glob(pat).map_err(|e| CliError::usage(format!("bad pattern '{pat}': {e}")))?;
        let mut found = false;
        for m in matches {
            let p = m.map_err(|e| CliError::Core(dynmmd::Error::Io {
                path: e.path().to_path_buf(),
                source: std::io::Error::new(e.error().kind(), e.error().to_string()),
            }))?;
            if p.extension().is_some_and(|e| e == "csv") {
                files.push(p);
                found = true;
            }
        }
        if !found {
            return Err(CliError::Core(dynmmd::Error::Io {
                path: PathBuf::from(pat),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no trajectory CSV matches"),
            }));
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

pub fn display_paths(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_syntax() {
        assert_eq!(parse_shifts("1,2,5").unwrap(), vec![1, 2, 5]);
        assert_eq!(parse_shifts("1:4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_shifts("1, 5:20:5").unwrap(), vec![1, 5, 10, 15, 20]);
        assert!(parse_shifts("0,1").is_err());
        assert!(parse_shifts("3,2").is_err());
        assert!(parse_shifts("a").is_err());
        assert!(parse_shifts("1:5:0").is_err());
    }

    #[test]
    fn file_values_and_unknown_keys() {
        let f: FileConfig = toml::from_str("alpha = 0.1\nshifts = [1, 3]\n").unwrap();
        assert_eq!(f.alpha, Some(0.1));
        assert_eq!(f.shifts().unwrap(), Some(vec![1, 3]));
        let f: FileConfig = toml::from_str("shifts = \"1:3\"").unwrap();
        assert_eq!(f.shifts().unwrap(), Some(vec![1, 2, 3]));
        assert!(toml::from_str::<FileConfig>("alpah = 0.1").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("alpha = 0.1\nseed = 4\nn_perm = 200").unwrap();
        let args = CommonArgs {
            config: None,
            alpha: Some(0.01),
            n_perm: None,
            seed: None,
            out: None,
            threads: None,
        };
        let (c, _) = resolve_common(&args, &file).unwrap();
        assert_eq!((c.alpha, c.n_perm, c.seed), (0.01, 200, 4));
    }
}
