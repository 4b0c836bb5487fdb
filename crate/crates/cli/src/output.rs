use std::fs;
use std::path::{Path, PathBuf};

use dynmmd::MixingProfile;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, body: &str) -> CliResult<()> {
    fs::write(path, body).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report serializes");
    body.push('\n');
    write_text(path, &body)
}

/// Serialize rows with a header taken from the row type.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Write {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?;
    }
    let bytes = w.into_inner().expect("in-memory writer");
    write_text(path, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn profile_csv(p: &MixingProfile) -> String {
    let mut out = String::from("shift,stat_mean,stat_upper95,threshold\n");
    for i in 0..p.shifts.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.shifts[i], p.stat_mean[i], p.stat_upper95[i], p.threshold[i]
        ));
    }
    out
}

/// Name/value summary lines.
pub fn summary_csv(items: &[(&str, String)]) -> String {
    let mut out = String::from("metric,value\n");
    for (k, v) in items {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

pub fn in_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
