//! Trajectory CSV files with an optional JSON sidecar.
//!
//! The CSV has a header `t,x1,...,xd` and one row per state. Floats are
//! written with Rust's shortest round-trip representation. The sidecar
//! `<stem>.json` next to the CSV carries `id`, `dt` and `class_label`; when
//! it is missing the id is the file stem and `dt` is read off the time
//! column.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Point;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub id: String,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_label: Option<String>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for j in 1..=traj.dim() {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for (k, p) in traj.states().iter().enumerate() {
        out.push_str(&(k as f64 * traj.dt()).to_string());
        for v in p.coords() {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

/// Writes the CSV and its sidecar.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    fs::write(path, trajectory_to_csv(traj)).map_err(|e| Error::io(path, e))?;
    let side = Sidecar {
        id: traj.id().to_string(),
        dt: traj.dt(),
        class_label: traj.class_label().map(str::to_string),
    };
    let sp = sidecar_path(path);
    let body = serde_json::to_string_pretty(&side).expect("sidecar serializes") + "\n";
    fs::write(&sp, body).map_err(|e| Error::io(sp, e))
}

fn parse_err(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses CSV text; `file` is only used in error messages.
pub fn trajectory_from_csv(text: &str, file: &Path, sidecar: Option<Sidecar>) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(file, 1, e.to_string()))?
        .clone();
    if header.is_empty() || &header[0] != "t" {
        return Err(parse_err(file, 1, "header must start with column 't'"));
    }
    let d = header.len() - 1;
    if d == 0 {
        return Err(parse_err(file, 1, "no state columns"));
    }
    for (j, name) in header.iter().skip(1).enumerate() {
        if name != format!("x{}", j + 1) {
            return Err(parse_err(file, 1, format!("expected column 'x{}', found '{name}'", j + 1)));
        }
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(file, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != d + 1 {
            return Err(parse_err(file, line, format!("expected {} fields, found {}", d + 1, rec.len())));
        }
        let mut vals = Vec::with_capacity(d + 1);
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(file, line, format!("not a number: '{field}'")))?;
            if !v.is_finite() {
                return Err(parse_err(file, line, format!("non-finite value '{field}'")));
            }
            vals.push(v);
        }
        times.push(vals[0]);
        states.push(Point(vals.split_off(1)));
    }
    if states.is_empty() {
        return Err(parse_err(file, 2, "no data rows"));
    }
    let stem = file
        .file_stem()
        .map_or_else(|| "trajectory".to_string(), |s| s.to_string_lossy().into_owned());
    let (id, dt, label) = match sidecar {
        Some(s) => (s.id, s.dt, s.class_label),
        None => {
            let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
            if !(dt > 0.0) {
                return Err(parse_err(file, 3, "time column must be increasing"));
            }
            (stem, dt, None)
        }
    };
    let mut t = Trajectory::new(id, states, dt)?;
    t.set_class_label(label);
    Ok(t)
}

pub fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    let sp = sidecar_path(path);
    match fs::read_to_string(&sp) {
        Ok(text) => serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| parse_err(&sp, e.line(), e.to_string())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::io(sp, e)),
    }
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let side = read_sidecar(path)?;
    trajectory_from_csv(&text, path, side)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let states = vec![
            Point::new(vec![0.1 + 0.2, -1e-300]).unwrap(),
            Point::new(vec![std::f64::consts::PI, 123456789.123456789]).unwrap(),
        ];
        let t = Trajectory::new("r", states, 0.1).unwrap().with_label("lab");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_trajectory(&p, &t).unwrap();
        assert_eq!(read_trajectory(&p).unwrap(), t);
    }

    #[test]
    fn parse_error_names_line() {
        let text = "t,x1\n0,1.0\n1,abc\n";
        match trajectory_from_csv(text, Path::new("bad.csv"), None) {
            Err(Error::Parse { line, file, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(file, Path::new("bad.csv"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            trajectory_from_csv("t,x1\n0,1\n1\n", Path::new("b.csv"), None),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(trajectory_from_csv("x,y\n0,1\n", Path::new("b.csv"), None).is_err());
    }

    #[test]
    fn dt_from_time_column() {
        let t = trajectory_from_csv("t,x1\n0,1\n0.25,2\n0.5,3\n", Path::new("a/walk.csv"), None).unwrap();
        assert_eq!((t.id(), t.dt(), t.len()), ("walk", 0.25, 3));
    }
}
