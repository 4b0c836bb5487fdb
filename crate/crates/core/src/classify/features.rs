use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub const MIN_FEATURE_LENGTH: usize = 8;
const FREQUENCIES_PER_DIM: usize = 4;

/// Per-dimension max and min, the four dominant frequencies (Hz) per
/// dimension and the overall 2-norm: `6d + 1` values laid out as
/// `[max_1..max_d, min_1..min_d, freq_1[0..4], ..., freq_d[0..4], norm]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn min(&self) -> &[f64] {
        &self.values[self.dim..2 * self.dim]
    }

    pub fn frequencies(&self, dim: usize) -> &[f64] {
        let base = 2 * self.dim + FREQUENCIES_PER_DIM * dim;
        &self.values[base..base + FREQUENCIES_PER_DIM]
    }

    pub fn norm(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Locations of the four largest DFT magnitudes among the positive
/// frequencies, DC excluded, descending magnitude with ties going to the
/// lower frequency. Magnitudes at round-off level count as zero.
fn dominant_frequencies(signal: &[f64], dt: f64, planner: &mut FftPlanner<f64>) -> [f64; FREQUENCIES_PER_DIM] {
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let floor = 1e-10 * signal.iter().map(|x| x.abs()).sum::<f64>();
    let mut bins: Vec<(usize, f64)> = (1..=n / 2)
        .map(|k| {
            let m = buf[k].norm();
            (k, if m <= floor { 0.0 } else { m })
        })
        .collect();
    bins.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = [0.0; FREQUENCIES_PER_DIM];
    for (slot, (k, _)) in out.iter_mut().zip(&bins) {
        *slot = *k as f64 / (n as f64 * dt);
    }
    out
}

pub fn extract_features(traj: &Trajectory) -> Result<FeatureVector> {
    let n = traj.len();
    if n < MIN_FEATURE_LENGTH {
        return Err(Error::InsufficientData {
            what: "feature extraction",
            needed: MIN_FEATURE_LENGTH,
            got: n,
        });
    }
    let d = traj.dim();
    let mut maxs = vec![f64::NEG_INFINITY; d];
    let mut mins = vec![f64::INFINITY; d];
    let mut sum_sq = 0.0;
    let mut columns = vec![Vec::with_capacity(n); d];
    for p in traj.states() {
        for (j, &v) in p.coords().iter().enumerate() {
            maxs[j] = maxs[j].max(v);
            mins[j] = mins[j].min(v);
            sum_sq += v * v;
            columns[j].push(v);
        }
    }
    let mut planner = FftPlanner::new();
    let mut values = Vec::with_capacity(6 * d + 1);
    values.extend_from_slice(&maxs);
    values.extend_from_slice(&mins);
    for col in &columns {
        values.extend_from_slice(&dominant_frequencies(col, traj.dt(), &mut planner));
    }
    values.push(sum_sq.sqrt());
    Ok(FeatureVector { dim: d, values })
}
