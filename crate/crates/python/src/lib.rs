//! Python bindings: trajectories, kernel statistics, tests, mixing
//! estimation, simulators and nearest-MMD classification.

use std::path::PathBuf;

use dynmmd::classify::{extract_features, nearest_mmd_classify, NearestMmdConfig, StartRule};
use dynmmd::hsic::{hsic_statistic as core_hsic, independence_test as core_independence};
use dynmmd::io::{read_trajectory, write_trajectory};
use dynmmd::kernel::{gaussian_kernel as core_kernel, median_heuristic as core_median};
use dynmmd::mixing::{estimate_weak_mixing, mixing_profile as core_profile};
use dynmmd::mmd::{mmd_biased as core_mmd, two_sample_test as core_two_sample};
use dynmmd::rng::{rng_from, substream_path, tag};
use dynmmd::systems::{
    lorenz_initial_point, simulate_circle as core_circle, simulate_lorenz as core_lorenz, simulate_lti as core_lti,
    stationary_covariance as core_lyap,
};
use dynmmd::trajectory::thin;
use dynmmd::{Calibration, GaussianKernel, LorenzParams, LtiPreset, LtiSystem, PairedSample, Point};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn err(e: dynmmd::Error) -> PyErr {
    match e {
        dynmmd::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_points(rows: Vec<Vec<f64>>) -> PyResult<Vec<Point>> {
    rows.into_iter().map(|r| Point::new(r).map_err(err)).collect()
}

fn rows(points: &[Point]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.coords().to_vec()).collect()
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let r: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    dynmmd::systems::matrix_from_rows(&r).map_err(err)
}

fn kernel_for(x: &[Point], y: &[Point], bandwidth: Option<f64>) -> PyResult<GaussianKernel> {
    match bandwidth {
        Some(b) => GaussianKernel::new(b).map_err(err),
        None => {
            let pooled: Vec<Point> = x.iter().chain(y).cloned().collect();
            core_median(&pooled).map_err(err)
        }
    }
}

fn calibration(alpha: f64, n_perm: usize, seed: u64) -> PyResult<Calibration> {
    Calibration::new(alpha, n_perm, seed).map_err(err)
}

#[pyclass(name = "Trajectory", module = "pydynmmd", frozen)]
pub struct PyTrajectory {
    inner: dynmmd::Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[new]
    #[pyo3(signature = (states, dt = 1.0, id = "trajectory".to_string(), label = None))]
    fn new(states: Vec<Vec<f64>>, dt: f64, id: String, label: Option<String>) -> PyResult<Self> {
        let mut t = dynmmd::Trajectory::new(id, to_points(states)?, dt).map_err(err)?;
        t.set_class_label(label);
        Ok(PyTrajectory { inner: t })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyTrajectory {
            inner: read_trajectory(&path).map_err(err)?,
        })
    }

    /// Write the CSV and its sidecar JSON.
    fn write(&self, path: PathBuf) -> PyResult<()> {
        write_trajectory(&path, &self.inner).map_err(err)
    }

    #[getter]
    fn id(&self) -> &str {
        self.inner.id()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn label(&self) -> Option<&str> {
        self.inner.class_label()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn states(&self) -> Vec<Vec<f64>> {
        rows(self.inner.states())
    }

    fn thin(&self, stride: usize, start: usize, count: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&thin(&self.inner, stride, start, count).map_err(err)?))
    }

    fn with_label(&self, label: String) -> Self {
        PyTrajectory {
            inner: self.inner.clone().with_label(label),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(id={:?}, len={}, dim={}, dt={})",
            self.inner.id(),
            self.inner.len(),
            self.inner.dim(),
            self.inner.dt()
        )
    }
}

#[pyclass(name = "TestResult", module = "pydynmmd", frozen, get_all)]
pub struct PyTestResult {
    statistic: f64,
    threshold: f64,
    alpha: f64,
    reject: bool,
    n_permutations: usize,
    seed: u64,
}

impl From<dynmmd::TestResult> for PyTestResult {
    fn from(r: dynmmd::TestResult) -> Self {
        PyTestResult {
            statistic: r.statistic,
            threshold: r.threshold,
            alpha: r.alpha,
            reject: r.reject,
            n_permutations: r.n_permutations,
            seed: r.seed,
        }
    }
}

#[pymethods]
impl PyTestResult {
    fn __repr__(&self) -> String {
        format!(
            "TestResult(statistic={}, threshold={}, alpha={}, reject={})",
            self.statistic, self.threshold, self.alpha, self.reject
        )
    }
}

#[pyclass(name = "MixingProfile", module = "pydynmmd", frozen)]
pub struct PyMixingProfile {
    inner: dynmmd::MixingProfile,
}

#[pymethods]
impl PyMixingProfile {
    #[getter]
    fn shifts(&self) -> Vec<usize> {
        self.inner.shifts.clone()
    }

    #[getter]
    fn stat_mean(&self) -> Vec<f64> {
        self.inner.stat_mean.clone()
    }

    #[getter]
    fn stat_upper95(&self) -> Vec<f64> {
        self.inner.stat_upper95.clone()
    }

    #[getter]
    fn threshold(&self) -> Vec<f64> {
        self.inner.threshold.clone()
    }

    #[getter]
    fn a_star(&self) -> Option<usize> {
        self.inner.a_star
    }

    #[getter]
    fn non_mixing(&self) -> bool {
        self.inner.is_non_mixing()
    }

    #[getter]
    fn starts(&self) -> Vec<usize> {
        self.inner.starts.clone()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("profile serializes")
    }

    fn __repr__(&self) -> String {
        format!("MixingProfile(a_star={:?}, shifts={})", self.inner.a_star, self.inner.shifts.len())
    }
}

fn unwrap_trajs(trajs: &[PyRef<'_, PyTrajectory>]) -> Vec<dynmmd::Trajectory> {
    trajs.iter().map(|t| t.inner.clone()).collect()
}

#[pyfunction]
fn gaussian_kernel(x: Vec<f64>, y: Vec<f64>, bandwidth: f64) -> PyResult<f64> {
    let k = GaussianKernel::new(bandwidth).map_err(err)?;
    core_kernel(&Point::new(x).map_err(err)?, &Point::new(y).map_err(err)?, &k).map_err(err)
}

/// Median pairwise distance, with the degenerate-case fallbacks.
#[pyfunction]
fn median_heuristic(points: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(core_median(&to_points(points)?).map_err(err)?.bandwidth())
}

/// Biased squared MMD; the bandwidth defaults to the median heuristic on the pooled sample.
#[pyfunction]
#[pyo3(signature = (x, y, bandwidth = None))]
fn mmd_biased(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, bandwidth: Option<f64>) -> PyResult<f64> {
    let (x, y) = (to_points(x)?, to_points(y)?);
    let k = kernel_for(&x, &y, bandwidth)?;
    core_mmd(&x, &y, &k).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, y, alpha = 0.05, n_perm = 500, seed = 0))]
fn two_sample_test(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, alpha: f64, n_perm: usize, seed: u64) -> PyResult<PyTestResult> {
    let calib = calibration(alpha, n_perm, seed)?;
    Ok(core_two_sample(&to_points(x)?, &to_points(y)?, &calib).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (left, right, bandwidth_left = None, bandwidth_right = None))]
fn hsic_statistic(
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    bandwidth_left: Option<f64>,
    bandwidth_right: Option<f64>,
) -> PyResult<f64> {
    let s = PairedSample::new(to_points(left)?, to_points(right)?).map_err(err)?;
    let kl = kernel_for(s.left(), &[], bandwidth_left)?;
    let kr = kernel_for(s.right(), &[], bandwidth_right)?;
    core_hsic(&s, &kl, &kr).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (left, right, alpha = 0.05, n_perm = 500, seed = 0))]
fn independence_test(
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> PyResult<PyTestResult> {
    let s = PairedSample::new(to_points(left)?, to_points(right)?).map_err(err)?;
    Ok(core_independence(&s, &calibration(alpha, n_perm, seed)?)
        .map_err(err)?
        .into())
}

/// Single HSIC sweep at start index `start`; returns `(a_star, statistics, thresholds)`.
#[pyfunction]
#[pyo3(signature = (trajectories, start, shifts, alpha = 0.05, n_perm = 500, seed = 0))]
fn estimate_mixing(
    trajectories: Vec<PyRef<'_, PyTrajectory>>,
    start: usize,
    shifts: Vec<usize>,
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> PyResult<(Option<usize>, Vec<f64>, Vec<f64>)> {
    let e = estimate_weak_mixing(&unwrap_trajs(&trajectories), start, &shifts, &calibration(alpha, n_perm, seed)?)
        .map_err(err)?;
    Ok((e.a_star, e.statistics, e.thresholds))
}

#[pyfunction]
#[pyo3(signature = (trajectories, start_min, start_max, shifts, n_repeats = 10, alpha = 0.05, n_perm = 500, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn mixing_profile(
    trajectories: Vec<PyRef<'_, PyTrajectory>>,
    start_min: usize,
    start_max: usize,
    shifts: Vec<usize>,
    n_repeats: usize,
    alpha: f64,
    n_perm: usize,
    seed: u64,
) -> PyResult<PyMixingProfile> {
    let calib = calibration(alpha, n_perm, seed)?;
    let p = core_profile(&unwrap_trajs(&trajectories), start_min..=start_max, &shifts, n_repeats, &calib)
        .map_err(err)?;
    Ok(PyMixingProfile { inner: p })
}

/// Trajectory of a named LTI preset started at the origin.
#[pyfunction]
#[pyo3(signature = (preset, length, seed = 0))]
fn simulate_lti(preset: &str, length: usize, seed: u64) -> PyResult<PyTrajectory> {
    let sys = LtiPreset::from_name(preset).map_err(err)?.system();
    let x0 = Point::new(vec![0.0; sys.dim()]).map_err(err)?;
    Ok(PyTrajectory {
        inner: core_lti(&sys, &x0, length, seed).map_err(err)?.with_id(format!("{preset}_{seed}")),
    })
}

#[pyfunction]
#[pyo3(signature = (sigma_coef = 10.0, t_max = 200.0, dt = 0.1, seed = 0))]
fn simulate_lorenz(sigma_coef: f64, t_max: f64, dt: f64, seed: u64) -> PyResult<PyTrajectory> {
    let mut rng = rng_from(substream_path(seed, &[tag::TRAJECTORY, 0]));
    let x0 = lorenz_initial_point(&mut rng);
    let t = core_lorenz(&LorenzParams::with_sigma_coef(sigma_coef), &x0, t_max, dt).map_err(err)?;
    Ok(PyTrajectory {
        inner: t.with_id(format!("lorenz_{seed}")),
    })
}

#[pyfunction]
fn simulate_circle(theta0: f64, length: usize) -> PyResult<PyTrajectory> {
    Ok(PyTrajectory {
        inner: core_circle(theta0, length).map_err(err)?,
    })
}

/// Solution Z of A Z A^T - Z + Sigma = 0.
#[pyfunction]
fn stationary_covariance(a: Vec<Vec<f64>>, sigma: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let sys = LtiSystem::new(matrix(&a)?, matrix(&sigma)?).map_err(err)?;
    Ok(dynmmd::systems::matrix_to_rows(&core_lyap(&sys).map_err(err)?))
}

#[pyfunction]
fn features(trajectory: PyRef<'_, PyTrajectory>) -> PyResult<Vec<f64>> {
    Ok(extract_features(&trajectory.inner).map_err(err)?.values().to_vec())
}

/// Label of the closest labelled trajectory; returns `(label, nearest_id, min_mmd)`.
#[pyfunction]
#[pyo3(signature = (query, labeled, a_star, count, start = 0, seed = 0))]
fn nearest_mmd(
    query: PyRef<'_, PyTrajectory>,
    labeled: Vec<PyRef<'_, PyTrajectory>>,
    a_star: usize,
    count: usize,
    start: usize,
    seed: u64,
) -> PyResult<(String, String, f64)> {
    let cfg = NearestMmdConfig {
        a_star,
        start: StartRule::Fixed(start),
        count,
    };
    let m = nearest_mmd_classify(&query.inner, &unwrap_trajs(&labeled), &cfg, seed).map_err(err)?;
    Ok((m.label, m.nearest_id, m.min_mmd))
}

#[pymodule]
fn pydynmmd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyTestResult>()?;
    m.add_class::<PyMixingProfile>()?;
    m.add_function(wrap_pyfunction!(gaussian_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(median_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_biased, m)?)?;
    m.add_function(wrap_pyfunction!(two_sample_test, m)?)?;
    m.add_function(wrap_pyfunction!(hsic_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(independence_test, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mixing, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_profile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lti, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lorenz, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_circle, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(nearest_mmd, m)?)?;
    Ok(())
}
