//! Benchmark generative systems: stochastic LTI, Lorenz, circle rotation,
//! and noisy observation models.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Point;
use crate::rng::{rng_from, substream_path, tag, StreamRng};
use crate::trajectory::Trajectory;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const LYAPUNOV_TOL: f64 = 1e-12;
const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-8;
/// Doublings allowed for the Lyapunov iteration; `2^20` plain steps.
const LYAPUNOV_MAX_DOUBLINGS: usize = 20;
const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_DOUBLINGS: usize = 60;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .fold(0.0, |acc, z| acc.max(z.norm()))
}

fn check_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::invalid(format!(
            "{what} must be a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(m.nrows())
}

/// Symmetric square root `V sqrt(L) V^T` of a symmetric PSD matrix.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m, "covariance")?;
    if max_abs(&(m - m.transpose())) > SYMMETRY_TOL * max_abs(m).max(1.0) {
        return Err(Error::invalid("covariance matrix is not symmetric"));
    }
    let eig = m.clone().symmetric_eigen();
    let scale = max_abs(m).max(1.0);
    let smallest = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < -PSD_TOL * scale {
        return Err(Error::NotPositiveSemidefinite(smallest));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// `X_{k+1} = A X_k + eps_k`, `eps_k ~ N(0, Sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: DMatrix<f64>,
    sigma: DMatrix<f64>,
    noise_factor: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(a: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = check_square(&a, "system matrix")?;
        if check_square(&sigma, "noise covariance")? != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: sigma.nrows(),
            });
        }
        if max_abs(&(&sigma - sigma.transpose())) > SYMMETRY_TOL {
            return Err(Error::invalid("noise covariance is not symmetric"));
        }
        let rho = spectral_radius(&a);
        if !(rho < 1.0) {
            return Err(Error::Unstable(rho));
        }
        let smallest = sigma
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if smallest < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(smallest));
        }
        let noise_factor = symmetric_sqrt(&sigma)?;
        Ok(LtiSystem { a, sigma, noise_factor })
    }

    pub fn from_rows(a: &[&[f64]], sigma: &[&[f64]]) -> Result<Self> {
        LtiSystem::new(matrix_from_rows(a)?, matrix_from_rows(sigma)?)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.a)
    }

    /// Same noise, system matrix multiplied by `factor`.
    pub fn with_scaled_dynamics(&self, factor: f64) -> Result<Self> {
        LtiSystem::new(&self.a * factor, self.sigma.clone())
    }
}

pub fn matrix_from_rows(rows: &[&[f64]]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::invalid("ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn standard_normal_vector(d: usize, rng: &mut StreamRng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

fn to_point(v: &DVector<f64>) -> Point {
    Point(v.iter().copied().collect())
}

pub fn simulate_lti(sys: &LtiSystem, x0: &Point, n: usize, seed: u64) -> Result<Trajectory> {
    let d = sys.dim();
    if x0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.dim(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("trajectory length must be at least 1"));
    }
    let mut rng = rng_from(seed);
    let mut x = DVector::from_column_slice(x0.coords());
    let mut states = Vec::with_capacity(n);
    states.push(x0.clone());
    for _ in 1..n {
        let z = standard_normal_vector(d, &mut rng);
        x = &sys.a * &x + &sys.noise_factor * z;
        states.push(to_point(&x));
    }
    Trajectory::new("lti", states, 1.0)
}

/// `count` independent trajectories from a common initial state;
/// trajectory `i` is named `<prefix>_<i>` and seeded with substream
/// `(seed, TRAJECTORY, i)`.
pub fn simulate_lti_ensemble(
    sys: &LtiSystem,
    x0: &Point,
    count: usize,
    n: usize,
    prefix: &str,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let s = substream_path(seed, &[tag::TRAJECTORY, i as u64]);
            Ok(simulate_lti(sys, x0, n, s)?.with_id(format!("{prefix}_{i}")))
        })
        .collect()
}

/// Stationary covariance `Z` solving `A Z A^T - Z + Sigma = 0`.
///
/// Runs the fixed-point iteration `Z <- A Z A^T + Sigma` from `Z = Sigma`
/// in doubling form: after `k` rounds `Z` holds the partial sum over
/// `2^k` plain steps and the increment `A^(2^k) Z (A^(2^k))^T` is the
/// change of the next doubled step.
pub fn stationary_covariance(sys: &LtiSystem) -> Result<DMatrix<f64>> {
    let mut z = sys.sigma.clone();
    let mut a_pow = sys.a.clone();
    let mut converged = false;
    for _ in 0..=LYAPUNOV_MAX_DOUBLINGS {
        let inc = &a_pow * &z * a_pow.transpose();
        z += &inc;
        z = 0.5 * (&z + z.transpose());
        if max_abs(&inc) < LYAPUNOV_TOL {
            converged = true;
            break;
        }
        a_pow = &a_pow * &a_pow;
    }
    let residual = max_abs(&(&sys.a * &z * sys.a.transpose() - &z + &sys.sigma));
    if !converged || residual > LYAPUNOV_RESIDUAL_TOL * max_abs(&z).max(1.0) {
        return Err(Error::NotConverged {
            what: "stationary covariance iteration",
            iterations: 1 << LYAPUNOV_MAX_DOUBLINGS,
            residual,
        });
    }
    Ok(z)
}

/// i.i.d. draws from `N(0, Z)`.
pub fn sample_stationary(z: &DMatrix<f64>, count: usize, seed: u64) -> Result<Vec<Point>> {
    let factor = symmetric_sqrt(z)?;
    let d = z.nrows();
    let mut rng = rng_from(seed);
    Ok((0..count)
        .map(|_| to_point(&(&factor * standard_normal_vector(d, &mut rng))))
        .collect())
}

/// How a random noise covariance is normalized by its largest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    /// `Sigma / lambda_max`
    MaxEigenvalue,
    /// `Sigma / (10 lambda_max^2)`
    Illustrative,
}

/// Solve the discrete algebraic Riccati equation
/// `P = Q + A^T P A - A^T P B (R + B^T P B)^-1 B^T P A`.
///
/// Backward Riccati recursion from `P = Q`, advanced by structure-preserving
/// doubling: round `k` yields the recursion iterate after `2^k` steps.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::invalid("control cost matrix is singular"))?;
    let mut ak = a.clone();
    let mut g = b * r_inv * b.transpose();
    let mut h = q.clone();
    let eye = DMatrix::<f64>::identity(n, n);
    for round in 0..RICCATI_MAX_DOUBLINGS {
        let w = (&eye + &g * &h).lu();
        let w_a = w.solve(&ak).ok_or(Error::NotConverged {
            what: "Riccati recursion",
            iterations: round,
            residual: f64::NAN,
        })?;
        let w_g = w.solve(&g).expect("same factorization");
        let h_next = &h + ak.transpose() * &h * &w_a;
        let g_next = &g + &ak * &w_g * ak.transpose();
        ak = &ak * &w_a;
        let h_next = 0.5 * (&h_next + h_next.transpose());
        let g_next = 0.5 * (&g_next + g_next.transpose());
        let change = max_abs(&(&h_next - &h));
        h = h_next;
        g = g_next;
        if h.iter().any(|v| !v.is_finite()) {
            break;
        }
        if change <= RICCATI_TOL * max_abs(&h).max(1.0) {
            return Ok(h);
        }
    }
    Err(Error::NotConverged {
        what: "Riccati recursion",
        iterations: RICCATI_MAX_DOUBLINGS,
        residual: f64::NAN,
    })
}

/// LQR gain `K = (R + B^T P B)^-1 B^T P A`.
pub fn lqr_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = solve_dare(a, b, q, r)?;
    let s = r + b.transpose() * &p * b;
    let rhs = b.transpose() * &p * a;
    s.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::invalid("singular LQR normal matrix"))
}

/// Random stable system whose closed loop `A - K` comes from an LQR
/// controller with a heavy control cost; larger `r_weight` keeps the
/// closed-loop spectrum near the unit circle and mixing slow.
pub fn random_lti(d: usize, r_weight: f64, noise: NoiseScale, seed: u64) -> Result<LtiSystem> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(r_weight.is_finite() && r_weight > 0.0) {
        return Err(Error::invalid(format!("control weight must be positive, got {r_weight}")));
    }
    let mut rng = rng_from(seed);
    let raw = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
    let sym = &raw + raw.transpose();
    let mut sigma: DMatrix<f64> = 0.5 * (&sym * &sym);
    sigma = 0.5 * (&sigma + sigma.transpose());
    let lambda_max = sigma
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if lambda_max > 0.0 {
        sigma /= match noise {
            NoiseScale::MaxEigenvalue => lambda_max,
            NoiseScale::Illustrative => 10.0 * lambda_max * lambda_max,
        };
    }
    let a = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>());
    let eye = DMatrix::<f64>::identity(d, d);
    let k = lqr_gain(&a, &eye, &eye, &(r_weight * &eye))?;
    LtiSystem::new(&a - k, sigma)
}

/// Named systems used by the benchmarks and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LtiPreset {
    /// Slowly mixing two-dimensional system of the illustrative scatter plot.
    Fig1,
    /// `Fig1` with the system matrix halved.
    Fig1Half,
    /// Three-dimensional, unit stationary covariance.
    RegimeA,
    /// Three-dimensional, stationary standard deviation 2.
    RegimeB,
    /// Independent standard Gaussian states (A = 0, Sigma = I), two-dimensional.
    WhiteNoise,
}

impl LtiPreset {
    pub const ALL: [LtiPreset; 5] = [
        LtiPreset::Fig1,
        LtiPreset::Fig1Half,
        LtiPreset::RegimeA,
        LtiPreset::RegimeB,
        LtiPreset::WhiteNoise,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LtiPreset::Fig1 => "fig1",
            LtiPreset::Fig1Half => "fig1-half",
            LtiPreset::RegimeA => "regime-a",
            LtiPreset::RegimeB => "regime-b",
            LtiPreset::WhiteNoise => "white-noise",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        LtiPreset::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown LTI preset '{name}'")))
    }

    pub fn system(&self) -> LtiSystem {
        let diag3 = |a: f64, s: f64| {
            LtiSystem::new(
                DMatrix::from_diagonal_element(3, 3, a),
                DMatrix::from_diagonal_element(3, 3, s),
            )
        };
        let fig1 = || {
            LtiSystem::from_rows(
                &[&[0.2345, 0.8609], &[0.7298, 0.1316]],
                &[&[0.0378, 0.0135], &[0.0135, 0.0971]],
            )
        };
        match self {
            LtiPreset::Fig1 => fig1(),
            LtiPreset::Fig1Half => fig1().and_then(|s| s.with_scaled_dynamics(0.5)),
            LtiPreset::RegimeA => diag3(0.5, 0.75),
            LtiPreset::RegimeB => diag3(0.5, 0.75 * 4.0),
            LtiPreset::WhiteNoise => LtiSystem::new(DMatrix::zeros(2, 2), DMatrix::identity(2, 2)),
        }
        .expect("preset systems are valid")
    }
}

/// Coefficients of `x' = s(y - x)`, `y' = x(rho - z) - y`, `z' = xy - beta z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma_coef: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            sigma_coef: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl LorenzParams {
    pub fn with_sigma_coef(sigma_coef: f64) -> Self {
        LorenzParams {
            sigma_coef,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.sigma_coef, self.rho, self.beta].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Lorenz parameters".into()));
        }
        if self.rho <= 1.0 {
            log::warn!("rho = {} is outside the chaotic-attractor regime", self.rho);
        }
        Ok(())
    }

    #[inline]
    fn field(&self, s: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = s;
        [
            self.sigma_coef * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        ]
    }

    fn rk4_step(&self, s: [f64; 3], h: f64) -> [f64; 3] {
        let add = |a: [f64; 3], b: [f64; 3], f: f64| [a[0] + f * b[0], a[1] + f * b[1], a[2] + f * b[2]];
        let k1 = self.field(s);
        let k2 = self.field(add(s, k1, 0.5 * h));
        let k3 = self.field(add(s, k2, 0.5 * h));
        let k4 = self.field(add(s, k3, h));
        let mut out = s;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

pub const LORENZ_MAX_STEP: f64 = 0.005;

/// Initial point from `U([-0.5, 0.5] x [-0.5, 0.5] x [20, 21])`.
pub fn lorenz_initial_point(rng: &mut impl Rng) -> Point {
    Point(vec![
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
        rng.random_range(20.0..21.0),
    ])
}

/// Fixed-step RK4 at `h = min(dt_out, 0.005)`, linearly interpolated onto
/// `0, dt_out, ..., t_max`.
pub fn simulate_lorenz(p: &LorenzParams, x0: &Point, t_max: f64, dt_out: f64) -> Result<Trajectory> {
    simulate_lorenz_with_step(p, x0, t_max, dt_out, dt_out.min(LORENZ_MAX_STEP))
}

pub fn simulate_lorenz_with_step(
    p: &LorenzParams,
    x0: &Point,
    t_max: f64,
    dt_out: f64,
    h: f64,
) -> Result<Trajectory> {
    p.validate()?;
    if x0.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: x0.dim(),
        });
    }
    for (name, v) in [("t_max", t_max), ("dt_out", dt_out), ("step", h)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    let n_out = (t_max / dt_out + 1e-9).floor() as usize + 1;
    let mut states = Vec::with_capacity(n_out);
    let mut prev = [x0.0[0], x0.0[1], x0.0[2]];
    let mut step = 0usize;
    let mut next = p.rk4_step(prev, h);
    for j in 0..n_out {
        let t = j as f64 * dt_out;
        // advance until t lies in [step h, (step + 1) h]
        while ((step + 1) as f64) * h < t - 1e-12 * h.max(t) {
            prev = next;
            step += 1;
            next = p.rk4_step(prev, h);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    time: (step + 1) as f64 * h,
                });
            }
        }
        let w = ((t - step as f64 * h) / h).clamp(0.0, 1.0);
        let state = if w == 0.0 {
            prev.to_vec()
        } else if w == 1.0 {
            next.to_vec()
        } else {
            (0..3).map(|i| (1.0 - w) * prev[i] + w * next[i]).collect()
        };
        states.push(Point(state));
    }
    Trajectory::new("lorenz", states, dt_out)
}

pub const CIRCLE_STEP: f64 = std::f64::consts::PI / 10.0;

/// Unit-circle rotation by `pi / 10` per step; state `k` is
/// `(cos(theta0 + k pi/10), sin(theta0 + k pi/10))`.
pub fn simulate_circle(theta0: f64, n: usize) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::invalid("trajectory length must be at least 1"));
    }
    if !theta0.is_finite() {
        return Err(Error::NonFinite("initial angle".into()));
    }
    let states = (0..n)
        .map(|k| {
            // reduce the step count modulo the period so state k+20 equals state k exactly
            let theta = theta0 + (k % 20) as f64 * CIRCLE_STEP;
            Point(vec![theta.cos(), theta.sin()])
        })
        .collect();
    Trajectory::new("circle", states, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservationKind {
    Identity,
    LinearProjection(DMatrix<f64>),
    CoordinateSubset(Vec<usize>),
}

/// `X'_k = g(X_k) + xi_k` with independent Gaussian noise per output.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    pub kind: ObservationKind,
    /// Standard deviation per output coordinate; a single value broadcasts.
    pub noise_std: Vec<f64>,
}

impl ObservationModel {
    pub fn identity(noise_std: f64) -> Self {
        ObservationModel {
            kind: ObservationKind::Identity,
            noise_std: vec![noise_std],
        }
    }

    pub fn subset(indices: Vec<usize>, noise_std: f64) -> Self {
        ObservationModel {
            kind: ObservationKind::CoordinateSubset(indices),
            noise_std: vec![noise_std],
        }
    }

    pub fn projection(c: DMatrix<f64>, noise_std: f64) -> Self {
        ObservationModel {
            kind: ObservationKind::LinearProjection(c),
            noise_std: vec![noise_std],
        }
    }

    fn output_dim(&self, state_dim: usize) -> Result<usize> {
        let out = match &self.kind {
            ObservationKind::Identity => state_dim,
            ObservationKind::LinearProjection(c) => {
                if c.ncols() != state_dim {
                    return Err(Error::DimensionMismatch {
                        expected: state_dim,
                        found: c.ncols(),
                    });
                }
                c.nrows()
            }
            ObservationKind::CoordinateSubset(idx) => {
                if let Some(&bad) = idx.iter().find(|&&i| i >= state_dim) {
                    return Err(Error::DimensionMismatch {
                        expected: state_dim,
                        found: bad + 1,
                    });
                }
                idx.len()
            }
        };
        if out == 0 {
            return Err(Error::invalid("observation model has no outputs"));
        }
        if self.noise_std.len() != 1 && self.noise_std.len() != out {
            return Err(Error::DimensionMismatch {
                expected: out,
                found: self.noise_std.len(),
            });
        }
        if self.noise_std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::invalid("noise standard deviations must be nonnegative"));
        }
        Ok(out)
    }
}

pub fn observe(traj: &Trajectory, model: &ObservationModel, seed: u64) -> Result<Trajectory> {
    let out_dim = model.output_dim(traj.dim())?;
    let std_at = |i: usize| {
        if model.noise_std.len() == 1 {
            model.noise_std[0]
        } else {
            model.noise_std[i]
        }
    };
    let mut rng = rng_from(seed);
    let states = traj
        .states()
        .iter()
        .map(|p| {
            let clean: Vec<f64> = match &model.kind {
                ObservationKind::Identity => p.coords().to_vec(),
                ObservationKind::LinearProjection(c) => {
                    (c * DVector::from_column_slice(p.coords())).iter().copied().collect()
                }
                ObservationKind::CoordinateSubset(idx) => idx.iter().map(|&i| p.coords()[i]).collect(),
            };
            let noisy = clean
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let s = std_at(i);
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if s == 0.0 {
                        v
                    } else {
                        v + s * z
                    }
                })
                .collect();
            Point(noisy)
        })
        .collect::<Vec<_>>();
    debug_assert!(states.iter().all(|p| p.dim() == out_dim));
    traj.replace_states(states)
}
