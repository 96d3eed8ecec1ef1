//! Time evolution of the master equations.
//!
//! Two explicit schemes are provided: classical fixed-step RK4 and the
//! Dormand-Prince 5(4) embedded pair with error-controlled step size. After
//! every accepted step the state is re-symmetrized, `rho <- (rho + rho^dagger)/2`.
//! Positivity is monitored at the snapshot grid and never projected.
//!
//! For the Hamiltonian-free unnormalized models the exact propagators are
//! available in closed form and serve as the oracle for the numerical schemes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelKind, RateParams};
use crate::spinspace::{symmetrize, CMatrix, DensityMatrix, SpinSpace, Tolerances, Verdict};

pub const MIN_STEP: f64 = 1e-12;
const SAFETY: f64 = 0.9;
const MIN_SHRINK: f64 = 0.2;
const MAX_GROWTH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Rk4Fixed { dt: f64 },
    Rk45Adaptive { rel_tol: f64, abs_tol: f64 },
}

impl Method {
    pub fn rk4(dt: f64) -> Self {
        Method::Rk4Fixed { dt }
    }

    pub fn adaptive() -> Self {
        Method::Rk45Adaptive {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Rk4Fixed { .. } => MethodName::Rk4Fixed.as_str(),
            Method::Rk45Adaptive { .. } => MethodName::Rk45Adaptive.as_str(),
        }
    }

    fn check(&self) -> Result<()> {
        let bad = |name, value: f64| {
            Err(Error::InvalidParameter {
                name,
                reason: format!("must be finite and > 0, got {value}"),
            })
        };
        match *self {
            Method::Rk4Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => bad("dt", dt),
            Method::Rk45Adaptive { rel_tol, .. } if !(rel_tol > 0.0 && rel_tol.is_finite()) => bad("rel_tol", rel_tol),
            Method::Rk45Adaptive { abs_tol, .. } if !(abs_tol > 0.0 && abs_tol.is_finite()) => bad("abs_tol", abs_tol),
            _ => Ok(()),
        }
    }
}

/// Method selector without its numeric settings, as named in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodName {
    #[serde(rename = "rk4-fixed")]
    Rk4Fixed,
    #[serde(rename = "rk45-adaptive")]
    Rk45Adaptive,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Rk4Fixed => "rk4-fixed",
            MethodName::Rk45Adaptive => "rk45-adaptive",
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rk4-fixed" => Ok(MethodName::Rk4Fixed),
            "rk45-adaptive" => Ok(MethodName::Rk45Adaptive),
            other => Err(format!(
                "unknown method {other:?} (expected \"rk4-fixed\" or \"rk45-adaptive\")"
            )),
        }
    }
}

/// Snapshot times: starts at 0, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidParameter { name: "grid", reason };
        match times.first() {
            Some(0.0) => {}
            Some(&t0) => return Err(invalid(format!("grid must start at 0, starts at {t0}"))),
            None => return Err(invalid("grid is empty".into())),
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(invalid(format!("grid not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(TimeGrid(times))
    }

    /// `n` equally spaced points on `[0, t_end]`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if n < 2 || !(t_end > 0.0) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need t_end > 0 and at least 2 points, got t_end = {t_end}, n = {n}"),
            });
        }
        let last = (n - 1) as f64;
        Self::new((0..n).map(|i| t_end * i as f64 / last).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.0.last().expect("grid is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub trace: f64,
    pub p_singlet: f64,
    pub p_triplet: f64,
    pub min_eigenvalue: f64,
}

impl Observables {
    pub fn of(rho: &DensityMatrix) -> Self {
        Observables {
            trace: rho.trace(),
            p_singlet: rho.singlet_probability(),
            p_triplet: rho.triplet_probability(),
            min_eigenvalue: rho.min_eigenvalue(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: ModelKind,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<Observables>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Evolves `rho_init` under `model`, returning snapshots at every grid point.
pub fn integrate(
    model: ModelKind,
    rho_init: &DensityMatrix,
    params: &RateParams,
    grid: &TimeGrid,
    method: Method,
    tol: &Tolerances,
) -> Result<Trajectory> {
    let wrap = |t: f64| {
        move |e: Error| Error::Integration {
            model,
            t,
            source: Box::new(e),
        }
    };
    method.check().map_err(wrap(0.0))?;
    let space = rho_init.space().clone();
    params.check_for(model, &space).map_err(wrap(0.0))?;
    let check = rho_init.validate(tol);
    if check.verdict == Verdict::Fail {
        return Err(wrap(0.0)(Error::InvalidParameter {
            name: "rho_init",
            reason: format!(
                "not a valid density matrix (hermiticity {:e}, min eigenvalue {:e}, trace {})",
                check.hermiticity_deviation, check.min_eigenvalue, check.trace
            ),
        }));
    }
    if model.is_normalized() && (check.trace - 1.0).abs() > tol.trace {
        return Err(wrap(0.0)(Error::NotNormalized { trace: check.trace }));
    }

    let rhs = |m: &CMatrix| model.rhs(&space, m, params);
    let times = grid.times();
    let mut states = Vec::with_capacity(times.len());
    let mut observables = Vec::with_capacity(times.len());
    observables.push(Observables::of(rho_init));
    states.push(rho_init.clone());

    let mut rho = rho_init.matrix().clone();
    let mut stepper = match method {
        Method::Rk4Fixed { dt } => Stepper::Fixed { dt },
        Method::Rk45Adaptive { rel_tol, abs_tol } => Stepper::Adaptive {
            rel_tol,
            abs_tol,
            h: None,
        },
    };
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        rho = stepper
            .advance(&rhs, rho, t0, t1, grid.end())
            .map_err(|(t, e)| wrap(t)(e))?;
        let snapshot = rho_init.with_matrix(rho.clone());
        let obs = Observables::of(&snapshot);
        if obs.min_eigenvalue < -tol.psd_fail {
            return Err(wrap(t1)(Error::PositivityViolation {
                t: t1,
                min_eigenvalue: obs.min_eigenvalue,
            }));
        }
        observables.push(obs);
        states.push(snapshot);
    }
    Ok(Trajectory {
        model,
        times: times.to_vec(),
        states,
        observables,
    })
}

type StepError = (f64, Error);

enum Stepper {
    Fixed { dt: f64 },
    Adaptive { rel_tol: f64, abs_tol: f64, h: Option<f64> },
}

impl Stepper {
    fn advance<F>(
        &mut self,
        f: &F,
        rho: CMatrix,
        t0: f64,
        t1: f64,
        t_end: f64,
    ) -> std::result::Result<CMatrix, StepError>
    where
        F: Fn(&CMatrix) -> Result<CMatrix>,
    {
        match self {
            Stepper::Fixed { dt } => rk4_segment(f, rho, t0, t1, *dt),
            Stepper::Adaptive { rel_tol, abs_tol, h } => dopri_segment(f, rho, t0, t1, t_end, *rel_tol, *abs_tol, h),
        }
    }
}

fn axpy(y: &CMatrix, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let mut out = y.clone();
    for &(c, k) in terms {
        if c != 0.0 {
            out.zip_apply(k, |o, v| *o += v * c);
        }
    }
    out
}

fn rk4_segment<F>(f: &F, mut rho: CMatrix, t0: f64, t1: f64, dt: f64) -> std::result::Result<CMatrix, StepError>
where
    F: Fn(&CMatrix) -> Result<CMatrix>,
{
    let span = t1 - t0;
    let n = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for i in 0..n {
        let t = t0 + i as f64 * h;
        let e = |e| (t, e);
        let k1 = f(&rho).map_err(e)?;
        let k2 = f(&axpy(&rho, &[(0.5 * h, &k1)])).map_err(e)?;
        let k3 = f(&axpy(&rho, &[(0.5 * h, &k2)])).map_err(e)?;
        let k4 = f(&axpy(&rho, &[(h, &k3)])).map_err(e)?;
        let next = axpy(&rho, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]);
        rho = symmetrize(&next);
    }
    Ok(rho)
}

// Dormand-Prince 5(4) tableau. The equations are autonomous, so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus fourth-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

fn error_norm(err: &CMatrix, y0: &CMatrix, y1: &CMatrix, rel_tol: f64, abs_tol: f64) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let scale = abs_tol + rel_tol * a.norm().max(b.norm());
            (e.norm() / scale).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn rms(m: &CMatrix) -> f64 {
    (m.iter().map(Complex64::norm_sqr).sum::<f64>() / m.len() as f64).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn dopri_segment<F>(
    f: &F,
    mut rho: CMatrix,
    t0: f64,
    t1: f64,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
    h_state: &mut Option<f64>,
) -> std::result::Result<CMatrix, StepError>
where
    F: Fn(&CMatrix) -> Result<CMatrix>,
{
    let mut t = t0;
    let mut k1 = f(&rho).map_err(|e| (t, e))?;
    let mut h = match *h_state {
        Some(h) => h,
        None => {
            let d0 = rms(&rho);
            let d1 = rms(&k1);
            let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            guess.clamp(MIN_STEP, t_end)
        }
    };
    while t < t1 {
        let remaining = t1 - t;
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let e = |e| (t, e);
        let mut k: Vec<CMatrix> = Vec::with_capacity(7);
        k.push(k1.clone());
        for row in &A[1..] {
            let terms: Vec<(f64, &CMatrix)> = k.iter().zip(row).map(|(kj, a)| (step * a, kj)).collect();
            let ks = f(&axpy(&rho, &terms)).map_err(e)?;
            k.push(ks);
        }
        let y_new = axpy(&rho, &(0..6).map(|j| (step * A[6][j], &k[j])).collect::<Vec<_>>());
        let err = axpy(
            &CMatrix::zeros(rho.nrows(), rho.ncols()),
            &(0..7).map(|j| (step * E[j], &k[j])).collect::<Vec<_>>(),
        );
        let norm = error_norm(&err, &rho, &y_new, rel_tol, abs_tol);
        let factor = if norm == 0.0 {
            MAX_GROWTH
        } else {
            (SAFETY * norm.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
        };
        if norm <= 1.0 {
            t = if last { t1 } else { t + step };
            rho = symmetrize(&y_new);
            k1 = f(&rho).map_err(|e| (t, e))?;
            // A short final step to hit the grid says nothing about the
            // controller's preferred size; keep the larger one.
            h = if last { h.max(step * factor) } else { step * factor };
        } else {
            h = step * factor;
        }
        h = h.min(t_end);
        if h < MIN_STEP {
            return Err((t, Error::StepUnderflow { t }));
        }
    }
    *h_state = Some(h);
    Ok(rho)
}

fn require_no_hamiltonian(params: &RateParams, model: ModelKind) -> Result<()> {
    if params.hamiltonian().is_some() {
        return Err(Error::HamiltonianNotSupported(model));
    }
    Ok(())
}

fn require_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("time must be >= 0, got {t}"),
        });
    }
    Ok(())
}

/// Entry `(i, j)` decays as `exp(-rate(i, j) * t)`.
fn decay_blocks<R>(rho: &DensityMatrix, t: f64, rate: R) -> DensityMatrix
where
    R: Fn(&SpinSpace, usize, usize) -> f64,
{
    let space = rho.space();
    let m = rho.matrix();
    let out = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let r = rate(space, i, j);
        if r == 0.0 {
            m[(i, j)]
        } else {
            m[(i, j)] * (-r * t).exp()
        }
    });
    rho.with_matrix(out)
}

/// Exact Hamiltonian-free Jones-Hore solution
/// `Q_T rho Q_T + exp(-k_S t) (rho - Q_T rho Q_T)`.
pub fn analytic_jones_hore(rho_init: &DensityMatrix, params: &RateParams, t: f64) -> Result<DensityMatrix> {
    require_no_hamiltonian(params, ModelKind::JonesHoreUnnormalized)?;
    require_time(t)?;
    let k = params.k_s();
    Ok(decay_blocks(rho_init, t, |s, i, j| {
        if s.is_singlet(i) || s.is_singlet(j) {
            k
        } else {
            0.0
        }
    }))
}

/// Exact Hamiltonian-free Haberkorn solution
/// `exp(-k_S Q_S t / 2) rho exp(-k_S Q_S t / 2)`.
pub fn analytic_haberkorn(rho_init: &DensityMatrix, params: &RateParams, t: f64) -> Result<DensityMatrix> {
    require_no_hamiltonian(params, ModelKind::Haberkorn)?;
    require_time(t)?;
    let half_k = 0.5 * params.k_s();
    Ok(decay_blocks(rho_init, t, |s, i, j| {
        half_k * f64::from(s.is_singlet(i) as u8 + s.is_singlet(j) as u8)
    }))
}

/// Exact solution of an unnormalized Hamiltonian-free model sampled on a grid.
pub fn analytic_trajectory(
    model: ModelKind,
    rho_init: &DensityMatrix,
    params: &RateParams,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix>> {
    let propagate = match model {
        ModelKind::JonesHoreUnnormalized => analytic_jones_hore,
        ModelKind::Haberkorn => analytic_haberkorn,
        other => {
            return Err(Error::InvalidParameter {
                name: "model",
                reason: format!("no closed-form propagator for {other}"),
            })
        }
    };
    grid.times().iter().map(|&t| propagate(rho_init, params, t)).collect()
}
