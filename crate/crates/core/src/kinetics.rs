//! Kinetic-mixture picture of the normalized surviving state.
//!
//! The surviving ensemble is split into the unmeasured initial state `rho_0`
//! and the triplet-projected state `rho_T`:
//!
//! ```text
//! rho_nr = w_0 rho_0 + w_T rho_T
//! ```
//!
//! The singlet fraction `p_S` of `rho_0` recombines at rate `k_S`; the triplet
//! fraction `p_T` is projected into `rho_T`. The population of `rho_0` is
//! `f_0 = exp(-k_S t)` and that of `rho_T` is `f_T = p_T (1 - exp(-k_S t))`.
//! Normalizing `(f_0, f_T)` gives the corrected weights. The disputed weights
//! drop the `p_T` factor and use `w_0 = exp(-k_S t)` directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinspace::{CMatrix, DensityMatrix, Tolerances};

pub const P_FLOOR: f64 = 1e-12;
pub const WEIGHT_FLOOR: f64 = 1e-300;
/// Agreement required between the trace and kinetic forms of the weight rate.
pub const WEIGHT_RATE_TOL: f64 = 1e-12;

const FRACTION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightScheme {
    /// `w = (f_0, f_T) / (f_0 + f_T)`.
    Corrected,
    /// `w_0 = exp(-k_S t)`, `w_T = 1 - w_0`. The disputed form.
    Kominis,
}

impl WeightScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Corrected => "corrected",
            WeightScheme::Kominis => "kominis",
        }
    }

    pub fn is_disputed(self) -> bool {
        self == WeightScheme::Kominis
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(WeightScheme::Corrected),
            "kominis" => Ok(WeightScheme::Kominis),
            other => Err(format!(
                "unknown weight scheme {other:?} (expected \"corrected\" or \"kominis\")"
            )),
        }
    }
}

impl TryFrom<String> for WeightScheme {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WeightScheme> for String {
    fn from(w: WeightScheme) -> String {
        w.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub omega_0: f64,
    pub omega_t: f64,
}

impl Weights {
    pub fn new(omega_0: f64, omega_t: f64) -> Self {
        Weights { omega_0, omega_t }
    }
}

/// Constants of the kinetic scheme plus the current populations.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    p_s: f64,
    p_t: f64,
    rho_0: DensityMatrix,
    rho_t: Option<DensityMatrix>,
    f_0: f64,
    f_t: f64,
}

impl MixtureState {
    pub fn p_s(&self) -> f64 {
        self.p_s
    }

    pub fn p_t(&self) -> f64 {
        self.p_t
    }

    pub fn rho_0(&self) -> &DensityMatrix {
        &self.rho_0
    }

    pub fn rho_t(&self) -> Option<&DensityMatrix> {
        self.rho_t.as_ref()
    }

    pub fn f_0(&self) -> f64 {
        self.f_0
    }

    pub fn f_t(&self) -> f64 {
        self.f_t
    }

    /// Product fraction `1 - f_0 - f_T`.
    pub fn f_p(&self) -> f64 {
        1.0 - self.f_0 - self.f_t
    }

    /// Same scheme constants with populations advanced to time `t`.
    pub fn at_time(&self, t: f64, k_s: f64) -> Result<MixtureState> {
        let (f_0, f_t) = kinetic_fractions(t, self.p_t, k_s)?;
        Ok(MixtureState {
            f_0,
            f_t,
            ..self.clone()
        })
    }

    /// Weights at time `t` under the given scheme.
    pub fn weights(&self, scheme: WeightScheme, t: f64, k_s: f64) -> Result<Weights> {
        match scheme {
            WeightScheme::Corrected => {
                let (f_0, f_t) = kinetic_fractions(t, self.p_t, k_s)?;
                corrected_weights(f_0, f_t)
            }
            WeightScheme::Kominis => kominis_weights(t, k_s),
        }
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(-FRACTION_SLACK..=1.0 + FRACTION_SLACK).contains(&value) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must lie in [0, 1], got {value}"),
        });
    }
    Ok(())
}

fn check_rate(k_s: f64) -> Result<()> {
    if !(k_s >= 0.0) || !k_s.is_finite() {
        return Err(Error::InvalidParameter {
            name: "k_S",
            reason: format!("rate must be finite and >= 0, got {k_s}"),
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("time must be >= 0, got {t}"),
        });
    }
    Ok(())
}

/// Builds the time-zero mixture from a normalized initial state.
pub fn mixture_from_initial(rho_init: &DensityMatrix) -> Result<MixtureState> {
    let trace = rho_init.trace();
    if (trace - 1.0).abs() > Tolerances::default().trace {
        return Err(Error::NotNormalized { trace });
    }
    let space = rho_init.space();
    let p_s = rho_init.singlet_probability();
    let p_t = rho_init.triplet_probability();
    let rho_t = if p_t > P_FLOOR {
        let projected = space.sandwich_triplet(rho_init.matrix()).unscale(p_t);
        Some(DensityMatrix::from_matrix(space.clone(), projected)?)
    } else {
        None
    };
    Ok(MixtureState {
        p_s,
        p_t,
        rho_0: rho_init.clone(),
        rho_t,
        f_0: 1.0,
        f_t: 0.0,
    })
}

/// `(df_0/dt, df_T/dt) = (-k_S f_0, p_T k_S f_0)`.
pub fn fraction_rates(f_0: f64, p_t: f64, k_s: f64) -> Result<(f64, f64)> {
    check_unit("f_0", f_0)?;
    check_unit("p_T", p_t)?;
    check_rate(k_s)?;
    Ok((-k_s * f_0, p_t * k_s * f_0))
}

/// Closed-form populations `f_0 = exp(-k_S t)`, `f_T = p_T (1 - exp(-k_S t))`.
pub fn kinetic_fractions(t: f64, p_t: f64, k_s: f64) -> Result<(f64, f64)> {
    check_time(t)?;
    check_unit("p_T", p_t)?;
    check_rate(k_s)?;
    let decay = (-k_s * t).exp();
    Ok((decay, -p_t * (-k_s * t).exp_m1()))
}

pub fn corrected_weights(f_0: f64, f_t: f64) -> Result<Weights> {
    let total = f_0 + f_t;
    if !(total > WEIGHT_FLOOR) {
        return Err(Error::AllReacted { total });
    }
    let omega_0 = f_0 / total;
    Ok(Weights::new(omega_0, f_t / total))
}

pub fn kominis_weights(t: f64, k_s: f64) -> Result<Weights> {
    check_time(t)?;
    check_rate(k_s)?;
    let omega_0 = (-k_s * t).exp();
    Ok(Weights::new(omega_0, 1.0 - omega_0))
}

/// `w_0 rho_0 + w_T rho_T`.
pub fn reconstruct(weights: Weights, mix: &MixtureState) -> Result<DensityMatrix> {
    let sum = weights.omega_0 + weights.omega_t;
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: format!("weights must sum to 1, got {sum}"),
        });
    }
    let mut m = mix.rho_0.matrix().scale(weights.omega_0);
    match &mix.rho_t {
        Some(rho_t) => m += rho_t.matrix().scale(weights.omega_t),
        None if weights.omega_t != 0.0 => {
            return Err(Error::MissingTripletState {
                omega_t: weights.omega_t,
            })
        }
        None => {}
    }
    Ok(mix.rho_0.with_matrix(m))
}

/// Inverts [`reconstruct`]: `rho_T = Q_T rho Q_T / Tr(Q_T rho Q_T)`,
/// `rho_0 = (rho - w_T rho_T) / w_0`.
pub fn decompose(rho_nr: &DensityMatrix, weights: Weights) -> Result<(DensityMatrix, DensityMatrix)> {
    if !(weights.omega_0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_0",
            reason: format!("must be positive, got {}", weights.omega_0),
        });
    }
    let space = rho_nr.space();
    let p_t = rho_nr.triplet_probability();
    if !(p_t > P_FLOOR) {
        return Err(Error::InvalidParameter {
            name: "rho_nr",
            reason: format!("triplet trace {p_t:e} is below the floor"),
        });
    }
    let rho_t = space.sandwich_triplet(rho_nr.matrix()).unscale(p_t);
    let rho_0 = (rho_nr.matrix() - rho_t.scale(weights.omega_t)).unscale(weights.omega_0);
    Ok((rho_nr.with_matrix(rho_0), rho_nr.with_matrix(rho_t)))
}

/// `dw_0/dt = -k_S w_0 Tr(Q_T rho_nr Q_T)`, cross-checked against the kinetic
/// form `-k_S w_0 (w_T + p_T w_0)`. `dw_T/dt` is the negative.
pub fn weight_rate(weights: Weights, mix: &MixtureState, rho_nr: &DensityMatrix, k_s: f64) -> Result<f64> {
    let trace = rho_nr.trace();
    if (trace - 1.0).abs() > Tolerances::default().trace {
        return Err(Error::NotNormalized { trace });
    }
    let trace_form = -k_s * weights.omega_0 * rho_nr.triplet_probability();
    let kinetic_form = -k_s * weights.omega_0 * (weights.omega_t + mix.p_t * weights.omega_0);
    if (trace_form - kinetic_form).abs() > WEIGHT_RATE_TOL {
        return Err(Error::MixtureInconsistent {
            trace_form,
            kinetic_form,
        });
    }
    Ok(trace_form)
}

/// `(dw_0/dt) rho_0 + (dw_T/dt) rho_T` at the mixture's reconstructed state.
pub fn mixture_rhs(mix: &MixtureState, weights: Weights, k_s: f64) -> Result<CMatrix> {
    let rho_nr = reconstruct(weights, mix)?;
    let d_omega_0 = weight_rate(weights, mix, &rho_nr, k_s)?;
    let mut out = mix.rho_0.matrix().scale(d_omega_0);
    if let Some(rho_t) = &mix.rho_t {
        out -= rho_t.matrix().scale(d_omega_0);
    } else if d_omega_0 != 0.0 {
        return Err(Error::MissingTripletState {
            omega_t: weights.omega_t,
        });
    }
    Ok(out)
}
