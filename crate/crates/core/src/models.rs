//! Right-hand sides of the recombination master equations.
//!
//! Two unnormalized flows (Jones-Hore projector form and Haberkorn's
//! anticommutator form) and two candidate equations for the normalized
//! surviving state `rho_nr = rho / Tr rho`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinspace::{hermiticity_deviation, CMatrix, DensityMatrix, SpinSpace, Tolerances};

/// Floor on `Tr(Q_T rho Q_T)` below which the literal normalized Kominis
/// equation is treated as undefined.
pub const DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    JonesHoreUnnormalized,
    Haberkorn,
    NormalizedJonesHore,
    NormalizedKominis,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::JonesHoreUnnormalized,
        ModelKind::Haberkorn,
        ModelKind::NormalizedJonesHore,
        ModelKind::NormalizedKominis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::JonesHoreUnnormalized => "jones-hore",
            ModelKind::Haberkorn => "haberkorn",
            ModelKind::NormalizedJonesHore => "normalized-jh",
            ModelKind::NormalizedKominis => "normalized-kominis",
        }
    }

    /// Normalized models evolve `rho_nr` and keep its trace at 1.
    pub fn is_normalized(self) -> bool {
        matches!(self, ModelKind::NormalizedJonesHore | ModelKind::NormalizedKominis)
    }

    pub fn accepts_hamiltonian(self) -> bool {
        !self.is_normalized()
    }

    /// Evaluates the model's right-hand side on a raw matrix.
    pub fn rhs(self, space: &SpinSpace, rho: &CMatrix, params: &RateParams) -> Result<CMatrix> {
        params.check_for(self, space)?;
        Ok(match self {
            ModelKind::JonesHoreUnnormalized => jones_hore(space, rho, params),
            ModelKind::Haberkorn => haberkorn(space, rho, params),
            ModelKind::NormalizedJonesHore => normalized_jones_hore(space, rho, params.k_s)?,
            ModelKind::NormalizedKominis => normalized_kominis(space, rho, params.k_s)?,
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ModelKind::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            format!("unknown model {s:?} (expected one of jones-hore, haberkorn, normalized-jh, normalized-kominis)")
        })
    }
}

impl TryFrom<String> for ModelKind {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(m: ModelKind) -> String {
        m.name().to_string()
    }
}

/// Singlet recombination rate and an optional Hamiltonian (angular-frequency
/// units) for the coherent term of the unnormalized models.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    k_s: f64,
    hamiltonian: Option<CMatrix>,
}

impl RateParams {
    pub fn new(k_s: f64) -> Result<Self> {
        if !(k_s >= 0.0) || !k_s.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k_S",
                reason: format!("rate must be finite and >= 0, got {k_s}"),
            });
        }
        Ok(RateParams { k_s, hamiltonian: None })
    }

    pub fn with_hamiltonian(mut self, h: CMatrix) -> Result<Self> {
        if h.nrows() != h.ncols() {
            return Err(Error::InvalidParameter {
                name: "hamiltonian",
                reason: "matrix must be square".into(),
            });
        }
        let dev = hermiticity_deviation(&h);
        if dev > Tolerances::default().herm_warn {
            return Err(Error::InvalidParameter {
                name: "hamiltonian",
                reason: format!("not Hermitian (deviation {dev:e})"),
            });
        }
        self.hamiltonian = Some(h);
        Ok(self)
    }

    pub fn k_s(&self) -> f64 {
        self.k_s
    }

    pub fn hamiltonian(&self) -> Option<&CMatrix> {
        self.hamiltonian.as_ref()
    }

    pub(crate) fn check_for(&self, model: ModelKind, space: &SpinSpace) -> Result<()> {
        if let Some(h) = &self.hamiltonian {
            if !model.accepts_hamiltonian() {
                return Err(Error::HamiltonianNotSupported(model));
            }
            if h.nrows() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    found: h.nrows(),
                });
            }
        }
        Ok(())
    }
}

fn coherent(params: &RateParams, rho: &CMatrix) -> Option<CMatrix> {
    params.hamiltonian.as_ref().map(|h| {
        let comm = h * rho - rho * h;
        comm * Complex64::new(0.0, -1.0)
    })
}

fn jones_hore(space: &SpinSpace, rho: &CMatrix, params: &RateParams) -> CMatrix {
    let mut out = (rho - space.sandwich_triplet(rho)).scale(-params.k_s);
    if let Some(c) = coherent(params, rho) {
        out += c;
    }
    out
}

fn haberkorn(space: &SpinSpace, rho: &CMatrix, params: &RateParams) -> CMatrix {
    // (Q_S rho + rho Q_S)_ij = rho_ij * ([i in S] + [j in S])
    let half_k = 0.5 * params.k_s;
    let mut out = CMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        let weight = space.is_singlet(i) as u8 + space.is_singlet(j) as u8;
        rho[(i, j)] * (-half_k * f64::from(weight))
    });
    if let Some(c) = coherent(params, rho) {
        out += c;
    }
    out
}

fn require_normalized(rho: &CMatrix) -> Result<()> {
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > Tolerances::default().trace {
        return Err(Error::NotNormalized { trace });
    }
    Ok(())
}

/// Multiplied-out normalized Jones-Hore flow
/// `-k_S (Tr(Q_T rho Q_T) rho - Q_T rho Q_T)`; regular at pure singlet.
fn normalized_jones_hore(space: &SpinSpace, rho: &CMatrix, k_s: f64) -> Result<CMatrix> {
    require_normalized(rho)?;
    let projected = space.sandwich_triplet(rho);
    let p_t = space.triplet_trace(rho);
    Ok((rho.scale(p_t) - projected).scale(-k_s))
}

/// Literal `-k_S (rho - Q_T rho Q_T / Tr(Q_T rho Q_T))`.
fn normalized_kominis(space: &SpinSpace, rho: &CMatrix, k_s: f64) -> Result<CMatrix> {
    require_normalized(rho)?;
    let p_t = space.triplet_trace(rho);
    if !(p_t >= DENOM_FLOOR) {
        return Err(Error::ModelSingular { triplet_trace: p_t });
    }
    let projected = space.sandwich_triplet(rho).unscale(p_t);
    Ok((rho - projected).scale(-k_s))
}

pub fn rhs_jones_hore(rho: &DensityMatrix, params: &RateParams) -> Result<CMatrix> {
    ModelKind::JonesHoreUnnormalized.rhs(rho.space(), rho.matrix(), params)
}

pub fn rhs_haberkorn(rho: &DensityMatrix, params: &RateParams) -> Result<CMatrix> {
    ModelKind::Haberkorn.rhs(rho.space(), rho.matrix(), params)
}

pub fn rhs_normalized_jones_hore(rho_nr: &DensityMatrix, params: &RateParams) -> Result<CMatrix> {
    ModelKind::NormalizedJonesHore.rhs(rho_nr.space(), rho_nr.matrix(), params)
}

pub fn rhs_normalized_kominis(rho_nr: &DensityMatrix, params: &RateParams) -> Result<CMatrix> {
    ModelKind::NormalizedKominis.rhs(rho_nr.space(), rho_nr.matrix(), params)
}
