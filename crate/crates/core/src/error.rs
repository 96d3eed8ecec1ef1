use thiserror::Error;

use crate::models::ModelKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spin space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("normalization singular: trace {trace:e} is at or below the floor (all pairs have reacted)")]
    NormalizationSingular { trace: f64 },

    #[error("density matrix is not normalized: trace {trace}")]
    NotNormalized { trace: f64 },

    #[error("model singular: Tr(Q_T rho Q_T) = {triplet_trace:e} is below the denominator floor")]
    ModelSingular { triplet_trace: f64 },

    #[error("model {0} does not accept a Hamiltonian")]
    HamiltonianNotSupported(ModelKind),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("all pairs have reacted: f_0 + f_T = {total:e}")]
    AllReacted { total: f64 },

    #[error("triplet-projected state is absent but omega_T = {omega_t}")]
    MissingTripletState { omega_t: f64 },

    #[error("state is not a kinetic mixture: trace form {trace_form} vs kinetic form {kinetic_form}")]
    MixtureInconsistent { trace_form: f64, kinetic_form: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("positivity violated: min eigenvalue {min_eigenvalue:e} at t = {t}")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },

    #[error("integration of {model} failed at t = {t}: {source}")]
    Integration {
        model: ModelKind,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips `Integration` context and returns the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Integration { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_model_singular(&self) -> bool {
        matches!(self.root(), Error::ModelSingular { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
