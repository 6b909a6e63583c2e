//! Error type shared by every module of the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:e} below -{threshold:e}")]
    NotPositive { min_eigenvalue: f64, threshold: f64 },

    #[error("operator does not preserve the null space of the form: residual {residual:e} > {threshold:e}")]
    NotQuotientCompatible { residual: f64, threshold: f64 },

    #[error("kernel of the form is not contained in the kernel of the dominated form: residual {residual:e} > {threshold:e}")]
    Undominated { residual: f64, threshold: f64 },

    #[error("invalid tolerance policy: {0}")]
    InvalidTolerance(String),

    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),

    #[error("not a *-automorphism: axiom `{axiom}` fails with residual {residual:e}")]
    NotAutomorphism { axiom: String, residual: f64 },

    #[error("not a conditional expectation: `{property}` fails with residual {residual:e}")]
    NotExpectation { property: String, residual: f64 },

    #[error("not a fundamental symmetry: {property} residual {residual:e}")]
    NotSymmetry { property: String, residual: f64 },

    #[error("not a representation: axiom `{axiom}` fails with residual {residual:e} (witness {witness})")]
    NotRepresentation { axiom: String, residual: f64, witness: String },

    #[error("not pseudo-unitary: residual {residual:e}")]
    NotPseudoUnitary { residual: f64 },

    #[error("pseudo-unitary but not simultaneously unitary: residual {residual:e}")]
    NotSimultaneous { residual: f64 },

    #[error("module mismatch: {0}")]
    ModuleMismatch(String),

    #[error("not a dynamical system: identity `{identity}` fails at group element {element} with residual {residual:e}")]
    NotDynamicalSystem { identity: String, element: usize, residual: f64 },

    #[error("condition (i) violated: {0}")]
    ConditionOneViolated(String),

    #[error("condition (ii) violated: minimal Gram eigenvalue {min_eigenvalue:e}")]
    ConditionTwoViolated { min_eigenvalue: f64 },

    #[error("not a phi-map: residual {residual:e} at module basis pair ({left}, {right})")]
    NotPhiMap { residual: f64, left: usize, right: usize },

    #[error("hypothesis violated: {premise} (residual {residual:e})")]
    HypothesisViolated { premise: String, residual: f64 },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("no instance found: {0}")]
    NoInstanceFound(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("residual too large: `{identity}` residual {residual:e} > {threshold:e}")]
    ResidualTooLarge { identity: String, residual: f64, threshold: f64 },

    #[error("not a group: {0}")]
    NotGroup(String),

    #[error("not covariant: `{identity}` fails at group element {element}, basis element {basis} (residual {residual:e})")]
    NotCovariant { identity: String, element: usize, basis: usize, residual: f64 },

    #[error("dilation subspace not invariant under u'_{element}: residual {residual:e}")]
    NotInvariant { element: usize, residual: f64 },

    #[error("representation intertwining failed: `{identity}` at group element {element} (residual {residual:e})")]
    RepIntertwiningFailed { identity: String, element: usize, residual: f64 },

    #[error("identity `{identity}` residual {residual:e} too large at pair ({left}, {right})")]
    IdentityResidualTooLarge { identity: String, residual: f64, left: usize, right: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed input rather than failed verification.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_) | Error::Dimension(_) | Error::Io(_) | Error::MalformedMatrix(_)
        )
    }
}
