use thiserror::Error;

use crate::base::Backend;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("object of size {size} exceeds the size cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("operation `{op}` is not available for backend {backend}")]
    BackendUnsupported { op: &'static str, backend: Backend },

    #[error("backend mismatch: {0} vs {1}")]
    BackendMismatch(Backend, Backend),

    #[error("invalid object: {0}")]
    InvalidObject(String),

    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),

    #[error("not a homomorphism: {0}")]
    NotAHomomorphism(String),

    #[error("invalid groupoid: {0}")]
    InvalidGroupoid(String),

    #[error("invalid functor: {0}")]
    InvalidFunctor(String),

    #[error("groupoid is not an equivalence relation")]
    NotARelation,

    #[error("not a split-epi square: {0}")]
    NotASplitEpiSquare(String),

    #[error("component action not well defined: {0}")]
    ActionNotWellDefined(String),

    #[error("internal disagreement: {0}")]
    InternalDisagreement(String),

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("not orthogonal: {0}")]
    NotOrthogonal(String),

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },

    #[error("undefined reference `{name}` at {line}:{col}")]
    UndefinedReference { name: String, line: usize, col: usize },

    #[error("duplicate name `{name}` at {line}:{col}")]
    DuplicateName { name: String, line: usize, col: usize },
}
