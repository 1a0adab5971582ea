use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("vectors are linearly dependent: {0}")]
    Dependent(String),
    #[error("matrix is not an involution")]
    NotInvolution,
    #[error("matrix is singular")]
    Singular,
    #[error("map does not preserve the lattice: {0}")]
    NotPreserved(String),
    #[error("coset moduli differ")]
    ModulusMismatch,
    #[error("root datum is not of finite type: {0}")]
    NotFiniteType(String),
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("incompatible data: {0}")]
    Incompatible(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("infinitesimal character is not regular: {0}")]
    NonRegular(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("missing table entry: {0}")]
    MissingEntry(String),
    #[error("parameter is not fixed by the automorphism: {0}")]
    NotSigmaFixed(String),
    #[error("no certificate found: {0}")]
    NoCertificate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
