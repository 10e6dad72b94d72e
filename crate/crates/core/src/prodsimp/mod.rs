//! Triangulations of a subconfiguration of Δ⁴ × Δⁿ assembled from sixty
//! relabeled copies of the large 3-permutohedron: the ordered gluing, the
//! instance and its blocks, the collections and their hypotheses, and the
//! sector-scale assembly.

use thiserror::Error;

use crate::bigzono::ZonoError;
use crate::regular::RegularError;
use crate::triangulation::TriangulationError;

mod assembly;
mod ensemble;
mod glue;
mod instance;

pub use assembly::*;
pub use ensemble::*;
pub use glue::{check_glue_precondition, pseudoproduct, pseudoproduct_unchecked};
pub use instance::*;

#[derive(Debug, Error)]
pub enum ProdError {
    #[error("pseudoproduct precondition violated: {0}")]
    OverlapViolation(String),
    #[error(transparent)]
    Triangulation(#[from] TriangulationError),
    #[error("heights are not generic: {0}")]
    GenericityFailure(String),
    #[error("pieces disagree: {0}")]
    AssemblyConflict(String),
    #[error("certificate rejected: {0}")]
    CertificateInvalid(String),
    #[error(transparent)]
    Regular(#[from] RegularError),
    #[error(transparent)]
    Zono(Box<ZonoError>),
}

impl From<ZonoError> for ProdError {
    fn from(e: ZonoError) -> Self {
        ProdError::Zono(Box::new(e))
    }
}
