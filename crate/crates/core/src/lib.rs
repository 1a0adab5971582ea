//! Exact computations for twisted endoscopic lifting of microlocal characters of real
//! groups: lattices and root data, the torus correspondence, twisted endoscopic data for
//! general linear groups, geometric parameter spaces and the lifting identity.

pub mod cyclotomic;
pub mod endoscopy;
pub mod error;
pub mod geom_params;
pub mod lattice;
pub mod lifting;
pub mod matrix;
pub mod poly;
pub mod rootdata;
pub mod scalar;
pub mod torus_llc;

pub use error::{Error, Result};
