//! Biorthogonal fidelity toolkit for PT-symmetric non-Hermitian lattice models.
//!
//! * [`biortho`] — paired left/right eigensystems, PT classification, metric operator.
//! * [`lanczos`] — complex-symmetric Lanczos for sparse sectors.
//! * [`fidelity`] — fidelity definitions, susceptibilities, the one-half test.
//! * [`ssh`] — closed forms for the non-Hermitian SSH ladder.
//! * [`xxz`] — the staggered-field XXZ chain in the zero-magnetization sector.

pub mod biortho;
pub mod error;
pub mod fidelity;
pub mod fit;
pub mod lanczos;
pub mod linalg;
pub mod quad;
pub mod sparse;
pub mod ssh;
pub mod xxz;

pub use error::{Error, Result};
pub use linalg::C64;
