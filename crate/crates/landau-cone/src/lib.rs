//! Landau levels near conical band crossings, at desk scale.
//!
//! The crate takes a two-dimensional periodic Hamiltonian with a Dirac
//! crossing through the whole chain: Bloch bands, the crossing and its
//! hypotheses, the local 2×2 model and its linearization, gap opening and
//! global sections, magnetic matrices and Hofstadter spectra, the 1D
//! semiclassical reduction, the linearized operator `𝔏` and its quasimodes,
//! and the Feshbach–Schur reduction. [`harness`] assembles all of it into a
//! single verification report.

pub mod band;
pub mod bloch;
pub mod dirac;
pub mod feshbach;
pub mod error;
pub mod fd;
pub mod harness;
pub mod hopping;
pub mod linalg;
pub mod local_model;
pub mod magnetic;
pub mod sections;
pub mod semiclassical;
pub mod spectrum;

pub use error::{Error, Result};

// The guide's code listings run as doctests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bloch.md")]
    mod bloch {}
    #[doc = include_str!("../../../book/src/local-model.md")]
    mod local_model {}
    #[doc = include_str!("../../../book/src/sections.md")]
    mod sections {}
    #[doc = include_str!("../../../book/src/magnetic.md")]
    mod magnetic {}
    #[doc = include_str!("../../../book/src/semiclassical.md")]
    mod semiclassical {}
    #[doc = include_str!("../../../book/src/dirac.md")]
    mod dirac {}
    #[doc = include_str!("../../../book/src/feshbach.md")]
    mod feshbach {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
