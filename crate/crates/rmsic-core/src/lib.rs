//! Construction of ghost and live SIC fiducial projectors from number-theoretic
//! data attached to real quadratic fields.
//!
//! The pipeline starts from an admissible tuple `(d, r, Q)` — a dimension, a
//! rank, and an indefinite binary quadratic form — derives the associated
//! field data (fundamental unit, conductor sequence, stabilizer matrices) and
//! evaluates the Shintani–Faddeev modular cocycle at the real-multiplication
//! point fixed by the stabilizer.  The resulting real "ghost overlaps" are
//! assembled into a non-Hermitian rank-r projector, verified against the
//! twisted convolution identity, and (for rank 1) converted into a live SIC
//! fiducial by recognizing field invariants and applying the sign-switching
//! Galois automorphism.

pub mod bigc;
mod error;
pub mod ghost;
pub mod hjcf;
pub mod necromancy;
pub mod numtheory;
pub mod phases;
pub mod quadforms;
pub mod sf;
pub mod towers;
pub mod weylheis;

pub use bigc::{BigComplex, BigReal};
pub use error::Error;
pub use ghost::{GhostFiducial, GhostOverlapTable};
pub use necromancy::{GhostVector, InvariantSet, SicCandidate};
pub use numtheory::{Discriminant, QuadInt};
pub use phases::RootOfUnity;
pub use quadforms::{Mat2Z, QuadForm};
pub use towers::{AdmissibleTuple, GridEntry};
pub use weylheis::CMatrix;

pub type Result<T> = std::result::Result<T, Error>;
