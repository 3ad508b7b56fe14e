//! Explicit tube covers for digit-restricted self-similar sets.
//!
//! A digit system `(d, N, digits)` with `digits` a proper subset of
//! `{0,..,N-1}^d` defines a self-similar attractor inside the unit cube. This
//! crate certifies, for such an attractor, a finite set of integer directions
//! with a positive "entropy gap", and uses the certificate to build explicit
//! covers of the attractor by slabs (preimages of intervals under `x -> x.v`)
//! whose total `width^(d-1)` is an exact rational that can be driven below any
//! positive target by raising the subdivision level. Everything a certificate
//! claims is independently checkable: positions and widths are exact integers
//! and rationals, and [`verify`] re-derives them from scratch.
//!
//! Pipeline overview:
//!
//! 1. [`digit_system`]: systems, words, cylinder cubes.
//! 2. [`projection`]: integer directions, projected positions, canonical
//!    representatives.
//! 3. [`entropy`]: base-N entropy, residue distributions, type classes.
//! 4. [`certifier`]: the max-min entropy optimization and its dual
//!    certificate; direction search; an independent grid oracle.
//! 5. [`cover`]: partition of level-n cylinders by deficient direction, slab
//!    and tube accounting, exact and type-aggregated modes.
//! 6. [`verify`]: independent re-verification of cover certificates.
//! 7. [`reduction`]: graph-directed systems with cube isometries reduced to
//!    plain digit systems.
//! 8. [`fourier`]: diagnostic Fourier transforms of the associated
//!    self-similar measures.
//! 9. [`json`]: serialization of every certificate kind.

pub mod certifier;
pub mod cover;
pub mod digit_system;
pub mod entropy;
mod error;
pub mod fourier;
pub mod json;
pub mod projection;
pub mod reduction;
pub mod verify;

mod linalg;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
