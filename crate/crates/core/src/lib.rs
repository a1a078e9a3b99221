//! Coarse-geometric Hall conductance on finite planar samples.
//!
//! Site clouds and regions live in [`geometry`], three-part partitions and
//! half-space pairs in [`partitions`], tight-binding Hamiltonians and Fermi
//! projections in [`models`], localized operators and their seminorms in
//! [`operators`], and the trilinear pairing with its cross-checks in
//! [`pairing`]. [`experiments`] drives reproducible numerical studies.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod pairing;
pub mod partitions;

pub use error::{Error, Result};
