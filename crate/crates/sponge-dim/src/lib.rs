//! Hausdorff dimension of three-dimensional self-affine Sierpinski sponges.
//!
//! A sponge is the attractor of finitely many affine maps of the unit cube
//! whose contraction ratios are nested along the axes
//! (`a <= b <= c` per box) and whose translations keep the images disjoint
//! and axis-aligned. For such sets the Hausdorff dimension is the supremum,
//! over probability vectors `p` on the column indices, of
//! `lambda1(p) + lambda2(p) + t(p)`; this crate evaluates that objective,
//! maximizes it, constructs the associated one-parameter family of candidate
//! optima, follows pointwise dimension along sampled symbol sequences, and
//! cross-checks everything against a direct box-counting estimate.
//!
//! The numeric core is generic over the floating point scalar through
//! [`Real`]; aliases for the `f64` instantiation of the main types live at
//! the crate root.

pub mod boxes;
pub mod dimension;
pub mod distribution;
pub mod error;
pub mod family;
pub mod hypothesis;
pub mod optimize;
pub mod scalar;
pub mod solve;
pub mod spec;
pub mod symbolic;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations of the core types.
pub type SpongeSpec = spec::SpongeSpec<f64>;
pub type NestedDistribution = distribution::NestedDistribution<f64>;
pub type ValidationReport = spec::ValidationReport;
pub type HypothesisReport = hypothesis::HypothesisReport<f64>;
pub type DimensionReport = optimize::DimensionReport<f64>;
pub type FamilySolution = family::FamilySolution<f64>;
pub type FiberRoots = family::FiberRoots<f64>;
pub type SymbolSequence = symbolic::SymbolSequence;
pub type ApproximateCubeView = symbolic::ApproximateCubeView<f64>;
pub type BoxCover = boxes::BoxCover<f64>;
