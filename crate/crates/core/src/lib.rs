//! Radius-distribution estimation for stationary Boolean models of discs
//! and balls.
//!
//! Start with [`model::Realization`] to simulate, [`estimators::estimate`] to
//! turn a realization into a weighted measure on radii and
//! [`estimators::WeightedRadiusMeasure::ratio`] to read off `Ĝ(C)`. The guide in
//! `book/` walks through the whole pipeline; its code blocks run as doctests.

pub mod distance;
pub mod emptyspace;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod geometry;
pub mod model;
pub mod quadrature;
pub mod validation;
pub mod variance;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/empty-space.md")]
    mod empty_space {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/edge-effects.md")]
    mod edge_effects {}
    #[doc = include_str!("../../../book/src/distances.md")]
    mod distances {}
    #[doc = include_str!("../../../book/src/variance.md")]
    mod variance {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
