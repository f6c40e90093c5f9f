//! Wireframe parsing primitives.
//!
//! This crate holds the pure algorithmic side of wireframe parsing: the
//! junction / segment data model and its incidence matrix, ground-truth
//! derivation from labelled segments, the grid + multi-bin junction codec,
//! the junction and heat-map losses with analytic gradients, the
//! junction + heat-map wireframe construction, a randomized Hough baseline,
//! and tolerance-based precision/recall.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, IO and the
//! command-line driver live in `wireframe-cli`.
//!
//! Coordinates are image coordinates: origin at the top-left, `x` to the
//! right, `y` down. Angles are in degrees measured from `+x` toward `+y`.

#![no_std]
#![deny(unsafe_code)]
// negated float comparisons reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod annotate;
pub mod construct;
pub mod error;
pub mod eval;
pub mod geom;
pub mod gridcodec;
pub mod hough;
pub mod loss;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
pub use geom::{Branch, Junction, Point, Segment, Wireframe};
pub use raster::{BinaryMask, HeatMap};
