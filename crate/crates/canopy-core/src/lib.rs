//! Canopy-layer analysis for forest LiDAR point clouds.
//!
//! The crate stratifies height-normalized point clouds into canopy layers,
//! models how occlusion thins the point density of successive layers, predicts
//! the acquisition density needed to reach a given layer, and scores tree
//! segmentation against surveyed stem maps. A small stand/scan simulator
//! provides ground truth for all of it at desk scale.
//!
//! Everything here is pure computation on in-memory data; file formats and the
//! command-line frontend live in the companion `canopy-cli` crate. The crate is
//! `no_std`-compatible (`default-features = false, features = ["libm"]`) with
//! `alloc`; the default `std` + `parallel` configuration runs per-cell locale
//! analysis on a thread pool.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
// Argument guards are written `!(x > 0.0)` on purpose: NaN must fail
// validation, which the un-negated comparison would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("canopy-core requires either the `std` or the `libm` feature");

pub mod cloud;
pub mod decimate;
pub mod dem;
pub mod error;
pub mod evaluate;
pub mod grid;
pub mod occlusion;
pub mod rng;
pub mod segment;
pub mod simulate;
pub mod stratify;

mod math;

pub use cloud::{compute_afp, point_density, Extent, LidarPoint, PlotGeometry, PointCloud};
pub use error::{Error, Result};
pub use grid::GridIndex;
pub use stratify::{stratify, StratificationResult};
