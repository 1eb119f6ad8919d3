//! Scale-restricted metric data structures for point clouds in R^d.
//!
//! A net-forest is the part of a net-tree below a scale `t`: the roots form a
//! `(t, t)`-net and every cluster carries its own hierarchy of nets. Building
//! it only needs near-neighbour queries at radius `t` and `7t`, answered here
//! by p-stable locality-sensitive hashing, so the cost depends on the local
//! (t-restricted) doubling dimension instead of the global one.
//!
//! On top of the forest the crate builds t-restricted well-separated pair and
//! simplicial decompositions, an approximate truncated Čech filtration and an
//! estimate of the restricted doubling dimension. Every structure ships with a
//! brute-force checker in the same module.

pub mod cech;
pub mod cli;
pub mod dimension;
mod error;
pub mod geometry;
pub mod lsh;
pub mod netforest;
pub mod rng;
pub mod suite;
pub mod wspd;
pub mod wssd;

pub use error::{Error, Result};
pub use geometry::PointCloud;
