//! Object-relative topological navigation on synthetic 2.5D worlds.
//!
//! The pipeline: render a prior traversal into frames, build an object-level
//! scene graph, localize query observations against it, paint per-object path
//! lengths into a costmap, and steer a unicycle agent from that costmap.

pub mod controller;
pub mod costmap;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod mask;
pub mod planner;
pub mod scenegraph;
pub mod seed;
pub mod world;

pub use error::{Error, Result};
