//! Synthetic training-data generation for manufacturing object detection.

pub mod annotate;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod material;
pub mod math;
pub mod postfx;
pub mod render;
pub mod rng;
pub mod sampler;
