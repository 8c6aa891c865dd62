//! Geometric quantization workbench for Kähler spaces of constant holomorphic curvature.

pub mod cli;
pub mod fock;
pub mod geometry;
pub mod hproj;
pub mod observables;
pub mod par;
pub mod params;
pub mod quantize;
pub mod symcore;

pub use params::{ModelParams, ParamsError};
