//! Town name in, climate-adaptation report out.
//!
//! The crate acquires Sentinel-2 imagery for a location ([`satellite`]),
//! derives index images ([`raster`]), runs a fixed set of multimodal prompt
//! stages against a pluggable chat backend ([`llm`], [`analysis`]) under a
//! hard/soft dependency module engine ([`pipeline`]), and keeps rubric
//! scores for evaluated reports ([`evaluation`]).

pub mod analysis;
pub mod app;
pub mod config;
pub mod evaluation;
pub mod geo;
pub mod http;
pub mod llm;
pub mod pipeline;
pub mod raster;
pub mod satellite;
