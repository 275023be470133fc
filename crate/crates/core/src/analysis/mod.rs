//! The prompt stages and their wiring into the module engine.

mod corpus;
mod graph;
mod stages;

pub use corpus::*;
pub use graph::*;
pub use stages::*;
