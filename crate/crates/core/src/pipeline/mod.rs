//! Module engine: hard/soft dependency resolution, sequential execution with
//! partial-failure semantics, and the run-scoped artifact store.
//!
//! A hard dependency must succeed or its dependents are skipped. A soft
//! dependency only orders execution: when it fails, dependents still run and
//! see its artifacts as absent.

mod engine;
mod store;

pub use engine::{
    execute, resolve_order, ModuleContext, ModuleFailure, ModuleOutput, ModuleSpec, ModuleStatus,
    PlanError, RunReport,
};
pub use store::{versioned_name, Artifact, ArtifactStore, ArtifactVersion, Payload, StoreError};
