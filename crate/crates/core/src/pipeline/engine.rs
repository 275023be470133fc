use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::store::{Artifact, ArtifactStore};

/// What a module produced. An empty artifact list is a valid success (the
/// module decided there was nothing to do).
#[derive(Debug, Default)]
pub struct ModuleOutput {
    pub artifacts: Vec<Artifact>,
    pub note: Option<String>,
}

impl ModuleOutput {
    pub fn with(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            note: None,
        }
    }

    pub fn nothing(note: impl Into<String>) -> Self {
        Self {
            artifacts: Vec::new(),
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleFailure(pub String);

impl fmt::Display for ModuleFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for ModuleFailure {
    fn from(e: E) -> Self {
        ModuleFailure(e.to_string())
    }
}

/// Read-only view handed to a running module.
pub struct ModuleContext<'a> {
    pub module_id: &'a str,
    pub store: &'a ArtifactStore,
    /// Soft dependencies that exist in the pipeline but did not succeed.
    pub missing_soft_deps: &'a [String],
}

type RunFn = dyn Fn(&ModuleContext<'_>) -> Result<ModuleOutput, ModuleFailure> + Send + Sync;

pub struct ModuleSpec {
    pub id: String,
    pub deps: BTreeSet<String>,
    pub soft_deps: BTreeSet<String>,
    /// Artifact names this module may write a new version of.
    pub revises: BTreeSet<String>,
    run: Box<RunFn>,
}

impl fmt::Debug for ModuleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModuleSpec")
            .field("id", &self.id)
            .field("deps", &self.deps)
            .field("soft_deps", &self.soft_deps)
            .field("revises", &self.revises)
            .finish_non_exhaustive()
    }
}

impl ModuleSpec {
    pub fn new<F>(id: impl Into<String>, run: F) -> Self
    where
        F: Fn(&ModuleContext<'_>) -> Result<ModuleOutput, ModuleFailure> + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            deps: BTreeSet::new(),
            soft_deps: BTreeSet::new(),
            revises: BTreeSet::new(),
            run: Box::new(run),
        }
    }

    pub fn depends_on<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.deps.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn soft_depends_on<I, S>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.soft_deps.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn revises(mut self, artifact: impl Into<String>) -> Self {
        self.revises.insert(artifact.into());
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("duplicate module id {0:?}")]
    DuplicateId(String),
    #[error("module {0:?} depends on itself")]
    SelfDependency(String),
    #[error("module {module:?} lists {dependency:?} as both hard and soft dependency")]
    OverlappingDependency { module: String, dependency: String },
    #[error("module {module:?} has unknown hard dependency {dependency:?}")]
    MissingHardDependency { module: String, dependency: String },
    #[error("dependency cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
}

/// Topological order over hard and (existing) soft edges. Among ready
/// modules the lexicographically smallest id goes first.
pub fn resolve_order(modules: &[ModuleSpec]) -> Result<Vec<String>, PlanError> {
    let mut ids = BTreeSet::new();
    for m in modules {
        if !ids.insert(m.id.as_str()) {
            return Err(PlanError::DuplicateId(m.id.clone()));
        }
    }
    let mut preds: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for m in modules {
        if m.deps.contains(&m.id) || m.soft_deps.contains(&m.id) {
            return Err(PlanError::SelfDependency(m.id.clone()));
        }
        if let Some(d) = m.deps.intersection(&m.soft_deps).next() {
            return Err(PlanError::OverlappingDependency {
                module: m.id.clone(),
                dependency: d.clone(),
            });
        }
        if let Some(d) = m.deps.iter().find(|d| !ids.contains(d.as_str())) {
            return Err(PlanError::MissingHardDependency {
                module: m.id.clone(),
                dependency: d.clone(),
            });
        }
        let p = m
            .deps
            .iter()
            .chain(m.soft_deps.iter().filter(|d| ids.contains(d.as_str())))
            .map(String::as_str)
            .collect();
        preds.insert(m.id.as_str(), p);
    }

    let mut succs: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    for (&id, p) in &preds {
        indegree.insert(id, p.len());
        for &d in p {
            succs.entry(d).or_default().push(id);
        }
    }
    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, &n)| n == 0)
        .map(|(&id, _)| id)
        .collect();
    let mut order = Vec::with_capacity(modules.len());
    while let Some(id) = ready.pop_first() {
        order.push(id.to_owned());
        for &s in succs.get(id).map(Vec::as_slice).unwrap_or_default() {
            let n = indegree.get_mut(s).expect("successor without indegree");
            *n -= 1;
            if *n == 0 {
                ready.insert(s);
            }
        }
    }
    if order.len() < modules.len() {
        return Err(PlanError::CycleDetected(find_cycle(&preds, &indegree)));
    }
    Ok(order)
}

/// Every unresolved node keeps at least one unresolved predecessor, so
/// walking predecessors must revisit a node.
fn find_cycle(
    preds: &BTreeMap<&str, BTreeSet<&str>>,
    indegree: &BTreeMap<&str, usize>,
) -> Vec<String> {
    let stuck = |id: &str| indegree.get(id).is_some_and(|&n| n > 0);
    let start = indegree
        .iter()
        .find(|(_, &n)| n > 0)
        .map(|(&id, _)| id)
        .expect("cycle search without stuck nodes");
    let mut path = vec![start];
    let mut cur = start;
    loop {
        cur = preds[cur]
            .iter()
            .copied()
            .find(|&p| stuck(p))
            .expect("stuck node without stuck predecessor");
        if let Some(pos) = path.iter().position(|&p| p == cur) {
            // path runs against the edges; flip it so each entry precedes the next
            let mut cycle: Vec<String> = path[pos..].iter().rev().map(|s| s.to_string()).collect();
            let smallest = (0..cycle.len()).min_by_key(|&i| &cycle[i]).unwrap_or(0);
            cycle.rotate_left(smallest);
            cycle.push(cycle[0].clone());
            return cycle;
        }
        path.push(cur);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ModuleStatus {
    Succeeded {
        artifacts: Vec<String>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        note: Option<String>,
    },
    Failed {
        reason: String,
    },
    /// `dependency` is the hard dependency that did not succeed; `root_cause`
    /// the failed module at the start of the skip chain.
    Skipped {
        dependency: String,
        root_cause: String,
    },
    NotRun,
}

impl ModuleStatus {
    pub fn succeeded(&self) -> bool {
        matches!(self, ModuleStatus::Succeeded { .. })
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, ModuleStatus::Failed { .. })
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, ModuleStatus::Skipped { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    /// Modules in the order they were attempted (skips included).
    pub order: Vec<String>,
    pub statuses: BTreeMap<String, ModuleStatus>,
    /// Artifact name → producing module of each version, oldest first.
    pub manifest: BTreeMap<String, Vec<String>>,
}

impl RunReport {
    pub fn status(&self, id: &str) -> Option<&ModuleStatus> {
        self.statuses.get(id)
    }

    pub fn ids_where(&self, pred: impl Fn(&ModuleStatus) -> bool) -> BTreeSet<String> {
        self.statuses
            .iter()
            .filter(|(_, s)| pred(s))
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run report serializes")
    }
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs modules sequentially in `plan` order. Failures become statuses;
/// this never aborts early.
pub fn execute(modules: &[ModuleSpec], plan: &[String], store: &mut ArtifactStore) -> RunReport {
    let by_id: BTreeMap<&str, &ModuleSpec> = modules.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut statuses: BTreeMap<String, ModuleStatus> = modules
        .iter()
        .map(|m| (m.id.clone(), ModuleStatus::NotRun))
        .collect();
    let mut order = Vec::with_capacity(plan.len());

    for id in plan {
        let Some(module) = by_id.get(id.as_str()) else {
            continue;
        };
        order.push(id.clone());

        let blocked = module.deps.iter().find_map(|d| match &statuses[d] {
            ModuleStatus::Succeeded { .. } => None,
            ModuleStatus::Skipped { root_cause, .. } => Some((d.clone(), root_cause.clone())),
            _ => Some((d.clone(), d.clone())),
        });
        if let Some((dependency, root_cause)) = blocked {
            log::warn!("{id}: skipped, hard dependency {dependency} did not succeed");
            statuses.insert(
                id.clone(),
                ModuleStatus::Skipped {
                    dependency,
                    root_cause,
                },
            );
            continue;
        }

        let missing_soft: Vec<String> = module
            .soft_deps
            .iter()
            .filter(|d| statuses.get(*d).is_some_and(|s| !s.succeeded()))
            .cloned()
            .collect();
        let ctx = ModuleContext {
            module_id: id,
            store,
            missing_soft_deps: &missing_soft,
        };
        let outcome = catch_unwind(AssertUnwindSafe(|| (module.run)(&ctx))).unwrap_or_else(|p| {
            Err(ModuleFailure(format!(
                "panicked: {}",
                panic_message(p.as_ref())
            )))
        });

        let status = match outcome.and_then(|out| commit(module, out, store)) {
            Ok(status) => status,
            Err(failure) => {
                log::warn!("{id}: failed: {failure}");
                ModuleStatus::Failed { reason: failure.0 }
            }
        };
        statuses.insert(id.clone(), status);
    }

    RunReport {
        order,
        statuses,
        manifest: store.manifest(),
    }
}

/// All-or-nothing: every write is validated before any is applied.
fn commit(
    module: &ModuleSpec,
    out: ModuleOutput,
    store: &mut ArtifactStore,
) -> Result<ModuleStatus, ModuleFailure> {
    let mut seen = BTreeSet::new();
    for a in &out.artifacts {
        if !seen.insert(a.name.as_str()) {
            return Err(ModuleFailure(format!(
                "artifact {:?} emitted twice",
                a.name
            )));
        }
        store.check_write(&a.name, &module.id, module.revises.contains(&a.name))?;
    }
    let names = out.artifacts.iter().map(|a| a.name.clone()).collect();
    for a in out.artifacts {
        let revision = module.revises.contains(&a.name);
        store.insert(a, &module.id, revision)?;
    }
    Ok(ModuleStatus::Succeeded {
        artifacts: names,
        note: out.note,
    })
}
