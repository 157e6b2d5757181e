use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::compare::{critical_paths, CriticalPath};
use super::Scenario;
use crate::dag::TaskKind;
use crate::error::{Error, Result};
use crate::io::ScenarioFile;
use crate::resource::{CoflowGrouping, Location, TaskRef};

/// A single edit applied to a scenario before re-running it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modification {
    /// Adds the task to the pipelining choice, or removes it if present.
    TogglePipelining { task: TaskRef },
    /// New size; the unit is kept unless given (and clamped to the size).
    Resize { task: TaskRef, size: f64, unit: Option<f64> },
    /// Moves a compute task to another host or a flow to another link.
    Replace { task: TaskRef, location: Location },
    /// Replaces (or adds) a named coflow grouping.
    Regroup { grouping: String, groups: CoflowGrouping },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfReport {
    pub policy: String,
    pub before: BTreeMap<String, f64>,
    pub after: BTreeMap<String, f64>,
    /// `after - before` per job.
    pub delta: BTreeMap<String, f64>,
    pub critical_before: BTreeMap<String, CriticalPath>,
    pub critical_after: BTreeMap<String, CriticalPath>,
}

impl WhatIfReport {
    /// Jobs whose critical task sequence differs after the edit.
    pub fn critical_path_changed(&self) -> Vec<&str> {
        self.critical_before
            .iter()
            .filter(|(job, cp)| self.critical_after.get(*job).is_none_or(|after| after.tasks != cp.tasks))
            .map(|(job, _)| job.as_str())
            .collect()
    }
}

fn task_mut<'a>(f: &'a mut ScenarioFile, r: &TaskRef) -> Result<&'a mut crate::io::TaskSection> {
    let job = f.jobs.iter_mut().find(|j| j.id == r.job).ok_or_else(|| Error::Modification(format!("unknown job in `{r}`")))?;
    job.tasks.iter_mut().find(|t| t.id == r.task).ok_or_else(|| Error::Modification(format!("unknown task `{r}`")))
}

/// Applies the edits in order and returns the revalidated scenario.
pub fn apply_modifications(s: &Scenario, mods: &[Modification]) -> Result<Scenario> {
    let mut f = s.to_file();
    for m in mods {
        match m {
            Modification::TogglePipelining { task } => {
                let t = task_mut(&mut f, task)?;
                if !t.unit.is_some_and(|u| u < t.size) {
                    return Err(Error::Modification(format!("`{task}` is not pipelineable")));
                }
                let choice = &mut f.policy.pipelining;
                match choice.iter().position(|r| r == task) {
                    Some(i) => {
                        choice.remove(i);
                    }
                    None => choice.push(task.clone()),
                }
            }
            Modification::Resize { task, size, unit } => {
                if !(size.is_finite() && *size >= 0.0) {
                    return Err(Error::Modification(format!("size {size} for `{task}` must be finite and non-negative")));
                }
                let t = task_mut(&mut f, task)?;
                t.size = *size;
                t.unit = unit.or(t.unit).map(|u| u.min(*size)).filter(|&u| u < *size);
            }
            Modification::Replace { task, location } => {
                let t = task_mut(&mut f, task)?;
                match (t.kind, location) {
                    (TaskKind::Compute, Location::Host(h)) => t.host = Some(h.clone()),
                    (TaskKind::Flow, Location::Link { src, dst }) => {
                        t.src = Some(src.clone());
                        t.dst = Some(dst.clone());
                    }
                    _ => return Err(Error::Modification(format!("location kind does not match `{task}`"))),
                }
            }
            Modification::Regroup { grouping, groups } => {
                f.coflows.insert(grouping.clone(), groups.clone());
            }
        }
    }
    Scenario::from_file(f).map_err(|e| Error::Modification(e.to_string()))
}

/// Runs the scenario's own policy before and after the edits.
pub fn whatif(s: &Scenario, mods: &[Modification]) -> Result<WhatIfReport> {
    let changed = apply_modifications(s, mods)?;
    let before = s.run(s.default_policy()?.as_ref())?;
    let after = changed.run(changed.default_policy()?.as_ref())?;
    let (before, after) = (before.jcts(), after.jcts());
    let delta = before.iter().filter_map(|(j, b)| after.get(j).map(|a| (j.clone(), a - b))).collect();
    Ok(WhatIfReport {
        policy: s.policy.name.clone(),
        before,
        after,
        delta,
        critical_before: critical_paths(s)?,
        critical_after: critical_paths(&changed)?,
    })
}
