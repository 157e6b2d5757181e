use serde::{Deserialize, Serialize};

use crate::analysis::Scenario;
use crate::error::{Error, Result};
use crate::resource::TaskRef;

/// From `onset` on, `task` progresses `factor` times slower than allocated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StragglerSpec {
    pub task: TaskRef,
    pub factor: f64,
    #[serde(default)]
    pub onset: f64,
}

impl StragglerSpec {
    pub fn new(task: TaskRef, factor: f64) -> Self {
        StragglerSpec { task, factor, onset: 0.0 }
    }

    pub fn at(mut self, onset: f64) -> Self {
        self.onset = onset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.factor.is_finite() && self.factor >= 1.0) {
            return Err(Error::Scenario(format!("straggler factor for {} must be >= 1, got {}", self.task, self.factor)));
        }
        if !(self.onset.is_finite() && self.onset >= 0.0) {
            return Err(Error::Scenario(format!("straggler onset for {} must be >= 0", self.task)));
        }
        Ok(())
    }
}

/// Returns a copy of the scenario with the straggler added. A later spec for
/// the same task replaces an earlier one.
pub fn inject_straggler(scenario: &Scenario, spec: StragglerSpec) -> Result<Scenario> {
    spec.validate()?;
    let job = scenario
        .jobs
        .iter()
        .find(|j| j.name == spec.task.job)
        .ok_or_else(|| Error::UnknownJob(spec.task.job.clone()))?;
    let id = job.dag.dag.id(&spec.task.task)?;
    if job.dag.dag.task(id).kind.is_dummy() {
        return Err(Error::Scenario(format!("cannot slow down dummy task {}", spec.task)));
    }
    let mut out = scenario.clone();
    out.stragglers.retain(|s| s.task != spec.task);
    out.stragglers.push(spec);
    Ok(out)
}
