use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::compare::CriticalPath;
use super::Scenario;
use crate::dag::{Dag, TaskKind, EPS};
use crate::error::{Error, Result};
use crate::length::{critical_path, ResourceAssignment};
use crate::resource::TaskRef;
use crate::sim::{ExecutionTrace, TaskRecord};

/// Where a slow task most likely lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StragglerClass {
    /// A compute task: the host is slow.
    Host,
    /// A flow: the path between its hosts is slow.
    Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub task: TaskRef,
    pub class: StragglerClass,
    /// Resources the task holds.
    pub resource: String,
    /// When the deviation first becomes observable.
    pub detected_at: f64,
    pub expected_finish: f64,
    pub observed_finish: Option<f64>,
    /// Observed progress per unit of allocated rate up to detection.
    pub observed_speed: f64,
    /// The job's critical path over remaining work at detection time, with the
    /// straggler's remainder stretched by its observed slowdown.
    pub critical_path: CriticalPath,
}

/// Relative tolerance for calling two finish times different.
const DEVIATION_TOL: f64 = 1e-6;

fn deviates(expected: Option<f64>, observed: Option<f64>) -> bool {
    match (expected, observed) {
        (Some(e), Some(o)) => (e - o).abs() > DEVIATION_TOL * e.abs().max(1.0),
        (None, None) => false,
        _ => true,
    }
}

fn check_comparable(expected: &ExecutionTrace, observed: &ExecutionTrace) -> Result<()> {
    if expected.scenario != observed.scenario {
        return Err(Error::TraceMismatch(format!(
            "scenario `{}` vs `{}`",
            expected.scenario, observed.scenario
        )));
    }
    let keys = |t: &ExecutionTrace| t.tasks.iter().map(|r| (r.key(), r.size.to_bits())).collect::<BTreeSet<_>>();
    if keys(expected) != keys(observed) {
        return Err(Error::TraceMismatch("task sets or sizes differ".into()));
    }
    Ok(())
}

/// Compares a nominal trace with an observed one of the same scenario and
/// names the task whose finish time deviates first. Returns `None` when the
/// traces agree on every finish time.
pub fn identify_straggler(s: &Scenario, expected: &ExecutionTrace, observed: &ExecutionTrace) -> Result<Option<Diagnosis>> {
    check_comparable(expected, observed)?;
    if expected.scenario != s.name {
        return Err(Error::TraceMismatch(format!("traces are for `{}`, scenario is `{}`", expected.scenario, s.name)));
    }
    let observed_by_key: BTreeMap<String, &TaskRecord> = observed.tasks.iter().map(|t| (t.key(), t)).collect();
    // Earliest observable deviation; on equal times a late task is preferred
    // over one finishing early, then trace order.
    let mut best: Option<(f64, bool, usize, &TaskRecord)> = None;
    for (i, e) in expected.tasks.iter().enumerate() {
        if e.kind.is_dummy() {
            continue;
        }
        let o = observed_by_key[&e.key()];
        if !deviates(e.finish, o.finish) {
            continue;
        }
        let late = match (e.finish, o.finish) {
            (Some(ef), Some(of)) => of > ef,
            (Some(_), None) => true,
            _ => false,
        };
        let at = [e.finish, o.finish].into_iter().flatten().fold(f64::INFINITY, f64::min);
        let better = best.as_ref().is_none_or(|&(bt, bl, _, _)| {
            at < bt - EPS * bt.abs().max(1.0) || ((at - bt).abs() <= EPS * bt.abs().max(1.0) && late && !bl)
        });
        if better {
            best = Some((at, late, i, e));
        }
    }
    let Some((at, _, _, record)) = best else { return Ok(None) };
    let key = record.key();
    let granted = observed.allocated_until(&key, at);
    let progressed = observed.progress_until(&key, at);
    let speed = if granted > EPS { progressed / granted } else { 1.0 };
    let task = TaskRef::new(&record.job, &record.task);
    Ok(Some(Diagnosis {
        class: if record.kind == TaskKind::Flow { StragglerClass::Network } else { StragglerClass::Host },
        resource: record.resource.clone(),
        detected_at: at,
        expected_finish: record.finish.unwrap_or(f64::INFINITY),
        observed_finish: observed_by_key[&key].finish,
        observed_speed: speed,
        critical_path: remaining_critical_path(s, observed, &task, at, speed)?,
        task,
    }))
}

/// Critical path of the straggler's job over work still left at `at`.
fn remaining_critical_path(
    s: &Scenario,
    observed: &ExecutionTrace,
    straggler: &TaskRef,
    at: f64,
    speed: f64,
) -> Result<CriticalPath> {
    let job = s.job(&straggler.job)?;
    let g = job.dag.normalized(&s.topology);
    let mut tasks = g.tasks().to_vec();
    for (i, t) in tasks.iter_mut().enumerate() {
        if t.kind.is_dummy() {
            continue;
        }
        let placed = &job.dag;
        let peak = placed.peak_rate(crate::dag::TaskId(i), &s.topology);
        let key = format!("{}/{}", job.name, t.name);
        let left = (placed.dag.task(crate::dag::TaskId(i)).size - observed.progress_until(&key, at)).max(0.0);
        let mut duration = if peak.is_finite() && peak > 0.0 { left / peak } else { left };
        if t.name == straggler.task && speed > EPS {
            duration /= speed;
        }
        t.size = duration;
        t.unit = duration;
    }
    let remaining = Dag::from_parts(tasks, g.edges().to_vec());
    let (path, length) =
        critical_path(&remaining, remaining.start(), remaining.end(), &ResourceAssignment::full(&remaining))?;
    let names = path
        .tasks()
        .iter()
        .filter(|&&t| !remaining.task(t).kind.is_dummy())
        .map(|&t| remaining.name(t).to_string())
        .collect();
    Ok(CriticalPath { tasks: names, length })
}
