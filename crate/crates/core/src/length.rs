//! Path lengths under a resource assignment.
//!
//! A sequential segment takes `sum(size / rsrc)`. A pipelined segment with a
//! common unit count takes `sum(unit / rsrc) + max(size / rsrc) - max(unit / rsrc)`.
//! Regions compose by summing series parts and taking the longest Copath member.

use std::collections::BTreeMap;

use crate::dag::{enumerate_paths, Dag, Path, TaskId, EPS};
use crate::decompose::{decompose, split_run, Decomposition};
use crate::error::{Error, Result};

/// Fraction of maximum resource granted to each task, in (0, 1].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResourceAssignment(BTreeMap<TaskId, f64>);

impl ResourceAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every task at maximum resource.
    pub fn full(g: &Dag) -> Self {
        ResourceAssignment(g.ids().map(|t| (t, 1.0)).collect())
    }

    pub fn set(&mut self, task: TaskId, fraction: f64) -> &mut Self {
        self.0.insert(task, fraction);
        self
    }

    pub fn with(mut self, task: TaskId, fraction: f64) -> Self {
        self.0.insert(task, fraction);
        self
    }

    pub fn get(&self, task: TaskId) -> Option<f64> {
        self.0.get(&task).copied()
    }

    fn fraction(&self, g: &Dag, task: TaskId) -> Result<f64> {
        match self.0.get(&task) {
            Some(&r) if r > 0.0 && r <= 1.0 + EPS => Ok(r),
            Some(&r) => Err(Error::InvalidAssignment { task: g.name(task).to_string(), value: r }),
            // Zero-size tasks (the dummies) never need a resource.
            None if g.task(task).size == 0.0 => Ok(1.0),
            None => Err(Error::MissingAssignment { task: g.name(task).to_string() }),
        }
    }
}

/// Length of a path with no pipelined edge.
pub fn seq_path_length(g: &Dag, p: &Path, r: &ResourceAssignment) -> Result<f64> {
    for w in p.tasks().windows(2) {
        if g.is_relaxed(w[0], w[1]) {
            return Err(Error::PipelinedInSequential { task: g.name(w[1]).to_string() });
        }
    }
    seq_sum(g, p.tasks(), r)
}

fn seq_sum(g: &Dag, tasks: &[TaskId], r: &ResourceAssignment) -> Result<f64> {
    let mut total = 0.0;
    for &t in tasks {
        total += g.task(t).size / r.fraction(g, t)?;
    }
    Ok(total)
}

/// Length of a fully pipelined chain whose members share one unit count.
pub fn pipe_path_length(g: &Dag, p: &Path, r: &ResourceAssignment) -> Result<f64> {
    pipe_sum(g, p.tasks(), r)
}

fn pipe_sum(g: &Dag, tasks: &[TaskId], r: &ResourceAssignment) -> Result<f64> {
    if tasks.is_empty() {
        return Ok(0.0);
    }
    let first = g.task(tasks[0]);
    let count = first.unit_count();
    let mut sum_unit = 0.0;
    let mut max_size = f64::MIN;
    let mut max_unit = f64::MIN;
    for &t in tasks {
        let task = g.task(t);
        if tasks.len() > 1 && !task.is_pipelineable() {
            return Err(Error::NotPipelineable { task: task.name.clone() });
        }
        let c = task.unit_count();
        if (c - count).abs() > EPS * count.max(1.0) {
            return Err(Error::UnitCountMismatch { task: task.name.clone(), first: count, second: c });
        }
        let frac = r.fraction(g, t)?;
        let unit_time = task.unit / frac;
        sum_unit += unit_time;
        max_size = max_size.max(task.size / frac);
        max_unit = max_unit.max(unit_time);
    }
    Ok(sum_unit + max_size - max_unit)
}

/// Length of an arbitrary path: maximal pipelined runs use the pipelined
/// formula, everything else is summed.
pub fn linear_path_length(g: &Dag, p: &Path, r: &ResourceAssignment) -> Result<f64> {
    let mut total = 0.0;
    for seg in split_run(g, p.tasks().to_vec()) {
        total += leaf_length(g, &seg, r)?;
    }
    Ok(total)
}

fn leaf_length(g: &Dag, d: &Decomposition, r: &ResourceAssignment) -> Result<f64> {
    match d {
        Decomposition::Sequential(ts) => seq_sum(g, ts, r),
        Decomposition::Pipelineable(ts) => pipe_sum(g, ts, r),
        _ => region_length(g, d, r),
    }
}

/// Recursive length of a decomposition tree.
pub fn region_length(g: &Dag, d: &Decomposition, r: &ResourceAssignment) -> Result<f64> {
    match d {
        Decomposition::Sequential(_) | Decomposition::Pipelineable(_) => leaf_length(g, d, r),
        Decomposition::Series(parts) => {
            let mut total = 0.0;
            for part in parts {
                total += region_length(g, part, r)?;
            }
            Ok(total)
        }
        Decomposition::Copath(c) => {
            let mut best: f64 = 0.0;
            for m in &c.members {
                best = best.max(region_length(g, m, r)?);
            }
            Ok(best)
        }
    }
}

/// True when some pipelined edge links a Copath head or tail to one of its
/// members; the segment-sum recursion then under-counts the overlap and the
/// length is taken over enumerated paths instead.
pub fn crosses_copath_boundary(g: &Dag, d: &Decomposition) -> bool {
    d.copaths().iter().any(|c| {
        let inner = Decomposition::Copath((*c).clone()).leaves();
        inner.iter().any(|&t| g.is_relaxed(c.head, t) || g.is_relaxed(t, c.tail))
    })
}

/// Length of the region between `head` and `tail`.
pub fn path_length(g: &Dag, head: TaskId, tail: TaskId, r: &ResourceAssignment) -> Result<f64> {
    let d = decompose(g, head, tail)?;
    if crosses_copath_boundary(g, &d) {
        return longest_by_enumeration(g, head, tail, r);
    }
    region_length(g, &d, r)
}

/// Length of the whole graph, start to end.
pub fn dag_length(g: &Dag, r: &ResourceAssignment) -> Result<f64> {
    path_length(g, g.start(), g.end(), r)
}

/// Maximum linear length over every head-to-tail path.
pub fn longest_by_enumeration(g: &Dag, head: TaskId, tail: TaskId, r: &ResourceAssignment) -> Result<f64> {
    let mut best: f64 = 0.0;
    for p in enumerate_paths(g, head, tail)? {
        best = best.max(linear_path_length(g, &p, r)?);
    }
    Ok(best)
}

/// The longest head-to-tail path; ties go to the lexicographically smaller
/// task-name sequence.
pub fn critical_path(g: &Dag, head: TaskId, tail: TaskId, r: &ResourceAssignment) -> Result<(Path, f64)> {
    let mut best: Option<(Path, f64)> = None;
    for p in enumerate_paths(g, head, tail)? {
        let len = linear_path_length(g, &p, r)?;
        // Enumeration order is already lexicographic, so only strictly longer wins.
        if best.as_ref().is_none_or(|(_, b)| len > b + EPS) {
            best = Some((p, len));
        }
    }
    best.ok_or_else(|| Error::UnknownTask(format!("no path {} -> {}", g.name(head), g.name(tail))))
}
