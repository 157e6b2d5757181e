//! Deterministic event-driven fluid simulator.
//!
//! Tasks progress continuously at the rate the policy grants; the policy is
//! consulted again whenever a task is enabled, a task or pipeline unit
//! completes, a job is released, or a straggler sets in.

mod engine;
mod oracle;
mod soundness;
mod straggler;
mod trace;

pub use engine::{simulate, simulate_world};
pub use oracle::unit_pipeline_oracle;
pub use soundness::check_dependencies;
pub use straggler::{inject_straggler, StragglerSpec};
pub use trace::{
    trace_jct, Event, EventKind, ExecutionTrace, GanttRow, JobRecord, Payload, RateSegment, SegmentRate, TaskRecord,
};

use std::collections::BTreeMap;

use crate::dag::{Dag, TaskId, TaskKind, EPS};
use crate::decompose::decompose_dag;
use crate::error::{Error, Result};
use crate::resource::{Demand, PlacedDag, TaskRef, Topology};

/// One placed job with its release time.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub dag: PlacedDag,
    pub release: f64,
}

impl Job {
    pub fn new(name: impl Into<String>, dag: PlacedDag) -> Self {
        Job { name: name.into(), dag, release: 0.0 }
    }

    pub fn released_at(mut self, t: f64) -> Self {
        self.release = t;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComputeSharing {
    /// Concurrent compute tasks on a host split its capacity.
    #[default]
    Shared,
    /// One compute task at a time per host, in enablement order.
    Exclusive,
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub stragglers: Vec<StragglerSpec>,
    /// Every runnable task gets its peak rate regardless of sharing.
    pub ignore_contention: bool,
    pub compute_sharing: ComputeSharing,
    pub max_steps: usize,
    /// Scenario name recorded in the trace header.
    pub label: String,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            stragglers: Vec::new(),
            ignore_contention: false,
            compute_sharing: ComputeSharing::Shared,
            max_steps: 1_000_000,
            label: String::new(),
        }
    }
}

/// Static per-task data, flattened across jobs.
#[derive(Debug, Clone)]
pub struct SimTask {
    pub job: usize,
    pub local: TaskId,
    pub name: String,
    pub kind: TaskKind,
    pub size: f64,
    pub demand: Demand,
    pub resource_label: String,
    pub peak: f64,
    pub preds: Vec<usize>,
    pub succs: Vec<usize>,
    /// Predecessors consumed unit by unit.
    pub relaxed_preds: Vec<usize>,
    /// Cumulative work at each unit boundary (a single entry when the task
    /// is neither a pipelined consumer nor a pipelined producer).
    pub boundaries: Vec<f64>,
}

impl SimTask {
    pub fn task_ref(&self, world: &World) -> TaskRef {
        TaskRef::new(world.jobs[self.job].name.clone(), self.name.clone())
    }

    pub fn unitized(&self) -> bool {
        self.boundaries.len() > 1
    }
}

/// A Copath seen from the simulator: flat head/tail and the tasks strictly
/// inside.
#[derive(Debug, Clone)]
pub struct CopathRegion {
    pub head: usize,
    pub tail: usize,
    pub inner: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SimJob {
    pub name: String,
    pub release: f64,
    pub dag: Dag,
    pub offset: usize,
    pub copaths: Vec<CopathRegion>,
    /// Copaths (indices into `copaths`) enclosing each local task.
    pub enclosing: Vec<Vec<usize>>,
}

impl SimJob {
    pub fn flat(&self, t: TaskId) -> usize {
        self.offset + t.0
    }

    pub fn end(&self) -> usize {
        self.flat(self.dag.end())
    }
}

/// Everything a policy may inspect that does not change during a run.
#[derive(Debug, Clone)]
pub struct World {
    pub jobs: Vec<SimJob>,
    pub tasks: Vec<SimTask>,
    pub caps: Vec<f64>,
    pub topology: Topology,
    index: BTreeMap<TaskRef, usize>,
}

impl World {
    pub fn build(jobs: &[Job], topo: &Topology, pipelining: &std::collections::BTreeSet<TaskRef>) -> Result<World> {
        let mut by_job: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for r in pipelining {
            if !jobs.iter().any(|j| j.name == r.job) {
                return Err(Error::UnknownJob(r.job.clone()));
            }
            by_job.entry(r.job.as_str()).or_default().push(r.task.as_str());
        }
        let caps = topo.capacities();
        let mut out_jobs = Vec::with_capacity(jobs.len());
        let mut tasks = Vec::new();
        let mut index = BTreeMap::new();
        for (ji, job) in jobs.iter().enumerate() {
            if out_jobs.iter().any(|j: &SimJob| j.name == job.name) {
                return Err(Error::Scenario(format!("duplicate job `{}`", job.name)));
            }
            let chosen = by_job.get(job.name.as_str()).cloned().unwrap_or_default();
            let dag = job.dag.dag.clone().with_pipelined(chosen)?;
            let placed = job.dag.with_dag(dag.clone());
            let offset = tasks.len();
            for t in dag.ids() {
                let task = dag.task(t);
                let resources = placed.resources(t);
                let label = resources.iter().map(|r| r.label(topo)).collect::<Vec<_>>().join("+");
                let relaxed_preds: Vec<usize> =
                    dag.predecessors(t).iter().filter(|&&p| dag.is_relaxed(p, t)).map(|p| offset + p.0).collect();
                let produces_units = dag.successors(t).iter().any(|&s| dag.is_relaxed(t, s));
                let boundaries =
                    if !relaxed_preds.is_empty() || produces_units { task.unit_boundaries() } else { vec![task.size] };
                tasks.push(SimTask {
                    job: ji,
                    local: t,
                    name: task.name.clone(),
                    kind: task.kind,
                    size: task.size,
                    demand: Demand::new(resources.iter().map(|r| r.index())),
                    resource_label: label,
                    peak: placed.peak_rate(t, topo),
                    preds: dag.predecessors(t).iter().map(|p| offset + p.0).collect(),
                    succs: dag.successors(t).iter().map(|s| offset + s.0).collect(),
                    relaxed_preds,
                    boundaries,
                });
                index.insert(TaskRef::new(job.name.clone(), task.name.clone()), offset + t.0);
            }
            let decomposition = decompose_dag(&dag);
            let mut copaths = Vec::new();
            let mut enclosing = vec![Vec::new(); dag.len()];
            for c in decomposition.copaths() {
                let inner: Vec<usize> =
                    crate::decompose::Decomposition::Copath(c.clone()).leaves().iter().map(|t| offset + t.0).collect();
                for &i in &inner {
                    enclosing[i - offset].push(copaths.len());
                }
                copaths.push(CopathRegion { head: offset + c.head.0, tail: offset + c.tail.0, inner });
            }
            out_jobs.push(SimJob {
                name: job.name.clone(),
                release: job.release,
                dag,
                offset,
                copaths,
                enclosing,
            });
        }
        Ok(World { jobs: out_jobs, tasks, caps, topology: topo.clone(), index })
    }

    pub fn lookup(&self, r: &TaskRef) -> Option<usize> {
        self.index.get(r).copied()
    }

    pub fn task_ref(&self, i: usize) -> TaskRef {
        self.tasks[i].task_ref(self)
    }

    pub fn label(&self, i: usize) -> String {
        self.task_ref(i).to_string()
    }

    /// Remaining full-rate duration of each task given remaining work.
    pub fn durations(&self, remaining: &[f64]) -> Vec<f64> {
        self.tasks
            .iter()
            .zip(remaining)
            .map(|(t, &r)| if r <= EPS || !t.peak.is_finite() { 0.0 } else { r / t.peak })
            .collect()
    }
}

/// Simulator state exposed to policies at a decision point.
pub struct View<'a> {
    pub world: &'a World,
    pub time: f64,
    /// Tasks with work available now, ascending flat index.
    pub runnable: &'a [usize],
    /// Remaining work as the scheduler sees it (a straggler's shortfall only
    /// becomes visible once its expected work has been granted).
    pub remaining: &'a [f64],
    /// Enablement time of each task, if enabled.
    pub enabled: &'a [Option<f64>],
    pub finished: &'a [bool],
}

impl View<'_> {
    pub fn demands(&self) -> Vec<Demand> {
        self.runnable.iter().map(|&i| self.world.tasks[i].demand.clone()).collect()
    }
}

/// A policy's answer: one rate per runnable task (same order).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Decision {
    pub rates: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Decision {
    pub fn rates(rates: Vec<f64>) -> Self {
        Decision { rates, warnings: Vec::new() }
    }
}
