//! Hosts, placement and instantaneous rate allocation.
//!
//! Contention happens only at host compute capacity and at each NIC
//! direction; the network core is non-blocking. A flow holds egress at its
//! source and ingress at its destination for its whole lifetime.

mod alloc;
mod coflow;

pub use alloc::{
    check_capacity, coflow_rates, max_min_fair, max_min_fair_rates, priority_rates, tiered_rates, Demand,
    RateAllocation, Tier,
};
pub use coflow::{CoflowGrouping, TaskRef};
pub(crate) use alloc::{coflow_group_demands, spread};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, TaskId, TaskKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Host {
    pub id: String,
    /// Work units per second.
    pub compute: f64,
    pub egress: f64,
    pub ingress: f64,
}

impl Host {
    pub fn new(id: impl Into<String>, compute: f64, egress: f64, ingress: f64) -> Self {
        Host { id: id.into(), compute, egress, ingress }
    }

    /// Unit capacity in every dimension.
    pub fn unit(id: impl Into<String>) -> Self {
        Host::new(id, 1.0, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resource {
    Compute(usize),
    Egress(usize),
    Ingress(usize),
}

impl Resource {
    pub fn index(self) -> usize {
        match self {
            Resource::Compute(h) => 3 * h,
            Resource::Egress(h) => 3 * h + 1,
            Resource::Ingress(h) => 3 * h + 2,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i % 3 {
            0 => Resource::Compute(i / 3),
            1 => Resource::Egress(i / 3),
            _ => Resource::Ingress(i / 3),
        }
    }

    pub fn label(self, topo: &Topology) -> String {
        match self {
            Resource::Compute(h) => format!("{}:cpu", topo.hosts[h].id),
            Resource::Egress(h) => format!("{}:egress", topo.hosts[h].id),
            Resource::Ingress(h) => format!("{}:ingress", topo.hosts[h].id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub hosts: Vec<Host>,
}

impl Topology {
    pub fn new(hosts: Vec<Host>) -> Result<Self> {
        let t = Topology { hosts };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (i, h) in self.hosts.iter().enumerate() {
            if seen.insert(h.id.as_str(), i).is_some() {
                return Err(Error::Scenario(format!("duplicate host `{}`", h.id)));
            }
            for (what, v) in [("compute", h.compute), ("egress", h.egress), ("ingress", h.ingress)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Scenario(format!("host `{}` has non-positive {what} capacity", h.id)));
                }
            }
        }
        Ok(())
    }

    pub fn host_index(&self, id: &str) -> Result<usize> {
        self.hosts.iter().position(|h| h.id == id).ok_or_else(|| Error::UnknownHost(id.to_string()))
    }

    /// Capacity vector indexed by [`Resource::index`].
    pub fn capacities(&self) -> Vec<f64> {
        self.hosts.iter().flat_map(|h| [h.compute, h.egress, h.ingress]).collect()
    }

    pub fn capacity(&self, r: Resource) -> f64 {
        self.capacities()[r.index()]
    }
}

/// Where a task runs, by host id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Host(String),
    Link { src: String, dst: String },
}

/// Task name to location.
pub type Placement = BTreeMap<String, Location>;

/// Resolved location using host indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placed {
    None,
    Host(usize),
    Link(usize, usize),
}

#[derive(Debug, Clone)]
pub struct PlacedDag {
    pub dag: Dag,
    placed: Vec<Placed>,
}

impl PlacedDag {
    pub fn placed(&self, t: TaskId) -> Placed {
        self.placed[t.0]
    }

    /// Resources held by a task while it runs.
    pub fn resources(&self, t: TaskId) -> Vec<Resource> {
        match self.placed[t.0] {
            Placed::None => Vec::new(),
            Placed::Host(h) => vec![Resource::Compute(h)],
            Placed::Link(s, d) => vec![Resource::Egress(s), Resource::Ingress(d)],
        }
    }

    /// Rate of a task running alone: its tightest resource capacity.
    pub fn peak_rate(&self, t: TaskId, topo: &Topology) -> f64 {
        let caps = topo.capacities();
        self.resources(t).iter().map(|r| caps[r.index()]).fold(f64::INFINITY, f64::min)
    }

    /// The same graph with sizes and units divided by each task's peak rate,
    /// so that a full assignment yields wall-clock durations.
    pub fn normalized(&self, topo: &Topology) -> Dag {
        let mut tasks = self.dag.tasks().to_vec();
        for (i, t) in tasks.iter_mut().enumerate() {
            let peak = self.peak_rate(TaskId(i), topo);
            if peak.is_finite() && t.size > 0.0 {
                t.size /= peak;
                t.unit /= peak;
            }
        }
        let pipelined = self.dag.pipelined_names();
        Dag::from_parts(tasks, self.dag.edges().to_vec())
            .with_pipelined(pipelined.iter().map(String::as_str))
            .expect("same pipelineable tasks")
    }

    /// Placement back in name form.
    pub fn placement(&self, topo: &Topology) -> Placement {
        let mut out = Placement::new();
        for t in self.dag.ids() {
            let loc = match self.placed[t.0] {
                Placed::None => continue,
                Placed::Host(h) => Location::Host(topo.hosts[h].id.clone()),
                Placed::Link(s, d) => Location::Link { src: topo.hosts[s].id.clone(), dst: topo.hosts[d].id.clone() },
            };
            out.insert(self.dag.name(t).to_string(), loc);
        }
        out
    }

    pub fn with_dag(&self, dag: Dag) -> PlacedDag {
        PlacedDag { dag, placed: self.placed.clone() }
    }
}

/// Binds every non-dummy task to hosts and checks flow endpoints against
/// neighbouring tasks. All inconsistencies are reported together.
pub fn place(g: &Dag, topo: &Topology, spec: &Placement) -> Result<PlacedDag> {
    let mut issues = Vec::new();
    let mut placed = vec![Placed::None; g.len()];
    let index: HashMap<&str, usize> = topo.hosts.iter().enumerate().map(|(i, h)| (h.id.as_str(), i)).collect();
    let host = |id: &str, issues: &mut Vec<String>| -> Option<usize> {
        let found = index.get(id).copied();
        if found.is_none() {
            issues.push(format!("unknown host `{id}`"));
        }
        found
    };
    for name in spec.keys() {
        if g.id(name).is_err() {
            issues.push(format!("placement for unknown task `{name}`"));
        }
    }
    for t in g.ids() {
        let task = g.task(t);
        let loc = spec.get(&task.name);
        match (task.kind, loc) {
            (TaskKind::Start | TaskKind::End, None) => {}
            (TaskKind::Start | TaskKind::End, Some(_)) => issues.push(format!("dummy task `{}` cannot be placed", task.name)),
            (_, None) => issues.push(format!("task `{}` is not placed", task.name)),
            (TaskKind::Compute, Some(Location::Host(h))) => {
                if let Some(h) = host(h, &mut issues) {
                    placed[t.0] = Placed::Host(h);
                }
            }
            (TaskKind::Flow, Some(Location::Link { src, dst })) => {
                let (s, d) = (host(src, &mut issues), host(dst, &mut issues));
                if let (Some(s), Some(d)) = (s, d) {
                    if s == d {
                        issues.push(format!("flow `{}` has identical source and destination", task.name));
                    }
                    placed[t.0] = Placed::Link(s, d);
                }
            }
            (TaskKind::Compute, Some(_)) => issues.push(format!("compute task `{}` needs a host", task.name)),
            (TaskKind::Flow, Some(_)) => issues.push(format!("flow `{}` needs a source and destination", task.name)),
        }
    }
    // Endpoint consistency with producers and consumers.
    for t in g.ids() {
        let Placed::Link(s, d) = placed[t.0] else { continue };
        for &p in g.predecessors(t) {
            let producer_host = match placed[p.0] {
                Placed::Host(h) => Some(h),
                Placed::Link(_, pd) => Some(pd),
                Placed::None => None,
            };
            if let Some(h) = producer_host.filter(|&h| h != s) {
                issues.push(format!(
                    "flow `{}` leaves `{}` but its producer `{}` is on `{}`",
                    g.name(t),
                    topo.hosts[s].id,
                    g.name(p),
                    topo.hosts[h].id
                ));
            }
        }
        for &c in g.successors(t) {
            if let Placed::Host(h) = placed[c.0] {
                if h != d {
                    issues.push(format!(
                        "flow `{}` arrives at `{}` but its consumer `{}` is on `{}`",
                        g.name(t),
                        topo.hosts[d].id,
                        g.name(c),
                        topo.hosts[h].id
                    ));
                }
            }
        }
    }
    if issues.is_empty() {
        Ok(PlacedDag { dag: g.clone(), placed })
    } else {
        Err(Error::Placement(issues.join("; ")))
    }
}
