use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dag::{validate, Dag, Task, TaskKind};
use crate::error::{Error, Result};
use crate::io::{JobSection, ScenarioFile, TaskSection, TopologySection};
use crate::resource::{place, CoflowGrouping, Location, Placement, TaskRef, Topology};
use crate::sched::{
    coflow_policy, fair_share_policy, optimal_policy, principle1_policy, principle2_policy, priority_policy,
    CoflowOrder, DelayMode, PipeliningChoice, Policy,
};
use crate::sim::{simulate, ExecutionTrace, Job, SimOptions, StragglerSpec};

/// Policy name plus parameters, as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    /// `fair`, `priority`, `principle1`, `principle2`, `optimal`, `coflow`
    /// (with `grouping`) or `coflow-<grouping>`.
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pipelining: Vec<TaskRef>,
    /// Strict order for `priority`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<TaskRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grouping: Option<String>,
    #[serde(default)]
    pub coflow_order: CoflowOrder,
    #[serde(default)]
    pub delay_mode: DelayMode,
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::named("fair")
    }
}

impl PolicySpec {
    pub fn named(name: &str) -> Self {
        PolicySpec {
            name: name.into(),
            pipelining: Vec::new(),
            order: Vec::new(),
            grouping: None,
            coflow_order: CoflowOrder::Fair,
            delay_mode: DelayMode::Gate,
        }
    }
}

/// Policy names understood by [`Scenario::policy`], besides `coflow-<grouping>`.
pub const POLICY_NAMES: &[&str] = &["fair", "priority", "principle1", "principle2", "optimal", "coflow"];

/// A validated, ready-to-simulate scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub topology: Topology,
    pub jobs: Vec<Job>,
    pub coflows: BTreeMap<String, CoflowGrouping>,
    pub policy: PolicySpec,
    pub stragglers: Vec<StragglerSpec>,
}

impl Scenario {
    pub fn from_file(f: ScenarioFile) -> Result<Scenario> {
        let topology = Topology::new(f.topology.hosts)?;
        let mut jobs = Vec::with_capacity(f.jobs.len());
        for js in &f.jobs {
            if jobs.iter().any(|j: &Job| j.name == js.id) {
                return Err(Error::Scenario(format!("duplicate job `{}`", js.id)));
            }
            if js.id.is_empty() || js.id.contains('/') {
                return Err(Error::Scenario(format!("job id `{}` must be non-empty and free of `/`", js.id)));
            }
            if !(js.release.is_finite() && js.release >= 0.0) {
                return Err(Error::Scenario(format!("job `{}` has invalid release {}", js.id, js.release)));
            }
            jobs.push(build_job(js, &topology)?);
        }
        let scenario = Scenario {
            name: f.name,
            description: f.description,
            topology,
            jobs,
            coflows: f.coflows,
            policy: f.policy,
            stragglers: f.stragglers,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_file(&self) -> ScenarioFile {
        let jobs = self
            .jobs
            .iter()
            .map(|j| {
                let placement = j.dag.placement(&self.topology);
                let dag = &j.dag.dag;
                let tasks = dag
                    .tasks()
                    .iter()
                    .filter(|t| !t.kind.is_dummy())
                    .map(|t| {
                        let mut s = match placement.get(&t.name) {
                            Some(Location::Link { src, dst }) => TaskSection::flow(&t.name, t.size, src, dst),
                            Some(Location::Host(h)) => TaskSection::compute(&t.name, t.size, h),
                            None => TaskSection::compute(&t.name, t.size, ""),
                        };
                        s.kind = t.kind;
                        s.unit = (t.unit != t.size).then_some(t.unit);
                        s.class = t.class.clone();
                        s
                    })
                    .collect();
                let edges = dag
                    .edges()
                    .iter()
                    .filter(|(a, b)| !dag.task(*a).kind.is_dummy() && !dag.task(*b).kind.is_dummy())
                    .map(|(a, b)| (dag.name(*a).to_string(), dag.name(*b).to_string()))
                    .collect();
                JobSection { id: j.name.clone(), release: j.release, tasks, edges }
            })
            .collect();
        ScenarioFile {
            name: self.name.clone(),
            description: self.description.clone(),
            topology: TopologySection { hosts: self.topology.hosts.clone() },
            jobs,
            coflows: self.coflows.clone(),
            policy: self.policy.clone(),
            stragglers: self.stragglers.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.jobs.is_empty() {
            return Err(Error::Scenario("no jobs".into()));
        }
        let lookup = |j: &str| self.jobs.iter().find(|x| x.name == j).map(|x| &x.dag.dag);
        for g in self.coflows.values() {
            g.validate(lookup)?;
        }
        for s in &self.stragglers {
            s.validate()?;
            let dag = lookup(&s.task.job).ok_or_else(|| Error::UnknownJob(s.task.job.clone()))?;
            dag.id(&s.task.task)?;
        }
        for r in self.policy.pipelining.iter().chain(&self.policy.order) {
            let dag = lookup(&r.job).ok_or_else(|| Error::UnknownJob(r.job.clone()))?;
            dag.id(&r.task)?;
        }
        if self.policy.name != "optimal" {
            self.policy(&self.policy)?;
        }
        Ok(())
    }

    pub fn job(&self, name: &str) -> Result<&Job> {
        self.jobs.iter().find(|j| j.name == name).ok_or_else(|| Error::UnknownJob(name.to_string()))
    }

    pub fn options(&self) -> SimOptions {
        SimOptions { stragglers: self.stragglers.clone(), label: self.name.clone(), ..SimOptions::default() }
    }

    /// Builds the named policy with this scenario's parameters.
    pub fn policy(&self, spec: &PolicySpec) -> Result<Box<dyn Policy>> {
        let pipelining: PipeliningChoice = spec.pipelining.iter().cloned().collect();
        let coflow = |grouping: &str| -> Result<Box<dyn Policy>> {
            let g = self
                .coflows
                .get(grouping)
                .ok_or_else(|| Error::Policy(format!("unknown coflow grouping `{grouping}`")))?;
            let mut p = coflow_policy(g.clone(), spec.coflow_order).named(format!("coflow-{grouping}"));
            p.pipelining = pipelining.clone();
            Ok(Box::new(p))
        };
        Ok(match spec.name.as_str() {
            "fair" => fair_share_policy().with_pipelining(pipelining),
            "principle1" => Box::new(principle1_policy(pipelining).with_mode(spec.delay_mode)),
            "principle2" => Box::new(principle2_policy().with_mode(spec.delay_mode).with_choice(pipelining)),
            "priority" => priority_policy(spec.order.clone())?.with_pipelining(pipelining),
            "optimal" => {
                let options = SimOptions { label: self.name.clone(), ..SimOptions::default() };
                Box::new(optimal_policy(&self.jobs, &self.topology, pipelining, &options)?)
            }
            "coflow" => match &spec.grouping {
                Some(g) => coflow(g)?,
                None => return Err(Error::Policy("policy `coflow` needs a `grouping`".into())),
            },
            other => match other.strip_prefix("coflow-") {
                Some(g) => coflow(g)?,
                None => {
                    return Err(Error::Policy(format!(
                        "unknown policy `{other}` (known: {}, coflow-<grouping>)",
                        POLICY_NAMES.join(", ")
                    )))
                }
            },
        })
    }

    /// The scenario's own policy parameters under a different policy name.
    pub fn policy_named(&self, name: &str) -> Result<Box<dyn Policy>> {
        let spec = PolicySpec { name: name.to_string(), ..self.policy.clone() };
        self.policy(&spec)
    }

    pub fn default_policy(&self) -> Result<Box<dyn Policy>> {
        self.policy(&self.policy)
    }

    pub fn run(&self, policy: &dyn Policy) -> Result<ExecutionTrace> {
        simulate(&self.jobs, &self.topology, policy, &self.options())
    }

    pub fn run_named(&self, name: &str) -> Result<ExecutionTrace> {
        self.run(self.policy_named(name)?.as_ref())
    }
}

fn build_job(js: &JobSection, topology: &Topology) -> Result<Job> {
    let mut b = Dag::builder();
    let mut placement = Placement::new();
    for t in &js.tasks {
        let mut task = match t.kind {
            TaskKind::Compute => Task::compute(&t.id, t.size),
            TaskKind::Flow => Task::flow(&t.id, t.size),
            k => return Err(Error::Scenario(format!("task `{}` in job `{}` has reserved kind {k:?}", t.id, js.id))),
        };
        if let Some(u) = t.unit {
            task = task.with_unit(u);
        }
        if let Some(c) = &t.class {
            task = task.with_class(c);
        }
        b.add(task);
        let loc = match (t.kind, &t.host, &t.src, &t.dst) {
            (TaskKind::Compute, Some(h), None, None) => Location::Host(h.clone()),
            (TaskKind::Flow, None, Some(s), Some(d)) => Location::Link { src: s.clone(), dst: d.clone() },
            (TaskKind::Compute, ..) => {
                return Err(Error::Scenario(format!("compute task `{}/{}` needs exactly `host`", js.id, t.id)))
            }
            _ => return Err(Error::Scenario(format!("flow `{}/{}` needs exactly `src` and `dst`", js.id, t.id))),
        };
        placement.insert(t.id.clone(), loc);
    }
    for (a, c) in &js.edges {
        b.add_edge(a, c);
    }
    let dag = b.build()?;
    let report = validate(&dag);
    if !report.is_valid() {
        return Err(Error::Scenario(format!("job `{}`: {report}", js.id)));
    }
    let placed = place(&dag, topology, &placement)?;
    Ok(Job { name: js.id.clone(), dag: placed, release: js.release })
}
