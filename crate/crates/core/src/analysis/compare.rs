use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::error::Result;
use crate::exec::map_par;
use crate::length::{critical_path, ResourceAssignment};
use crate::resource::{Resource, Topology};
use crate::sim::ExecutionTrace;

/// Busy fraction of one resource over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    pub resource: String,
    /// `(start, end, used / capacity)` for every interval with any use.
    pub intervals: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub policy: String,
    pub jcts: BTreeMap<String, f64>,
    pub utilization: Vec<Utilization>,
}

/// JCT of `job` under `to` minus its JCT under `from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JctDelta {
    pub from: String,
    pub to: String,
    pub job: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPath {
    pub tasks: Vec<String>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub results: Vec<PolicyResult>,
    /// Full-resource critical path per job.
    pub critical_paths: BTreeMap<String, CriticalPath>,
    pub deltas: Vec<JctDelta>,
}

impl ComparisonReport {
    pub fn jct(&self, policy: &str, job: &str) -> Option<f64> {
        self.results.iter().find(|r| r.policy == policy)?.jcts.get(job).copied()
    }

    /// The policy with the smallest total JCT (first listed on ties).
    pub fn best(&self) -> Option<&str> {
        let total = |r: &PolicyResult| r.jcts.values().sum::<f64>();
        self.results
            .iter()
            .fold(None::<&PolicyResult>, |best, r| match best {
                Some(b) if total(b) <= total(r) + crate::dag::EPS => Some(b),
                _ => Some(r),
            })
            .map(|r| r.policy.as_str())
    }

    /// `policy,job,jct` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,job,jct\n");
        for r in &self.results {
            for (job, jct) in &r.jcts {
                out.push_str(&format!("{},{},{}\n", r.policy, job, jct));
            }
        }
        out
    }

    /// Aligned plain-text table, one row per policy.
    pub fn to_table(&self) -> String {
        let jobs: Vec<&String> = self.critical_paths.keys().collect();
        let width = self.results.iter().map(|r| r.policy.len()).max().unwrap_or(6).max(6);
        let mut out = format!("{:width$}", "policy");
        for j in &jobs {
            out.push_str(&format!("  {:>10}", j));
        }
        out.push('\n');
        for r in &self.results {
            out.push_str(&format!("{:width$}", r.policy));
            for j in &jobs {
                out.push_str(&format!("  {:>10}", r.jcts.get(*j).map_or("-".into(), |v| format!("{v:.4}"))));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-resource utilization recomputed from a trace's rate segments.
pub fn utilization(trace: &ExecutionTrace, topo: &Topology) -> Vec<Utilization> {
    let caps = topo.capacities();
    let labels: BTreeMap<String, f64> =
        (0..caps.len()).map(|i| (Resource::from_index(i).label(topo), caps[i])).collect();
    let resource_of: BTreeMap<String, &str> = trace.tasks.iter().map(|t| (t.key(), t.resource.as_str())).collect();
    let mut out: BTreeMap<&str, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for seg in &trace.segments {
        let mut used: BTreeMap<&str, f64> = BTreeMap::new();
        for r in &seg.rates {
            let Some(res) = resource_of.get(&r.task) else { continue };
            for label in res.split('+').filter(|l| !l.is_empty()) {
                *used.entry(label).or_insert(0.0) += r.rate;
            }
        }
        for (label, u) in used {
            let cap = labels.get(label).copied().unwrap_or(1.0);
            out.entry(label).or_default().push((seg.start, seg.end, u / cap));
        }
    }
    out.into_iter().map(|(resource, intervals)| Utilization { resource: resource.to_string(), intervals }).collect()
}

/// Full-resource critical path of each job, honouring the scenario's
/// configured pipelining.
pub fn critical_paths(s: &Scenario) -> Result<BTreeMap<String, CriticalPath>> {
    let mut out = BTreeMap::new();
    for job in &s.jobs {
        let chosen = s.policy.pipelining.iter().filter(|r| r.job == job.name).map(|r| r.task.as_str());
        let g = job.dag.normalized(&s.topology).with_pipelined(chosen)?;
        let (path, length) = critical_path(&g, g.start(), g.end(), &ResourceAssignment::full(&g))?;
        let tasks = path
            .tasks()
            .iter()
            .filter(|&&t| !g.task(t).kind.is_dummy())
            .map(|&t| g.name(t).to_string())
            .collect();
        out.insert(job.name.clone(), CriticalPath { tasks, length });
    }
    Ok(out)
}

/// Runs the scenario once per policy name (in parallel when enabled) and
/// collates JCTs, utilization and pairwise deltas.
pub fn compare_policies(s: &Scenario, policies: &[&str]) -> Result<ComparisonReport> {
    let traces: Vec<Result<ExecutionTrace>> = map_par(policies, |name| s.run_named(name));
    let mut results = Vec::with_capacity(policies.len());
    for (name, trace) in policies.iter().zip(traces) {
        let trace = trace?;
        results.push(PolicyResult {
            policy: name.to_string(),
            jcts: trace.jcts(),
            utilization: utilization(&trace, &s.topology),
        });
    }
    let mut deltas = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            for (job, ja) in &a.jcts {
                if let Some(jb) = b.jcts.get(job) {
                    deltas.push(JctDelta { from: a.policy.clone(), to: b.policy.clone(), job: job.clone(), delta: jb - ja });
                }
            }
        }
    }
    Ok(ComparisonReport { scenario: s.name.clone(), results, critical_paths: critical_paths(s)?, deltas })
}
