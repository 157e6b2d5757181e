//! Critical-path co-scheduling.
//!
//! At every decision point the runnable tasks are ranked by their remaining
//! longest path to the job end. Walking that ranking, a task that contends
//! with a higher-ranked task is pushed into a lower strict-priority class,
//! but only if the delay keeps every enclosing Copath's non-critical
//! branches within the Copath's critical length. Otherwise the delay is
//! rolled back and the task shares fairly with its blocker.
//!
//! The altruistic variant ranks all jobs together, least slack first, and
//! lets a job's task yield to another job only within its own slack.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{bottom_levels, remaining_durations, shares_resource, Decision, PipeliningChoice, Policy};
use crate::dag::EPS;
use crate::resource::{tiered_rates, Demand, TaskRef, Tier};
use crate::sim::{View, World};

/// How a delayed task is held back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayMode {
    /// Strict lower priority: the task only gets capacity its blockers leave.
    #[default]
    Gate,
    /// The task keeps a reserved rate just high enough to finish within its
    /// allowed delay; blockers take the rest.
    Throttle,
}

#[derive(Debug, Clone)]
pub struct Principle {
    altruistic: bool,
    mode: DelayMode,
    pub pipelining: PipeliningChoice,
}

/// Critical-path-first scheduling inside each job.
pub fn principle1_policy(pipelining: PipeliningChoice) -> Principle {
    Principle { altruistic: false, mode: DelayMode::Gate, pipelining }
}

/// Critical-path-first scheduling across jobs, with slack donated to other
/// jobs' critical paths.
pub fn principle2_policy() -> Principle {
    Principle { altruistic: true, mode: DelayMode::Gate, pipelining: PipeliningChoice::new() }
}

struct Placement {
    class: usize,
    /// Time the task may be held back without violating its constraints.
    allowance: f64,
    delayed: bool,
}

impl Principle {
    pub fn with_mode(mut self, mode: DelayMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_choice(mut self, pipelining: PipeliningChoice) -> Self {
        self.pipelining = pipelining;
        self
    }

    pub fn is_altruistic(&self) -> bool {
        self.altruistic
    }

    /// Tasks ranked by full-resource longest path to their job end, the
    /// order the policy starts from before any work is done.
    pub fn initial_priority(world: &World) -> Vec<(TaskRef, f64)> {
        let durations: Vec<f64> = world
            .tasks
            .iter()
            .map(|t| if t.size > 0.0 && t.peak.is_finite() { t.size / t.peak } else { 0.0 })
            .collect();
        let levels = bottom_levels(world, &durations);
        let mut ranked: Vec<usize> = (0..world.tasks.len()).filter(|&i| !world.tasks[i].kind.is_dummy()).collect();
        ranked.sort_by(|&a, &b| levels[b].total_cmp(&levels[a]).then(a.cmp(&b)));
        ranked.into_iter().map(|i| (world.task_ref(i), levels[i])).collect()
    }

    /// Longest remaining path from each Copath member to the Copath tail
    /// (tail excluded), and the longest such path per Copath.
    fn copath_lengths(world: &World, durations: &[f64]) -> Vec<(BTreeMap<usize, f64>, f64)> {
        let mut out = Vec::new();
        for job in &world.jobs {
            let order = job.dag.topo_order().expect("validated jobs are acyclic");
            for c in &job.copaths {
                let mut lp: BTreeMap<usize, f64> = BTreeMap::new();
                for &t in order.iter().rev() {
                    let i = job.flat(t);
                    if !c.inner.contains(&i) {
                        continue;
                    }
                    let below = world.tasks[i].succs.iter().filter_map(|s| lp.get(s)).fold(0.0, |a: f64, &b| a.max(b));
                    lp.insert(i, durations[i] + below);
                }
                let critical = lp.values().fold(0.0, |a: f64, &b| a.max(b));
                out.push((lp, critical));
            }
        }
        out
    }

    /// Smallest slack over the Copaths enclosing `i`; `None` when `i` lies on
    /// every path of its job and cannot be delayed at all.
    fn copath_slack(world: &World, i: usize, lengths: &[(BTreeMap<usize, f64>, f64)], copath_base: &[usize]) -> Option<f64> {
        let task = &world.tasks[i];
        let job = &world.jobs[task.job];
        let enclosing = &job.enclosing[task.local.0];
        if enclosing.is_empty() {
            return None;
        }
        let base = copath_base[task.job];
        enclosing
            .iter()
            .map(|&c| {
                let (lp, critical) = &lengths[base + c];
                critical - lp.get(&i).copied().unwrap_or(0.0)
            })
            .min_by(f64::total_cmp)
    }

    fn layer(
        &self,
        view: &View<'_>,
        order: &[usize],
        durations: &[f64],
        job_slack: &[f64],
        lengths: &[(BTreeMap<usize, f64>, f64)],
        copath_base: &[usize],
        notes: &mut Vec<String>,
    ) -> BTreeMap<usize, Placement> {
        let world = view.world;
        let mut placed: BTreeMap<usize, Placement> = BTreeMap::new();
        let mut seen: Vec<usize> = Vec::new();
        for &i in order {
            let blockers: Vec<usize> = seen.iter().copied().filter(|&u| shares_resource(world, u, i)).collect();
            seen.push(i);
            if blockers.is_empty() {
                placed.insert(i, Placement { class: 0, allowance: f64::INFINITY, delayed: false });
                continue;
            }
            let top = blockers.iter().map(|u| placed[u].class).max().unwrap_or(0);
            let delay = blockers.iter().map(|&u| durations[u]).fold(0.0, f64::max);
            let mut allowance = Self::copath_slack(world, i, lengths, copath_base);
            let cross_job = blockers.iter().any(|&u| world.tasks[u].job != world.tasks[i].job);
            if cross_job {
                let own = job_slack[i];
                allowance = Some(allowance.map_or(own, |a| a.min(own)));
            }
            match allowance {
                Some(a) if delay <= a + EPS => {
                    placed.insert(i, Placement { class: top + 1, allowance: a, delayed: true });
                }
                _ => {
                    notes.push(format!(
                        "delay of {} rolled back: it would overrun the critical path, so it shares with its blocker",
                        world.label(i)
                    ));
                    placed.insert(i, Placement { class: top, allowance: f64::INFINITY, delayed: false });
                }
            }
        }
        placed
    }
}

impl Policy for Principle {
    fn name(&self) -> String {
        if self.altruistic { "principle2" } else { "principle1" }.into()
    }

    fn pipelining(&self) -> &PipeliningChoice {
        &self.pipelining
    }

    fn with_pipelining(&self, choice: PipeliningChoice) -> Box<dyn Policy> {
        Box::new(self.clone().with_choice(choice))
    }

    fn decide(&self, view: &View<'_>) -> Decision {
        let world = view.world;
        let durations = remaining_durations(view);
        let levels = bottom_levels(world, &durations);
        let lengths = Self::copath_lengths(world, &durations);
        let mut copath_base = Vec::with_capacity(world.jobs.len());
        let mut acc = 0;
        for job in &world.jobs {
            copath_base.push(acc);
            acc += job.copaths.len();
        }

        // Slack of a task against its own job's longest remaining path.
        let mut job_critical = vec![0.0f64; world.jobs.len()];
        for &i in view.runnable {
            let j = world.tasks[i].job;
            job_critical[j] = job_critical[j].max(levels[i]);
        }
        let job_slack: Vec<f64> =
            (0..world.tasks.len()).map(|i| (job_critical[world.tasks[i].job] - levels[i]).max(0.0)).collect();

        let by_level = |a: &usize, b: &usize| levels[*b].total_cmp(&levels[*a]).then(a.cmp(b));
        let mut notes = Vec::new();
        let placed = if self.altruistic {
            let mut order = view.runnable.to_vec();
            order.sort_by(|a, b| job_slack[*a].total_cmp(&job_slack[*b]).then_with(|| by_level(a, b)));
            self.layer(view, &order, &durations, &job_slack, &lengths, &copath_base, &mut notes)
        } else {
            // Each job is layered on its own; classes merge by index.
            let mut placed = BTreeMap::new();
            for j in 0..world.jobs.len() {
                let mut order: Vec<usize> = view.runnable.iter().copied().filter(|&i| world.tasks[i].job == j).collect();
                order.sort_by(by_level);
                placed.extend(self.layer(view, &order, &durations, &job_slack, &lengths, &copath_base, &mut notes));
            }
            placed
        };

        let classes = placed.values().map(|p| p.class + 1).max().unwrap_or(0);
        let mut slots: Vec<Vec<usize>> = vec![Vec::new(); classes + 1];
        let mut tier_demands: Vec<Tier> = vec![Vec::new(); classes + 1];
        for (k, &i) in view.runnable.iter().enumerate() {
            let p = &placed[&i];
            let demand = world.tasks[i].demand.clone();
            if self.mode == DelayMode::Throttle && p.delayed {
                // Reserve just enough to finish within the allowed delay.
                let allowed = durations[i] + p.allowance;
                let floor = if allowed > 0.0 { view.remaining[i] / allowed } else { f64::INFINITY };
                slots[0].push(k);
                tier_demands[0].push(Demand { cap: floor.min(world.tasks[i].peak), ..demand.clone() });
            }
            slots[p.class + 1].push(k);
            tier_demands[p.class + 1].push(demand);
        }
        let levels_by_tier = tiered_rates(&tier_demands, &world.caps);
        let mut rates = vec![0.0; view.runnable.len()];
        for (slot, lv) in slots.iter().zip(levels_by_tier) {
            for (&k, r) in slot.iter().zip(lv) {
                rates[k] += r;
            }
        }
        Decision { rates, warnings: notes }
    }
}
