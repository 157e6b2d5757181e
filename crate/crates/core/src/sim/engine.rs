use std::collections::{BTreeMap, BTreeSet};

use super::{
    ComputeSharing, Event, EventKind, ExecutionTrace, Job, JobRecord, Payload, RateSegment, SegmentRate, SimOptions,
    TaskRecord, View, World,
};
use crate::dag::{TaskKind, EPS};
use crate::error::{Error, Result};
use crate::resource::{check_capacity, Topology};
use crate::sched::Policy;

/// Runs `jobs` under `policy` until every job completes.
pub fn simulate(jobs: &[Job], topo: &Topology, policy: &dyn Policy, options: &SimOptions) -> Result<ExecutionTrace> {
    let world = World::build(jobs, topo, policy.pipelining())?;
    simulate_world(&world, policy, options)
}

/// Like [`simulate`] but reuses a prepared world. The world's pipelining
/// must match the policy's.
pub fn simulate_world(world: &World, policy: &dyn Policy, options: &SimOptions) -> Result<ExecutionTrace> {
    Engine::new(world, policy, options)?.run()
}

struct Onset {
    time: f64,
    task: usize,
    factor: f64,
    applied: bool,
}

struct Engine<'a> {
    world: &'a World,
    policy: &'a dyn Policy,
    options: &'a SimOptions,
    done: Vec<f64>,
    granted: Vec<f64>,
    units: Vec<usize>,
    enabled: Vec<Option<f64>>,
    started: Vec<Option<f64>>,
    finished: Vec<Option<f64>>,
    factor: Vec<f64>,
    released: Vec<bool>,
    onsets: Vec<Onset>,
    events: Vec<Event>,
    segments: Vec<RateSegment>,
    warnings: Vec<String>,
    last_rates: BTreeMap<String, f64>,
}

impl<'a> Engine<'a> {
    fn new(world: &'a World, policy: &'a dyn Policy, options: &'a SimOptions) -> Result<Self> {
        let n = world.tasks.len();
        let mut onsets = Vec::new();
        for s in &options.stragglers {
            s.validate()?;
            let task = world.lookup(&s.task).ok_or_else(|| Error::UnknownTask(s.task.to_string()))?;
            // A factor of one changes nothing, so it must not add a decision point either.
            if s.factor > 1.0 {
                onsets.push(Onset { time: s.onset, task, factor: s.factor, applied: false });
            }
        }
        onsets.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.task.cmp(&b.task)));
        Ok(Engine {
            world,
            policy,
            options,
            done: vec![0.0; n],
            granted: vec![0.0; n],
            units: vec![0; n],
            enabled: vec![None; n],
            started: vec![None; n],
            finished: vec![None; n],
            factor: vec![1.0; n],
            released: vec![false; world.jobs.len()],
            onsets,
            events: Vec::new(),
            segments: Vec::new(),
            warnings: Vec::new(),
            last_rates: BTreeMap::new(),
        })
    }

    fn tol(&self, i: usize) -> f64 {
        1e-9 * self.world.tasks[i].size.max(1.0)
    }

    fn push(&mut self, time: f64, kind: EventKind, subject: String, payload: Option<Payload>) {
        self.events.push(Event { time, kind, subject, payload });
    }

    fn finish(&mut self, i: usize, t: f64) {
        self.finished[i] = Some(t);
        self.push(t, EventKind::TaskFinish, self.world.label(i), None);
        let job = self.world.tasks[i].job;
        if self.world.jobs[job].end() == i {
            self.push(t, EventKind::JobFinish, self.world.jobs[job].name.clone(), None);
        }
    }

    /// Releases jobs, enables tasks and completes zero-work tasks at `t`
    /// until nothing changes.
    fn settle(&mut self, t: f64) {
        loop {
            let mut changed = false;
            for j in 0..self.world.jobs.len() {
                if !self.released[j] && t >= self.world.jobs[j].release - EPS {
                    self.released[j] = true;
                    self.push(t, EventKind::JobRelease, self.world.jobs[j].name.clone(), None);
                    changed = true;
                }
            }
            for i in 0..self.world.tasks.len() {
                let task = &self.world.tasks[i];
                if self.enabled[i].is_none()
                    && self.released[task.job]
                    && task.preds.iter().all(|p| task.relaxed_preds.contains(p) || self.finished[*p].is_some())
                {
                    self.enabled[i] = Some(t);
                    self.push(t, EventKind::TaskEnabled, self.world.label(i), None);
                    changed = true;
                }
                let task = &self.world.tasks[i];
                if self.enabled[i].is_some()
                    && self.finished[i].is_none()
                    && task.size <= self.tol(i)
                    && task.preds.iter().all(|p| self.finished[*p].is_some())
                {
                    self.started[i] = Some(t);
                    self.units[i] = task.boundaries.len();
                    self.push(t, EventKind::TaskStart, self.world.label(i), None);
                    self.finish(i, t);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Whether every relaxed predecessor has delivered the input the next
    /// unit needs.
    fn input_ready(&self, i: usize) -> bool {
        let task = &self.world.tasks[i];
        if task.relaxed_preds.is_empty() {
            return true;
        }
        let Some(&b) = task.boundaries.get(self.units[i]) else { return false };
        let need = b / task.size;
        task.relaxed_preds.iter().all(|&p| {
            let producer = &self.world.tasks[p];
            let have = match self.units[p] {
                0 => 0.0,
                u => producer.boundaries[u - 1] / producer.size,
            };
            have >= need - 1e-12
        })
    }

    fn runnable(&self) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.world.tasks.len())
            .filter(|&i| {
                self.enabled[i].is_some()
                    && self.finished[i].is_none()
                    && self.world.tasks[i].size > 0.0
                    && self.input_ready(i)
            })
            .collect();
        if self.options.compute_sharing == ComputeSharing::Exclusive {
            // One compute task per host: the one already running, else the
            // earliest enabled.
            let mut holder: BTreeMap<usize, usize> = BTreeMap::new();
            let key = |k: usize| (self.started[k].is_none(), self.enabled[k].unwrap_or(f64::INFINITY), k);
            for &i in &out {
                let t = &self.world.tasks[i];
                if t.kind != TaskKind::Compute {
                    continue;
                }
                let host = t.demand.uses[0].0;
                let better = holder.get(&host).is_none_or(|&h| {
                    let (a, b) = (key(i), key(h));
                    (a.0, a.1.total_cmp(&b.1), a.2) < (b.0, std::cmp::Ordering::Equal, b.2)
                });
                if better {
                    holder.insert(host, i);
                }
            }
            out.retain(|&i| {
                let t = &self.world.tasks[i];
                t.kind != TaskKind::Compute || holder.get(&t.demand.uses[0].0) == Some(&i)
            });
        }
        out
    }

    fn visible_remaining(&self) -> Vec<f64> {
        (0..self.world.tasks.len())
            .map(|i| {
                if self.finished[i].is_some() {
                    return 0.0;
                }
                let size = self.world.tasks[i].size;
                let expected = size - self.granted[i];
                if expected > self.tol(i) {
                    expected
                } else {
                    size - self.done[i]
                }
            })
            .collect()
    }

    fn apply_onsets(&mut self, t: f64) {
        for k in 0..self.onsets.len() {
            if !self.onsets[k].applied && self.onsets[k].time <= t + EPS {
                self.onsets[k].applied = true;
                let (task, factor) = (self.onsets[k].task, self.onsets[k].factor);
                self.factor[task] = factor;
                self.push(t, EventKind::StragglerOnset, self.world.label(task), Some(Payload::Factor { factor }));
            }
        }
    }

    fn next_external(&self, t: f64) -> Option<f64> {
        let releases = self.world.jobs.iter().zip(&self.released).filter(|(_, r)| !**r).map(|(j, _)| j.release);
        let onsets = self.onsets.iter().filter(|o| !o.applied).map(|o| o.time);
        releases.chain(onsets).filter(|&x| x > t).min_by(f64::total_cmp)
    }

    fn all_done(&self) -> bool {
        self.world.jobs.iter().all(|j| self.finished[j.end()].is_some())
    }

    fn frontier(&self) -> Vec<String> {
        (0..self.world.tasks.len())
            .filter(|&i| self.enabled[i].is_some() && self.finished[i].is_none())
            .map(|i| self.world.label(i))
            .collect()
    }

    fn decide(&mut self, t: f64, runnable: &[usize]) -> Result<Vec<f64>> {
        if self.options.ignore_contention {
            return Ok(runnable.iter().map(|&i| self.world.tasks[i].peak).collect());
        }
        let remaining = self.visible_remaining();
        let finished: Vec<bool> = self.finished.iter().map(Option::is_some).collect();
        let view = View { world: self.world, time: t, runnable, remaining: &remaining, enabled: &self.enabled, finished: &finished };
        let decision = self.policy.decide(&view);
        for w in decision.warnings {
            if !self.warnings.contains(&w) {
                self.warnings.push(w);
            }
        }
        let infeasible = |detail: String| Error::Infeasible { policy: self.policy.name(), time: t, detail };
        if decision.rates.len() != runnable.len() {
            return Err(infeasible(format!("{} rates for {} runnable tasks", decision.rates.len(), runnable.len())));
        }
        let demands = view.demands();
        check_capacity(&decision.rates, &demands, &self.world.caps).map_err(infeasible)?;
        Ok(decision.rates)
    }

    fn run(mut self) -> Result<ExecutionTrace> {
        let mut t: f64 = 0.0;
        self.apply_onsets(t);
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > self.options.max_steps {
                return Err(Error::Deadlock { time: t, frontier: vec![format!("step limit {} reached", self.options.max_steps)] });
            }
            self.settle(t);
            if self.all_done() {
                break;
            }
            let runnable = self.runnable();
            let next = self.next_external(t);
            if runnable.is_empty() {
                match next {
                    Some(te) => {
                        t = te;
                        self.apply_onsets(t);
                        continue;
                    }
                    None => return Err(Error::Deadlock { time: t, frontier: self.frontier() }),
                }
            }
            let rates = self.decide(t, &runnable)?;
            let progress: Vec<f64> = runnable.iter().zip(&rates).map(|(&i, &r)| r / self.factor[i]).collect();

            let mut dt = next.map_or(f64::INFINITY, |te| te - t);
            for (&i, &p) in runnable.iter().zip(&progress) {
                if p > 0.0 {
                    let target = self.world.tasks[i].boundaries[self.units[i]];
                    dt = dt.min(((target - self.done[i]) / p).max(0.0));
                }
            }
            if !dt.is_finite() {
                return Err(Error::Deadlock { time: t, frontier: self.frontier() });
            }

            for (&i, &p) in runnable.iter().zip(&progress) {
                if p > 0.0 && self.started[i].is_none() {
                    self.started[i] = Some(t);
                    self.push(t, EventKind::TaskStart, self.world.label(i), None);
                }
            }
            let current: BTreeMap<String, f64> = runnable
                .iter()
                .zip(&rates)
                .filter(|(_, &r)| r > 0.0)
                .map(|(&i, &r)| (self.world.label(i), r))
                .collect();
            if current != self.last_rates {
                self.push(t, EventKind::RateChange, "*".into(), Some(Payload::Rates { rates: current.clone() }));
                self.last_rates = current;
            }
            if dt > 0.0 {
                let seg_rates = runnable
                    .iter()
                    .zip(rates.iter().zip(&progress))
                    .filter(|(_, (&r, _))| r > 0.0)
                    .map(|(&i, (&rate, &p))| SegmentRate { task: self.world.label(i), rate, progress: p })
                    .collect();
                self.segments.push(RateSegment { start: t, end: t + dt, rates: seg_rates });
            }

            for (k, &i) in runnable.iter().enumerate() {
                self.done[i] += progress[k] * dt;
                self.granted[i] += rates[k] * dt;
            }
            t += dt;

            for (&i, &p) in runnable.iter().zip(&progress) {
                if p <= 0.0 {
                    continue;
                }
                let bounds = &self.world.tasks[i].boundaries;
                let target = bounds[self.units[i]];
                if target - self.done[i] <= self.tol(i) {
                    self.done[i] = target;
                    self.units[i] += 1;
                    if self.units[i] == bounds.len() {
                        self.finish(i, t);
                    } else {
                        let unit = self.units[i];
                        self.push(t, EventKind::UnitComplete, self.world.label(i), Some(Payload::Unit { unit }));
                    }
                }
            }
            self.apply_onsets(t);
        }
        Ok(self.into_trace())
    }

    fn into_trace(self) -> ExecutionTrace {
        let world = self.world;
        let tasks = world
            .tasks
            .iter()
            .enumerate()
            .map(|(i, task)| TaskRecord {
                job: world.jobs[task.job].name.clone(),
                task: task.name.clone(),
                kind: task.kind,
                size: task.size,
                resource: task.resource_label.clone(),
                enabled: self.enabled[i],
                start: self.started[i],
                finish: self.finished[i],
            })
            .collect();
        let jobs = world
            .jobs
            .iter()
            .map(|j| JobRecord { name: j.name.clone(), release: j.release, finish: self.finished[j.end()] })
            .collect();
        let pipelining: BTreeSet<String> = self.policy.pipelining().iter().map(|r| r.to_string()).collect();
        ExecutionTrace {
            scenario: self.options.label.clone(),
            policy: self.policy.name(),
            pipelining: pipelining.into_iter().collect(),
            events: self.events,
            tasks,
            segments: self.segments,
            jobs,
            warnings: self.warnings,
        }
    }
}
