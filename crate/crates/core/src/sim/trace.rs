use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dag::{TaskKind, EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    JobRelease,
    TaskEnabled,
    TaskStart,
    UnitComplete,
    TaskFinish,
    RateChange,
    StragglerOnset,
    JobFinish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum Payload {
    Unit { unit: usize },
    Rates { rates: BTreeMap<String, f64> },
    Factor { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// `job/task`, or the job name for job-level events, or `*`.
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub job: String,
    pub task: String,
    pub kind: TaskKind,
    pub size: f64,
    pub resource: String,
    pub enabled: Option<f64>,
    pub start: Option<f64>,
    pub finish: Option<f64>,
}

impl TaskRecord {
    pub fn key(&self) -> String {
        format!("{}/{}", self.job, self.task)
    }
}

/// Allocated rate and actual progress rate (they differ for stragglers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRate {
    pub task: String,
    pub rate: f64,
    pub progress: f64,
}

/// Constant-rate interval between two decision points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSegment {
    pub start: f64,
    pub end: f64,
    pub rates: Vec<SegmentRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub name: String,
    pub release: f64,
    pub finish: Option<f64>,
}

impl JobRecord {
    pub fn jct(&self) -> Option<f64> {
        self.finish.map(|f| f - self.release)
    }
}

/// One row of a Gantt chart: a task's busy interval on its resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanttRow {
    pub task: String,
    pub resource: String,
    pub start: f64,
    pub end: f64,
    pub segments: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub scenario: String,
    pub policy: String,
    pub pipelining: Vec<String>,
    pub events: Vec<Event>,
    pub tasks: Vec<TaskRecord>,
    pub segments: Vec<RateSegment>,
    pub jobs: Vec<JobRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ExecutionTrace {
    pub fn jct(&self, job: &str) -> Option<f64> {
        self.jobs.iter().find(|j| j.name == job).and_then(JobRecord::jct)
    }

    /// JCT of the only job, or the latest completion over all jobs measured
    /// from time zero.
    pub fn makespan(&self) -> f64 {
        self.jobs.iter().filter_map(|j| j.finish).fold(0.0, f64::max)
    }

    /// Sum of job completion times, the quantity searches minimize.
    pub fn total_jct(&self) -> f64 {
        self.jobs.iter().map(|j| j.jct().unwrap_or(f64::INFINITY)).sum()
    }

    pub fn jcts(&self) -> BTreeMap<String, f64> {
        self.jobs.iter().filter_map(|j| Some((j.name.clone(), j.jct()?))).collect()
    }

    pub fn task(&self, key: &str) -> Option<&TaskRecord> {
        self.tasks.iter().find(|t| t.key() == key)
    }

    pub fn finish_of(&self, key: &str) -> Option<f64> {
        self.task(key).and_then(|t| t.finish)
    }

    pub fn start_of(&self, key: &str) -> Option<f64> {
        self.task(key).and_then(|t| t.start)
    }

    /// Work actually completed by `key` during `[0, t]`.
    pub fn progress_until(&self, key: &str, t: f64) -> f64 {
        self.integrate(key, t, |r| r.progress)
    }

    /// Work allocated to `key` during `[0, t]`.
    pub fn allocated_until(&self, key: &str, t: f64) -> f64 {
        self.integrate(key, t, |r| r.rate)
    }

    fn integrate(&self, key: &str, t: f64, f: impl Fn(&SegmentRate) -> f64) -> f64 {
        let mut total = 0.0;
        for s in &self.segments {
            if s.start >= t {
                break;
            }
            let dt = s.end.min(t) - s.start;
            if let Some(r) = s.rates.iter().find(|r| r.task == key) {
                total += f(r) * dt;
            }
        }
        total
    }

    pub fn gantt(&self) -> Vec<GanttRow> {
        let mut per: BTreeMap<&str, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for s in &self.segments {
            for r in &s.rates {
                if r.progress > 0.0 {
                    per.entry(r.task.as_str()).or_default().push((s.start, s.end, r.progress));
                }
            }
        }
        let mut rows = Vec::new();
        for t in &self.tasks {
            if t.kind.is_dummy() {
                continue;
            }
            let (Some(start), Some(end)) = (t.start, t.finish) else { continue };
            let key = t.key();
            let segments = per.remove(key.as_str()).unwrap_or_default();
            rows.push(GanttRow { task: key, resource: t.resource.clone(), start, end, segments });
        }
        rows
    }

    /// Every task's completed work equals its size.
    pub fn check_conservation(&self) -> Result<(), String> {
        for t in &self.tasks {
            if t.kind.is_dummy() || t.finish.is_none() {
                continue;
            }
            let done = self.progress_until(&t.key(), f64::INFINITY);
            if (done - t.size).abs() > 1e-6 * t.size.max(1.0) {
                return Err(format!("{} completed {done} of {}", t.key(), t.size));
            }
        }
        Ok(())
    }

    /// Timeline is ordered and segments tile without overlap.
    pub fn check_monotone(&self) -> Result<(), String> {
        for w in self.events.windows(2) {
            if w[1].time + EPS < w[0].time {
                return Err(format!("event at {} after event at {}", w[1].time, w[0].time));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].start + EPS < w[0].end {
                return Err(format!("segments overlap at {}", w[1].start));
            }
        }
        Ok(())
    }
}

/// JCT of `job` in a finished trace.
pub fn trace_jct(trace: &ExecutionTrace, job: &str) -> crate::error::Result<f64> {
    let record = trace
        .jobs
        .iter()
        .find(|j| j.name == job)
        .ok_or_else(|| crate::error::Error::UnknownJob(job.to_string()))?;
    record.jct().ok_or_else(|| crate::error::Error::Unfinished(job.to_string()))
}
