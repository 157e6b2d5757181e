//! JSON Lines trace container. Each line is one record tagged by `record`:
//! a single `header` first, then `event`, `segment`, `task`, `job`,
//! `warning` and derived `gantt` rows.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Event, ExecutionTrace, GanttRow, JobRecord, RateSegment, TaskRecord};

/// Container format version written into every header.
pub const TRACE_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: u32,
    pub tool: String,
    pub scenario: String,
    pub policy: String,
    #[serde(default)]
    pub pipelining: Vec<String>,
    /// Wall-clock creation time; omitted unless asked for so that repeated
    /// runs produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header(TraceHeader),
    Event(Event),
    Segment(RateSegment),
    Task(TaskRecord),
    Job(JobSummary),
    Warning { message: String },
    Gantt(GanttRow),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct JobSummary {
    #[serde(flatten)]
    record: JobRecord,
    /// Redundant with `finish - release`; written for readers that only scan
    /// summary lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jct: Option<f64>,
}

pub fn trace_header(trace: &ExecutionTrace) -> TraceHeader {
    TraceHeader {
        format: TRACE_FORMAT,
        tool: format!("mxdag {}", env!("CARGO_PKG_VERSION")),
        scenario: trace.scenario.clone(),
        policy: trace.policy.clone(),
        pipelining: trace.pipelining.clone(),
        created: None,
    }
}

/// Serializes a trace with the default header.
pub fn write_trace(trace: &ExecutionTrace) -> String {
    write_trace_with(trace, &trace_header(trace))
}

pub fn write_trace_with(trace: &ExecutionTrace, header: &TraceHeader) -> String {
    let mut out = String::new();
    let mut line = |r: Record| {
        out.push_str(&serde_json::to_string(&r).expect("trace records serialize"));
        out.push('\n');
    };
    line(Record::Header(header.clone()));
    trace.events.iter().for_each(|e| line(Record::Event(e.clone())));
    trace.segments.iter().for_each(|s| line(Record::Segment(s.clone())));
    trace.tasks.iter().for_each(|t| line(Record::Task(t.clone())));
    trace.jobs.iter().for_each(|j| line(Record::Job(JobSummary { jct: j.jct(), record: j.clone() })));
    trace.warnings.iter().for_each(|w| line(Record::Warning { message: w.clone() }));
    trace.gantt().into_iter().for_each(|g| line(Record::Gantt(g)));
    out
}

/// Parses a trace written by [`write_trace`]. Gantt rows are derived data
/// and are checked against the rebuilt trace rather than stored.
pub fn read_trace(text: &str) -> Result<(TraceHeader, ExecutionTrace)> {
    let mut header = None;
    let mut trace = ExecutionTrace {
        scenario: String::new(),
        policy: String::new(),
        pipelining: Vec::new(),
        events: Vec::new(),
        tasks: Vec::new(),
        segments: Vec::new(),
        jobs: Vec::new(),
        warnings: Vec::new(),
    };
    let mut gantt = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(raw).map_err(|e| Error::Parse(format!("trace line {}: {e}", n + 1)))?;
        match (record, &header) {
            (Record::Header(h), None) => {
                if h.format != TRACE_FORMAT {
                    return Err(Error::Parse(format!("unsupported trace format {}", h.format)));
                }
                trace.scenario = h.scenario.clone();
                trace.policy = h.policy.clone();
                trace.pipelining = h.pipelining.clone();
                header = Some(h);
            }
            (Record::Header(_), Some(_)) => return Err(Error::Parse(format!("trace line {}: second header", n + 1))),
            (_, None) => return Err(Error::Parse(format!("trace line {}: record before header", n + 1))),
            (Record::Event(e), _) => trace.events.push(e),
            (Record::Segment(s), _) => trace.segments.push(s),
            (Record::Task(t), _) => trace.tasks.push(t),
            (Record::Job(j), _) => trace.jobs.push(j.record),
            (Record::Warning { message }, _) => trace.warnings.push(message),
            (Record::Gantt(g), _) => gantt.push(g),
        }
    }
    let header = header.ok_or_else(|| Error::Parse("empty trace".into()))?;
    if gantt != trace.gantt() {
        return Err(Error::Parse("gantt rows disagree with segments".into()));
    }
    Ok((header, trace))
}

/// Gantt rows flattened to `task,resource,start,end,rate` (one line per
/// constant-rate piece).
pub fn gantt_csv(trace: &ExecutionTrace) -> String {
    let mut out = String::from("task,resource,start,end,rate\n");
    for row in trace.gantt() {
        for (s, e, r) in &row.segments {
            let _ = writeln!(out, "{},{},{},{},{}", row.task, row.resource, s, e, r);
        }
    }
    out
}

/// Per-task summary as `job,task,kind,size,start,finish`.
pub fn summary_csv(trace: &ExecutionTrace) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = String::from("job,task,kind,size,start,finish\n");
    for t in &trace.tasks {
        let kind = serde_json::to_value(t.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{}", t.job, t.task, kind, t.size, opt(t.start), opt(t.finish));
    }
    out
}
