//! File formats: scenario documents and JSON Lines traces.

mod scenario;
mod trace;

pub use scenario::{JobSection, ScenarioFile, TaskSection, TopologySection};
pub use trace::{gantt_csv, read_trace, summary_csv, trace_header, write_trace, write_trace_with, TraceHeader, TRACE_FORMAT};
