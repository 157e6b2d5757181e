use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown host `{0}`")]
    UnknownHost(String),
    #[error("unknown job `{0}`")]
    UnknownJob(String),
    #[error("task `{task}` has no resource assignment")]
    MissingAssignment { task: String },
    #[error("resource assignment for `{task}` is {value}, expected a value in (0, 1]")]
    InvalidAssignment { task: String, value: f64 },
    #[error("path contains a pipelined edge into `{task}`; use the pipelined length")]
    PipelinedInSequential { task: String },
    #[error("task `{task}` is not pipelineable")]
    NotPipelineable { task: String },
    #[error("pipelined chain has mismatched unit counts ({first} vs {second} at `{task}`)")]
    UnitCountMismatch { task: String, first: f64, second: f64 },
    #[error("invalid placement: {0}")]
    Placement(String),
    #[error("invalid coflow grouping: {0}")]
    Coflow(String),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("policy `{policy}` produced an infeasible allocation at t={time}: {detail}")]
    Infeasible { policy: String, time: f64, detail: String },
    #[error("deadlock at t={time}; blocked frontier: {frontier:?}")]
    Deadlock { time: f64, frontier: Vec<String> },
    #[error("job `{0}` did not finish")]
    Unfinished(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid modification: {0}")]
    Modification(String),
    #[error("traces are not comparable: {0}")]
    TraceMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
