use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dag::{Dag, TaskKind};
use crate::error::{Error, Result};

/// Job-qualified task name, written `job/task`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskRef {
    pub job: String,
    pub task: String,
}

impl TaskRef {
    pub fn new(job: impl Into<String>, task: impl Into<String>) -> Self {
        TaskRef { job: job.into(), task: task.into() }
    }

    /// Parses `job/task`, or a bare `task` when the job is implied.
    pub fn parse_in(s: &str, default_job: Option<&str>) -> Result<Self> {
        match s.split_once('/') {
            Some((j, t)) if !j.is_empty() && !t.is_empty() => Ok(TaskRef::new(j, t)),
            None if !s.is_empty() => default_job
                .map(|j| TaskRef::new(j, s))
                .ok_or_else(|| Error::Parse(format!("task `{s}` needs a job prefix (job/task)"))),
            _ => Err(Error::Parse(format!("malformed task reference `{s}`"))),
        }
    }
}

impl fmt::Display for TaskRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.job, self.task)
    }
}

impl FromStr for TaskRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskRef::parse_in(s, None)
    }
}

impl Serialize for TaskRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TaskRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Named, disjoint groups of flows scheduled all-or-nothing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoflowGrouping {
    pub groups: BTreeMap<String, Vec<TaskRef>>,
}

impl CoflowGrouping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn group(mut self, name: &str, members: &[TaskRef]) -> Self {
        self.groups.insert(name.to_string(), members.to_vec());
        self
    }

    /// Groups must be disjoint and contain only flows of known jobs.
    pub fn validate<'a>(&self, lookup: impl Fn(&str) -> Option<&'a Dag>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (name, members) in &self.groups {
            if members.is_empty() {
                return Err(Error::Coflow(format!("group `{name}` is empty")));
            }
            for m in members {
                let dag = lookup(&m.job).ok_or_else(|| Error::Coflow(format!("unknown job in `{m}`")))?;
                let id = dag.id(&m.task).map_err(|_| Error::Coflow(format!("unknown flow `{m}`")))?;
                if dag.task(id).kind != TaskKind::Flow {
                    return Err(Error::Coflow(format!("`{m}` in group `{name}` is not a flow")));
                }
                if !seen.insert(m.clone()) {
                    return Err(Error::Coflow(format!("`{m}` appears in more than one group")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::Task;

    #[test]
    fn task_refs_parse() {
        let r: TaskRef = "X/f1".parse().unwrap();
        assert_eq!(r, TaskRef::new("X", "f1"));
        assert_eq!(r.to_string(), "X/f1");
        assert!("f1".parse::<TaskRef>().is_err());
        assert_eq!(TaskRef::parse_in("f1", Some("X")).unwrap(), r);
        assert!(TaskRef::parse_in("/f1", Some("X")).is_err());
    }

    #[test]
    fn groups_must_be_disjoint_flows() {
        let g = Dag::builder().task(Task::flow("f1", 1.0)).task(Task::compute("a", 1.0)).build().unwrap();
        let lookup = |j: &str| (j == "X").then_some(&g);
        let ok = CoflowGrouping::new().group("c", &[TaskRef::new("X", "f1")]);
        assert!(ok.validate(lookup).is_ok());
        let dup = ok.clone().group("d", &[TaskRef::new("X", "f1")]);
        assert!(dup.validate(lookup).is_err());
        let compute = CoflowGrouping::new().group("c", &[TaskRef::new("X", "a")]);
        assert!(compute.validate(lookup).is_err());
        let unknown = CoflowGrouping::new().group("c", &[TaskRef::new("X", "zz")]);
        assert!(unknown.validate(lookup).is_err());
    }
}
