use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::PolicySpec;
use crate::dag::TaskKind;
use crate::resource::{CoflowGrouping, Host};
use crate::sim::StragglerSpec;

/// On-disk scenario document (JSON). Unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub topology: TopologySection,
    pub jobs: Vec<JobSection>,
    /// Named coflow groupings, each a set of named groups.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub coflows: BTreeMap<String, CoflowGrouping>,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stragglers: Vec<StragglerSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub hosts: Vec<Host>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSection {
    pub id: String,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub release: f64,
    pub tasks: Vec<TaskSection>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub id: String,
    pub kind: TaskKind,
    pub size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<f64>,
    /// Compute tasks: the host they run on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub host: Option<String>,
    /// Flows: sending host.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
    /// Flows: receiving host.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dst: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

impl TaskSection {
    pub fn compute(id: &str, size: f64, host: &str) -> Self {
        TaskSection {
            id: id.into(),
            kind: TaskKind::Compute,
            size,
            unit: None,
            host: Some(host.into()),
            src: None,
            dst: None,
            class: None,
        }
    }

    pub fn flow(id: &str, size: f64, src: &str, dst: &str) -> Self {
        TaskSection {
            id: id.into(),
            kind: TaskKind::Flow,
            size,
            unit: None,
            host: None,
            src: Some(src.into()),
            dst: Some(dst.into()),
            class: None,
        }
    }

    pub fn unit(mut self, unit: f64) -> Self {
        self.unit = Some(unit);
        self
    }

    pub fn class(mut self, class: &str) -> Self {
        self.class = Some(class.into());
        self
    }
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> crate::error::Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::error::Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario files serialize")
    }
}
