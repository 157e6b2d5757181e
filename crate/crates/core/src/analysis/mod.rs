//! Policy comparison, what-if analysis, straggler diagnosis and the built-in
//! scenario library.

mod compare;
mod diagnose;
mod library;
mod scenario;
mod whatif;

pub use compare::{compare_policies, critical_paths, utilization, ComparisonReport, CriticalPath, JctDelta, PolicyResult, Utilization};
pub use diagnose::{identify_straggler, Diagnosis, StragglerClass};
pub use library::{library_scenario, scenario_library, FAMILIES};
pub use scenario::{PolicySpec, Scenario, POLICY_NAMES};
pub use whatif::{apply_modifications, whatif, Modification, WhatIfReport};
