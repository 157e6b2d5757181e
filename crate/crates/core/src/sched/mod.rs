//! Scheduling policies: map the simulator's state at a decision point to a
//! rate per runnable task.

mod coflow;
mod fair;
mod optimal;
mod pipeline;
mod principle;
mod priority;

pub use coflow::{coflow_policy, CoflowOrder, CoflowPolicy};
pub use fair::{fair_share_policy, FairShare};
pub use optimal::{optimal_policy, OPTIMAL_FLOW_LIMIT};
pub use pipeline::{pipeline_candidates, pipeline_decision, PipelineDecision, EXHAUSTIVE_LIMIT};
pub use principle::{principle1_policy, principle2_policy, DelayMode, Principle};
pub use priority::{priority_policy, PriorityPolicy};

use std::collections::BTreeSet;

use crate::resource::TaskRef;
use crate::sim::{View, World};

pub use crate::sim::Decision;

/// Tasks that consume their pipelineable predecessors' output unit by unit.
pub type PipeliningChoice = BTreeSet<TaskRef>;

pub trait Policy: Send + Sync {
    fn name(&self) -> String;

    fn pipelining(&self) -> &PipeliningChoice;

    /// The same policy with a different pipelining choice.
    fn with_pipelining(&self, choice: PipeliningChoice) -> Box<dyn Policy>;

    fn decide(&self, view: &View<'_>) -> Decision;
}

/// Remaining duration of every task at its peak rate.
pub(crate) fn remaining_durations(view: &View<'_>) -> Vec<f64> {
    view.world.durations(view.remaining)
}

/// Longest path from each task to its job's end, counting the task itself,
/// over the given durations.
pub(crate) fn bottom_levels(world: &World, durations: &[f64]) -> Vec<f64> {
    let mut level = vec![0.0; world.tasks.len()];
    for job in &world.jobs {
        let order = job.dag.topo_order().expect("validated jobs are acyclic");
        for &t in order.iter().rev() {
            let i = job.flat(t);
            let below = world.tasks[i].succs.iter().map(|&s| level[s]).fold(0.0, f64::max);
            level[i] = durations[i] + below;
        }
    }
    level
}

/// Whether two demands touch a common resource.
pub(crate) fn shares_resource(world: &World, a: usize, b: usize) -> bool {
    let ua = &world.tasks[a].demand.uses;
    world.tasks[b].demand.uses.iter().any(|(r, _)| ua.iter().any(|(q, _)| q == r))
}
