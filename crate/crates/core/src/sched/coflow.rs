use serde::{Deserialize, Serialize};

use super::{Decision, PipeliningChoice, Policy};
use crate::resource::{coflow_rates, max_min_fair, tiered_rates, CoflowGrouping, Demand, Tier};
use crate::sim::View;

/// How coflows are ordered against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoflowOrder {
    /// Coflows share contended capacity max-min fairly.
    #[default]
    Fair,
    /// Strict priority to the coflow with the least remaining work.
    SmallestFirst,
    /// Strict priority in the order coflows became ready.
    Fifo,
}

/// All-or-nothing flow groups: a group is held back until every member is
/// enabled, then its members progress in proportion to remaining work.
#[derive(Debug, Clone)]
pub struct CoflowPolicy {
    name: String,
    grouping: CoflowGrouping,
    order: CoflowOrder,
    pub pipelining: PipeliningChoice,
}

pub fn coflow_policy(grouping: CoflowGrouping, order: CoflowOrder) -> CoflowPolicy {
    CoflowPolicy { name: "coflow".into(), grouping, order, pipelining: PipeliningChoice::new() }
}

impl CoflowPolicy {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn grouping(&self) -> &CoflowGrouping {
        &self.grouping
    }
}

struct OpenGroup {
    /// Positions in the runnable list.
    members: Vec<usize>,
    remaining: f64,
    ready_at: f64,
    name: String,
}

impl Policy for CoflowPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn pipelining(&self) -> &PipeliningChoice {
        &self.pipelining
    }

    fn with_pipelining(&self, choice: PipeliningChoice) -> Box<dyn Policy> {
        Box::new(CoflowPolicy { pipelining: choice, ..self.clone() })
    }

    fn decide(&self, view: &View<'_>) -> Decision {
        let world = view.world;
        let demands = view.demands();
        let position = |flat: usize| view.runnable.iter().position(|&i| i == flat);
        let mut gated = vec![false; view.runnable.len()];
        let mut open = Vec::new();
        for (name, refs) in &self.grouping.groups {
            let flats: Vec<usize> = refs.iter().filter_map(|r| world.lookup(r)).collect();
            let ready = flats.iter().all(|&f| view.enabled[f].is_some());
            let members: Vec<usize> = flats.iter().filter_map(|&f| position(f)).collect();
            if !ready {
                members.iter().for_each(|&k| gated[k] = true);
                continue;
            }
            if members.is_empty() {
                continue;
            }
            let ready_at = flats.iter().filter_map(|&f| view.enabled[f]).fold(0.0, f64::max);
            let remaining = members.iter().map(|&k| view.remaining[view.runnable[k]]).sum();
            open.push(OpenGroup { members, remaining, ready_at, name: name.clone() });
        }
        if gated.iter().all(|&g| g) {
            // Holding everything back would stall the run; let the gated
            // members share fairly instead.
            return Decision::rates(max_min_fair(&demands, &world.caps));
        }
        match self.order {
            CoflowOrder::SmallestFirst => {
                open.sort_by(|a, b| a.remaining.total_cmp(&b.remaining).then_with(|| a.name.cmp(&b.name)))
            }
            CoflowOrder::Fifo => open.sort_by(|a, b| a.ready_at.total_cmp(&b.ready_at).then_with(|| a.name.cmp(&b.name))),
            CoflowOrder::Fair => {}
        }
        let active: Vec<usize> = (0..view.runnable.len()).filter(|&k| !gated[k]).collect();
        let sub_demands: Vec<Demand> = active.iter().map(|&k| demands[k].clone()).collect();
        let sub_remaining: Vec<f64> = active.iter().map(|&k| view.remaining[view.runnable[k]]).collect();
        let local = |k: usize| active.iter().position(|&a| a == k).expect("open members are active");
        let groups: Vec<Vec<usize>> = open.iter().map(|g| g.members.iter().map(|&k| local(k)).collect()).collect();

        let sub_rates = match self.order {
            CoflowOrder::Fair => coflow_rates(&groups, &sub_demands, &sub_remaining, &world.caps),
            _ => {
                let (group_demands, shares) =
                    crate::resource::coflow_group_demands(&groups, &sub_demands, &sub_remaining);
                // The first `groups.len()` entries are the groups in order;
                // the rest are ungrouped tasks, which share the remainder.
                let mut tiers: Vec<Tier> = group_demands[..groups.len()].iter().map(|d| vec![d.clone()]).collect();
                tiers.push(group_demands[groups.len()..].to_vec());
                let levels: Vec<f64> = tiered_rates(&tiers, &world.caps).into_iter().flatten().collect();
                crate::resource::spread(&levels, &shares, sub_demands.len())
            }
        };
        let mut rates = vec![0.0; view.runnable.len()];
        for (k, r) in active.into_iter().zip(sub_rates) {
            rates[k] = r;
        }
        Decision::rates(rates)
    }
}
