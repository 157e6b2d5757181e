use std::collections::{BTreeMap, BTreeSet};

use super::{Decision, PipeliningChoice, Policy};
use crate::error::{Error, Result};
use crate::resource::{tiered_rates, TaskRef, Tier};
use crate::sim::View;

/// Strict priority in list order. Unlisted tasks share what is left fairly.
#[derive(Debug, Clone)]
pub struct PriorityPolicy {
    name: String,
    order: Vec<TaskRef>,
    rank: BTreeMap<TaskRef, usize>,
    pub pipelining: PipeliningChoice,
}

/// Fails when a task appears twice, since equal priorities are undefined.
pub fn priority_policy(order: Vec<TaskRef>) -> Result<PriorityPolicy> {
    let mut rank = BTreeMap::new();
    for (k, r) in order.iter().enumerate() {
        if rank.insert(r.clone(), k).is_some() {
            return Err(Error::Policy(format!("`{r}` has more than one priority")));
        }
    }
    Ok(PriorityPolicy { name: "priority".into(), order, rank, pipelining: BTreeSet::new() })
}

impl PriorityPolicy {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn order(&self) -> &[TaskRef] {
        &self.order
    }
}

impl Policy for PriorityPolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn pipelining(&self) -> &PipeliningChoice {
        &self.pipelining
    }

    fn with_pipelining(&self, choice: PipeliningChoice) -> Box<dyn Policy> {
        Box::new(PriorityPolicy { pipelining: choice, ..self.clone() })
    }

    fn decide(&self, view: &View<'_>) -> Decision {
        let demands = view.demands();
        let mut ranked: Vec<(usize, usize)> = Vec::new();
        let mut rest = Vec::new();
        for (k, &i) in view.runnable.iter().enumerate() {
            match self.rank.get(&view.world.task_ref(i)) {
                Some(&r) => ranked.push((r, k)),
                None => rest.push(k),
            }
        }
        ranked.sort_unstable();
        let mut slots: Vec<Vec<usize>> = ranked.into_iter().map(|(_, k)| vec![k]).collect();
        if !rest.is_empty() {
            slots.push(rest);
        }
        let tiers: Vec<Tier> = slots.iter().map(|s| s.iter().map(|&k| demands[k].clone()).collect()).collect();
        let levels = tiered_rates(&tiers, &view.world.caps);
        let mut rates = vec![0.0; view.runnable.len()];
        for (slot, lv) in slots.iter().zip(levels) {
            for (&k, r) in slot.iter().zip(lv) {
                rates[k] = r;
            }
        }
        Decision::rates(rates)
    }
}
