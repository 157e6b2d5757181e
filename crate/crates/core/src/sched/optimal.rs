use super::{priority_policy, PipeliningChoice, PriorityPolicy};
use crate::dag::{TaskKind, EPS};
use crate::error::{Error, Result};
use crate::exec::map_par;
use crate::resource::{TaskRef, Topology};
use crate::sim::{simulate_world, Job, SimOptions, World};

/// Largest flow count the exhaustive order search accepts (8! orders).
pub const OPTIMAL_FLOW_LIMIT: usize = 8;

/// Best strict flow-priority order, found by simulating every permutation of
/// the flows. Compute tasks are left to share fairly. Ties keep the
/// lexicographically first order, so the result is deterministic.
pub fn optimal_policy(
    jobs: &[Job],
    topo: &Topology,
    pipelining: PipeliningChoice,
    options: &SimOptions,
) -> Result<PriorityPolicy> {
    let world = World::build(jobs, topo, &pipelining)?;
    let flows: Vec<TaskRef> =
        (0..world.tasks.len()).filter(|&i| world.tasks[i].kind == TaskKind::Flow).map(|i| world.task_ref(i)).collect();
    if flows.len() > OPTIMAL_FLOW_LIMIT {
        return Err(Error::Policy(format!(
            "optimal search covers at most {OPTIMAL_FLOW_LIMIT} flows, scenario has {}",
            flows.len()
        )));
    }
    let orders = permutations(flows.len());
    let scores = map_par(&orders, |order| {
        let refs = order.iter().map(|&k| flows[k].clone()).collect();
        let mut policy = priority_policy(refs).expect("permutations are duplicate-free");
        policy.pipelining = pipelining.clone();
        simulate_world(&world, &policy, options).map(|t| t.total_jct())
    });
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in scores.into_iter().enumerate() {
        let s = s?;
        if best.is_none_or(|(_, b)| s < b - EPS) {
            best = Some((k, s));
        }
    }
    let (k, _) = best.expect("at least the empty order exists");
    let order = orders[k].iter().map(|&i| flows[i].clone()).collect();
    let mut policy = priority_policy(order)?.named("optimal");
    policy.pipelining = pipelining;
    Ok(policy)
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { return out };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot has a larger successor");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::permutations;

    #[test]
    fn permutations_are_lexicographic_and_complete() {
        let p = permutations(3);
        assert_eq!(p, vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]);
        assert_eq!(permutations(5).len(), 120);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }
}
