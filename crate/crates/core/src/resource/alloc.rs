use std::collections::BTreeMap;

use super::{PlacedDag, Topology};
use crate::dag::TaskId;

/// Instantaneous rate per active task, in work units per second.
pub type RateAllocation = BTreeMap<TaskId, f64>;

/// One allocation unit: consumes `coef * level` of every resource it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub uses: Vec<(usize, f64)>,
    /// Upper bound on the level; `f64::INFINITY` when unbounded.
    pub cap: f64,
}

impl Demand {
    pub fn new(resources: impl IntoIterator<Item = usize>) -> Self {
        Demand { uses: resources.into_iter().map(|r| (r, 1.0)).collect(), cap: f64::INFINITY }
    }

    pub fn capped(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }
}

/// Demands allocated together by max-min fairness; tiers are served in order.
pub type Tier = Vec<Demand>;

const SATURATED: f64 = 1e-12;

/// Progressive filling on the given residual capacities, which are updated.
fn fill(demands: &[Demand], residual: &mut [f64]) -> Vec<f64> {
    let n = demands.len();
    let mut level = vec![0.0; n];
    let mut frozen = vec![false; n];
    let scale: Vec<f64> = residual.iter().map(|c| c.abs().max(1.0)).collect();
    for (i, d) in demands.iter().enumerate() {
        if d.cap <= 0.0 {
            frozen[i] = true;
        } else if d.uses.iter().all(|&(_, a)| a <= 0.0) {
            // Nothing to contend for.
            level[i] = if d.cap.is_finite() { d.cap } else { 0.0 };
            frozen[i] = true;
        } else if d.uses.iter().any(|&(r, a)| a > 0.0 && residual[r] <= SATURATED * scale[r]) {
            frozen[i] = true;
        }
    }
    let mut load = vec![0.0; residual.len()];
    while frozen.iter().any(|f| !f) {
        load.iter_mut().for_each(|l| *l = 0.0);
        for (i, d) in demands.iter().enumerate() {
            if !frozen[i] {
                for &(r, a) in &d.uses {
                    load[r] += a;
                }
            }
        }
        let mut delta = f64::INFINITY;
        for (r, &l) in load.iter().enumerate() {
            if l > 0.0 {
                delta = delta.min(residual[r].max(0.0) / l);
            }
        }
        for (i, d) in demands.iter().enumerate() {
            if !frozen[i] {
                delta = delta.min(d.cap - level[i]);
            }
        }
        let delta = delta.max(0.0);
        for (i, l) in level.iter_mut().enumerate() {
            if !frozen[i] {
                *l += delta;
            }
        }
        for (r, &l) in load.iter().enumerate() {
            residual[r] -= delta * l;
        }
        let mut progressed = false;
        for (i, d) in demands.iter().enumerate() {
            if frozen[i] {
                continue;
            }
            let capped = d.cap.is_finite() && d.cap - level[i] <= SATURATED * d.cap.abs().max(1.0);
            let blocked = d.uses.iter().any(|&(r, a)| a > 0.0 && residual[r] <= SATURATED * scale[r]);
            if capped || blocked {
                frozen[i] = true;
                progressed = true;
            }
        }
        if !progressed {
            // Rounding left no resource exactly saturated; stop at this level.
            break;
        }
    }
    residual.iter_mut().for_each(|r| *r = r.max(0.0));
    level
}

/// Max-min fair levels over the given capacities.
pub fn max_min_fair(demands: &[Demand], caps: &[f64]) -> Vec<f64> {
    fill(demands, &mut caps.to_vec())
}

/// Strict priority between tiers, max-min fair inside each tier.
pub fn tiered_rates(tiers: &[Tier], caps: &[f64]) -> Vec<Vec<f64>> {
    let mut residual = caps.to_vec();
    tiers.iter().map(|t| fill(t, &mut residual)).collect()
}

/// Strict priority in the given order: each demand takes its full bottleneck
/// rate from what higher priorities left.
pub fn priority_rates(order: &[Demand], caps: &[f64]) -> Vec<f64> {
    let mut residual = caps.to_vec();
    order.iter().map(|d| fill(std::slice::from_ref(d), &mut residual)[0]).collect()
}

/// Coflow allocation. Each group's members get rates proportional to their
/// remaining work so they finish together; groups share contended capacity
/// max-min fairly in aggregate bandwidth. Tasks absent from every group form
/// singleton groups.
pub fn coflow_rates(groups: &[Vec<usize>], demands: &[Demand], remaining: &[f64], caps: &[f64]) -> Vec<f64> {
    let (group_demands, shares) = coflow_group_demands(groups, demands, remaining);
    let levels = max_min_fair(&group_demands, caps);
    spread(&levels, &shares, demands.len())
}

/// Group demands plus each member's share of its group's aggregate rate.
pub(crate) fn coflow_group_demands(
    groups: &[Vec<usize>],
    demands: &[Demand],
    remaining: &[f64],
) -> (Vec<Demand>, Vec<Vec<(usize, f64)>>) {
    let mut grouped = vec![false; demands.len()];
    let mut all: Vec<Vec<usize>> = Vec::new();
    for g in groups {
        let members: Vec<usize> = g.iter().copied().filter(|&i| i < demands.len() && !grouped[i]).collect();
        members.iter().for_each(|&i| grouped[i] = true);
        if !members.is_empty() {
            all.push(members);
        }
    }
    for i in 0..demands.len() {
        if !grouped[i] {
            all.push(vec![i]);
        }
    }
    let mut out = Vec::with_capacity(all.len());
    let mut shares = Vec::with_capacity(all.len());
    for members in all {
        let total: f64 = members.iter().map(|&i| remaining[i].max(0.0)).sum();
        let weight = |i: usize| {
            if total > 0.0 {
                remaining[i].max(0.0) / total
            } else {
                1.0 / members.len() as f64
            }
        };
        let mut uses: BTreeMap<usize, f64> = BTreeMap::new();
        let mut cap = f64::INFINITY;
        let mut share = Vec::with_capacity(members.len());
        for &i in &members {
            let w = weight(i);
            share.push((i, w));
            if w > 0.0 {
                for &(r, a) in &demands[i].uses {
                    *uses.entry(r).or_insert(0.0) += a * w;
                }
                cap = cap.min(demands[i].cap / w);
            }
        }
        out.push(Demand { uses: uses.into_iter().collect(), cap });
        shares.push(share);
    }
    (out, shares)
}

pub(crate) fn spread(levels: &[f64], shares: &[Vec<(usize, f64)>], n: usize) -> Vec<f64> {
    let mut rates = vec![0.0; n];
    for (level, share) in levels.iter().zip(shares) {
        for &(i, w) in share {
            rates[i] = level * w;
        }
    }
    rates
}

/// Verifies per-resource capacity and non-negativity.
pub fn check_capacity(rates: &[f64], demands: &[Demand], caps: &[f64]) -> Result<(), String> {
    let mut used = vec![0.0; caps.len()];
    for (i, (&rate, d)) in rates.iter().zip(demands).enumerate() {
        if !rate.is_finite() || rate < 0.0 {
            return Err(format!("demand {i} has rate {rate}"));
        }
        for &(r, a) in &d.uses {
            used[r] += rate * a;
        }
    }
    for (r, (&u, &c)) in used.iter().zip(caps).enumerate() {
        if u > c + 1e-9 * c.max(1.0) {
            return Err(format!("resource {r} over capacity: {u} > {c}"));
        }
    }
    Ok(())
}

fn task_demands(active: &[TaskId], p: &PlacedDag) -> Vec<Demand> {
    active.iter().map(|&t| Demand::new(p.resources(t).iter().map(|r| r.index()))).collect()
}

/// Max-min fair rates for the active tasks of one placed graph.
pub fn max_min_fair_rates(active: &[TaskId], p: &PlacedDag, t: &Topology) -> RateAllocation {
    let rates = max_min_fair(&task_demands(active, p), &t.capacities());
    active.iter().copied().zip(rates).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps(values: &[f64]) -> Vec<f64> {
        values.to_vec()
    }

    #[test]
    fn symmetric_split() {
        let d = vec![Demand::new([0]), Demand::new([0])];
        assert_eq!(max_min_fair(&d, &caps(&[10.0])), vec![5.0, 5.0]);
    }

    #[test]
    fn waterfilling_two_links() {
        // f1 on L1, f2 on L1+L2, f3 on L2; L1 = 10, L2 = 4.
        let d = vec![Demand::new([0]), Demand::new([0, 1]), Demand::new([1])];
        let r = max_min_fair(&d, &caps(&[10.0, 4.0]));
        assert_eq!(r, vec![8.0, 2.0, 2.0]);
    }

    #[test]
    fn single_flow_takes_min_endpoint() {
        let d = vec![Demand::new([0, 1])];
        assert_eq!(max_min_fair(&d, &caps(&[10.0, 4.0])), vec![4.0]);
    }

    #[test]
    fn priority_serializes() {
        let d = vec![Demand::new([0]), Demand::new([0]), Demand::new([1])];
        assert_eq!(priority_rates(&d, &caps(&[1.0, 1.0])), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn tiers_share_within_and_yield_across() {
        let tiers = vec![vec![Demand::new([0]), Demand::new([0])], vec![Demand::new([0, 1])]];
        let r = tiered_rates(&tiers, &caps(&[2.0, 5.0]));
        assert_eq!(r, vec![vec![1.0, 1.0], vec![0.0]]);
    }

    #[test]
    fn coflow_members_finish_together() {
        // Remaining 4 and 8 on disjoint unit links: bottleneck member at full rate.
        let d = vec![Demand::new([0]), Demand::new([1])];
        let r = coflow_rates(&[vec![0, 1]], &d, &[4.0, 8.0], &caps(&[1.0, 1.0]));
        assert_eq!(r, vec![0.5, 1.0]);
        assert_eq!(4.0 / r[0], 8.0 / r[1]);
    }

    #[test]
    fn singleton_coflow_matches_fair() {
        let d = vec![Demand::new([0]), Demand::new([0, 1]), Demand::new([1])];
        let c = caps(&[10.0, 4.0]);
        assert_eq!(coflow_rates(&[], &d, &[1.0, 7.0, 3.0], &c), max_min_fair(&d, &c));
    }

    #[test]
    fn caps_bound_levels() {
        let d = vec![Demand::new([0]).capped(0.25), Demand::new([0])];
        assert_eq!(max_min_fair(&d, &caps(&[1.0])), vec![0.25, 0.75]);
    }

    #[test]
    fn capacity_check_flags_overuse() {
        let d = vec![Demand::new([0]), Demand::new([0])];
        assert!(check_capacity(&[0.5, 0.5], &d, &[1.0]).is_ok());
        assert!(check_capacity(&[0.6, 0.5], &d, &[1.0]).is_err());
        assert!(check_capacity(&[-0.1, 0.5], &d, &[1.0]).is_err());
    }
}
