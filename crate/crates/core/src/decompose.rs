//! Splits a head-to-tail region into series segments and Copaths.
//!
//! Series cut vertices are the nodes every head-to-tail path passes through;
//! between two consecutive cuts the region either is a single edge or splits
//! into parallel branches (a Copath). A branch set that cannot be split
//! further (non series-parallel) becomes one Copath whose members are its
//! enumerated paths.

use std::collections::BTreeSet;

use crate::dag::{enumerate_paths, Dag, Path, TaskId};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition {
    /// Tasks executed back to back without unit overlap.
    Sequential(Vec<TaskId>),
    /// Tasks chained by relaxed edges.
    Pipelineable(Vec<TaskId>),
    Series(Vec<Decomposition>),
    Copath(Copath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Copath {
    pub head: TaskId,
    pub tail: TaskId,
    /// One entry per parallel branch; head and tail are excluded. An empty
    /// `Series` is a direct head-to-tail edge.
    pub members: Vec<Decomposition>,
    /// Set when branches overlap and were expanded into plain paths.
    pub expanded: bool,
}

impl Copath {
    pub fn paths(&self, g: &Dag) -> Vec<Path> {
        enumerate_paths(g, self.head, self.tail).unwrap_or_default()
    }
}

impl Decomposition {
    /// Tasks in execution order, Copath heads and tails excluded (they live
    /// in the enclosing series).
    pub fn leaves(&self) -> Vec<TaskId> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<TaskId>) {
        match self {
            Decomposition::Sequential(t) | Decomposition::Pipelineable(t) => out.extend(t),
            Decomposition::Series(parts) => parts.iter().for_each(|p| p.collect(out)),
            Decomposition::Copath(c) => c.members.iter().for_each(|m| m.collect(out)),
        }
    }

    pub fn copaths(&self) -> Vec<&Copath> {
        let mut out = Vec::new();
        self.visit_copaths(&mut out);
        out
    }

    fn visit_copaths<'a>(&'a self, out: &mut Vec<&'a Copath>) {
        match self {
            Decomposition::Series(parts) => parts.iter().for_each(|p| p.visit_copaths(out)),
            Decomposition::Copath(c) => {
                out.push(c);
                c.members.iter().for_each(|m| m.visit_copaths(out));
            }
            _ => {}
        }
    }

    /// Flattens single-element series.
    fn simplify(self) -> Decomposition {
        match self {
            Decomposition::Series(mut parts) if parts.len() == 1 => parts.pop().unwrap().simplify(),
            other => other,
        }
    }
}

/// Decomposes the region between `head` and `tail` (inclusive).
pub fn decompose(g: &Dag, head: TaskId, tail: TaskId) -> Result<Decomposition> {
    let from = g.descendants(head);
    let to = g.ancestors(tail);
    let region: Vec<bool> = (0..g.len()).map(|i| from[i] && to[i]).collect();
    Ok(decompose_region(g, head, tail, &region, false).simplify())
}

/// Decomposition of the whole graph, start to end.
pub fn decompose_dag(g: &Dag) -> Decomposition {
    decompose(g, g.start(), g.end()).expect("start and end exist")
}

/// `branch_only` excludes a direct head-to-tail edge, which belongs to a
/// sibling branch.
fn decompose_region(g: &Dag, head: TaskId, tail: TaskId, region: &[bool], branch_only: bool) -> Decomposition {
    if head == tail {
        return Decomposition::Sequential(vec![head]);
    }
    let order: Vec<TaskId> = g
        .topo_order()
        .expect("acyclic graph")
        .into_iter()
        .filter(|t| region[t.0])
        .collect();
    let mut pos = vec![usize::MAX; g.len()];
    for (i, t) in order.iter().enumerate() {
        pos[t.0] = i;
    }
    // An edge spanning position p means some path skips the node at p.
    let mut span = vec![0i64; order.len() + 1];
    for &v in &order {
        for &w in g.successors(v) {
            if branch_only && v == head && w == tail {
                continue;
            }
            if region[w.0] && pos[w.0] > pos[v.0] + 1 {
                span[pos[v.0] + 1] += 1;
                span[pos[w.0]] -= 1;
            }
        }
    }
    let mut cuts = Vec::new();
    let mut running = 0i64;
    for (i, &v) in order.iter().enumerate() {
        running += span[i];
        if running == 0 {
            cuts.push(v);
        }
    }

    let mut items: Vec<Item> = Vec::new();
    for (k, &c) in cuts.iter().enumerate() {
        items.push(Item::Task(c));
        if let Some(&next) = cuts.get(k + 1) {
            let inner: Vec<TaskId> = order[pos[c.0] + 1..pos[next.0]].to_vec();
            if inner.is_empty() {
                continue;
            }
            let direct = g.has_edge(c, next) && !(branch_only && c == head && next == tail);
            items.push(Item::Copath(branch_copath(g, c, next, &inner, direct)));
        }
    }
    Decomposition::Series(group_runs(g, items))
}

enum Item {
    Task(TaskId),
    Copath(Copath),
}

fn branch_copath(g: &Dag, head: TaskId, tail: TaskId, inner: &[TaskId], direct: bool) -> Copath {
    let inside: BTreeSet<TaskId> = inner.iter().copied().collect();
    // Weakly connected components of the inner node set.
    let mut comp = vec![usize::MAX; g.len()];
    let mut ncomp = 0;
    for &s in inner {
        if comp[s.0] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s.0] = ncomp;
        while let Some(v) = stack.pop() {
            for &w in g.successors(v).iter().chain(g.predecessors(v)) {
                if inside.contains(&w) && comp[w.0] == usize::MAX {
                    comp[w.0] = ncomp;
                    stack.push(w);
                }
            }
        }
        ncomp += 1;
    }
    if ncomp == 1 && !direct {
        // No cut vertex inside and no parallel split: overlapping branches.
        let members = enumerate_paths(g, head, tail)
            .unwrap_or_default()
            .into_iter()
            .filter(|p| p.0.len() > 2 && p.0[1..p.0.len() - 1].iter().all(|t| inside.contains(t)))
            .map(|p| {
                let inner = p.0[1..p.0.len() - 1].to_vec();
                Decomposition::Series(group_runs(g, inner.into_iter().map(Item::Task).collect()))
            })
            .collect();
        return Copath { head, tail, members, expanded: true };
    }
    let mut members = Vec::new();
    // Branches ordered by their smallest task name for determinism.
    let mut branches: Vec<Vec<TaskId>> = (0..ncomp)
        .map(|c| inner.iter().copied().filter(|t| comp[t.0] == c).collect())
        .collect();
    branches.sort_by(|a, b| {
        let ka = a.iter().map(|&t| g.name(t)).min();
        let kb = b.iter().map(|&t| g.name(t)).min();
        ka.cmp(&kb)
    });
    if direct {
        members.push(Decomposition::Series(Vec::new()));
    }
    for branch in branches {
        let mut region = vec![false; g.len()];
        region[head.0] = true;
        region[tail.0] = true;
        for &t in &branch {
            region[t.0] = true;
        }
        let sub = decompose_region(g, head, tail, &region, true);
        members.push(strip_ends(g, sub, head, tail));
    }
    Copath { head, tail, members, expanded: false }
}

/// Removes the head and tail tasks from a branch series.
fn strip_ends(g: &Dag, d: Decomposition, head: TaskId, tail: TaskId) -> Decomposition {
    let Decomposition::Series(parts) = d else { return d };
    let mut out = Vec::new();
    for part in parts {
        match part {
            Decomposition::Sequential(ts) | Decomposition::Pipelineable(ts) => {
                let kept: Vec<TaskId> = ts.into_iter().filter(|&t| t != head && t != tail).collect();
                if !kept.is_empty() {
                    out.extend(split_run(g, kept));
                }
            }
            other => out.push(other),
        }
    }
    Decomposition::Series(out)
}

fn group_runs(g: &Dag, items: Vec<Item>) -> Vec<Decomposition> {
    let mut out = Vec::new();
    let mut run: Vec<TaskId> = Vec::new();
    let flush = |run: &mut Vec<TaskId>, out: &mut Vec<Decomposition>| {
        if !run.is_empty() {
            out.extend(split_run(g, std::mem::take(run)));
        }
    };
    for item in items {
        match item {
            Item::Task(t) => run.push(t),
            Item::Copath(c) => {
                flush(&mut run, &mut out);
                out.push(Decomposition::Copath(c));
            }
        }
    }
    flush(&mut run, &mut out);
    out
}

/// Splits a linear task run into maximal sequential and pipelined segments.
pub fn split_run(g: &Dag, run: Vec<TaskId>) -> Vec<Decomposition> {
    let mut out = Vec::new();
    let mut i = 0;
    let mut seq: Vec<TaskId> = Vec::new();
    while i < run.len() {
        let mut j = i;
        while j + 1 < run.len() && g.is_relaxed(run[j], run[j + 1]) {
            j += 1;
        }
        if j > i {
            if !seq.is_empty() {
                out.push(Decomposition::Sequential(std::mem::take(&mut seq)));
            }
            out.push(Decomposition::Pipelineable(run[i..=j].to_vec()));
        } else {
            seq.push(run[i]);
        }
        i = j + 1;
    }
    if !seq.is_empty() {
        out.push(Decomposition::Sequential(seq));
    }
    out
}
