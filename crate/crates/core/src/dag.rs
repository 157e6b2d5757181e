//! Task graph: compute tasks and network flows as first-class nodes.
//!
//! Every graph carries a zero-size start node and end node. An edge `u -> v`
//! means `v` may not start before `u` ends, except when the edge is
//! *relaxed*: `v` is marked pipelined and both endpoints are pipelineable, in
//! which case `v` consumes `u`'s output unit by unit.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for duration and size comparisons.
pub const EPS: f64 = 1e-9;

pub const START: &str = "v_S";
pub const END: &str = "v_E";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId(pub usize);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Start,
    End,
    Compute,
    Flow,
}

impl TaskKind {
    pub fn is_dummy(self) -> bool {
        matches!(self, TaskKind::Start | TaskKind::End)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub kind: TaskKind,
    /// Work amount; equals the duration at maximum resource.
    pub size: f64,
    /// Pipeline granule. `unit == size` means not pipelineable.
    pub unit: f64,
    /// Informational resource class (CPU/GPU label) for compute tasks.
    pub class: Option<String>,
}

impl Task {
    pub fn compute(name: impl Into<String>, size: f64) -> Self {
        Task { name: name.into(), kind: TaskKind::Compute, size, unit: size, class: None }
    }

    pub fn flow(name: impl Into<String>, size: f64) -> Self {
        Task { name: name.into(), kind: TaskKind::Flow, size, unit: size, class: None }
    }

    pub fn with_unit(mut self, unit: f64) -> Self {
        self.unit = unit;
        self
    }

    pub fn with_class(mut self, class: impl Into<String>) -> Self {
        self.class = Some(class.into());
        self
    }

    pub fn is_pipelineable(&self) -> bool {
        self.size > 0.0 && self.unit < self.size - EPS
    }

    /// Number of pipeline units, possibly fractional.
    pub fn unit_count(&self) -> f64 {
        if self.size <= 0.0 {
            1.0
        } else {
            self.size / self.unit
        }
    }

    /// Cumulative work at each unit boundary; the last unit may be partial.
    pub fn unit_boundaries(&self) -> Vec<f64> {
        if !self.is_pipelineable() {
            return vec![self.size];
        }
        let mut out = Vec::new();
        let mut acc = self.unit;
        while acc < self.size - EPS * self.size.max(1.0) {
            out.push(acc);
            acc += self.unit;
        }
        out.push(self.size);
        out
    }
}

#[derive(Debug, Clone)]
pub struct Dag {
    tasks: Vec<Task>,
    edges: Vec<(TaskId, TaskId)>,
    succ: Vec<Vec<TaskId>>,
    pred: Vec<Vec<TaskId>>,
    pipelined: Vec<bool>,
    index: HashMap<String, TaskId>,
    start: TaskId,
    end: TaskId,
}

impl Dag {
    /// Builds a graph from explicit parts. `tasks` must contain exactly one
    /// `Start` and one `End` task; nothing else is checked here (see
    /// [`validate`]).
    pub fn from_parts(tasks: Vec<Task>, edges: Vec<(TaskId, TaskId)>) -> Self {
        let n = tasks.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for &(a, b) in &edges {
            succ[a.0].push(b);
            pred[b.0].push(a);
        }
        for list in succ.iter_mut().chain(pred.iter_mut()) {
            list.sort();
            list.dedup();
        }
        let mut index = HashMap::new();
        for (i, t) in tasks.iter().enumerate() {
            index.entry(t.name.clone()).or_insert(TaskId(i));
        }
        let start = tasks.iter().position(|t| t.kind == TaskKind::Start).unwrap_or(0);
        let end = tasks.iter().position(|t| t.kind == TaskKind::End).unwrap_or(n.saturating_sub(1));
        Dag {
            pipelined: vec![false; n],
            tasks,
            edges,
            succ,
            pred,
            index,
            start: TaskId(start),
            end: TaskId(end),
        }
    }

    pub fn builder() -> DagBuilder {
        DagBuilder::default()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.len() <= 2
    }

    pub fn start(&self) -> TaskId {
        self.start
    }

    pub fn end(&self) -> TaskId {
        self.end
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.0]
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.tasks.len()).map(TaskId)
    }

    pub fn name(&self, id: TaskId) -> &str {
        &self.tasks[id.0].name
    }

    pub fn id(&self, name: &str) -> Result<TaskId> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownTask(name.to_string()))
    }

    pub fn edges(&self) -> &[(TaskId, TaskId)] {
        &self.edges
    }

    pub fn successors(&self, id: TaskId) -> &[TaskId] {
        &self.succ[id.0]
    }

    pub fn predecessors(&self, id: TaskId) -> &[TaskId] {
        &self.pred[id.0]
    }

    pub fn has_edge(&self, a: TaskId, b: TaskId) -> bool {
        self.succ[a.0].binary_search(&b).is_ok()
    }

    pub fn is_pipelined(&self, id: TaskId) -> bool {
        self.pipelined[id.0]
    }

    /// Marks the given tasks as pipelined consumers. Non-pipelineable tasks
    /// are rejected.
    pub fn with_pipelined<'a>(mut self, names: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        self.pipelined.iter_mut().for_each(|p| *p = false);
        for name in names {
            let id = self.id(name)?;
            if !self.tasks[id.0].is_pipelineable() {
                return Err(Error::NotPipelineable { task: name.to_string() });
            }
            self.pipelined[id.0] = true;
        }
        Ok(self)
    }

    pub fn pipelined_names(&self) -> BTreeSet<String> {
        self.ids().filter(|&i| self.pipelined[i.0]).map(|i| self.name(i).to_string()).collect()
    }

    /// True when `b` consumes `a`'s output at unit granularity.
    pub fn is_relaxed(&self, a: TaskId, b: TaskId) -> bool {
        self.pipelined[b.0]
            && self.tasks[a.0].is_pipelineable()
            && self.tasks[b.0].is_pipelineable()
            && self.has_edge(a, b)
    }

    /// Tasks that could be chosen as pipelined consumers: pipelineable with at
    /// least one pipelineable predecessor.
    pub fn pipeline_candidates(&self) -> Vec<TaskId> {
        self.ids()
            .filter(|&v| {
                self.task(v).is_pipelineable()
                    && self.pred[v.0].iter().any(|&u| self.task(u).is_pipelineable())
            })
            .collect()
    }

    /// Topological order (Kahn, smallest name first). `None` if cyclic.
    pub fn topo_order(&self) -> Option<Vec<TaskId>> {
        let n = self.len();
        let mut indeg: Vec<usize> = (0..n).map(|i| self.pred[i].len()).collect();
        let mut ready: BTreeSet<(&str, TaskId)> = (0..n)
            .filter(|&i| indeg[i] == 0)
            .map(|i| (self.tasks[i].name.as_str(), TaskId(i)))
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(first) = ready.iter().next().copied() {
            ready.remove(&first);
            let v = first.1;
            order.push(v);
            for &w in &self.succ[v.0] {
                indeg[w.0] -= 1;
                if indeg[w.0] == 0 {
                    ready.insert((self.tasks[w.0].name.as_str(), w));
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Nodes reachable from `from` (inclusive).
    pub fn descendants(&self, from: TaskId) -> Vec<bool> {
        self.reach(from, &self.succ)
    }

    /// Nodes that reach `to` (inclusive).
    pub fn ancestors(&self, to: TaskId) -> Vec<bool> {
        self.reach(to, &self.pred)
    }

    fn reach(&self, from: TaskId, adj: &[Vec<TaskId>]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![from];
        seen[from.0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v.0] {
                if !seen[w.0] {
                    seen[w.0] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Assembles a graph by task name, wiring the dummy start/end nodes to
/// sources and sinks automatically.
#[derive(Debug, Default, Clone)]
pub struct DagBuilder {
    tasks: Vec<Task>,
    edges: Vec<(String, String)>,
}

impl DagBuilder {
    pub fn task(mut self, task: Task) -> Self {
        self.tasks.push(task);
        self
    }

    pub fn add(&mut self, task: Task) -> &mut Self {
        self.tasks.push(task);
        self
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn add_edge(&mut self, from: &str, to: &str) -> &mut Self {
        self.edges.push((from.to_string(), to.to_string()));
        self
    }

    /// Chain of edges through the given names.
    pub fn chain(mut self, names: &[&str]) -> Self {
        for w in names.windows(2) {
            self.edges.push((w[0].to_string(), w[1].to_string()));
        }
        self
    }

    pub fn build(self) -> Result<Dag> {
        let mut tasks = Vec::with_capacity(self.tasks.len() + 2);
        tasks.push(Task { name: START.into(), kind: TaskKind::Start, size: 0.0, unit: 0.0, class: None });
        tasks.extend(self.tasks);
        tasks.push(Task { name: END.into(), kind: TaskKind::End, size: 0.0, unit: 0.0, class: None });
        let mut index = HashMap::new();
        for (i, t) in tasks.iter().enumerate() {
            index.entry(t.name.as_str()).or_insert(i);
        }
        let resolve = |n: &str| index.get(n).copied().map(TaskId).ok_or_else(|| Error::UnknownTask(n.to_string()));
        let mut edges = Vec::with_capacity(self.edges.len());
        for (a, b) in &self.edges {
            edges.push((resolve(a)?, resolve(b)?));
        }
        let n = tasks.len();
        let (s, e) = (TaskId(0), TaskId(n - 1));
        let mut has_in = vec![false; n];
        let mut has_out = vec![false; n];
        for &(a, b) in &edges {
            has_out[a.0] = true;
            has_in[b.0] = true;
        }
        for i in 1..n - 1 {
            if !has_in[i] {
                edges.push((s, TaskId(i)));
            }
            if !has_out[i] {
                edges.push((TaskId(i), e));
            }
        }
        if n == 2 {
            edges.push((s, e));
        }
        Ok(Dag::from_parts(tasks, edges))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    Cycle,
    DuplicateId,
    UnitOutOfRange,
    NegativeSize,
    BadStart,
    BadEnd,
    Unreachable,
    DeadEnd,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Cycle => "cycle",
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::UnitOutOfRange => "unit out of range",
            ViolationKind::NegativeSize => "negative size",
            ViolationKind::BadStart => "start node has predecessors",
            ViolationKind::BadEnd => "end node has successors",
            ViolationKind::Unreachable => "unreachable from start",
            ViolationKind::DeadEnd => "does not reach end",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.subject)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, subject: impl Into<String>) {
        self.violations.push(Violation { kind, subject: subject.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks all structural invariants; violations are collected, never raised.
pub fn validate(g: &Dag) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for t in g.tasks() {
        if !seen.insert(t.name.as_str()) {
            report.push(ViolationKind::DuplicateId, &t.name);
        }
        if t.size < 0.0 || !t.size.is_finite() {
            report.push(ViolationKind::NegativeSize, &t.name);
        } else if t.size > 0.0 && !(t.unit > 0.0 && t.unit <= t.size + EPS) {
            report.push(ViolationKind::UnitOutOfRange, &t.name);
        }
    }
    for &(a, b) in g.edges() {
        if a == b {
            report.push(ViolationKind::Cycle, format!("{} -> {}", g.name(a), g.name(b)));
        }
    }
    if g.topo_order().is_none() && !report.violations.iter().any(|v| v.kind == ViolationKind::Cycle) {
        let cyclic = cyclic_nodes(g);
        report.push(ViolationKind::Cycle, cyclic.join(", "));
    }
    if !g.predecessors(g.start()).is_empty() {
        report.push(ViolationKind::BadStart, g.name(g.start()));
    }
    if !g.successors(g.end()).is_empty() {
        report.push(ViolationKind::BadEnd, g.name(g.end()));
    }
    let from_start = g.descendants(g.start());
    let to_end = g.ancestors(g.end());
    for id in g.ids() {
        if g.task(id).kind.is_dummy() {
            continue;
        }
        if !from_start[id.0] {
            report.push(ViolationKind::Unreachable, g.name(id));
        }
        if !to_end[id.0] {
            report.push(ViolationKind::DeadEnd, g.name(id));
        }
    }
    report
}

fn cyclic_nodes(g: &Dag) -> Vec<String> {
    // Whatever survives repeated removal of sources and sinks lies on or between cycles.
    let n = g.len();
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let has_in = g.pred[i].iter().any(|p| alive[p.0]);
            let has_out = g.succ[i].iter().any(|s| alive[s.0]);
            if !has_in || !has_out {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut names: Vec<String> = (0..n).filter(|&i| alive[i]).map(|i| g.tasks[i].name.clone()).collect();
    names.sort();
    names
}

/// A directed task sequence along edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path(pub Vec<TaskId>);

impl Path {
    pub fn tasks(&self) -> &[TaskId] {
        &self.0
    }

    pub fn head(&self) -> Option<TaskId> {
        self.0.first().copied()
    }

    pub fn tail(&self) -> Option<TaskId> {
        self.0.last().copied()
    }

    pub fn names<'a>(&self, g: &'a Dag) -> Vec<&'a str> {
        self.0.iter().map(|&t| g.name(t)).collect()
    }

    pub fn display(&self, g: &Dag) -> String {
        self.names(g).join("->")
    }

    /// Lexicographic comparison by task name sequence.
    pub fn cmp_by_name(&self, other: &Path, g: &Dag) -> std::cmp::Ordering {
        self.names(g).cmp(&other.names(g))
    }
}

/// All simple directed paths from `head` to `tail`, ordered lexicographically
/// by task name sequence.
pub fn enumerate_paths(g: &Dag, head: TaskId, tail: TaskId) -> Result<Vec<Path>> {
    if head.0 >= g.len() {
        return Err(Error::UnknownTask(head.to_string()));
    }
    if tail.0 >= g.len() {
        return Err(Error::UnknownTask(tail.to_string()));
    }
    let reaches_tail = g.ancestors(tail);
    let mut out = Vec::new();
    let mut stack = vec![head];
    let mut on_stack = vec![false; g.len()];
    on_stack[head.0] = true;
    extend_paths(g, tail, &reaches_tail, &mut stack, &mut on_stack, &mut out);
    out.sort_by(|a, b| a.cmp_by_name(b, g));
    Ok(out)
}

fn extend_paths(
    g: &Dag,
    tail: TaskId,
    reaches_tail: &[bool],
    stack: &mut Vec<TaskId>,
    on_stack: &mut [bool],
    out: &mut Vec<Path>,
) {
    let v = *stack.last().expect("non-empty");
    if v == tail {
        out.push(Path(stack.clone()));
        return;
    }
    for &w in g.successors(v) {
        if reaches_tail[w.0] && !on_stack[w.0] {
            on_stack[w.0] = true;
            stack.push(w);
            extend_paths(g, tail, reaches_tail, stack, on_stack, out);
            stack.pop();
            on_stack[w.0] = false;
        }
    }
}

/// Convenience wrapper resolving names.
pub fn enumerate_paths_by_name(g: &Dag, head: &str, tail: &str) -> Result<Vec<Path>> {
    enumerate_paths(g, g.id(head)?, g.id(tail)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> Dag {
        Dag::builder()
            .task(Task::compute("A", 1.0))
            .task(Task::compute("B", 1.0))
            .task(Task::compute("C", 1.0))
            .task(Task::compute("D", 1.0))
            .edge("A", "B")
            .edge("A", "C")
            .edge("B", "D")
            .edge("C", "D")
            .build()
            .unwrap()
    }

    #[test]
    fn minimal_chain_is_valid() {
        let g = Dag::builder().task(Task::compute("a", 3.0)).build().unwrap();
        assert!(validate(&g).is_valid());
        assert_eq!(g.successors(g.start()), &[g.id("a").unwrap()]);
    }

    #[test]
    fn self_loop_is_a_cycle() {
        let g = Dag::builder().task(Task::compute("a", 1.0)).edge("a", "a").build().unwrap();
        let report = validate(&g);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::Cycle));
        assert!(report.to_string().contains("cycle"));
    }

    #[test]
    fn longer_cycle_is_reported() {
        let g = Dag::builder()
            .task(Task::compute("a", 1.0))
            .task(Task::compute("b", 1.0))
            .task(Task::compute("c", 1.0))
            .chain(&["a", "b", "c", "b"])
            .build()
            .unwrap();
        let report = validate(&g);
        let cycle = report.violations.iter().find(|v| v.kind == ViolationKind::Cycle).unwrap();
        assert_eq!(cycle.subject, "b, c");
    }

    #[test]
    fn zero_unit_is_out_of_range() {
        let g = Dag::builder().task(Task::compute("a", 5.0).with_unit(0.0)).build().unwrap();
        let report = validate(&g);
        assert_eq!(report.violations[0].kind, ViolationKind::UnitOutOfRange);
        assert_eq!(report.violations[0].subject, "a");
        let g = Dag::builder().task(Task::compute("a", 5.0).with_unit(6.0)).build().unwrap();
        assert!(!validate(&g).is_valid());
    }

    #[test]
    fn duplicate_ids_are_reported() {
        let g = Dag::builder().task(Task::compute("a", 1.0)).task(Task::flow("a", 1.0)).build().unwrap();
        assert!(validate(&g).violations.iter().any(|v| v.kind == ViolationKind::DuplicateId));
    }

    #[test]
    fn raw_graph_reachability() {
        let tasks = vec![
            Task { name: START.into(), kind: TaskKind::Start, size: 0.0, unit: 0.0, class: None },
            Task::compute("a", 1.0),
            Task::compute("orphan", 1.0),
            Task { name: END.into(), kind: TaskKind::End, size: 0.0, unit: 0.0, class: None },
        ];
        let g = Dag::from_parts(tasks, vec![(TaskId(0), TaskId(1)), (TaskId(1), TaskId(3))]);
        let kinds: Vec<_> = validate(&g).violations.into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![ViolationKind::Unreachable, ViolationKind::DeadEnd]);
    }

    #[test]
    fn diamond_has_two_paths() {
        let g = diamond();
        let paths = enumerate_paths_by_name(&g, "A", "D").unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].display(&g), "A->B->D");
        assert_eq!(paths[1].display(&g), "A->C->D");
    }

    #[test]
    fn chain_has_one_path() {
        let g = Dag::builder()
            .task(Task::compute("x", 1.0))
            .task(Task::compute("y", 1.0))
            .task(Task::compute("z", 1.0))
            .chain(&["x", "y", "z"])
            .build()
            .unwrap();
        assert_eq!(enumerate_paths_by_name(&g, "x", "z").unwrap().len(), 1);
        assert_eq!(enumerate_paths(&g, g.start(), g.end()).unwrap().len(), 1);
    }

    #[test]
    fn unknown_task_is_an_error() {
        let g = diamond();
        assert!(matches!(enumerate_paths_by_name(&g, "A", "nope"), Err(Error::UnknownTask(_))));
    }

    #[test]
    fn unit_boundaries_allow_fractional_last_unit() {
        let t = Task::compute("a", 10.0).with_unit(3.0);
        assert_eq!(t.unit_boundaries(), vec![3.0, 6.0, 9.0, 10.0]);
        assert_eq!(Task::compute("b", 4.0).unit_boundaries(), vec![4.0]);
        assert!(!Task::compute("b", 4.0).is_pipelineable());
    }

    #[test]
    fn relaxed_edges_need_both_pipelineable() {
        let g = Dag::builder()
            .task(Task::compute("a", 4.0).with_unit(1.0))
            .task(Task::flow("f", 4.0).with_unit(1.0))
            .task(Task::compute("b", 2.0))
            .chain(&["a", "f", "b"])
            .build()
            .unwrap();
        assert!(g.clone().with_pipelined(["b"]).is_err());
        let g = g.with_pipelined(["f"]).unwrap();
        let (a, f, b) = (g.id("a").unwrap(), g.id("f").unwrap(), g.id("b").unwrap());
        assert!(g.is_relaxed(a, f));
        assert!(!g.is_relaxed(f, b));
        assert_eq!(g.pipeline_candidates(), vec![f]);
    }
}
