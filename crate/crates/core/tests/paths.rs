mod common;

use std::collections::BTreeSet;

use mxdag::dag::{enumerate_paths, Dag, Task, TaskId};
use mxdag::decompose::{decompose, Decomposition};
use mxdag::length::{critical_path, dag_length, longest_by_enumeration, path_length, ResourceAssignment};
use mxdag::sim::SimOptions;
use proptest::prelude::*;

use common::{close, random_scenario, Shape};

/// Job X: A feeds C along two branches, one through f1, B and f2 and the
/// other through f3 alone.
fn job_x(size: f64) -> Dag {
    Dag::builder()
        .task(Task::compute("A", size))
        .task(Task::flow("f1", size))
        .task(Task::compute("B", size))
        .task(Task::flow("f2", size))
        .task(Task::flow("f3", size))
        .task(Task::compute("C", size))
        .chain(&["A", "f1", "B", "f2", "C"])
        .chain(&["A", "f3", "C"])
        .build()
        .unwrap()
}

#[test]
fn branch_and_join_form_one_copath_with_two_members() {
    let g = job_x(2.0);
    let d = decompose(&g, g.id("A").unwrap(), g.id("C").unwrap()).unwrap();
    let copaths = d.copaths();
    assert_eq!(copaths.len(), 1);
    assert_eq!(copaths[0].members.len(), 2);
    assert_eq!(g.name(copaths[0].head), "A");
    assert_eq!(g.name(copaths[0].tail), "C");
}

#[test]
fn plain_chains_become_single_leaves() {
    let g = Dag::builder().task(Task::compute("a", 2.0)).task(Task::flow("b", 3.0)).chain(&["a", "b"]).build().unwrap();
    let d = decompose(&g, g.id("a").unwrap(), g.id("b").unwrap()).unwrap();
    assert!(matches!(d, Decomposition::Sequential(ref ts) if ts.len() == 2), "{d:?}");

    let g = Dag::builder()
        .task(Task::compute("a", 4.0).with_unit(1.0))
        .task(Task::flow("b", 8.0).with_unit(2.0))
        .chain(&["a", "b"])
        .build()
        .unwrap()
        .with_pipelined(["b"])
        .unwrap();
    let d = decompose(&g, g.id("a").unwrap(), g.id("b").unwrap()).unwrap();
    assert!(matches!(d, Decomposition::Pipelineable(ref ts) if ts.len() == 2), "{d:?}");
}

/// Counts head-to-tail paths by plain depth-first search over successor
/// lists, independent of the library's enumeration.
fn dfs_count(g: &Dag, from: TaskId, to: TaskId) -> usize {
    if from == to {
        return 1;
    }
    g.successors(from).iter().map(|&s| dfs_count(g, s, to)).sum()
}

#[test]
fn asymmetric_coflow_dag_path_count_matches_dfs() {
    let s = mxdag::analysis::library_scenario("fig2-coflow-ambiguity").unwrap();
    let g = &s.jobs[0].dag.dag;
    let (a, end) = (g.id("A").unwrap(), g.id("G").unwrap());
    let paths = enumerate_paths(g, a, end).unwrap();
    assert_eq!(paths.len(), dfs_count(g, a, end));
    let names: BTreeSet<Vec<&str>> = paths.iter().map(|p| p.names(g)).collect();
    assert_eq!(names.len(), paths.len(), "paths are distinct");
}

#[test]
fn copath_of_series_and_branches() {
    // s (5) then a Copath whose members take 3 and 7.
    let g = Dag::builder()
        .task(Task::compute("s", 5.0))
        .task(Task::compute("x", 3.0))
        .task(Task::compute("y", 7.0))
        .task(Task::compute("t", 0.0))
        .chain(&["s", "x", "t"])
        .chain(&["s", "y", "t"])
        .build()
        .unwrap();
    let r = ResourceAssignment::full(&g);
    assert_eq!(dag_length(&g, &r).unwrap(), 12.0);
    let (path, len) = critical_path(&g, g.start(), g.end(), &r).unwrap();
    assert_eq!(len, 12.0);
    assert!(path.names(&g).contains(&"y"));

    let sym = Dag::builder()
        .task(Task::compute("x", 4.0))
        .task(Task::compute("y", 4.0))
        .build()
        .unwrap();
    assert_eq!(dag_length(&sym, &ResourceAssignment::full(&sym)).unwrap(), 4.0);
}

#[test]
fn job_x_length_matches_contention_free_simulation() {
    let s = mxdag::analysis::library_scenario("fig1-coschedule").unwrap();
    let g = job_x(2.0);
    let mut placement = mxdag::resource::Placement::new();
    use mxdag::resource::Location::{Host, Link};
    placement.insert("A".into(), Host("A".into()));
    placement.insert("f1".into(), Link { src: "A".into(), dst: "B".into() });
    placement.insert("B".into(), Host("B".into()));
    placement.insert("f2".into(), Link { src: "B".into(), dst: "C".into() });
    placement.insert("f3".into(), Link { src: "A".into(), dst: "C".into() });
    placement.insert("C".into(), Host("C".into()));
    let placed = mxdag::resource::place(&g, &s.topology, &placement).unwrap();
    let expected = dag_length(&placed.normalized(&s.topology), &ResourceAssignment::full(&g)).unwrap();
    assert_eq!(expected, 10.0);
    let jobs = vec![mxdag::sim::Job::new("X", placed)];
    let options = SimOptions { ignore_contention: true, ..SimOptions::default() };
    let trace = mxdag::sim::simulate(&jobs, &s.topology, &mxdag::sched::fair_share_policy(), &options).unwrap();
    assert!(close(trace.jct("X").unwrap(), expected, 1e-9));
}

fn shape(pipelining: bool) -> Shape {
    Shape {
        compute: 6,
        edge_prob: 0.45,
        pipelineable: if pipelining { 0.6 } else { 0.0 },
        pipelined: 0.6,
        uneven_capacity: true,
        ..Shape::default()
    }
}

fn normalized(seed: u64, pipelining: bool) -> Dag {
    let s = random_scenario(seed, shape(pipelining));
    let chosen: Vec<&str> = s.policy.pipelining.iter().map(|r| r.task.as_str()).collect();
    s.jobs[0].dag.normalized(&s.topology).with_pipelined(chosen).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn recursion_agrees_with_enumeration(seed in any::<u64>(), pipelining in any::<bool>()) {
        let g = normalized(seed, pipelining);
        let r = ResourceAssignment::full(&g);
        let rec = path_length(&g, g.start(), g.end(), &r).unwrap();
        let brute = longest_by_enumeration(&g, g.start(), g.end(), &r).unwrap();
        prop_assert!(close(rec, brute, 1e-9), "recursion {rec} vs enumeration {brute}");
        let (_, crit) = critical_path(&g, g.start(), g.end(), &r).unwrap();
        prop_assert!(close(crit, rec, 1e-9));
    }

    #[test]
    fn less_resource_never_shortens(seed in any::<u64>(), pick in any::<prop::sample::Index>(), frac in 0.05f64..1.0) {
        let g = normalized(seed, false);
        let full = ResourceAssignment::full(&g);
        let real: Vec<TaskId> = g.ids().filter(|&t| !g.task(t).kind.is_dummy()).collect();
        let t = real[pick.index(real.len())];
        let reduced = full.clone().with(t, frac);
        prop_assert!(dag_length(&g, &reduced).unwrap() >= dag_length(&g, &full).unwrap() - 1e-12);
    }

    #[test]
    fn growing_a_task_never_shortens(seed in any::<u64>(), pick in any::<prop::sample::Index>(), extra in 0.0f64..5.0) {
        let g = normalized(seed, false);
        let r = ResourceAssignment::full(&g);
        let real: Vec<TaskId> = g.ids().filter(|&t| !g.task(t).kind.is_dummy()).collect();
        let t = real[pick.index(real.len())];
        let mut tasks = g.tasks().to_vec();
        tasks[t.0].size += extra;
        tasks[t.0].unit = tasks[t.0].size;
        let bigger = Dag::from_parts(tasks, g.edges().to_vec());
        prop_assert!(dag_length(&bigger, &r).unwrap() >= dag_length(&g, &r).unwrap() - 1e-12);
    }

    #[test]
    fn decomposition_covers_exactly_the_region(seed in any::<u64>(), pipelining in any::<bool>()) {
        let g = normalized(seed, pipelining);
        let d = decompose(&g, g.start(), g.end()).unwrap();
        let leaves: BTreeSet<TaskId> = d.leaves().into_iter().collect();
        let on_paths: BTreeSet<TaskId> =
            enumerate_paths(&g, g.start(), g.end()).unwrap().iter().flat_map(|p| p.tasks().to_vec()).collect();
        let inner: BTreeSet<TaskId> = on_paths.iter().copied().filter(|&t| t != g.start() && t != g.end()).collect();
        prop_assert!(leaves.is_subset(&on_paths));
        prop_assert!(inner.is_subset(&leaves));
    }
}
