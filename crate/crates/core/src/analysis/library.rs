//! Built-in scenarios reproducing the motivating examples: co-scheduling a
//! flow with the compute it feeds, coflow grouping ambiguity, pipelining
//! trade-offs, layer-ordered parameter sync, and altruistic multi-job
//! sharing.

use std::collections::BTreeMap;

use super::{PolicySpec, Scenario};
use crate::io::{JobSection, ScenarioFile, TaskSection as T, TopologySection};
use crate::resource::{CoflowGrouping, Host, TaskRef};

/// Scenario families and the scenario names in each.
pub const FAMILIES: &[(&str, &[&str])] = &[
    ("fig1-coschedule", &["fig1-coschedule"]),
    ("fig2-coflow-ambiguity", &["fig2-coflow-ambiguity", "fig2-coflow-ambiguity-compute"]),
    ("fig3-pipelining", &["fig3-pipelining"]),
    ("fig5-ddl", &["fig5-ddl"]),
    ("fig6-mapreduce", &["fig6-mapreduce"]),
];

/// Every library scenario, validated.
pub fn scenario_library() -> Vec<Scenario> {
    vec![
        fig1_coschedule(),
        fig2_topology(),
        fig2_compute(),
        fig3_pipelining(),
        fig5_ddl(),
        fig6_mapreduce(),
    ]
}

/// Looks a scenario up by name, family name, or short alias (`fig1` ..).
pub fn library_scenario(name: &str) -> Option<Scenario> {
    let resolved = FAMILIES
        .iter()
        .find(|(family, _)| *family == name || family.split('-').next() == Some(name))
        .map_or(name, |(_, members)| members[0]);
    scenario_library().into_iter().find(|s| s.name == resolved)
}

fn hosts(ids: &[&str]) -> TopologySection {
    TopologySection { hosts: ids.iter().map(|h| Host::unit(*h)).collect() }
}

fn job(id: &str, tasks: Vec<T>, edges: &[(&str, &str)]) -> JobSection {
    JobSection {
        id: id.into(),
        release: 0.0,
        tasks,
        edges: edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    }
}

fn refs(job: &str, tasks: &[&str]) -> Vec<TaskRef> {
    tasks.iter().map(|t| TaskRef::new(job, *t)).collect()
}

fn grouping(job: &str, groups: &[(&str, &[&str])]) -> CoflowGrouping {
    groups.iter().fold(CoflowGrouping::new(), |g, (name, members)| g.group(name, &refs(job, members)))
}

fn build(file: ScenarioFile) -> Scenario {
    let name = file.name.clone();
    Scenario::from_file(file).unwrap_or_else(|e| panic!("library scenario {name} is invalid: {e}"))
}

fn fig1_coschedule() -> Scenario {
    // f1 and f3 leave host A together; f1 feeds the longer branch.
    build(ScenarioFile {
        name: "fig1-coschedule".into(),
        description: "Two flows share host A's egress; the one feeding the longer compute should go first.".into(),
        topology: hosts(&["A", "B", "C"]),
        jobs: vec![job(
            "X",
            vec![T::flow("f1", 1.0, "A", "B"), T::compute("b", 2.0, "B"), T::flow("f3", 1.0, "A", "C"), T::compute("c", 1.0, "C")],
            &[("f1", "b"), ("f3", "c")],
        )],
        coflows: BTreeMap::new(),
        policy: PolicySpec::named("principle1"),
        stragglers: Vec::new(),
    })
}

fn fig2_compute() -> Scenario {
    let x = "X";
    let coflows = BTreeMap::from([
        ("b1".to_string(), grouping(x, &[("send", &["f1", "f2"]), ("gather", &["f3", "f4"])])),
        ("b2".to_string(), grouping(x, &[("send", &["f1", "f2"])])),
        ("b3".to_string(), grouping(x, &[("gather", &["f3", "f4"])])),
    ]);
    build(ScenarioFile {
        name: "fig2-coflow-ambiguity-compute".into(),
        description: "Symmetric DAG with unequal compute on B and C; grouping flows as coflows hides which one is critical."
            .into(),
        topology: hosts(&["A", "B", "C", "D"]),
        jobs: vec![job(
            x,
            vec![
                T::flow("f1", 1.0, "A", "B"),
                T::flow("f2", 1.0, "A", "C"),
                T::compute("b", 3.0, "B"),
                T::compute("c", 1.0, "C"),
                T::flow("f3", 1.0, "B", "D"),
                T::flow("f4", 1.0, "C", "D"),
                T::compute("d", 1.0, "D"),
            ],
            &[("f1", "b"), ("b", "f3"), ("f3", "d"), ("f2", "c"), ("c", "f4"), ("f4", "d")],
        )],
        coflows,
        policy: PolicySpec::named("fair"),
        stragglers: Vec::new(),
    })
}

fn fig2_topology() -> Scenario {
    let x = "X";
    let coflows = BTreeMap::from([
        ("b1".to_string(), grouping(x, &[("broadcast", &["f3", "f4"]), ("aggregate", &["f5", "f6"])])),
        ("b2".to_string(), grouping(x, &[("aggregate", &["f2", "f4"])])),
        ("b3".to_string(), grouping(x, &[("shuffle", &["f2", "f3", "f4"])])),
    ]);
    build(ScenarioFile {
        name: "fig2-coflow-ambiguity".into(),
        description: "Asymmetric DAG with three plausible coflow groupings, none of which matches the per-flow optimum."
            .into(),
        topology: hosts(&["HA", "HB", "HD", "HE", "HF"]),
        jobs: vec![job(
            x,
            vec![
                T::compute("A", 1.0, "HA"),
                T::flow("f1", 1.0, "HA", "HB"),
                T::compute("B", 2.0, "HB"),
                T::flow("f2", 1.0, "HB", "HE"),
                T::compute("C", 1.0, "HA"),
                T::flow("f3", 1.0, "HA", "HD"),
                T::flow("f4", 1.0, "HA", "HE"),
                T::compute("D", 2.0, "HD"),
                T::compute("E", 1.0, "HE"),
                T::flow("f5", 1.0, "HD", "HF"),
                T::flow("f6", 1.0, "HE", "HF"),
                T::compute("F", 1.0, "HF"),
                T::compute("G", 1.0, "HF"),
            ],
            &[
                ("A", "f1"),
                ("f1", "B"),
                ("B", "f2"),
                ("f2", "E"),
                ("A", "C"),
                ("C", "f3"),
                ("f3", "D"),
                ("C", "f4"),
                ("f4", "E"),
                ("D", "f5"),
                ("f5", "F"),
                ("E", "f6"),
                ("f6", "F"),
                ("F", "G"),
            ],
        )],
        coflows,
        policy: PolicySpec::named("fair"),
        stragglers: Vec::new(),
    })
}

fn fig3_pipelining() -> Scenario {
    build(ScenarioFile {
        name: "fig3-pipelining".into(),
        description: "Pipelining off the critical path is neutral, on it helps, and where it adds contention it hurts."
            .into(),
        topology: hosts(&["HA", "HB", "HC", "HD"]),
        jobs: vec![job(
            "X",
            vec![
                T::compute("A", 4.0, "HA").unit(1.0),
                T::flow("flow1", 4.0, "HA", "HB").unit(1.0),
                T::compute("B", 2.0, "HB"),
                T::flow("flow2", 1.0, "HB", "HC"),
                T::compute("C", 1.0, "HC"),
                T::flow("flow3", 2.0, "HA", "HD").unit(0.5),
                T::compute("D", 0.5, "HD").unit(0.125),
                T::flow("flow4", 0.5, "HD", "HC").unit(0.125),
            ],
            &[
                ("A", "flow1"),
                ("flow1", "B"),
                ("B", "flow2"),
                ("flow2", "C"),
                ("A", "flow3"),
                ("flow3", "D"),
                ("D", "flow4"),
                ("flow4", "C"),
            ],
        )],
        coflows: BTreeMap::new(),
        policy: PolicySpec::named("fair"),
        stragglers: Vec::new(),
    })
}

fn fig5_ddl() -> Scenario {
    build(ScenarioFile {
        name: "fig5-ddl".into(),
        description: "Two-layer data-parallel training step with a parameter server; layer 0 sync gates the next forward pass first."
            .into(),
        topology: hosts(&["W", "PS"]),
        jobs: vec![job(
            "ddl",
            vec![
                T::compute("BP1", 1.0, "W").class("gpu"),
                T::compute("BP0", 1.0, "W").class("gpu"),
                T::flow("push1", 2.0, "W", "PS"),
                T::flow("push0", 2.0, "W", "PS"),
                T::flow("pull1", 2.0, "PS", "W"),
                T::flow("pull0", 2.0, "PS", "W"),
                T::compute("FP0", 1.0, "W").class("gpu"),
                T::compute("FP1", 1.0, "W").class("gpu"),
            ],
            &[
                ("BP1", "BP0"),
                ("BP1", "push1"),
                ("push1", "pull1"),
                ("pull1", "FP1"),
                ("BP0", "push0"),
                ("push0", "pull0"),
                ("pull0", "FP0"),
                ("FP0", "FP1"),
            ],
        )],
        coflows: BTreeMap::new(),
        policy: PolicySpec::named("principle1"),
        stragglers: Vec::new(),
    })
}

fn fig6_mapreduce() -> Scenario {
    // b and d share H2's compute; f2 and f3 share H2's egress.
    build(ScenarioFile {
        name: "fig6-mapreduce".into(),
        description: "Two map-reduce jobs; job 1's short branch has slack it can give to job 2's critical path.".into(),
        topology: hosts(&["H1", "H2", "H3", "H4"]),
        jobs: vec![
            job(
                "job1",
                vec![
                    T::compute("a", 4.0, "H1"),
                    T::flow("f1", 4.0, "H1", "H3"),
                    T::compute("b", 1.0, "H2"),
                    T::flow("f2", 1.0, "H2", "H3"),
                    T::compute("c", 1.0, "H3"),
                ],
                &[("a", "f1"), ("f1", "c"), ("b", "f2"), ("f2", "c")],
            ),
            job(
                "job2",
                vec![T::compute("d", 1.0, "H2"), T::flow("f3", 1.0, "H2", "H4"), T::compute("e", 1.0, "H4")],
                &[("d", "f3"), ("f3", "e")],
            ),
        ],
        coflows: BTreeMap::new(),
        policy: PolicySpec::named("principle2"),
        stragglers: Vec::new(),
    })
}
