mod common;

use mxdag::analysis::{scenario_library, Scenario};
use mxdag::dag::{Dag, Task};
use mxdag::io::{read_trace, write_trace};
use mxdag::length::{dag_length, ResourceAssignment};
use mxdag::resource::{place, Host, Location, Placement, TaskRef, Topology};
use mxdag::sched::fair_share_policy;
use mxdag::sim::{
    check_dependencies, inject_straggler, simulate, trace_jct, unit_pipeline_oracle, ComputeSharing, Job, SimOptions,
    StragglerSpec,
};
use mxdag::Error;
use proptest::prelude::*;

use common::{close, random_scenario, Shape};

fn single_host_job(tasks: Vec<Task>, edges: &[(&str, &str)]) -> (Vec<Job>, Topology) {
    let mut b = Dag::builder();
    for t in tasks {
        b.add(t);
    }
    for (a, c) in edges {
        b.add_edge(a, c);
    }
    let g = b.build().unwrap();
    let topo = Topology::new(vec![Host::unit("h"), Host::unit("k")]).unwrap();
    let placement: Placement = g
        .tasks()
        .iter()
        .filter(|t| !t.kind.is_dummy())
        .map(|t| {
            let loc = match t.kind {
                mxdag::TaskKind::Flow => Location::Link { src: "h".into(), dst: "k".into() },
                _ => Location::Host("h".into()),
            };
            (t.name.clone(), loc)
        })
        .collect();
    (vec![Job::new("J", place(&g, &topo, &placement).unwrap())], topo)
}

#[test]
fn single_task_runs_at_full_rate() {
    let (jobs, topo) = single_host_job(vec![Task::compute("a", 4.0)], &[]);
    let tr = simulate(&jobs, &topo, &fair_share_policy(), &SimOptions::default()).unwrap();
    assert_eq!(trace_jct(&tr, "J").unwrap(), 4.0);
    assert!(matches!(trace_jct(&tr, "nope"), Err(Error::UnknownJob(_))));
}

#[test]
fn two_stage_pipeline_matches_unit_oracle() {
    // Compute on h feeding a flow h->k, both 10 long in units of 2.
    let (jobs, topo) = single_host_job(
        vec![Task::compute("a", 10.0).with_unit(2.0), Task::flow("f", 10.0).with_unit(2.0)],
        &[("a", "f")],
    );
    let policy = mxdag::sched::Policy::with_pipelining(&fair_share_policy(), [TaskRef::new("J", "f")].into());
    let tr = simulate(&jobs, &topo, policy.as_ref(), &SimOptions::default()).unwrap();
    let oracle = unit_pipeline_oracle(&[(10.0, 2.0, 1.0), (10.0, 2.0, 1.0)]);
    assert_eq!(oracle, 12.0);
    assert!(close(tr.jct("J").unwrap(), oracle, 1e-9));
    check_dependencies(&jobs, &tr).unwrap();
}

#[test]
fn independent_jobs_do_not_interfere() {
    let s = random_scenario(7, Shape { jobs: 1, hosts: 2, compute: 4, ..Shape::default() });
    let mut file = s.to_file();
    let mut other = file.clone();
    // Second copy of the job on its own hosts.
    for h in &mut other.topology.hosts {
        h.id = format!("{}-b", h.id);
    }
    for j in &mut other.jobs {
        j.id = format!("{}-b", j.id);
        for t in &mut j.tasks {
            for h in [&mut t.host, &mut t.src, &mut t.dst].into_iter().flatten() {
                *h = format!("{h}-b");
            }
        }
    }
    file.topology.hosts.extend(other.topology.hosts);
    file.jobs.extend(other.jobs);
    let both = Scenario::from_file(file).unwrap();
    let alone = s.run_named("fair").unwrap();
    let together = both.run_named("fair").unwrap();
    for (job, jct) in alone.jcts() {
        assert_eq!(together.jct(&job), Some(jct));
        assert_eq!(together.jct(&format!("{job}-b")), Some(jct));
    }
}

#[test]
fn stragglers_with_slack_are_absorbed_and_critical_ones_are_not() {
    // Long branch a (6); short branch b (1) has 5 units of slack.
    let (jobs, topo) = single_host_job(vec![Task::compute("a", 6.0), Task::flow("b", 1.0)], &[]);
    let base = simulate(&jobs, &topo, &fair_share_policy(), &SimOptions::default()).unwrap();
    let slow = |task: &str| {
        let options = SimOptions {
            stragglers: vec![StragglerSpec::new(TaskRef::new("J", task), 2.0)],
            ..SimOptions::default()
        };
        simulate(&jobs, &topo, &fair_share_policy(), &options).unwrap()
    };
    assert_eq!(slow("b").jct("J"), base.jct("J"));
    assert!(slow("a").jct("J").unwrap() > base.jct("J").unwrap());
}

#[test]
fn inject_straggler_checks_its_target() {
    let s = mxdag::analysis::library_scenario("fig1-coschedule").unwrap();
    assert!(inject_straggler(&s, StragglerSpec::new(TaskRef::new("X", "zz"), 2.0)).is_err());
    assert!(inject_straggler(&s, StragglerSpec::new(TaskRef::new("Y", "b"), 2.0)).is_err());
    assert!(inject_straggler(&s, StragglerSpec::new(TaskRef::new("X", "b"), 0.5)).is_err());
    let once = inject_straggler(&s, StragglerSpec::new(TaskRef::new("X", "b"), 2.0)).unwrap();
    let twice = inject_straggler(&once, StragglerSpec::new(TaskRef::new("X", "b"), 3.0)).unwrap();
    assert_eq!(twice.stragglers.len(), 1);
    assert_eq!(twice.stragglers[0].factor, 3.0);
}

#[test]
fn exclusive_compute_runs_one_task_per_host() {
    let (jobs, topo) = single_host_job(vec![Task::compute("a", 2.0), Task::compute("b", 2.0)], &[]);
    let options = SimOptions { compute_sharing: ComputeSharing::Exclusive, ..SimOptions::default() };
    let tr = simulate(&jobs, &topo, &fair_share_policy(), &options).unwrap();
    assert_eq!(tr.finish_of("J/a"), Some(2.0));
    assert_eq!(tr.finish_of("J/b"), Some(4.0));
    let shared = simulate(&jobs, &topo, &fair_share_policy(), &SimOptions::default()).unwrap();
    assert_eq!(shared.finish_of("J/a"), Some(4.0));
}

#[test]
fn library_traces_are_sound_and_round_trip() {
    for s in scenario_library() {
        for policy in ["fair", "principle1", "principle2"] {
            let tr = s.run_named(policy).unwrap();
            tr.check_conservation().unwrap();
            tr.check_monotone().unwrap();
            check_dependencies(&s.jobs, &tr).unwrap();
            let (_, back) = read_trace(&write_trace(&tr)).unwrap();
            assert_eq!(back, tr, "{} / {policy}", s.name);
        }
    }
}

fn shape(jobs: usize, pipelining: bool) -> Shape {
    Shape {
        jobs,
        hosts: 3,
        compute: 5,
        edge_prob: 0.45,
        pipelineable: if pipelining { 0.6 } else { 0.0 },
        pipelined: 0.7,
        uneven_capacity: true,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_runs_conserve_work_and_respect_dependencies(
        seed in any::<u64>(),
        jobs in 1usize..3,
        pipelining in any::<bool>(),
        policy in prop::sample::select(vec!["fair", "principle1", "principle2"]),
    ) {
        let s = random_scenario(seed, shape(jobs, pipelining));
        let tr = s.run_named(policy).unwrap();
        prop_assert!(tr.check_conservation().is_ok(), "{:?}", tr.check_conservation());
        prop_assert!(tr.check_monotone().is_ok());
        prop_assert!(check_dependencies(&s.jobs, &tr).is_ok(), "{:?}", check_dependencies(&s.jobs, &tr));
        for j in &s.jobs {
            prop_assert!(trace_jct(&tr, &j.name).is_ok());
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), pipelining in any::<bool>()) {
        let s = random_scenario(seed, shape(2, pipelining));
        let a = write_trace(&s.run_named("principle2").unwrap());
        let b = write_trace(&s.run_named("principle2").unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn unit_slowdown_reproduces_the_baseline(seed in any::<u64>(), pick in any::<prop::sample::Index>(), onset in 0.0f64..4.0) {
        let s = random_scenario(seed, shape(1, true));
        let job = &s.jobs[0];
        let real: Vec<&Task> = job.dag.dag.tasks().iter().filter(|t| !t.kind.is_dummy()).collect();
        let t = real[pick.index(real.len())];
        let same = inject_straggler(&s, StragglerSpec::new(TaskRef::new(&job.name, &t.name), 1.0).at(onset)).unwrap();
        prop_assert_eq!(same.run_named("fair").unwrap(), s.run_named("fair").unwrap());
    }

    #[test]
    fn without_contention_the_simulator_matches_path_length(seed in any::<u64>(), pipelining in any::<bool>()) {
        let s = random_scenario(seed, shape(1, pipelining));
        let options = SimOptions { ignore_contention: true, ..s.options() };
        let policy = s.default_policy().unwrap();
        let tr = simulate(&s.jobs, &s.topology, policy.as_ref(), &options).unwrap();
        let job = &s.jobs[0];
        let chosen = s.policy.pipelining.iter().map(|r| r.task.as_str());
        let g = job.dag.normalized(&s.topology).with_pipelined(chosen).unwrap();
        let expected = dag_length(&g, &ResourceAssignment::full(&g)).unwrap();
        prop_assert!(close(tr.jct(&job.name).unwrap(), expected, 1e-9), "sim {} vs length {}", tr.jct(&job.name).unwrap(), expected);
    }
}
