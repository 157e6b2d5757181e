use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mxdag::analysis::{scenario_library, Scenario, POLICY_NAMES};
use mxdag::exec::{map_par, map_seq, PARALLEL};
use mxdag::resource::TaskRef;
use mxdag::sched::{pipeline_candidates, pipeline_decision};
use mxdag::sim::{inject_straggler, StragglerSpec};

/// Every library scenario paired with every named policy it accepts.
fn policy_grid() -> Vec<(Scenario, &'static str)> {
    let mut grid = Vec::new();
    for s in scenario_library() {
        for &p in POLICY_NAMES {
            if s.policy_named(p).is_ok() {
                grid.push((s.clone(), p));
            }
        }
    }
    grid
}

/// One slowed copy of each scenario per real task.
fn straggler_grid() -> Vec<Scenario> {
    let mut grid = Vec::new();
    for s in scenario_library() {
        for job in &s.jobs {
            for t in job.dag.dag.tasks().iter().filter(|t| !t.kind.is_dummy()) {
                let spec = StragglerSpec::new(TaskRef::new(&job.name, &t.name), 2.0);
                grid.push(inject_straggler(&s, spec).unwrap());
            }
        }
    }
    grid
}

fn run_pair(item: &(Scenario, &str)) -> f64 {
    item.0.run_named(item.1).unwrap().jcts().values().sum()
}

fn run_default(s: &Scenario) -> f64 {
    s.run(s.default_policy().unwrap().as_ref()).unwrap().jcts().values().sum()
}

fn sweeps(c: &mut Criterion) {
    let policies = policy_grid();
    let stragglers = straggler_grid();
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    g.bench_with_input(BenchmarkId::new("policies", "sequential"), &policies, |b, items| {
        b.iter(|| map_seq(items, run_pair))
    });
    g.bench_with_input(BenchmarkId::new("policies", "parallel"), &policies, |b, items| {
        b.iter(|| map_par(items, run_pair))
    });
    g.bench_with_input(BenchmarkId::new("stragglers", "sequential"), &stragglers, |b, items| {
        b.iter(|| map_seq(items, run_default))
    });
    g.bench_with_input(BenchmarkId::new("stragglers", "parallel"), &stragglers, |b, items| {
        b.iter(|| map_par(items, run_default))
    });
    g.finish();
}

/// The built-in searches use `map_par` internally, so this group's numbers
/// move with the `parallel` feature; run with `--no-default-features` to
/// get the sequential figure.
fn searches(c: &mut Criterion) {
    let mode = if PARALLEL { "parallel" } else { "sequential" };
    let lib = scenario_library();
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    let fig2 = lib.iter().find(|s| s.name == "fig2-coflow-ambiguity").unwrap().clone();
    g.bench_function(BenchmarkId::new("flow-order", mode), |b| b.iter(|| fig2.run_named("optimal").unwrap()));
    let fig3 = lib.iter().find(|s| s.name == "fig3-pipelining").unwrap().clone();
    let fair = fig3.policy_named("fair").unwrap();
    let candidates = pipeline_candidates(&fig3.jobs);
    g.bench_function(BenchmarkId::new("pipelining", mode), |b| {
        b.iter(|| pipeline_decision(&fig3.jobs, &fig3.topology, fair.as_ref(), &candidates, &fig3.options()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, sweeps, searches);
criterion_main!(benches);
