#![allow(dead_code)]

use std::collections::BTreeMap;

use mxdag::analysis::{PolicySpec, Scenario};
use mxdag::io::{JobSection, ScenarioFile, TaskSection, TopologySection};
use mxdag::resource::{Demand, Host, TaskRef};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Knobs for [`random_scenario`].
#[derive(Clone, Copy)]
pub struct Shape {
    pub jobs: usize,
    pub hosts: usize,
    pub compute: usize,
    pub edge_prob: f64,
    /// Probability that a task gets a unit (always `size / UNITS`).
    pub pipelineable: f64,
    /// Probability that a pipelineable task is put in the pipelining choice.
    pub pipelined: f64,
    pub uneven_capacity: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { jobs: 1, hosts: 3, compute: 5, edge_prob: 0.4, pipelineable: 0.0, pipelined: 0.0, uneven_capacity: false }
    }
}

/// Every pipelineable task is split into this many units, so pipelined
/// chains always have equal unit counts.
pub const UNITS: f64 = 4.0;

/// Random placed jobs: compute tasks on random hosts, and a flow inserted on
/// every dependency between tasks on different hosts.
pub fn random_scenario(seed: u64, shape: Shape) -> Scenario {
    let mut r = rng(seed);
    let host_ids: Vec<String> = (0..shape.hosts).map(|h| format!("h{h}")).collect();
    let hosts = host_ids
        .iter()
        .map(|id| {
            if shape.uneven_capacity {
                let mut c = || [0.5, 1.0, 2.0][r.gen_range(0..3)];
                Host::new(id.clone(), c(), c(), c())
            } else {
                Host::unit(id.clone())
            }
        })
        .collect();
    let mut jobs = Vec::new();
    let mut pipelining = Vec::new();
    for j in 0..shape.jobs {
        let job = format!("j{j}");
        let mut tasks = Vec::new();
        let mut edges = Vec::new();
        let size = |r: &mut ChaCha8Rng| r.gen_range(1..=8) as f64 * 0.5;
        let placed: Vec<&String> = (0..shape.compute).map(|_| host_ids.choose(&mut r).unwrap()).collect();
        let units = |t: TaskSection, r: &mut ChaCha8Rng, choice: &mut Vec<TaskRef>| {
            if r.gen_bool(shape.pipelineable) {
                let unit = t.size / UNITS;
                if r.gen_bool(shape.pipelined) {
                    choice.push(TaskRef::new(&job, &t.id));
                }
                t.unit(unit)
            } else {
                t
            }
        };
        for (i, h) in placed.iter().enumerate() {
            let s = size(&mut r);
            tasks.push(units(TaskSection::compute(&format!("c{i}"), s, h), &mut r, &mut pipelining));
        }
        for a in 0..shape.compute {
            for b in a + 1..shape.compute {
                if !r.gen_bool(shape.edge_prob) {
                    continue;
                }
                let (ca, cb) = (format!("c{a}"), format!("c{b}"));
                if placed[a] == placed[b] {
                    edges.push((ca, cb));
                } else {
                    let f = format!("f{a}_{b}");
                    let s = size(&mut r);
                    tasks.push(units(TaskSection::flow(&f, s, placed[a], placed[b]), &mut r, &mut pipelining));
                    edges.push((ca, f.clone()));
                    edges.push((f, cb));
                }
            }
        }
        jobs.push(JobSection { id: job, release: 0.0, tasks, edges });
    }
    let mut policy = PolicySpec::named("fair");
    policy.pipelining = pipelining;
    Scenario::from_file(ScenarioFile {
        name: format!("random-{seed}"),
        description: String::new(),
        topology: TopologySection { hosts },
        jobs,
        coflows: BTreeMap::new(),
        policy,
        stragglers: Vec::new(),
    })
    .expect("generated scenarios are valid")
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

/// Random flows over `hosts` hosts: each holds its source egress and its
/// destination ingress.
pub fn random_instance(seed: u64) -> (Vec<Demand>, Vec<f64>) {
    let mut r = rng(seed);
    let hosts = r.gen_range(2..6);
    let caps: Vec<f64> = (0..3 * hosts).map(|_| r.gen_range(0.25..4.0)).collect();
    let n = r.gen_range(1..12);
    let demands = (0..n)
        .map(|_| {
            let s = r.gen_range(0..hosts);
            let d = (s + r.gen_range(1..hosts)) % hosts;
            Demand::new([3 * s + 1, 3 * d + 2])
        })
        .collect();
    (demands, caps)
}

pub fn used(rates: &[f64], demands: &[Demand], caps: usize) -> Vec<f64> {
    let mut u = vec![0.0; caps];
    for (rate, d) in rates.iter().zip(demands) {
        for &(res, w) in &d.uses {
            u[res] += rate * w;
        }
    }
    u
}

/// Max-min fairness by its bottleneck characterization: every flow crosses
/// a saturated resource on which no other flow gets more.
pub fn is_max_min(rates: &[f64], demands: &[Demand], caps: &[f64]) -> Result<(), String> {
    let u = used(rates, demands, caps.len());
    for (i, d) in demands.iter().enumerate() {
        let bottleneck = d.uses.iter().any(|&(res, _)| {
            let saturated = u[res] >= caps[res] * (1.0 - 1e-9);
            let largest = demands
                .iter()
                .enumerate()
                .filter(|(_, o)| o.uses.iter().any(|&(x, _)| x == res))
                .all(|(j, _)| rates[j] <= rates[i] * (1.0 + 1e-9) + 1e-12);
            saturated && largest
        });
        if !bottleneck {
            return Err(format!("flow {i} at {} has no bottleneck", rates[i]));
        }
    }
    Ok(())
}
