use super::{PipeliningChoice, Policy};
use crate::dag::EPS;
use crate::error::{Error, Result};
use crate::exec::map_par;
use crate::resource::{TaskRef, Topology};
use crate::sim::{simulate, Job, SimOptions};

/// Candidate counts up to this are searched exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineDecision {
    pub choice: PipeliningChoice,
    /// Total JCT with the chosen pipelining.
    pub jct: f64,
    /// Total JCT without pipelining.
    pub baseline: f64,
    /// Number of simulated choices.
    pub evaluated: usize,
}

/// Every task that could be pipelined against a pipelineable predecessor.
pub fn pipeline_candidates(jobs: &[Job]) -> Vec<TaskRef> {
    jobs.iter()
        .flat_map(|j| j.dag.dag.pipeline_candidates().into_iter().map(|t| TaskRef::new(j.name.clone(), j.dag.dag.name(t))))
        .collect()
}

/// Picks the pipelining choice that minimizes simulated total JCT under
/// `policy`. Equal JCTs prefer fewer pipelined tasks, then the
/// lexicographically smaller set. The empty choice is always a contender,
/// so the result never does worse than no pipelining.
pub fn pipeline_decision(
    jobs: &[Job],
    topo: &Topology,
    policy: &dyn Policy,
    candidates: &[TaskRef],
    options: &SimOptions,
) -> Result<PipelineDecision> {
    let mut candidates = candidates.to_vec();
    candidates.sort();
    candidates.dedup();
    for c in &candidates {
        let job = jobs.iter().find(|j| j.name == c.job).ok_or_else(|| Error::UnknownJob(c.job.clone()))?;
        let id = job.dag.dag.id(&c.task)?;
        if !job.dag.dag.task(id).is_pipelineable() {
            return Err(Error::NotPipelineable { task: c.to_string() });
        }
    }
    let score = |choice: &PipeliningChoice| -> Result<f64> {
        let p = policy.with_pipelining(choice.clone());
        Ok(simulate(jobs, topo, p.as_ref(), options)?.total_jct())
    };
    let baseline = score(&PipeliningChoice::new())?;

    let (choice, jct, evaluated) = if candidates.len() <= EXHAUSTIVE_LIMIT {
        let choices: Vec<PipeliningChoice> = (0u32..1 << candidates.len())
            .map(|mask| (0..candidates.len()).filter(|&k| mask & (1 << k) != 0).map(|k| candidates[k].clone()).collect())
            .collect();
        let scores = map_par(&choices, score);
        let mut best: Option<(PipeliningChoice, f64)> = None;
        for (c, s) in choices.iter().zip(scores) {
            let s = s?;
            if best.as_ref().is_none_or(|(bc, bs)| better(c, s, bc, *bs)) {
                best = Some((c.clone(), s));
            }
        }
        let (c, s) = best.expect("the empty choice is always scored");
        (c, s, choices.len())
    } else {
        // Add one task at a time while that strictly helps.
        let mut current = PipeliningChoice::new();
        let mut current_jct = baseline;
        let mut evaluated = 1;
        loop {
            let next: Vec<PipeliningChoice> = candidates
                .iter()
                .filter(|c| !current.contains(*c))
                .map(|c| {
                    let mut n = current.clone();
                    n.insert(c.clone());
                    n
                })
                .collect();
            let scores = map_par(&next, score);
            evaluated += next.len();
            let mut best: Option<(PipeliningChoice, f64)> = None;
            for (c, s) in next.into_iter().zip(scores) {
                let s = s?;
                if s < current_jct - EPS && best.as_ref().is_none_or(|(bc, bs)| better(&c, s, bc, *bs)) {
                    best = Some((c, s));
                }
            }
            match best {
                Some((c, s)) => {
                    current = c;
                    current_jct = s;
                }
                None => break,
            }
        }
        (current, current_jct, evaluated)
    };
    Ok(PipelineDecision { choice, jct, baseline, evaluated })
}

fn better(a: &PipeliningChoice, sa: f64, b: &PipeliningChoice, sb: f64) -> bool {
    if sa < sb - EPS {
        return true;
    }
    if sa > sb + EPS {
        return false;
    }
    (a.len(), a) < (b.len(), b)
}
