use std::collections::BTreeSet;

use super::{ExecutionTrace, Job};
use crate::dag::TaskId;

const TOL: f64 = 1e-9;

/// Post-hoc check that no task ran before its inputs allowed it.
///
/// Whole-task edges require the consumer to start no earlier than the
/// producer finishes. Pipelined edges require, at every segment boundary,
/// that the consumer has not completed more units than the producer has
/// delivered input for, and that it finishes no earlier than the producer.
/// Every task must also start no earlier than its job's release.
pub fn check_dependencies(jobs: &[Job], trace: &ExecutionTrace) -> Result<(), String> {
    let chosen: BTreeSet<&str> = trace.pipelining.iter().map(String::as_str).collect();
    let mut checkpoints: Vec<f64> = trace.segments.iter().map(|s| s.end).collect();
    checkpoints.dedup();
    for job in jobs {
        let names: Vec<String> = job.dag.dag.tasks().iter().map(|t| t.name.clone()).collect();
        let local: Vec<&str> = chosen.iter().filter_map(|k| k.strip_prefix(&format!("{}/", job.name))).collect();
        let dag = job.dag.dag.clone().with_pipelined(local).map_err(|e| e.to_string())?;
        let key = |t: TaskId| format!("{}/{}", job.name, names[t.0]);
        for t in dag.ids() {
            if dag.task(t).kind.is_dummy() {
                continue;
            }
            if let Some(start) = trace.start_of(&key(t)) {
                if start + TOL < job.release {
                    return Err(format!("{} started at {start} before release {}", key(t), job.release));
                }
            }
        }
        for &(u, v) in dag.edges() {
            let (tu, tv) = (dag.task(u), dag.task(v));
            if tu.kind.is_dummy() || tv.kind.is_dummy() {
                continue;
            }
            let (ku, kv) = (key(u), key(v));
            let Some(sv) = trace.start_of(&kv) else { continue };
            let fu = trace.finish_of(&ku).ok_or_else(|| format!("{kv} started but {ku} never finished"))?;
            let tol = TOL * fu.abs().max(1.0);
            if !dag.is_relaxed(u, v) {
                if sv + tol < fu {
                    return Err(format!("{kv} started at {sv} before {ku} finished at {fu}"));
                }
                continue;
            }
            if let Some(fv) = trace.finish_of(&kv) {
                if fv + tol < fu {
                    return Err(format!("pipelined {kv} finished at {fv} before {ku} at {fu}"));
                }
            }
            let bounds: Vec<f64> = tv.unit_boundaries().iter().map(|b| b / tv.size).collect();
            for &t in &checkpoints {
                let delivered = trace.progress_until(&ku, t) / tu.size;
                let allowed = bounds.iter().copied().filter(|&b| b <= delivered + 1e-9).fold(0.0, f64::max);
                let consumed = trace.progress_until(&kv, t) / tv.size;
                if consumed > allowed + 1e-7 {
                    return Err(format!("{kv} consumed {consumed} of its input at {t} but {ku} allowed only {allowed}"));
                }
            }
        }
    }
    Ok(())
}
