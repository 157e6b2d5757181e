//! `mxdag` command line: validate scenarios, simulate them under a policy,
//! compare policies, ask what-if questions and query critical paths.
//!
//! Exit status is 0 on success, 1 when a scenario is invalid or a
//! simulation fails, and 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use mxdag::analysis::{
    compare_policies, critical_paths, library_scenario, scenario_library, whatif, Modification, Scenario, FAMILIES,
    POLICY_NAMES,
};
use mxdag::io::{gantt_csv, summary_csv, trace_header, write_trace_with, ScenarioFile};
use mxdag::resource::{CoflowGrouping, Location, TaskRef};
use mxdag::sched::{pipeline_candidates, pipeline_decision};
use mxdag::sim::{inject_straggler, StragglerSpec};
use mxdag::Error;

#[derive(Parser)]
#[command(name = "mxdag", version, about = "Co-scheduling analysis for compute/network task graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every violation.
    Validate { scenario: String },
    /// Simulate a scenario and write its trace.
    Run {
        #[command(flatten)]
        common: Common,
        /// Also write Gantt rows as CSV.
        #[arg(long)]
        gantt: Option<PathBuf>,
        /// Also write per-task start/finish as CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Record the wall-clock creation time in the trace header (makes
        /// repeated runs differ).
        #[arg(long)]
        timestamp: bool,
    },
    /// Run several policies on one scenario and tabulate JCTs.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy names.
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        /// Also write the JCT table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Re-run a scenario after edits and report the JCT change.
    Whatif {
        #[command(flatten)]
        common: Common,
        /// `task=size` or `task=size:unit`.
        #[arg(long)]
        resize: Vec<String>,
        /// `task=host` for compute, `task=src:dst` for flows.
        #[arg(long = "move")]
        relocate: Vec<String>,
        /// `grouping=group:flow,flow;group:flow,...`
        #[arg(long)]
        regroup: Vec<String>,
    },
    /// Print each job's full-resource critical path.
    Critpath {
        #[command(flatten)]
        common: Common,
    },
    /// List (and optionally write out) the built-in scenarios.
    Scenarios {
        /// Write each scenario as `<name>.json` into this directory.
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a built-in scenario.
    scenario: String,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Policy overriding the scenario's own.
    #[arg(long)]
    policy: Option<String>,
    /// Pipelined tasks (`task` or `job/task`, comma-separated), or `auto`.
    /// For `whatif`, each listed task is toggled.
    #[arg(long, value_delimiter = ',')]
    pipeline: Vec<String>,
    /// Injected slowdown `task:factor[:onset]`; repeatable.
    #[arg(long)]
    straggler: Vec<String>,
    /// Accepted for scripts; every command is deterministic regardless.
    #[arg(long)]
    seedless: bool,
}

enum Failure {
    Usage(String),
    Failed(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Failed(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Policy(msg) => Failure::Usage(msg),
            other => Failure::Failed(other.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Run { common, gantt, summary, timestamp } => cmd_run(&common, gantt, summary, timestamp),
        Command::Compare { common, policies, csv } => cmd_compare(&common, &policies, csv),
        Command::Whatif { common, resize, relocate, regroup } => cmd_whatif(&common, &resize, &relocate, &regroup),
        Command::Critpath { common } => cmd_critpath(&common),
        Command::Scenarios { write } => cmd_scenarios(write),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Reads a scenario file, or falls back to the built-in library.
fn load_file(arg: &str) -> Result<ScenarioFile, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return ScenarioFile::from_json(&text).map_err(|e| Failure::Failed(anyhow!("{arg}: {e}")));
    }
    library_scenario(arg).map(|s| s.to_file()).ok_or_else(|| {
        Failure::Failed(anyhow!("`{arg}` is neither a readable file nor a built-in scenario (see `mxdag scenarios`)"))
    })
}

fn task_ref(s: &Scenario, text: &str) -> Result<TaskRef, Failure> {
    let only_job = (s.jobs.len() == 1).then(|| s.jobs[0].name.as_str());
    TaskRef::parse_in(text, only_job).map_err(|e| Failure::Usage(e.to_string()))
}

fn number(text: &str, what: &str) -> Result<f64, Failure> {
    text.parse().map_err(|_| Failure::Usage(format!("{what} `{text}` is not a number")))
}

/// Loads the scenario and applies `--policy`, `--straggler` and, unless
/// `whatif` handles it, `--pipeline`.
fn load(common: &Common, apply_pipeline: bool) -> Result<Scenario, Failure> {
    let mut s = Scenario::from_file(load_file(&common.scenario)?).map_err(|e| Failure::Failed(e.into()))?;
    if let Some(name) = &common.policy {
        check_policy_name(&s, name)?;
        s.policy.name = name.clone();
    }
    for spec in &common.straggler {
        // Task references use `/`, never `:`, so a plain split is unambiguous.
        let (task, factor, onset) = match spec.split(':').collect::<Vec<_>>().as_slice() {
            [t, f] => (*t, *f, "0"),
            [t, f, o] => (*t, *f, *o),
            _ => return Err(Failure::Usage(format!("straggler `{spec}` must be task:factor[:onset]"))),
        };
        let r = task_ref(&s, task)?;
        let st = StragglerSpec::new(r, number(factor, "factor")?).at(number(onset, "onset")?);
        s = inject_straggler(&s, st).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if apply_pipeline && !common.pipeline.is_empty() {
        if common.pipeline.iter().any(|p| p == "auto") {
            if common.pipeline.len() > 1 {
                return Err(Failure::Usage("`--pipeline auto` cannot be combined with task ids".into()));
            }
            let policy = s.default_policy()?;
            let decision =
                pipeline_decision(&s.jobs, &s.topology, policy.as_ref(), &pipeline_candidates(&s.jobs), &s.options())?;
            eprintln!(
                "pipelining chosen: [{}] (total JCT {} vs {} without, {} choices simulated)",
                decision.choice.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", "),
                decision.jct,
                decision.baseline,
                decision.evaluated
            );
            s.policy.pipelining = decision.choice.into_iter().collect();
        } else {
            s.policy.pipelining = common.pipeline.iter().map(|p| task_ref(&s, p)).collect::<Result<_, _>>()?;
        }
        let mut file = s.to_file();
        file.policy = s.policy.clone();
        s = Scenario::from_file(file).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(s)
}

fn check_policy_name(s: &Scenario, name: &str) -> CmdResult {
    let known = POLICY_NAMES.contains(&name)
        || name.strip_prefix("coflow-").is_some_and(|g| s.coflows.contains_key(g));
    if known {
        Ok(())
    } else {
        let groupings: Vec<String> = s.coflows.keys().map(|g| format!("coflow-{g}")).collect();
        Err(Failure::Usage(format!(
            "unknown policy `{name}` (known: {}{}{})",
            POLICY_NAMES.join(", "),
            if groupings.is_empty() { "" } else { ", " },
            groupings.join(", ")
        )))
    }
}

fn write_out(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_validate(arg: &str) -> CmdResult {
    let file = load_file(arg)?;
    match Scenario::from_file(file) {
        Ok(s) => {
            let tasks: usize = s.jobs.iter().map(|j| j.dag.dag.len() - 2).sum();
            println!("valid: {} ({} jobs, {} tasks, {} hosts)", s.name, s.jobs.len(), tasks, s.topology.hosts.len());
            Ok(())
        }
        Err(e) => {
            println!("invalid: {e}");
            Err(Failure::Failed(anyhow!("validation failed")))
        }
    }
}

fn cmd_run(common: &Common, gantt: Option<PathBuf>, summary: Option<PathBuf>, timestamp: bool) -> CmdResult {
    let s = load(common, true)?;
    let trace = s.run(s.default_policy()?.as_ref())?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    println!("scenario {} under {}", s.name, trace.policy);
    for (job, jct) in trace.jcts() {
        println!("  {job}: JCT {jct}");
    }
    let mut header = trace_header(&trace);
    if timestamp {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        header.created = Some(format!("{secs}"));
    }
    if let Some(out) = &common.out {
        write_out(out, &write_trace_with(&trace, &header))?;
    }
    if let Some(path) = gantt {
        write_out(&path, &gantt_csv(&trace))?;
    }
    if let Some(path) = summary {
        write_out(&path, &summary_csv(&trace))?;
    }
    Ok(())
}

fn cmd_compare(common: &Common, policies: &[String], csv: Option<PathBuf>) -> CmdResult {
    let s = load(common, true)?;
    for p in policies {
        check_policy_name(&s, p)?;
    }
    let names: Vec<&str> = policies.iter().map(String::as_str).collect();
    let report = compare_policies(&s, &names)?;
    print!("{}", report.to_table());
    if let Some(best) = report.best() {
        println!("best: {best}");
    }
    if let Some(out) = &common.out {
        let header = serde_json::json!({ "record": "header", "format": 1, "tool": format!("mxdag {}", env!("CARGO_PKG_VERSION")), "scenario": s.name, "policy": names.join(",") });
        let mut body = serde_json::to_value(&report).map_err(|e| anyhow!(e))?;
        body["record"] = "comparison".into();
        write_out(out, &format!("{header}\n{body}\n"))?;
    }
    if let Some(path) = csv {
        write_out(&path, &report.to_csv())?;
    }
    Ok(())
}

fn parse_groups(s: &Scenario, spec: &str) -> Result<(String, CoflowGrouping), Failure> {
    let (name, body) = spec.split_once('=').ok_or_else(|| Failure::Usage(format!("regroup `{spec}` needs `name=`")))?;
    let mut grouping = CoflowGrouping::new();
    for group in body.split(';').filter(|g| !g.is_empty()) {
        let (g, members) =
            group.split_once(':').ok_or_else(|| Failure::Usage(format!("group `{group}` needs `name:flow,...`")))?;
        let members = members.split(',').map(|m| task_ref(s, m)).collect::<Result<Vec<_>, _>>()?;
        grouping = grouping.group(g, &members);
    }
    Ok((name.to_string(), grouping))
}

fn cmd_whatif(common: &Common, resize: &[String], relocate: &[String], regroup: &[String]) -> CmdResult {
    let s = load(common, false)?;
    let mut mods = Vec::new();
    for p in &common.pipeline {
        mods.push(Modification::TogglePipelining { task: task_ref(&s, p)? });
    }
    for r in resize {
        let (task, rest) = r.split_once('=').ok_or_else(|| Failure::Usage(format!("resize `{r}` needs task=size")))?;
        let (size, unit) = match rest.split_once(':') {
            Some((a, b)) => (number(a, "size")?, Some(number(b, "unit")?)),
            None => (number(rest, "size")?, None),
        };
        mods.push(Modification::Resize { task: task_ref(&s, task)?, size, unit });
    }
    for m in relocate {
        let (task, to) = m.split_once('=').ok_or_else(|| Failure::Usage(format!("move `{m}` needs task=location")))?;
        let location = match to.split_once(':') {
            Some((src, dst)) => Location::Link { src: src.into(), dst: dst.into() },
            None => Location::Host(to.into()),
        };
        mods.push(Modification::Replace { task: task_ref(&s, task)?, location });
    }
    for g in regroup {
        let (grouping, groups) = parse_groups(&s, g)?;
        mods.push(Modification::Regroup { grouping, groups });
    }
    if mods.is_empty() {
        return Err(Failure::Usage("whatif needs at least one of --pipeline, --resize, --move, --regroup".into()));
    }
    let report = whatif(&s, &mods).map_err(|e| match e {
        Error::Modification(msg) => Failure::Usage(msg),
        other => other.into(),
    })?;
    println!("policy {}", report.policy);
    println!("{:10}  {:>10}  {:>10}  {:>10}", "job", "before", "after", "delta");
    for (job, before) in &report.before {
        let after = report.after.get(job).copied().unwrap_or(f64::NAN);
        let delta = report.delta.get(job).copied().unwrap_or(f64::NAN);
        println!("{job:10}  {before:>10.4}  {after:>10.4}  {delta:>10.4}");
    }
    for job in report.critical_path_changed() {
        println!("critical path of {job} changed: {}", report.critical_after[job].tasks.join(" -> "));
    }
    if let Some(out) = &common.out {
        write_out(out, &(serde_json::to_string(&report).map_err(|e| anyhow!(e))? + "\n"))?;
    }
    Ok(())
}

fn cmd_critpath(common: &Common) -> CmdResult {
    let s = load(common, true)?;
    let paths = critical_paths(&s)?;
    let mut text = String::new();
    for (job, cp) in &paths {
        text.push_str(&format!("{job}: {} (length {})\n", cp.tasks.join(" -> "), cp.length));
    }
    print!("{text}");
    if let Some(out) = &common.out {
        write_out(out, &text)?;
    }
    Ok(())
}

fn cmd_scenarios(write: Option<PathBuf>) -> CmdResult {
    let library = scenario_library();
    for (family, members) in FAMILIES {
        for m in *members {
            let s = library.iter().find(|s| s.name == *m).expect("family members exist");
            println!("{m:32} [{family}] {}", s.description);
        }
    }
    if let Some(dir) = write {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for s in &library {
            write_out(&dir.join(format!("{}.json", s.name)), &(s.to_file().to_json() + "\n"))?;
        }
    }
    Ok(())
}
