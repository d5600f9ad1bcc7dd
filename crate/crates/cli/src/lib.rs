//! Scenario bundles and the `dtd` command line.
//!
//! A scenario is a directory holding `ontology.ttl`, `rules.dtd` and a
//! `tasks.toml` manifest. Extra ABox files named by a task are merged into
//! the ontology for that task only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use dtd_core::checkers::CheckReport;
use dtd_core::planner::{ActionBoxEntry, DEFAULT_MAX_DEPTH};
use dtd_core::projection::Timeline;
use dtd_core::rules::validate_rules;
use dtd_core::{
    check_actionbox, check_executability, check_realizability, classify, forward_search_oracle,
    infer_time_flow, materialize, merge, parse_ontology_with, parse_pattern, parse_rules_with,
    plan, project, ActionRule, Clash, Ontology, Plan, PlanningProblem, PrefixMap, Term, Triple,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Project,
    Plan,
    Realizability,
    Executability,
    Actionbox,
}

/// One entry of `tasks.toml`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub kind: TaskKind,
    /// ABox files, relative to the scenario directory, merged for this task.
    #[serde(default)]
    pub abox: Vec<PathBuf>,
    pub goal: Option<String>,
    /// A conjunctive goal; takes precedence over `goal`.
    #[serde(default)]
    pub goals: Vec<String>,
    pub agent: Option<String>,
    #[serde(default)]
    pub actions: Vec<String>,
    pub max_depth: Option<usize>,
    /// `ok` or `unsat`, for the rule checks.
    pub expect: Option<String>,
    /// Expected number of plans.
    pub plans: Option<usize>,
    /// Expected number of ActionBox witness plans over all axioms.
    pub witnesses: Option<usize>,
    /// Golden output file, relative to the scenario directory.
    pub expected: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default, rename = "task")]
    tasks: Vec<Task>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub dir: PathBuf,
    pub ontology: Ontology,
    pub rules: Vec<ActionRule>,
    pub tasks: Vec<Task>,
}

fn read(path: &Path, what: &str) -> Result<String> {
    if !path.is_file() {
        bail!("missing {what}: {}", path.display());
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_scenario(dir: impl AsRef<Path>) -> Result<Scenario> {
    let dir = dir.as_ref();
    let path = dir.join("ontology.ttl");
    let text = read(&path, "ontology")?;
    let ontology = parse_ontology_with(&text, &PrefixMap::standard())
        .map_err(|e| anyhow!("{}:{e}", path.display()))?;

    let path = dir.join("rules.dtd");
    let rules = match path.is_file() {
        true => parse_rules_with(&read(&path, "rules")?, &ontology.prefixes)
            .map_err(|e| anyhow!("{}:{e}", path.display()))?,
        false => Vec::new(),
    };

    let path = dir.join("tasks.toml");
    let tasks = match path.is_file() {
        true => {
            toml::from_str::<Manifest>(&read(&path, "tasks")?)
                .with_context(|| format!("{}", path.display()))?
                .tasks
        }
        false => Vec::new(),
    };
    let scenario = Scenario {
        dir: dir.to_path_buf(),
        ontology,
        rules,
        tasks,
    };
    for task in &scenario.tasks {
        scenario.check_task(task)?;
    }
    Ok(scenario)
}

impl Scenario {
    pub fn task(&self, kind: TaskKind) -> Option<&Task> {
        self.tasks.iter().find(|t| t.kind == kind)
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.ontology.prefixes
    }

    /// The ontology with the task's extra ABox files merged in.
    pub fn ontology_for(&self, task: Option<&Task>) -> Result<Ontology> {
        let mut out = self.ontology.clone();
        for file in task.map(|t| t.abox.as_slice()).unwrap_or_default() {
            let path = self.dir.join(file);
            let extra = parse_ontology_with(&read(&path, "abox")?, &out.prefixes)
                .map_err(|e| anyhow!("{}:{e}", path.display()))?;
            out.abox = merge(&out.abox, extra.abox.iter())?;
            out.time_points.extend(extra.time_points);
            for axiom in extra.tbox.axioms {
                out.tbox.add(axiom);
            }
            out.prefixes.extend(&extra.prefixes);
        }
        Ok(out)
    }

    /// `<iri>` or `prefix:local`.
    pub fn term(&self, text: &str) -> Result<Term> {
        let text = text.trim();
        if let Some(iri) = text.strip_prefix('<').and_then(|s| s.strip_suffix('>')) {
            return Ok(Term::iri(iri));
        }
        let (prefix, local) = text
            .split_once(':')
            .ok_or_else(|| anyhow!("expected an IRI or prefixed name, found `{text}`"))?;
        self.prefixes()
            .expand(prefix, local)
            .map(Term::iri)
            .ok_or_else(|| anyhow!("unknown prefix `{prefix}:` in `{text}`"))
    }

    pub fn pattern(&self, text: &str) -> Result<Triple> {
        parse_pattern(text, self.prefixes()).map_err(|e| anyhow!("goal `{text}`: {e}"))
    }

    /// The planning problem a plan task describes.
    pub fn problem(&self, task: &Task) -> Result<(Ontology, PlanningProblem)> {
        let ontology = self.ontology_for(Some(task))?;
        let goals = match (&task.goal, task.goals.is_empty()) {
            (_, false) => task
                .goals
                .iter()
                .map(|g| self.pattern(g))
                .collect::<Result<Vec<_>>>()?,
            (Some(g), true) => vec![self.pattern(g)?],
            (None, true) => bail!("plan task has no goal"),
        };
        let agent = self.term(
            task.agent
                .as_deref()
                .ok_or_else(|| anyhow!("plan task has no agent"))?,
        )?;
        let mut problem = PlanningProblem::new(ontology.abox.clone(), agent, goals)
            .with_max_depth(task.max_depth.unwrap_or(DEFAULT_MAX_DEPTH));
        if !task.actions.is_empty() {
            let actions = task
                .actions
                .iter()
                .map(|a| self.term(a))
                .collect::<Result<Vec<_>>>()?;
            problem = problem.with_allowed(actions);
        }
        Ok((ontology, problem))
    }

    fn check_task(&self, task: &Task) -> Result<()> {
        let ontology = self.ontology_for(Some(task))?;
        if let Some(agent) = &task.agent {
            let agent = self.term(agent)?;
            if !ontology.abox.individuals().contains(&agent) {
                bail!(
                    "task agent {} is not an individual of the scenario",
                    self.prefixes().compact(&agent)
                );
            }
        }
        for action in &task.actions {
            let action = self.term(action)?;
            if !self.rules.iter().any(|r| r.action_class == action) {
                bail!(
                    "task action {} is not the action class of any rule",
                    self.prefixes().compact(&action)
                );
            }
        }
        if let Some(expect) = &task.expect {
            if !matches!(expect.as_str(), "ok" | "unsat") {
                bail!("task expect must be `ok` or `unsat`, found `{expect}`");
            }
        }
        for g in task.goals.iter().chain(&task.goal) {
            self.pattern(g)?;
        }
        Ok(())
    }
}

fn triple_strings<'a>(triples: impl IntoIterator<Item = &'a Triple>, p: &PrefixMap) -> Vec<String> {
    let mut out: Vec<String> = triples.into_iter().map(|t| t.display_with(p)).collect();
    out.sort();
    out
}

fn clash_json(c: &Clash, p: &PrefixMap) -> Value {
    json!({
        "individual": p.compact(&c.individual),
        "axiom": c.axiom.display_with(p),
        "support": triple_strings(&c.support, p),
    })
}

fn clash_summary(clashes: &[Clash], p: &PrefixMap) -> String {
    if clashes.is_empty() {
        return "-".into();
    }
    let parts: Vec<String> = clashes
        .iter()
        .map(|c| {
            format!(
                "{} violates {}",
                p.compact(&c.individual),
                c.axiom.display_with(p)
            )
        })
        .collect();
    parts.join("; ")
}

/// Deterministic timeline JSON: per-point additions, skolems renumbered by
/// first appearance.
pub fn emit_timeline_json(timeline: &Timeline, p: &PrefixMap) -> String {
    let tl = timeline.canonicalized();
    let mut states = serde_json::Map::new();
    for (i, (t, s)) in tl.states.iter().enumerate() {
        let clashes: Vec<Value> = s.clashes.iter().map(|c| clash_json(c, p)).collect();
        states.insert(
            p.compact(t),
            json!({ "added": triple_strings(&tl.added(i), p), "clashes": clashes }),
        );
    }
    let inconsistency = tl.inconsistency.as_ref().map(|inc| {
        json!({
            "time": inc.time.as_ref().map(|t| p.compact(t)),
            "clashes": inc.clashes.iter().map(|c| clash_json(c, p)).collect::<Vec<_>>(),
        })
    });
    let warnings: Vec<Value> = tl
        .warnings
        .iter()
        .map(|w| json!({ "time": p.compact(&w.time), "rule": w.rule, "message": w.message }))
        .collect();
    let value = json!({
        "flow": tl.flow.points.iter().map(|t| p.compact(t)).collect::<Vec<_>>(),
        "initial": {
            "triples": triple_strings(tl.initial.view.iter(), p),
            "clashes": tl.initial.clashes.iter().map(|c| clash_json(c, p)).collect::<Vec<_>>(),
        },
        "states": states,
        "inconsistency": inconsistency,
        "warnings": warnings,
    });
    pretty(&value)
}

fn emit_timeline_text(timeline: &Timeline, p: &PrefixMap) -> String {
    let tl = timeline.canonicalized();
    let mut out = format!("initial\t{} triples\n", tl.initial.view.len());
    for (i, (t, s)) in tl.states.iter().enumerate() {
        let added = triple_strings(&tl.added(i), p);
        out.push_str(&format!("{}\t+{}\n", p.compact(t), added.len()));
        for line in added {
            out.push_str(&format!("  {line}\n"));
        }
        if !s.clashes.is_empty() {
            out.push_str(&format!(
                "  INCONSISTENT: {}\n",
                clash_summary(&s.clashes, p)
            ));
        }
    }
    for w in &tl.warnings {
        out.push_str(&format!(
            "warning\t{}\t{}\t{}\n",
            p.compact(&w.time),
            w.rule,
            w.message
        ));
    }
    out
}

fn plan_json(plan: &Plan, p: &PrefixMap) -> Value {
    let steps: Vec<Value> = plan
        .steps
        .iter()
        .map(|s| {
            let binding: BTreeMap<String, String> = s
                .binding
                .iter()
                .map(|(k, v)| (k.to_string(), p.compact(v)))
                .collect();
            json!({ "rule": s.rule, "action": p.compact(&s.action), "binding": binding, "t": s.t })
        })
        .collect();
    json!({ "steps": steps })
}

pub fn emit_plans_json(goals: &[Triple], plans: &[Plan], p: &PrefixMap) -> String {
    let goal: Vec<String> = goals.iter().map(|g| g.display_with(p)).collect();
    pretty(&json!({
        "goal": goal.join(" . "),
        "plans": plans.iter().map(|pl| plan_json(pl, p)).collect::<Vec<_>>(),
    }))
}

fn emit_plans_text(plans: &[Plan], p: &PrefixMap) -> String {
    if plans.is_empty() {
        return "no plan\n".into();
    }
    plans
        .iter()
        .map(|pl| format!("{}\n", pl.display_with(p)))
        .collect()
}

/// One line per rule: `rule<TAB>ok|UNSAT<TAB>clash summary`.
pub fn emit_checks_text(reports: &[CheckReport], p: &PrefixMap) -> String {
    reports
        .iter()
        .map(|r| {
            format!(
                "{}\t{}\t{}\n",
                r.rule,
                r.verdict,
                clash_summary(&r.clashes, p)
            )
        })
        .collect()
}

pub fn emit_checks_json(reports: &[CheckReport], p: &PrefixMap) -> String {
    let items: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "rule": r.rule,
                "verdict": r.verdict.to_string(),
                "clashes": r.clashes.iter().map(|c| clash_json(c, p)).collect::<Vec<_>>(),
            })
        })
        .collect();
    pretty(&Value::Array(items))
}

fn emit_actionbox_text(entries: &[ActionBoxEntry], p: &PrefixMap) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!(
            "{}\t{} witness plan(s)\n",
            e.axiom.display_with(p),
            e.witnesses.len()
        ));
        for w in &e.witnesses {
            out.push_str(&format!("  {}\n", w.display_with(p)));
        }
    }
    if entries.is_empty() {
        out.push_str("no disjointness or complement axioms\n");
    }
    out
}

fn emit_actionbox_json(entries: &[ActionBoxEntry], p: &PrefixMap) -> String {
    let items: Vec<Value> = entries
        .iter()
        .map(|e| {
            json!({
                "axiom": e.axiom.display_with(p),
                "witnesses": e.witnesses.iter().map(|w| plan_json(w, p)).collect::<Vec<_>>(),
            })
        })
        .collect();
    pretty(&Value::Array(items))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

#[derive(Parser)]
#[command(
    name = "dtd",
    version,
    about = "Projection, planning and rule checks over dynamic knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project the scenario along its flow of time.
    Project(Common),
    /// Search for plans reaching a goal.
    Plan(PlanArgs),
    /// Static rule checks and the ActionBox check.
    Check {
        #[command(subcommand)]
        which: CheckCommand,
    },
    /// Parse the scenario and validate its rules and time flow.
    Validate(Common),
}

#[derive(Subcommand)]
enum CheckCommand {
    Realizability(Common),
    Executability(Common),
    Actionbox(DepthArgs),
}

#[derive(Args)]
struct Common {
    #[arg(short, long)]
    scenario: PathBuf,
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct DepthArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    depth: DepthArgs,
    /// A single triple pattern, e.g. `?y rdf:type :B_acc_credit`.
    #[arg(long)]
    goal: Option<String>,
    #[arg(long)]
    agent: Option<String>,
    /// Comma-separated allowed action classes.
    #[arg(long, value_delimiter = ',')]
    actions: Vec<String>,
    /// Use exhaustive forward search instead of the backward planner.
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Exit status and captured output of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Succeeded, but found an inconsistency or no plan.
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_ERROR: i32 = 1;

pub fn run_command<I, S>(argv: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            return match code {
                0 => Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => outcome,
        Err(e) => Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e:#}\n"),
        },
    }
}

fn finish(common: &Common, body: String, negative: bool) -> Result<Outcome> {
    let code = if negative { EXIT_NEGATIVE } else { 0 };
    match &common.out {
        Some(path) => {
            fs::write(path, &body).with_context(|| format!("writing {}", path.display()))?;
            Ok(Outcome {
                code,
                ..Outcome::default()
            })
        }
        None => Ok(Outcome {
            code,
            stdout: body,
            stderr: String::new(),
        }),
    }
}

fn node_cap() -> Result<Option<usize>> {
    match std::env::var("DTD_NODE_CAP") {
        Ok(v) => Ok(Some(
            v.trim()
                .parse()
                .with_context(|| format!("DTD_NODE_CAP=`{v}`"))?,
        )),
        Err(_) => Ok(None),
    }
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::Project(common) => {
            let scenario = load_scenario(&common.scenario)?;
            let ontology = scenario.ontology_for(scenario.task(TaskKind::Project))?;
            let timeline = project(&ontology, &scenario.rules)?;
            let body = match common.format.unwrap_or(Format::Json) {
                Format::Json => emit_timeline_json(&timeline, &ontology.prefixes),
                Format::Text => emit_timeline_text(&timeline, &ontology.prefixes),
            };
            finish(&common, body, timeline.inconsistency.is_some())
        }
        Command::Plan(args) => run_plan(args),
        Command::Check { which } => match which {
            CheckCommand::Realizability(common) => run_check(common, TaskKind::Realizability),
            CheckCommand::Executability(common) => run_check(common, TaskKind::Executability),
            CheckCommand::Actionbox(args) => {
                let scenario = load_scenario(&args.common.scenario)?;
                let task = scenario.task(TaskKind::Actionbox);
                let ontology = scenario.ontology_for(task)?;
                let depth = args
                    .max_depth
                    .or(task.and_then(|t| t.max_depth))
                    .unwrap_or(DEFAULT_MAX_DEPTH);
                let entries = check_actionbox(&ontology, &scenario.rules, depth)?;
                let body = match args.common.format.unwrap_or(Format::Text) {
                    Format::Json => emit_actionbox_json(&entries, &ontology.prefixes),
                    Format::Text => emit_actionbox_text(&entries, &ontology.prefixes),
                };
                let negative = entries.iter().any(|e| !e.witnesses.is_empty());
                finish(&args.common, body, negative)
            }
        },
        Command::Validate(common) => run_validate(common),
    }
}

fn run_check(common: Common, kind: TaskKind) -> Result<Outcome> {
    let scenario = load_scenario(&common.scenario)?;
    let ontology = scenario.ontology_for(scenario.task(kind))?;
    let reports = match kind {
        TaskKind::Realizability => check_realizability(&scenario.rules, &ontology),
        _ => check_executability(&scenario.rules, &ontology),
    };
    let body = match common.format.unwrap_or(Format::Text) {
        Format::Json => emit_checks_json(&reports, &ontology.prefixes),
        Format::Text => emit_checks_text(&reports, &ontology.prefixes),
    };
    finish(&common, body, reports.iter().any(|r| !r.is_ok()))
}

fn run_plan(args: PlanArgs) -> Result<Outcome> {
    let scenario = load_scenario(&args.depth.common.scenario)?;
    let mut task = scenario.task(TaskKind::Plan).cloned().unwrap_or(Task {
        kind: TaskKind::Plan,
        abox: Vec::new(),
        goal: None,
        goals: Vec::new(),
        agent: None,
        actions: Vec::new(),
        max_depth: None,
        expect: None,
        plans: None,
        witnesses: None,
        expected: None,
    });
    if let Some(goal) = args.goal {
        task.goal = Some(goal);
        task.goals.clear();
    }
    if let Some(agent) = args.agent {
        task.agent = Some(agent);
    }
    if !args.actions.is_empty() {
        task.actions = args.actions;
    }
    if let Some(d) = args.depth.max_depth {
        task.max_depth = Some(d);
    }
    let (ontology, mut problem) = scenario.problem(&task)?;
    if let Some(cap) = node_cap()? {
        problem = problem.with_node_cap(cap);
    }
    let plans = if args.oracle {
        forward_search_oracle(&problem, &ontology, &scenario.rules)?
    } else {
        plan(&problem, &ontology, &scenario.rules)?
    };
    let body = match args.depth.common.format.unwrap_or(Format::Text) {
        Format::Json => emit_plans_json(&problem.goals, &plans, &ontology.prefixes),
        Format::Text => emit_plans_text(&plans, &ontology.prefixes),
    };
    finish(&args.depth.common, body, plans.is_empty())
}

fn run_validate(common: Common) -> Result<Outcome> {
    let scenario = load_scenario(&common.scenario)?;
    let mut problems: Vec<String> = validate_rules(&scenario.rules)
        .iter()
        .map(|v| v.to_string())
        .collect();
    let hierarchy = classify(&scenario.ontology.tbox);
    for c in &hierarchy.unsatisfiable {
        problems.push(format!(
            "unsatisfiable class {}",
            scenario.prefixes().compact(c)
        ));
    }
    let ontology = scenario.ontology_for(scenario.task(TaskKind::Project))?;
    if let Err(e) = infer_time_flow(&materialize(&ontology.abox, &ontology)) {
        problems.push(format!("time flow: {e}"));
    }
    let mut body = format!(
        "{} rules, {} tasks, {} time points\n",
        scenario.rules.len(),
        scenario.tasks.len(),
        ontology.time_points.len()
    );
    for p in &problems {
        body.push_str(&format!("{p}\n"));
    }
    if problems.is_empty() {
        body.push_str("ok\n");
    }
    finish(&common, body, !problems.is_empty())
}
