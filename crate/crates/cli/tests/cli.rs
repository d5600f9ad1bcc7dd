use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dtd_cli::{emit_timeline_json, load_scenario, run_command, Scenario, TaskKind};
use dtd_core::{
    check_actionbox, check_executability, check_realizability, plan, project, Ontology,
};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn scenario(name: &str) -> Scenario {
    load_scenario(corpus().join(name)).unwrap()
}

fn dtd(args: &[&str]) -> dtd_cli::Outcome {
    run_command(std::iter::once("dtd").chain(args.iter().copied()))
}

fn path(name: &str) -> String {
    corpus().join(name).display().to_string()
}

const SCENARIOS: [&str; 7] = [
    "bank",
    "blocks",
    "sports",
    "sports_modified",
    "superheroes",
    "travel",
    "yale",
];

#[test]
fn bank_bundle() {
    let s = scenario("bank");
    assert_eq!(s.rules.len(), 3);
    assert_eq!(s.tasks.len(), 4);
}

#[test]
fn empty_directory_has_no_ontology() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_scenario(dir.path()).unwrap_err();
    assert!(err.to_string().contains("missing ontology"), "{err}");
}

#[test]
fn sports_expects_two_witnesses() {
    let s = scenario("sports");
    assert_eq!(s.task(TaskKind::Actionbox).unwrap().witnesses, Some(2));
}

#[test]
fn parse_errors_name_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ontology.ttl"),
        "@prefix : <urn:x#> .\n:a a :B .\n:a :p .\n",
    )
    .unwrap();
    let err = load_scenario(dir.path()).unwrap_err().to_string();
    assert!(err.contains("ontology.ttl:3:"), "{err}");
}

#[test]
fn task_agent_must_be_declared() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ontology.ttl"),
        "@prefix : <urn:x#> .\n:a a :B .\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("tasks.toml"),
        "[[task]]\nkind = \"plan\"\ngoal = \"?x a :B\"\nagent = \":nobody\"\n",
    )
    .unwrap();
    let err = load_scenario(dir.path()).unwrap_err().to_string();
    assert!(err.contains(":nobody"), "{err}");
}

fn check_task(s: &Scenario, index: usize) {
    let task = &s.tasks[index];
    let label = format!("{} task {index}", s.dir.display());
    match task.kind {
        TaskKind::Realizability | TaskKind::Executability => {
            let o = s.ontology_for(Some(task)).unwrap();
            let reports = match task.kind {
                TaskKind::Realizability => check_realizability(&s.rules, &o),
                _ => check_executability(&s.rules, &o),
            };
            let want_ok = task.expect.as_deref() != Some("unsat");
            assert!(
                reports.iter().all(|r| r.is_ok() == want_ok),
                "{label}: {reports:?}"
            );
        }
        TaskKind::Project => {
            let o = s.ontology_for(Some(task)).unwrap();
            let tl = project(&o, &s.rules).unwrap();
            assert!(tl.is_complete(), "{label}");
            let emitted = emit_timeline_json(&tl, &o.prefixes);
            if let Some(golden) = &task.expected {
                let want = fs::read_to_string(s.dir.join(golden)).unwrap();
                assert_eq!(emitted, want, "{label}");
            }
            let again = emit_timeline_json(&project(&o, &s.rules).unwrap(), &o.prefixes);
            assert_eq!(emitted, again, "{label}");
        }
        TaskKind::Plan => {
            let (o, problem) = s.problem(task).unwrap();
            let plans = plan(&problem, &o, &s.rules).unwrap();
            if let Some(n) = task.plans {
                assert_eq!(plans.len(), n, "{label}: {plans:?}");
            }
            if let Some(golden) = &task.expected {
                let want = fs::read_to_string(s.dir.join(golden)).unwrap();
                assert_eq!(
                    dtd_cli::emit_plans_json(&problem.goals, &plans, &o.prefixes),
                    want,
                    "{label}"
                );
            }
        }
        TaskKind::Actionbox => {
            let o: Ontology = s.ontology_for(Some(task)).unwrap();
            let entries = check_actionbox(&o, &s.rules, task.max_depth.unwrap_or(4)).unwrap();
            let total: usize = entries.iter().map(|e| e.witnesses.len()).sum();
            if let Some(n) = task.witnesses {
                assert_eq!(total, n, "{label}");
            }
        }
    }
}

#[test]
fn corpus_tasks_meet_expectations() {
    for name in SCENARIOS {
        let s = scenario(name);
        assert!(!s.tasks.is_empty(), "{name}");
        for i in 0..s.tasks.len() {
            check_task(&s, i);
        }
    }
}

#[test]
fn empty_rules_timeline_adds_nothing() {
    let mut s = scenario("bank");
    s.rules.clear();
    let o = s.ontology_for(s.task(TaskKind::Project)).unwrap();
    let json: serde_json::Value = serde_json::from_str(&emit_timeline_json(
        &project(&o, &s.rules).unwrap(),
        &o.prefixes,
    ))
    .unwrap();
    let states = json["states"].as_object().unwrap();
    assert_eq!(states.len(), 3);
    assert!(states
        .values()
        .all(|v| v["added"].as_array().unwrap().is_empty()));
}

#[test]
fn bank_timeline_delta_at_t0() {
    let out = dtd(&["project", "-s", &path("bank")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    let added: Vec<&str> = json["states"][":t0"]["added"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(
        added,
        [
            ":a :holds _:sk1",
            "_:sk1 rdf:type :B_acc",
            "_:sk1 rdf:type :B_acc_no_credit"
        ]
    );
}

#[test]
fn exit_codes() {
    let out = dtd(&["check", "actionbox", "-s", &path("sports")]);
    assert_eq!(out.code, 2);
    assert_eq!(
        out.stdout.lines().filter(|l| l.starts_with("  [")).count(),
        2
    );
    assert_eq!(
        dtd(&["check", "actionbox", "-s", &path("sports_modified")]).code,
        0
    );

    let out = dtd(&[
        "plan",
        "-s",
        &path("bank"),
        "--goal",
        "?y rdf:type :B_acc_credit",
        "--agent",
        ":a",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout.lines().count(), 1);
    assert!(out
        .stdout
        .starts_with("[GetLetter@1(?x=:a), OpeningB_acc_credit@2("));

    let out = dtd(&["plan", "-s", &path("bank"), "--actions", ":OpeningB_acc"]);
    assert_eq!(out.code, 2);
    assert_eq!(out.stdout, "no plan\n");

    let out = dtd(&["check", "realizability", "-s", &path("bank")]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().count(), 3);
    assert!(out
        .stdout
        .lines()
        .all(|l| l.split('\t').nth(1) == Some("ok")));

    assert_eq!(dtd(&["frobnicate"]).code, 1);
    assert_eq!(dtd(&["project"]).code, 1);
    assert_eq!(dtd(&["project", "-s", "/nonexistent/scenario"]).code, 1);
    assert_eq!(
        dtd(&["plan", "-s", &path("bank"), "--goal", "?y ?p"]).code,
        1
    );
    assert_eq!(dtd(&["validate", "-s", &path("yale")]).code, 0);
    assert_eq!(dtd(&["--help"]).code, 0);
}

#[test]
fn inconsistent_projection_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ontology.ttl"),
        "@prefix : <urn:x#> .\n:A owl:disjointWith :B .\n:x a :A .\n:t0 a dtd:TimePoint .\n:go a :Act ; dtd:hasTime :t0 .\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("rules.dtd"),
        "@prefix : <urn:x#> .\nRULE r ACTION :Act CONSTRUCT { :x a :B } WHERE { ?a a :Act ; dtd:hasTime ?_T }\n",
    )
    .unwrap();
    let out = dtd(&[
        "project",
        "-s",
        &dir.path().display().to_string(),
        "--format",
        "text",
    ]);
    assert_eq!(out.code, 2, "{}", out.stderr);
    assert!(
        out.stdout
            .contains("INCONSISTENT: :x violates :A owl:disjointWith :B"),
        "{}",
        out.stdout
    );
    let out = dtd(&[
        "check",
        "realizability",
        "-s",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(out.code, 2);
    assert!(
        out.stdout.starts_with("r\tUNSAT\t:x violates"),
        "{}",
        out.stdout
    );
}

#[test]
fn output_file_and_json_formats() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("out.json");
    let out = dtd(&[
        "project",
        "-s",
        &path("bank"),
        "-o",
        &file.display().to_string(),
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    let written = fs::read_to_string(&file).unwrap();
    assert_eq!(
        written,
        fs::read_to_string(corpus().join("bank/expected/timeline.json")).unwrap()
    );

    let out = dtd(&[
        "check",
        "executability",
        "-s",
        &path("bank"),
        "--format",
        "json",
    ]);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
    assert_eq!(json[0]["verdict"], "ok");

    let out = dtd(&[
        "check",
        "actionbox",
        "-s",
        &path("sports"),
        "--format",
        "json",
    ]);
    let json: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(json[0]["witnesses"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_flag_matches_planner() {
    for name in ["bank", "blocks", "travel", "superheroes"] {
        let planned = dtd(&["plan", "-s", &path(name), "--max-depth", "4"]);
        let oracle = dtd(&["plan", "-s", &path(name), "--max-depth", "4", "--oracle"]);
        assert_eq!(planned, oracle, "{name}");
        assert_eq!(planned.code, 0, "{name}: {}", planned.stderr);
    }
}

#[test]
fn binary_honours_node_cap() {
    let bin = env!("CARGO_BIN_EXE_dtd");
    let out = Command::new(bin)
        .args(["plan", "-s", &path("blocks"), "--oracle"])
        .env("DTD_NODE_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("node budget"));
    let out = Command::new(bin)
        .args(["check", "actionbox", "-s", &path("sports")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
