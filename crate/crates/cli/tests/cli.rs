use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mutual-assist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_taxonomy_validates() {
    let o = cli(&["ontology-validate", path(&repo("ontology/aal.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn cyclic_taxonomy_exits_2_and_names_the_cycle() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "cyclic.json",
        r#"{"concepts": ["a", "b", "c"], "edges": [["a", "b"], ["b", "a"], ["c", "nowhere"]]}"#,
    );
    let o = cli(&["ontology-validate", &f]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("a < b < a") || err.contains("b < a < b"), "{err}");
    assert!(err.contains("nowhere"), "every problem is listed: {err}");
}

#[test]
fn missing_or_malformed_taxonomy_exits_1() {
    assert_eq!(cli(&["ontology-validate", "/no/such/file.json"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", "{ not json");
    assert_eq!(cli(&["ontology-validate", &f]).status.code(), Some(1));
}

const WORKED_REQUEST: &str = r#"{"id": "elder", "wanted_provider_class": "informal_provider",
    "wanted_service_type": "indoor_service", "min_provider_degree": "exact", "min_type_degree": "subsume"}"#;

#[test]
fn match_reports_the_worked_example() {
    let dir = TempDir::new().unwrap();
    let req = write(&dir, "req.json", WORKED_REQUEST);
    let ads = write(
        &dir,
        "ads.json",
        r#"[{"id": "volunteer", "provider_class": "informal_provider", "service_type": "entertainment"}]"#,
    );
    let o = cli(&["match", "--request", &req, "--adverts", &ads]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains(r#""provider_degree":"exact""#), "{out}");
    assert!(out.contains(r#""type_degree":"subsume""#), "{out}");
    assert!(out.contains(r#""overall":true"#), "{out}");
}

#[test]
fn match_with_no_adverts_prints_nothing() {
    let dir = TempDir::new().unwrap();
    let req = write(&dir, "req.json", WORKED_REQUEST);
    for contents in ["[]", ""] {
        let ads = write(&dir, "ads.json", contents);
        let o = cli(&["match", "--request", &req, "--adverts", &ads]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).is_empty());
    }
}

#[test]
fn match_lines_follow_hand_ranked_order() {
    let dir = TempDir::new().unwrap();
    let req = write(
        &dir,
        "req.json",
        r#"{"id": "r", "wanted_provider_class": "informal_provider", "wanted_service_type": "chess",
            "min_provider_degree": "plugin", "min_type_degree": "plugin"}"#,
    );
    let ads = write(
        &dir,
        "ads.json",
        r#"[
          {"id": "e", "provider_class": "professional_provider", "service_type": "chess"},
          {"id": "d", "provider_class": "informal_provider", "service_type": "entertainment"},
          {"id": "c", "provider_class": "provider", "service_type": "chess"},
          {"id": "b", "provider_class": "informal_provider", "service_type": "chess"},
          {"id": "a", "provider_class": "provider", "service_type": "group_activity"}
        ]"#,
    );
    // By hand: b is exact/exact; c is exact type with a broader provider
    // (subsume); a and d are subsume on type, a with a subsume provider, d
    // with an exact one; e's provider class is unrelated, so it fails.
    let expect = ["b", "c", "d", "a", "e"];
    let o = cli(&["match", "--request", &req, "--adverts", &ads]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ids: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["advertisement"].as_str().unwrap().to_owned())
        .collect();
    assert_eq!(ids, expect);
}

#[test]
fn match_with_unknown_concept_exits_2() {
    let dir = TempDir::new().unwrap();
    let req = write(&dir, "req.json", r#"{"id": "r", "wanted_provider_class": "wizard", "wanted_service_type": "chess"}"#);
    let ads = write(&dir, "ads.json", "[]");
    assert_eq!(cli(&["match", "--request", &req, "--adverts", &ads]).status.code(), Some(2));
}

#[test]
fn replay_reproduces_the_golden_log() {
    let golden = fs::read_to_string(repo("scenarios/mary_kate.expected.jsonl")).unwrap();
    let scenario = repo("scenarios/mary_kate.json");
    for args in [vec!["registry", "replay"], vec!["registry-replay"]] {
        let mut args = args.clone();
        args.push(path(&scenario));
        let o = cli(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert_eq!(stdout(&o), golden);
    }
}

#[test]
fn replay_of_empty_scenario_is_empty() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "empty.json", "[]");
    let o = cli(&["registry-replay", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
}

#[test]
fn replay_aborts_citing_the_command_index() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "bad.json",
        r#"[{"at": 0, "command": "advance_clock"},
            {"at": 5, "command": "respond", "proposal": "p9", "side": "a", "answer": "accepted"}]"#,
    );
    let o = cli(&["registry-replay", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("command 1"), "{}", stderr(&o));
}

fn sim_into(dir: &Path, extra: &[&str]) -> (String, String) {
    let mut args: Vec<String> = vec!["sim-run".into(), path(&repo("experiments/sim_mixed.json")).to_owned(), "--steps".into(), "120".into()];
    args.extend(extra.iter().map(|s| s.to_string()));
    args.extend(["--out".into(), path(dir).to_owned()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = cli(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!stderr(&o).is_empty(), "summary goes to stderr");
    (
        fs::read_to_string(dir.join("report.json")).unwrap(),
        fs::read_to_string(dir.join("steps.csv")).unwrap(),
    )
}

#[test]
fn sim_run_is_deterministic_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let first = sim_into(&dir.path().join("a"), &[]);
    let second = sim_into(&dir.path().join("b"), &[]);
    assert_eq!(first, second);
    assert_eq!(second.1.lines().count(), 121);

    let other = sim_into(&dir.path().join("c"), &["--seed", "9"]);
    assert_ne!(other.0, first.0);
    let report: serde_json::Value = serde_json::from_str(&other.0).unwrap();
    assert_eq!(report["seed"], 9);
    let n = |k: &str| report[k].as_u64().unwrap();
    assert_eq!(n("total_requests"), n("served") + n("failed") + n("open"));
    assert!(n("timely") <= n("served"));
}

#[test]
fn sim_run_without_out_prints_the_report() {
    let o = cli(&["sim-run", path(&repo("experiments/sim_mixed.json")), "--steps", "10", "--torus", "--radius", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["steps"], 10);
}

#[test]
fn invalid_sim_params_exit_2() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "p.json", r#"{"n": 10, "init_fractions": {"neutral": 0.5, "alarm": 0.2}, "max_steps": 5, "seed": 1}"#);
    let o = cli(&["sim-run", &f]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(cli(&["sim-run", &f, "--radius", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_per_spec() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = cli(&["sweep", path(&repo("experiments/fig9.json")), "--steps", "20", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["fig9.clients_05.csv", "fig9.clients_10.csv", "fig9.clients_20.csv", "fig9.clients_40.csv", "fig9.clients_60.csv"]);
    let csv = fs::read_to_string(out.join("fig9.clients_20.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("axis_value,satisfaction_mean,satisfaction_sd,latency_mean,latency_sd,failure_mean,failure_sd,replicates")
    );
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn fig10_latency_falls_along_the_participant_axis() {
    let o = cli(&["sweep", path(&repo("experiments/fig10.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let latency: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(latency.len(), 12);
    assert!(latency.windows(2).all(|w| w[1] < w[0]), "{latency:?}");
}

#[test]
fn sweep_spec_array_needs_an_output_directory() {
    let o = cli(&["sweep", path(&repo("experiments/fig9.json")), "--steps", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inputs_are_left_untouched() {
    let before = fs::read(repo("scenarios/mary_kate.json")).unwrap();
    cli(&["registry-replay", path(&repo("scenarios/mary_kate.json"))]);
    assert_eq!(fs::read(repo("scenarios/mary_kate.json")).unwrap(), before);
}
