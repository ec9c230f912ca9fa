use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topos-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_the_graph_workspace() {
    let o = run(&["check", path(&corpus("graphs.topos"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["check", "--json", path(&corpus("graphs.topos"))]);
    let v = &json_lines(&o)[0];
    assert_eq!(v["valid"], true);
    assert_eq!(v["entities"]["structures"], 3);
}

#[test]
fn check_reports_broken_naturality() {
    let o = run(&["check", path(&corpus("broken_naturality.topos"))]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("naturality") && out.contains("`t`") && out.contains("stage `E`"), "{out}");
}

#[test]
fn check_rejects_a_missing_sort_reference() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ws.json");
    std::fs::write(
        &file,
        r#"{"signatures": {"G": {"sorts": ["node"]}},
            "structures": {"M": {"signature": "G", "base": "graph", "sorts": {"node": "Nowhere"}}}}"#,
    )
    .unwrap();
    let o = run(&["check", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Nowhere"), "{}", stderr(&o));
}

#[test]
fn invalid_workspaces_block_other_commands() {
    let o = run(&["omega", path(&corpus("broken_naturality.topos"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_top_holds_everywhere() {
    let ws = corpus("graphs.topos");
    let o = run(&["eval", "--json", "--structure", "G1", "--text", "true", "--context", "(y:node)", path(&ws)]);
    assert_eq!(o.status.code(), Some(0));
    let v = &json_lines(&o)[0];
    assert_eq!(v["models"], true);
    assert_eq!(v["stages"]["V"], serde_json::json!(["v1", "v2"]));
    assert_eq!(v["stages"]["E"], serde_json::json!(["e"]));
}

#[test]
fn eval_lists_successors_on_the_terminal_example() {
    let o = run(&["eval", "--structure", "M", "--formula", "succ", path(&corpus("terminal_adj.topos"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("pt: {a}"), "{out}");
    assert!(out.contains("models: false"));
}

#[test]
fn eval_with_an_unsuitable_context_exits_2() {
    let o = run(&[
        "eval",
        "--structure",
        "M",
        "--text",
        "adj(y,z)",
        "--context",
        "(y:node)",
        path(&corpus("terminal_adj.topos")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("z"));
}

#[test]
fn los_sweep_agrees_on_the_graph_corpus() {
    for u in ["U1", "U2", "V1", "V2", "V3"] {
        let o = run(&["los", "--json", "--all-alphas", "--filter", u, path(&corpus("graphs.topos"))]);
        assert_eq!(o.status.code(), Some(0), "{u}: {}", stderr(&o));
        let lines = json_lines(&o);
        let summary = &lines.last().unwrap()["summary"];
        assert_eq!(summary["disagree"], 0);
        assert_eq!(summary["agree"].as_u64().unwrap() as usize, lines.len() - 1);
        assert!(lines[..lines.len() - 1].iter().all(|l| l["agree"] == true));
    }
}

#[test]
fn los_needs_an_ultrafilter() {
    let o = run(&["los", "--filter", "W", path(&corpus("graphs.topos"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ultrafilter"));
}

#[test]
fn los_with_an_empty_member_fails_the_epi_hypothesis() {
    let ws = corpus("empty_member.topos");
    let o = run(&["los", "--filter", "U", path(&ws)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("epi"), "{}", stderr(&o));

    let o = run(&["los", "--json", "--advisory", "--filter", "U", path(&ws)]);
    let lines = json_lines(&o);
    assert!(lines[..lines.len() - 1].iter().all(|l| l["advisory"] == true));
    assert_eq!(lines.last().unwrap()["summary"]["advisory"], true);
}

#[test]
fn omega_sizes_of_small_bases() {
    for (base, sizes) in [("terminal", vec![2]), ("arrow", vec![2, 3]), ("graph", vec![2, 5])] {
        let o = run(&["omega", "--json", "--base", base]);
        assert_eq!(o.status.code(), Some(0));
        let v = &json_lines(&o)[0];
        let got: Vec<u64> = v["sizes"].as_array().unwrap().iter().map(|n| n.as_u64().unwrap()).collect();
        assert_eq!(got, sizes.iter().map(|&n| n as u64).collect::<Vec<_>>());
    }
}

#[test]
fn compile_output_loads_back() {
    let o = run(&["compile", path(&corpus("graphs.topos"))]);
    assert_eq!(o.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("graphs.json");
    std::fs::write(&file, &o.stdout).unwrap();
    let again = run(&["compile", file.to_str().unwrap()]);
    assert_eq!(again.stdout, o.stdout);
    let o = run(&["los", "--filter", "U1", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn product_reports_the_comparison_iso() {
    let o = run(&["product", "--json", "--filter", "V3", path(&corpus("graphs.topos"))]);
    assert_eq!(o.status.code(), Some(0));
    let v = &json_lines(&o)[0];
    assert_eq!(v["comparisonIso"], true);
    assert_eq!(v["cocone"], serde_json::json!([]));
}

#[test]
fn force_checks_the_rules() {
    let o = run(&[
        "force",
        "--json",
        "--rules",
        "--structure",
        "G1",
        "--formula",
        "succ",
        "--alpha",
        "V:v1",
        path(&corpus("graphs.topos")),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = &json_lines(&o)[0];
    assert_eq!(v["verdict"], true);
    assert_eq!(v["rules"]["forward"], true);
    assert_eq!(v["rules"]["backward"], true);
}
