//! CLI contract tests: dependency checks, machine-readable errors, digest
//! rejection, GENERIC mode, reference comparison.

mod common;

use std::collections::BTreeMap;
use std::process::Output;

use aspectsum::pipeline::read_artifact_jsonl;
use aspectsum::util;

fn run(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_aspectsum"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr_json(output: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr
        .lines()
        .rev()
        .find(|l| l.trim_start().starts_with('{'))
        .unwrap_or_else(|| panic!("no JSON on stderr: {stderr}"));
    serde_json::from_str(line).unwrap()
}

#[test]
fn gen_qa_before_build_graph_names_the_missing_graph() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::build_e2e_fixture(dir.path());
    let cfg = fixture.config_path.to_str().unwrap().to_string();

    let out = run(&["--config", &cfg, "--mock", "ingest"]);
    assert!(out.status.success());

    let out = run(&["--config", &cfg, "--mock", "gen-qa"]);
    assert!(!out.status.success(), "gen-qa must fail before build-graph");
    let err = stderr_json(&out);
    assert_eq!(err["error"], "missing_artifact");
    assert!(err["message"].as_str().unwrap().contains("graph.json"));
    assert!(err["message"].as_str().unwrap().contains("build-graph"));
}

#[test]
fn unknown_method_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::build_e2e_fixture(dir.path());
    let cfg = fixture.config_path.to_str().unwrap().to_string();
    let out = run(&["--config", &cfg, "--mock", "summarize", "--method", "bogus"]);
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert!(err["message"].as_str().unwrap().contains("naiverag"));
}

#[test]
fn stale_digest_inputs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::build_e2e_fixture(dir.path());
    let cfg_path = fixture.config_path.to_str().unwrap().to_string();

    let out = run(&["--config", &cfg_path, "--mock", "ingest"]);
    assert!(out.status.success());
    let out = run(&["--config", &cfg_path, "--mock", "build-graph", "--books", "harbor"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Change an artifact-relevant parameter and point at the same out dir:
    // the existing graph now carries a stale digest and must be rejected as
    // a gen-qa input.
    let mut config = fixture.config.clone();
    config.qagen.top_k = 4;
    let stale_cfg = dir.path().join("changed.json");
    std::fs::write(&stale_cfg, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let out = run(&[
        "--config",
        stale_cfg.to_str().unwrap(),
        "--mock",
        "gen-qa",
        "--books",
        "harbor",
    ]);
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "digest_mismatch");
}

#[test]
fn generic_mode_summarizes_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::build_e2e_fixture(dir.path());
    let cfg = fixture.config_path.to_str().unwrap().to_string();

    let out = run(&["--config", &cfg, "--mock", "run-all", "--method", "hier"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "--config", &cfg, "--mock", "summarize", "--method", "hier", "--aspect", "GENERIC",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&["--config", &cfg, "--mock", "evaluate", "--method", "hier", "--generic"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let digest = fixture.config.digest();
    for (book_id, _) in &fixture.books {
        let path = dir
            .path()
            .join("out")
            .join(book_id)
            .join("eval")
            .join("hier-generic.jsonl");
        let (_, rows) = read_artifact_jsonl::<aspectsum::evaluation::EvalRecord>(
            &path,
            Some(&digest),
        )
        .unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.method == "hier-generic" && !r.failed));
    }
}

#[test]
fn reference_comparison_report_is_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::build_e2e_fixture(dir.path());
    let cfg = fixture.config_path.to_str().unwrap().to_string();

    let out = run(&["--config", &cfg, "--mock", "run-all", "--method", "hier"]);
    assert!(out.status.success());
    let out = run(&[
        "--config", &cfg, "--mock", "summarize", "--method", "hier", "--aspect", "GENERIC",
    ]);
    assert!(out.status.success());

    // References for two of the three books; the third is warned and skipped.
    let refs_dir = dir.path().join("refs");
    std::fs::create_dir_all(&refs_dir).unwrap();
    std::fs::write(refs_dir.join("voyage.txt"), "A reference retelling of the voyage.").unwrap();
    std::fs::write(refs_dir.join("ledger.txt"), "A reference retelling of the ledger.").unwrap();

    let out = run(&[
        "--config",
        &cfg,
        "--mock",
        "report",
        "--group-by",
        "overall",
        "--references",
        refs_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("harbor"), "missing-reference warning expected");

    let report_csv = dir.path().join("out").join("reports").join("report-references.csv");
    let csv = std::fs::read_to_string(report_csv).unwrap();
    assert!(csv.lines().count() >= 2, "one aggregated row expected:\n{csv}");
}

#[test]
fn qagen_threshold_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = common::build_e2e_fixture(dir.path());
    let cfg = fixture.config_path.to_str().unwrap().to_string();

    for cmd in ["ingest", "build-graph", "gen-qa"] {
        let out = run(&[
            "--config", &cfg, "--mock", cmd, "--books", "harbor", "--top-k", "2",
            "--max-edges", "2",
        ]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }

    let assignments: serde_json::Value =
        util::read_json(&dir.path().join("out").join("harbor").join("assignments.json")).unwrap();
    // max-edges 2 limits the QA pool; top-k 2 limits each aspect's list.
    let mut config = fixture.config.clone();
    config.qagen.top_k = 2;
    config.qagen.max_edges = 2;
    assert_eq!(assignments["config_digest"], config.digest());
    for (_aspect, ranked) in assignments["assignments"].as_object().unwrap() {
        assert_eq!(ranked.as_array().unwrap().len(), 2);
    }
    let (_, qas) = read_artifact_jsonl::<aspectsum::qagen::QAPair>(
        &dir.path().join("out").join("harbor").join("qa.jsonl"),
        Some(&config.digest()),
    )
    .unwrap();
    assert_eq!(qas.len(), 2);
}

#[test]
fn empty_edge_selection_warns_and_produces_no_qas() {
    let dir = tempfile::tempdir().unwrap();
    // One tiny book whose single relation never reaches importance 10.
    let text = common::book_text(7, 900);
    let book_path = dir.path().join("mini.txt");
    std::fs::write(&book_path, &text).unwrap();

    let mut script: BTreeMap<String, String> = BTreeMap::new();
    script.insert(
        "extract::mini:chunk-0".to_string(),
        r#"("entity"<|>"ONE"<|>"character"<|>"First")##("relationship"<|>"ONE"<|>"TWO"<|>"Weak tie"<|>"tie"<|>3)<|COMPLETE|>"#
            .to_string(),
    );
    let script_path = dir.path().join("script.json");
    std::fs::write(&script_path, serde_json::to_string(&script).unwrap()).unwrap();

    let mut config = aspectsum::config::PipelineConfig {
        books: vec![aspectsum::config::BookEntry {
            id: "mini".into(),
            title: None,
            path: book_path,
        }],
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    config.gateway.backend = aspectsum::gateway::BackendKind::Mock;
    config.gateway.mock_script = Some(script_path);
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let cfg = cfg_path.to_str().unwrap().to_string();

    for cmd in ["ingest", "build-graph", "gen-qa"] {
        let out = run(&["--config", &cfg, "--mock", cmd]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        if cmd == "gen-qa" {
            let stderr = String::from_utf8_lossy(&out.stderr);
            assert!(stderr.contains("importance threshold"), "warning expected: {stderr}");
        }
    }

    let (_, qas) = read_artifact_jsonl::<aspectsum::qagen::QAPair>(
        &dir.path().join("out").join("mini").join("qa.jsonl"),
        Some(&config.digest()),
    )
    .unwrap();
    assert!(qas.is_empty());
    let assignments: serde_json::Value =
        util::read_json(&dir.path().join("out").join("mini").join("assignments.json")).unwrap();
    for (_aspect, ranked) in assignments["assignments"].as_object().unwrap() {
        assert!(ranked.as_array().unwrap().is_empty());
    }
}
