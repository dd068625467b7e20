mod common;

use std::fs;
use std::path::Path;

use common::fixture_path;
use linkgraph::dataset::{SplitConfig, SplitStrategy, TrainingConfig};
use linkgraph::pipeline::{run_pipeline, Manifest, PipelineConfig};
use linkgraph::tables::{emit_tables, repository_report};
use linkgraph::taxonomy::LinkTaxonomy;
use linkgraph::Error;

fn config(dir: &Path, repos: &[&str]) -> PipelineConfig {
    for r in repos {
        fs::copy(fixture_path(), dir.join(r)).unwrap();
    }
    PipelineConfig {
        repositories: repos.iter().map(|r| dir.join(r)).collect(),
        taxonomy: None,
        tokenizer: None,
        fallback_relation: false,
        split: SplitConfig::new(SplitStrategy::Cluster, 0),
        training_configs: TrainingConfig::ALL.to_vec(),
        seed: 11,
        output_dir: dir.join("out"),
        nonlinks: None,
        nonlink_policy: Default::default(),
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn fixture_run_lists_every_stage_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), &["alpha.json", "beta.json"]);
    let outcome = run_pipeline(&cfg).unwrap();
    assert!(outcome.failure.is_none());
    let m = &outcome.manifest;
    assert!(m.complete);
    assert_eq!(m.seed, 11);
    let paths: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
    for expected in [
        "alpha/metrics.json",
        "alpha/datasets/DvsNL/train.jsonl",
        "alpha/datasets/DOLvsNL/provenance.json",
        "alpha/models/DvsOLNL.json",
        "beta/eval/DvsNL/report.json",
        "beta/eval/DvsNL/curves.csv",
        "tables/descriptive.csv",
        "tables/category_metrics.md",
    ] {
        assert!(paths.contains(&expected), "{expected} missing from {paths:?}");
    }
    Manifest::read(&cfg.output_dir).unwrap().verify(&cfg.output_dir).unwrap();

    let first = snapshot(&cfg.output_dir);
    run_pipeline(&cfg).unwrap();
    assert_eq!(first, snapshot(&cfg.output_dir));

    // the seed reaches every dataset and model artifact
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.output_dir.join("alpha/models/DvsNL.json")).unwrap()).unwrap();
    assert_eq!(model["seed"], 11);
    let provenance: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(cfg.output_dir.join("alpha/datasets/DvsNL/provenance.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(provenance["split"]["seed"], 11);
}

#[test]
fn tampered_file_fails_verification() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { training_configs: vec![TrainingConfig::DvsNL], ..config(tmp.path(), &["gamma.json"]) };
    run_pipeline(&cfg).unwrap();
    let target = cfg.output_dir.join("gamma/metrics.json");
    fs::write(&target, b"{}").unwrap();
    assert!(matches!(
        Manifest::read(&cfg.output_dir).unwrap().verify(&cfg.output_dir),
        Err(Error::Integrity(_))
    ));
}

#[test]
fn missing_taxonomy_rejected_before_work() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { taxonomy: Some(tmp.path().join("nope.json")), ..config(tmp.path(), &["a.json"]) };
    assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
    assert!(!cfg.output_dir.exists());
}

#[test]
fn stage_failure_keeps_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path(), &["good.json"]);
    let empty = tmp.path().join("empty.json");
    fs::write(&empty, r#"{"name": "empty", "issues": [], "links": []}"#).unwrap();
    cfg.repositories.push(empty);
    let outcome = run_pipeline(&cfg).unwrap();
    let failure = outcome.failure.expect("empty repository cannot yield a dataset");
    assert!(failure.stage.starts_with("dataset"), "{}", failure.stage);
    let m = Manifest::read(&cfg.output_dir).unwrap();
    assert!(!m.complete);
    assert!(m.failed_stage.is_some());
    assert!(m.files.iter().any(|f| f.path == "good/eval/DvsNL/report.json"));
    assert!(m.files.iter().any(|f| f.path == "empty/metrics.json"));
    assert!(!m.files.iter().any(|f| f.path.starts_with("tables/")));
    m.verify(&cfg.output_dir).unwrap();
}

#[test]
fn tables_from_two_repositories_have_summary_rows() {
    let t = LinkTaxonomy::bundled();
    let repo = common::fixture();
    let mut other = repo.clone();
    other.name = "other".into();
    other.links.truncate(40);
    let reports = [repository_report(&repo, &t).unwrap(), repository_report(&other, &t).unwrap()];
    let tables = emit_tables(&reports).unwrap();
    let csv = String::from_utf8(tables.whole_graph.to_csv().unwrap()).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["fixture", "other", "mean", "std", "min", "max"]);
    let single = emit_tables(&reports[..1]).unwrap();
    assert_eq!(String::from_utf8(single.descriptive.to_csv().unwrap()).unwrap().lines().count(), 2);
    assert_eq!(single.category_metrics.rows.len(), 5);
}
