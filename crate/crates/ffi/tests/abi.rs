use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use linkgraph_ffi::*;

fn fixture() -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/fixture_repo.json");
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = lg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    lg_string_free(p);
    s
}

#[test]
fn repository_graph_round_trip() {
    unsafe {
        let mut repo = ptr::null_mut();
        assert_eq!(lg_repository_load(fixture().as_ptr(), &mut repo), LgStatus::Ok);
        let (mut issues, mut links) = (0usize, 0usize);
        assert_eq!(lg_repository_counts(repo, &mut issues, &mut links), LgStatus::Ok);
        assert_eq!((issues, links), (200, 111));
        assert_eq!(lg_repository_clean(repo), LgStatus::Ok);
        assert_eq!(lg_repository_counts(repo, &mut issues, &mut links), LgStatus::Ok);
        assert_eq!(links, 103);
        let mut coverage = 0.0;
        assert_eq!(lg_repository_coverage(repo, &mut coverage), LgStatus::Ok);
        assert!(coverage > 0.0 && coverage <= 1.0);
        let mut report = ptr::null_mut();
        assert_eq!(lg_repository_cleaning_report_json(repo, &mut report), LgStatus::Ok);
        assert!(take_string(report).contains("\"self_link\":1"));

        let mut tax = ptr::null_mut();
        assert_eq!(lg_taxonomy_bundled(&mut tax), LgStatus::Ok);
        let slice = CString::new("category:Duplication").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(lg_graph_build(repo, tax, slice.as_ptr(), &mut g), LgStatus::Ok);
        let (mut v, mut e) = (0usize, 0usize);
        assert_eq!(lg_graph_size(g, &mut v, &mut e), LgStatus::Ok);
        assert_eq!(v, 200);

        let mut m = std::mem::zeroed::<LgMetrics>();
        assert_eq!(lg_graph_metrics(g, &mut m), LgStatus::Ok);
        let golden: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(
                PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/golden_metrics.json"),
            )
            .unwrap(),
        )
        .unwrap();
        let dup = &golden["category:Duplication"];
        assert!(m.has_pct_stars && m.has_pct_trees);
        assert_eq!(m.pct_stars, dup["pct_stars"]["value"].as_f64().unwrap());
        assert_eq!(m.pct_3comp_plus, dup["pct_3comp_plus"]["value"].as_f64().unwrap());

        let mut json = ptr::null_mut();
        assert_eq!(lg_graph_metrics_json(g, &mut json), LgStatus::Ok);
        let parsed: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        assert_eq!(parsed["transitivity"].as_f64().unwrap(), m.transitivity);

        // Workflow has no complex components
        let slice = CString::new("category:Workflow").unwrap();
        let mut wf = ptr::null_mut();
        assert_eq!(lg_graph_build(repo, tax, slice.as_ptr(), &mut wf), LgStatus::Ok);
        assert_eq!(lg_graph_metrics(wf, &mut m), LgStatus::Ok);
        assert!(!m.has_avg_density && m.avg_density.is_nan());

        lg_graph_free(wf);
        lg_graph_free(g);
        lg_taxonomy_free(tax);
        lg_repository_free(repo);
    }
}

#[test]
fn taxonomy_lookups() {
    unsafe {
        let mut tax = ptr::null_mut();
        assert_eq!(lg_taxonomy_load(ptr::null(), false, &mut tax), LgStatus::Ok);
        let raw = CString::new("Duplicated By").unwrap();
        let mut canonical = ptr::null_mut();
        assert_eq!(lg_taxonomy_normalize(tax, raw.as_ptr(), &mut canonical), LgStatus::Ok);
        assert_eq!(take_string(canonical), "Duplicate");
        let mut cat = LgCategory::Relation;
        assert_eq!(lg_taxonomy_categorize(tax, raw.as_ptr(), &mut cat), LgStatus::Ok);
        assert_eq!(cat, LgCategory::Duplication);

        let odd = CString::new("Frobnicates").unwrap();
        assert_eq!(lg_taxonomy_categorize(tax, odd.as_ptr(), &mut cat), LgStatus::UnknownType);
        assert!(last_error().contains("Frobnicates"));
        lg_taxonomy_free(tax);

        assert_eq!(lg_taxonomy_load(ptr::null(), true, &mut tax), LgStatus::Ok);
        assert_eq!(lg_taxonomy_categorize(tax, odd.as_ptr(), &mut cat), LgStatus::Ok);
        assert_eq!(cat, LgCategory::Relation);
        lg_taxonomy_free(tax);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut repo = ptr::null_mut();
        assert_eq!(lg_repository_load(ptr::null(), &mut repo), LgStatus::NullArgument);
        let missing = CString::new("/nonexistent/repo.json").unwrap();
        assert_eq!(lg_repository_load(missing.as_ptr(), &mut repo), LgStatus::Io);
        assert!(repo.is_null());
        let bad = CString::new("{\"issues\": 3}").unwrap();
        let name = CString::new("x").unwrap();
        assert_eq!(lg_repository_from_json(bad.as_ptr(), name.as_ptr(), &mut repo), LgStatus::Parse);
        let invalid = [0xffu8, 0];
        assert_eq!(
            lg_repository_load(invalid.as_ptr().cast(), &mut repo),
            LgStatus::InvalidUtf8
        );

        let empty = CString::new(r#"{"issues": [], "links": []}"#).unwrap();
        assert_eq!(lg_repository_from_json(empty.as_ptr(), name.as_ptr(), &mut repo), LgStatus::Ok);
        let mut coverage = 0.0;
        assert_eq!(lg_repository_coverage(repo, &mut coverage), LgStatus::Undefined);
        let mut tax = ptr::null_mut();
        assert_eq!(lg_taxonomy_bundled(&mut tax), LgStatus::Ok);
        let slice = CString::new("bogus").unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(lg_graph_build(repo, tax, slice.as_ptr(), &mut g), LgStatus::InvalidSlice);
        assert_eq!(lg_graph_size(ptr::null(), ptr::null_mut(), ptr::null_mut()), LgStatus::NullArgument);
        lg_taxonomy_free(tax);
        lg_repository_free(repo);
        lg_repository_free(ptr::null_mut());
        lg_string_free(ptr::null_mut());
        assert_eq!(CStr::from_ptr(lg_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn pipeline_reports_stage_failure() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.json"), r#"{"issues": [], "links": []}"#).unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"repositories": ["empty.json"], "split": {"strategy": "cluster"}, "training_configs": ["DvsNL"], "seed": 1, "output_dir": "out"}"#,
    )
    .unwrap();
    let cfg = CString::new(cfg.to_str().unwrap()).unwrap();
    unsafe {
        let mut manifest = ptr::null_mut();
        assert_eq!(lg_pipeline_run(cfg.as_ptr(), &mut manifest), LgStatus::StageFailed);
        assert!(last_error().contains("dataset"));
        let path = take_string(manifest);
        assert!(std::fs::read_to_string(path).unwrap().contains("\"complete\": false"));

        let missing = CString::new(tmp.path().join("nope.json").to_str().unwrap()).unwrap();
        assert_eq!(lg_pipeline_run(missing.as_ptr(), ptr::null_mut()), LgStatus::Io);
    }
}

#[test]
fn checked_in_header_declares_every_export() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/linkgraph.h")).unwrap();
    let source = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from the header");
    }
}
