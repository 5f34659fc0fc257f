//! End-to-end CLI behavior: artifact layout, exit codes, error isolation,
//! and equality between `pipeline` and the manual subcommand chain.

mod common;

use common::learnable_corpus;
use docstruct::cli::run_with_args;
use std::path::Path;

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["docstruct".to_string(), "--quiet".to_string()];
    v.extend(args.iter().map(|s| s.to_string()));
    run_with_args(v)
}

fn write_corpus(dir: &Path, n: usize, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, doc) in learnable_corpus(n, seed).iter().enumerate() {
        std::fs::write(dir.join(format!("page-{i:02}.json")), doc.to_canonical_json()).unwrap();
    }
}

fn train_quick_model(pages: &Path, out: &Path) {
    let code = run(&[
        "train",
        "--train",
        pages.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--max-iterations",
        "0",
        "--seed",
        "11",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn empty_input_dir_exits_zero_with_empty_summary() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    let empty = work.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    write_corpus(&pages, 2, 41);
    let model = work.path().join("model.json");
    train_quick_model(&pages, &model);

    let out = work.path().join("out");
    let code = run(&[
        "pipeline",
        "--model",
        model.to_str().unwrap(),
        "--in",
        empty.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pages"], 0);
    assert_eq!(summary["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn single_page_with_gold_produces_four_artifacts_and_report() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 1, 42);
    let model = work.path().join("model.json");
    train_quick_model(&pages, &model);

    let out = work.path().join("out");
    let code = run(&[
        "pipeline",
        "--model",
        model.to_str().unwrap(),
        "--in",
        pages.to_str().unwrap(),
        "--gt",
        pages.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    for suffix in ["pred.json", "tree.json", "trace.json", "hocr"] {
        assert!(out.join(format!("page-00.{suffix}")).exists(), "{suffix} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let reports = summary["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2); // default thresholds 0.5 and 0.75
    assert!(reports[0]["map"].is_number());
    assert!(reports[0]["relation"]["f1"].is_number());
    assert_eq!(reports[0]["iou_threshold"], 0.5);
    assert_eq!(reports[1]["iou_threshold"], 0.75);
}

#[test]
fn corrupted_page_is_isolated_and_exit_is_nonzero() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 2, 43);
    let model = work.path().join("model.json");
    train_quick_model(&pages, &model);
    std::fs::write(pages.join("page-99.json"), "{ not json").unwrap();

    let out = work.path().join("out");
    let code = run(&[
        "pipeline",
        "--model",
        model.to_str().unwrap(),
        "--in",
        pages.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    // The valid pages were still processed.
    assert!(out.join("page-00.tree.json").exists());
    assert!(out.join("page-01.tree.json").exists());
    assert!(!out.join("page-99.tree.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failures"].as_array().unwrap().len(), 1);
    assert_eq!(summary["failures"][0]["id"], "page-99");
}

#[test]
fn pipeline_equals_manual_subcommand_composition() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 3, 44);
    let model = work.path().join("model.json");
    train_quick_model(&pages, &model);

    let out = work.path().join("pipeline");
    assert_eq!(
        run(&[
            "pipeline",
            "--model",
            model.to_str().unwrap(),
            "--in",
            pages.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]),
        0
    );

    let manual = work.path().join("manual");
    std::fs::create_dir_all(&manual).unwrap();
    for i in 0..3 {
        let id = format!("page-{i:02}");
        let page = pages.join(format!("{id}.json"));
        let pred = manual.join(format!("{id}.pred.json"));
        let tree = manual.join(format!("{id}.tree.json"));
        let trace = manual.join(format!("{id}.trace.json"));
        let hocr = manual.join(format!("{id}.hocr"));
        assert_eq!(
            run(&[
                "infer",
                "--model",
                model.to_str().unwrap(),
                "--in",
                page.to_str().unwrap(),
                "--out",
                pred.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run(&[
                "postprocess",
                "--in",
                pred.to_str().unwrap(),
                "--out",
                tree.to_str().unwrap(),
                "--trace",
                trace.to_str().unwrap(),
                "--model",
                model.to_str().unwrap(),
            ]),
            0
        );
        assert_eq!(
            run(&[
                "convert",
                "--tree",
                tree.to_str().unwrap(),
                "--out",
                hocr.to_str().unwrap(),
            ]),
            0
        );
        for suffix in ["pred.json", "tree.json", "trace.json", "hocr"] {
            let a = std::fs::read(out.join(format!("{id}.{suffix}"))).unwrap();
            let b = std::fs::read(manual.join(format!("{id}.{suffix}"))).unwrap();
            assert_eq!(a, b, "{id}.{suffix} differs from the manual chain");
        }
    }
}

#[test]
fn evaluate_emits_report_with_expected_shape() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 2, 45);
    let report_path = work.path().join("report.json");
    let code = run(&[
        "evaluate",
        "--pred",
        pages.to_str().unwrap(),
        "--gt",
        pages.to_str().unwrap(),
        "--iou",
        "0.5",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    // Perfect predictions: mAP 100, F1 1.
    assert_eq!(report["map"], 100.0);
    assert_eq!(report["relation"]["precision"], 1.0);
    assert_eq!(report["relation"]["recall"], 1.0);
    assert_eq!(report["relation"]["f1"], 1.0);
    assert_eq!(report["iou_threshold"], 0.5);
    assert!(report["per_category_ap"].is_object());
}

#[test]
fn convert_and_query_round_trip_through_files() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 1, 46);
    // Build a tree directly from the gold page.
    let tree_path = work.path().join("tree.json");
    assert_eq!(
        run(&[
            "postprocess",
            "--in",
            pages.join("page-00.json").to_str().unwrap(),
            "--out",
            tree_path.to_str().unwrap(),
        ]),
        0
    );
    let words_path = work.path().join("words.json");
    std::fs::write(
        &words_path,
        r#"[{"text": "Ergebnisse", "bbox": [44, 140, 150, 160]}]"#,
    )
    .unwrap();
    let hocr_path = work.path().join("page.hocr");
    assert_eq!(
        run(&[
            "convert",
            "--tree",
            tree_path.to_str().unwrap(),
            "--words",
            words_path.to_str().unwrap(),
            "--out",
            hocr_path.to_str().unwrap(),
        ]),
        0
    );
    assert_eq!(
        run(&[
            "query",
            "--doc",
            hocr_path.to_str().unwrap(),
            "--expr",
            "//span[text()=\"Ergebnisse\"]/..",
        ]),
        0
    );
    // Invalid query expression: operational failure.
    assert_eq!(
        run(&[
            "query",
            "--doc",
            hocr_path.to_str().unwrap(),
            "--expr",
            "//div[bad",
        ]),
        1
    );
}

#[test]
fn stats_subcommand_writes_the_stats_json() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/corpus20");
    let work = tempfile::tempdir().unwrap();
    let out = work.path().join("stats.json");
    let code = run(&[
        "stats",
        "--corpus",
        root.to_str().unwrap(),
        "--splits",
        root.join("splits.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(stats["document_count"], 20);
    assert_eq!(stats["entity_count"], 170);
    assert_eq!(stats["split_sizes"]["train"], 10);
}

#[test]
fn pipeline_config_file_supplies_defaults_and_flags_override() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 1, 47);
    let model = work.path().join("model.json");
    train_quick_model(&pages, &model);

    let out_a = work.path().join("out-a");
    let config = serde_json::json!({
        "model": model.to_str().unwrap(),
        "input": pages.to_str().unwrap(),
        "out": out_a.to_str().unwrap(),
        "iou_thresholds": [0.5],
        "jobs": 1,
    });
    let config_path = work.path().join("pipeline.json");
    std::fs::write(&config_path, config.to_string()).unwrap();
    assert_eq!(run(&["pipeline", "--config", config_path.to_str().unwrap()]), 0);
    assert!(out_a.join("page-00.tree.json").exists());

    // The --out flag overrides the file value.
    let out_b = work.path().join("out-b");
    assert_eq!(
        run(&[
            "pipeline",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out_b.to_str().unwrap(),
        ]),
        0
    );
    assert!(out_b.join("page-00.tree.json").exists());
}

#[test]
fn bad_threshold_is_invalid_invocation() {
    let work = tempfile::tempdir().unwrap();
    let pages = work.path().join("pages");
    write_corpus(&pages, 1, 48);
    let code = run(&[
        "evaluate",
        "--pred",
        pages.to_str().unwrap(),
        "--gt",
        pages.to_str().unwrap(),
        "--iou",
        "1.5",
    ]);
    assert_eq!(code, 2);
}
