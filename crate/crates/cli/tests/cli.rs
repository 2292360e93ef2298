use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use medsyn::synth::{generate, SynthConfig};

fn medsyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medsyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn synthetic(dir: &Path) -> Vec<String> {
    let corpus = generate(&SynthConfig {
        positives: 40,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    corpus.write_to_dir(dir).unwrap();
    let p = |name: &str| dir.join(name).display().to_string();
    vec![
        "--pairs".into(),
        p("pairs.tsv"),
        "--zh-embeddings".into(),
        p("zh.vec"),
        "--en-embeddings".into(),
        p("en.vec"),
        "--pinyin".into(),
        p("pinyin.tsv"),
        "--radicals".into(),
        p("radicals.tsv"),
        "--primary-corpus".into(),
        p("corpus_primary.txt"),
        "--secondary-corpus".into(),
        p("corpus_secondary.txt"),
    ]
}

fn with<'a>(base: &'a [String], extra: &[&'a str]) -> Vec<&'a str> {
    extra
        .iter()
        .copied()
        .chain(base.iter().map(String::as_str))
        .collect()
}

#[test]
fn help_and_usage_errors() {
    let help = medsyn(&["--help"]);
    assert!(help.status.success());
    for sub in [
        "features",
        "train",
        "eval",
        "sweep",
        "report",
        "corpus-index",
    ] {
        let out = medsyn(&[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        assert!(text(&out.stdout).contains("Usage"), "{sub}");
    }
    assert!(text(&medsyn(&["sweep", "--help"]).stdout).contains("--parallelism"));

    assert_eq!(medsyn(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(medsyn(&["sweep", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        medsyn(&["features"]).status.code(),
        Some(1),
        "no pairs file"
    );
    assert_eq!(
        medsyn(&["features", "--pairs", "/nonexistent/pairs.tsv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(medsyn(&["sweep", "--c=-1"]).status.code(), Some(2));
}

#[test]
fn malformed_pairs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs.tsv");
    std::fs::write(&pairs, "肝癌\t肝肿瘤\tmaybe\t\t\n").unwrap();
    let out = medsyn(&["features", "--pairs", pairs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("error"));
}

#[test]
fn sweep_is_identical_across_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let base = synthetic(&dir.path().join("data"));
    let run = |threads: &str, out: &PathBuf| {
        let o = out.display().to_string();
        let args = with(
            &base,
            &[
                "sweep",
                "--k",
                "5",
                "--parallelism",
                threads,
                "--out-dir",
                &o,
            ],
        );
        let res = medsyn(&args);
        assert!(res.status.success(), "{}", text(&res.stderr));
        res
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run("1", &a);
    run("4", &b);
    for name in ["sweep.tsv", "sweep.json", "frequency.tsv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let tsv = text(&std::fs::read(a.join("sweep.tsv")).unwrap());
    assert_eq!(tsv.lines().count(), 32);
    assert!(tsv.starts_with("bitmask\tfeatures\tprecision\trecall\tf1\tseconds\n"));
    assert!(text(&first.stderr).contains("resolved configuration"));

    let log: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("run-log.json")).unwrap()).unwrap();
    assert_eq!(log["config"]["k"], 5);
    assert!(log["volatile"]["wall_seconds"].is_number());
    assert_eq!(log["dataset_fingerprint"].as_str().unwrap().len(), 64);

    let report = medsyn(&[
        "report",
        a.join("sweep.tsv").to_str().unwrap(),
        "--top",
        "10",
    ]);
    assert!(report.status.success(), "{}", text(&report.stderr));
    let out = text(&report.stdout);
    let table: Vec<&str> = out.lines().take_while(|l| !l.is_empty()).collect();
    assert_eq!(table.len(), 11, "header plus 10 rows:\n{out}");
    assert!(table[0].starts_with("features"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let base = synthetic(&dir.path().join("data"));
    let cfg = dir.path().join("c.json");
    let out_a = dir.path().join("a");
    std::fs::write(
        &cfg,
        serde_json::json!({ "k": 3, "seed": 9, "out_dir": out_a }).to_string(),
    )
    .unwrap();
    let c = cfg.display().to_string();
    let res = medsyn(&with(&base, &["sweep", "--config", &c, "--k", "2"]));
    assert!(res.status.success(), "{}", text(&res.stderr));
    let tsv = text(&std::fs::read(out_a.join("sweep.tsv")).unwrap());
    assert_eq!(tsv.lines().count(), 4, "k=2 from the flag wins");
    let meta: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_a.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);

    std::fs::write(&cfg, r#"{"unknown_knob": 1}"#).unwrap();
    assert_eq!(
        medsyn(&with(&base, &["sweep", "--config", &c]))
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn features_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let base = synthetic(&dir.path().join("data"));
    let table = dir.path().join("features.tsv").display().to_string();
    let small = dir.path().join("small.tsv").display().to_string();
    let model = dir.path().join("model.json").display().to_string();
    let preds = dir.path().join("preds.tsv").display().to_string();

    let f = medsyn(&with(&base, &["features", "--out", &table]));
    assert!(f.status.success(), "{}", text(&f.stderr));
    let header = text(&std::fs::read(&table).unwrap())
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        header,
        "term_a\tterm_b\tlabel\t1\t2\t3\t4\t5\t6\t7\t8\t9\t10\t11\t12\t13"
    );

    let t = medsyn(&with(
        &base,
        &[
            "train",
            "--features",
            &table,
            "--mask",
            "4,10,11",
            "--model-out",
            &model,
        ],
    ));
    assert!(t.status.success(), "{}", text(&t.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&t.stdout).unwrap();
    assert_eq!(summary["mask"], serde_json::json!([4, 10, 11]));

    // Same model twice gives byte-identical files.
    let first = std::fs::read(&model).unwrap();
    medsyn(&with(
        &base,
        &[
            "train",
            "--features",
            &table,
            "--mask",
            "4,10,11",
            "--model-out",
            &model,
        ],
    ));
    assert_eq!(first, std::fs::read(&model).unwrap());

    let mismatch = medsyn(&["eval", "--model", &model, "--features", &table]);
    assert_eq!(mismatch.status.code(), Some(2));
    assert!(text(&mismatch.stderr).contains("mask mismatch"));

    let f = medsyn(&with(
        &base,
        &["features", "--mask", "4,10,11", "--out", &small],
    ));
    assert!(f.status.success());
    let e = medsyn(&[
        "eval",
        "--model",
        &model,
        "--features",
        &small,
        "--predictions-out",
        &preds,
    ]);
    assert!(e.status.success(), "{}", text(&e.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&e.stdout).unwrap();
    assert!(metrics["metrics"]["f1"].as_f64().unwrap() > 0.5);
    assert_eq!(text(&std::fs::read(&preds).unwrap()).lines().count(), 81);
}

#[test]
fn corpus_index_feeds_features() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let base = synthetic(&data);
    let index = dir.path().join("primary.idx").display().to_string();
    let res = medsyn(&[
        "corpus-index",
        "--documents",
        data.join("corpus_primary.txt").to_str().unwrap(),
        "--pairs",
        data.join("pairs.tsv").to_str().unwrap(),
        "--out",
        &index,
    ]);
    assert!(res.status.success(), "{}", text(&res.stderr));

    // The prebuilt index and the on-the-fly corpus give the same feature 12.
    let pairs = base[1].as_str();
    let via_corpus = medsyn(&[
        "features",
        "--pairs",
        pairs,
        "--mask",
        "12",
        "--primary-corpus",
        base[11].as_str(),
    ]);
    let via_index = medsyn(&[
        "features",
        "--pairs",
        pairs,
        "--mask",
        "12",
        "--primary-index",
        &index,
    ]);
    assert!(via_index.status.success(), "{}", text(&via_index.stderr));
    assert_eq!(via_corpus.stdout, via_index.stdout);

    let both = medsyn(&[
        "features",
        "--pairs",
        pairs,
        "--primary-index",
        &index,
        "--primary-corpus",
        base[11].as_str(),
    ]);
    assert_eq!(both.status.code(), Some(1));
}
