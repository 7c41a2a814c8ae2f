use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pressflow::cli::synth::read_manifest;
use pressflow::dataset::{read_sentiment_grid, Dataset};
use pressflow::eval::read_report;

const TINY: &str = r#"
seed = 42

[pipeline]
mode = "pairwise"
hidden = [8]
epochs = 40
lr = 0.01
baseline_epochs = 200

[pipeline.synthetic]
seed = 7
years = "2010:2012"
articles_per_cell = 3
"#;

fn pf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pressflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    let p = p.as_ref();
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Runs the tiny pipeline into `dir/out` and returns that directory.
fn tiny_pipeline(dir: &Path) -> PathBuf {
    let cfg = dir.join("tiny.cfg");
    std::fs::write(&cfg, TINY).unwrap();
    let out = dir.join("out");
    let o = pf(&["pipeline", "--config", s(&cfg), "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn help_exits_zero() {
    let o = pf(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["score", "tag", "ingest-census", "build-dataset", "train", "predict", "evaluate", "report", "pipeline"] {
        assert!(text.contains(sub), "{sub} missing from usage");
    }
}

#[test]
fn unknown_subcommand_exits_one() {
    assert_eq!(pf(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(pf(&["train"]).status.code(), Some(1));
    assert_eq!(pf(&["train", "--epochs", "many"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[train]\nepochz = 5\n").unwrap();
    assert_eq!(pf(&["--config", s(&cfg), "train"]).status.code(), Some(1));
    std::fs::write(&cfg, "[trian]\nepochs = 5\n").unwrap();
    assert_eq!(pf(&["--config", s(&cfg), "train"]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = dir.path().join("scores.csv");
    assert_eq!(pf(&["score", "--input", s(&missing), "--out", s(&out)]).status.code(), Some(2));

    let ckpt = dir.path().join("model.ckpt");
    std::fs::write(&ckpt, "pressflow-checkpoint\nschema_version 1\nkind network\n").unwrap();
    let o = pf(&["predict", "--ckpt", s(&ckpt), "--input", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt checkpoint"));
}

#[test]
fn pipeline_smoke_writes_a_consistent_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    for f in ["report.json", "comparison.csv", "comparison.svg", "run_config.pipeline.toml", "model.ckpt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let report = read_report(&out.join("report.json")).unwrap();
    assert_eq!(report.metric, "mean_absolute_error");
    assert_eq!(report.scope, "test");
    assert_eq!(report.mae, report.recomputed_mae());
    assert!(report.fingerprint_match);
    assert!(report.logistic_baseline.is_some());
    assert!(report.census_moe_context.is_some());
    // 3 years of 50 * 49 ordered pairs, 20% held out
    assert_eq!(report.n_test, 1470);

    let csv = String::from_utf8(read(out.join("comparison.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("label,actual,predicted,error"));
    assert_eq!(csv.lines().count(), report.n_units + 1);
}

#[test]
fn fingerprint_matches_an_external_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    let Ok(o) = Command::new("sha256sum").arg(out.join("dataset.csv")).output() else {
        eprintln!("sha256sum unavailable; skipped");
        return;
    };
    let external = String::from_utf8_lossy(&o.stdout).split_whitespace().next().unwrap().to_string();
    let ckpt = String::from_utf8(read(out.join("model.ckpt"))).unwrap();
    assert!(ckpt.contains(&format!("dataset_fingerprint {external}\n")));
    assert_eq!(read_report(&out.join("report.json")).unwrap().dataset_fingerprint, external);
}

#[test]
fn planted_polarity_survives_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    let manifest = read_manifest(&out.join("fixture/manifest.csv")).unwrap();
    let grid = read_sentiment_grid(&out.join("sentiment_grid.csv")).unwrap();
    let cell = |state: &str, year: i32| grid.iter().find(|g| g.state == state && g.year == year).unwrap();
    let (mut positive_only, mut negative_only) = (0, 0);
    for m in &manifest {
        let g = cell(&m.state, m.year);
        if m.negative_articles == 0 {
            positive_only += 1;
            assert!(g.mean_compound > 0.0, "{} {}: {}", m.state, m.year, g.mean_compound);
        }
        if m.positive_articles == 0 {
            negative_only += 1;
            assert!(g.mean_compound < 0.0, "{} {}: {}", m.state, m.year, g.mean_compound);
        }
    }
    assert!(positive_only > 0 && negative_only > 0);
}

#[test]
fn stages_reproduce_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    let st = dir.path().join("stages");
    let fx = st.join("fixture");
    let (corpus, census) = (fx.join("corpus.jsonl"), fx.join("census"));
    let p = |name: &str| st.join(name);
    let ok = |args: &[&str]| {
        let o = pf(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };

    ok(&["--seed", "7", "synth", "--out-dir", s(&fx), "--years", "2010:2012", "--articles-per-cell", "3"]);
    assert_eq!(read(&corpus), read(out.join("fixture/corpus.jsonl")));
    ok(&["score", "--input", s(&corpus), "--out", s(&p("scores.csv"))]);
    ok(&["tag", "--input", s(&corpus), "--out", s(&p("tags.csv"))]);
    ok(&["ingest-census", "--dir", s(&census), "--years", "2010:2012"]);
    ok(&[
        "build-dataset", "--scores", s(&p("scores.csv")), "--tags", s(&p("tags.csv")),
        "--census-dir", s(&census), "--mode", "pairwise", "--years", "2010:2012",
        "--out", s(&p("dataset.csv")),
    ]);
    ok(&[
        "--seed", "42", "train", "--dataset", s(&p("dataset.csv")), "--hidden", "8", "--epochs", "40",
        "--lr", "0.01", "--baseline-epochs", "200", "--out", s(&p("model.ckpt")),
        "--baseline-out", s(&p("baseline.ckpt")),
    ]);
    ok(&[
        "--seed", "42", "evaluate", "--ckpt", s(&p("model.ckpt")), "--dataset", s(&p("dataset.csv")),
        "--census-dir", s(&census), "--years", "2010:2012", "--baseline", s(&p("baseline.ckpt")),
        "--out-dir", s(&st),
    ]);

    for f in ["scores.csv", "tags.csv", "sentiment_grid.csv", "dataset.csv", "model.ckpt", "baseline.ckpt", "report.json"] {
        assert!(read(p(f)) == read(out.join(f)), "{f} differs");
    }
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    let again = dir.path().join("again");
    let echo = out.join("run_config.pipeline.toml");
    let o = pf(&["--config", s(&echo), "pipeline", "--out-dir", s(&again)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["dataset.csv", "model.ckpt", "report.json", "comparison.csv"] {
        assert!(read(again.join(f)) == read(out.join(f)), "{f} differs");
    }

    // a single stage: flag beats file, and the echo replays it
    let train_dir = dir.path().join("train");
    std::fs::create_dir_all(&train_dir).unwrap();
    let cfg = dir.path().join("train.cfg");
    std::fs::write(&cfg, "seed = 3\n[train]\nepochs = 5\nhidden = [4]\n").unwrap();
    let first = train_dir.join("a.ckpt");
    let o = pf(&[
        "--config", s(&cfg), "train", "--dataset", s(&out.join("dataset.csv")), "--epochs", "7",
        "--out", s(&first),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let echo = train_dir.join("run_config.train.toml");
    let echoed: toml::Table = toml::from_str(&String::from_utf8(read(&echo)).unwrap()).unwrap();
    let section = echoed["train"].as_table().unwrap();
    assert_eq!(section["epochs"].as_integer(), Some(7));
    assert_eq!(section["seed"].as_integer(), Some(3));

    let replay_dir = dir.path().join("replay");
    std::fs::create_dir_all(&replay_dir).unwrap();
    let second = replay_dir.join("a.ckpt");
    let o = pf(&["--config", s(&echo), "train", "--out", s(&second)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&first) == read(&second));
}

#[test]
fn evaluate_flags_a_foreign_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    let Dataset::Pairwise(mut rows) = Dataset::load(&out.join("dataset.csv")).unwrap() else {
        panic!("pairwise dataset expected");
    };
    rows[0].flow += 1;
    let other = dir.path().join("other.csv");
    Dataset::Pairwise(rows).save(&other).unwrap();
    let eval_dir = dir.path().join("eval");
    let o = pf(&[
        "evaluate", "--ckpt", s(&out.join("model.ckpt")), "--dataset", s(&other), "--out-dir", s(&eval_dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_report(&eval_dir.join("report.json")).unwrap();
    assert!(!report.fingerprint_match);
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint was trained on dataset"));
}

#[test]
fn report_and_predict_use_saved_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_pipeline(dir.path());
    let figures = dir.path().join("figures");
    let o = pf(&[
        "report", "--report", s(&out.join("report.json")), "--ckpt", s(&out.join("model.ckpt")),
        "--out-dir", s(&figures),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(figures.join("comparison.svg").exists());
    assert!(figures.join("loss_curve.csv").exists());
    let curve = String::from_utf8(read(figures.join("loss_curve.csv"))).unwrap();
    assert_eq!(curve.lines().count(), 41);

    let preds = dir.path().join("preds.csv");
    let o = pf(&[
        "predict", "--ckpt", s(&out.join("model.ckpt")), "--input", s(&out.join("dataset.csv")),
        "--clamp-nonnegative", "--out", s(&preds),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(read(&preds)).unwrap();
    assert_eq!(text.lines().count(), 3 * 50 * 49 + 1);
    assert!(text.lines().skip(1).all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() >= 0.0));
}
