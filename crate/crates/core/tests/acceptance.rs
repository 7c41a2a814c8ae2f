//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Runs sequentially so the timings are not skewed by other tests.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pressflow::cli::{self, run_build, tag_records, BuildConfig, PipelinePaths, TagConfig};
use pressflow::corpus::YearRange;
use pressflow::dataset::{read_sentiment_grid, Dataset, Mode, Sample};
use pressflow::eval::{read_report, split_dataset, EvalReport};
use pressflow::model::{
    fit_logistic_baseline, grad_check, load_checkpoint, save_checkpoint, train, Activation, LogisticConfig,
    NetworkConfig, OptimizerKind,
};
use pressflow::sentiment::{score_text, Lexicon};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_pipeline(cfg: &str, out: &Path) -> Result<EvalReport, String> {
    let cfg = repo_root().join("fixtures").join(cfg);
    let code = cli::run([
        "pressflow".as_ref(),
        "pipeline".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--out-dir".as_ref(),
        out.as_os_str(),
    ]);
    if code != 0 {
        return Err(format!("pipeline exited with {code}"));
    }
    read_report(&out.join("report.json")).map_err(|e| e.to_string())
}

fn sentiment_parity() -> Outcome {
    let raw = include_str!("fixtures/vader_parity.tsv");
    let cases: Vec<(String, f64)> = raw
        .lines()
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            let text = f[0].replace("\\n", "\n").replace("\\t", "\t").replace("\\\\", "\\");
            (text, f[1].parse().unwrap())
        })
        .collect();
    let start = Instant::now();
    let lex = Lexicon::bundled();
    let worst = cases
        .iter()
        .map(|(text, want)| (score_text(text, &lex).compound - want).abs())
        .fold(0.0f64, f64::max);
    let took = start.elapsed();
    outcome(
        "sentiment parity",
        cases.len() >= 50 && worst <= 1e-4 && took < Duration::from_secs(1),
        format!("{} sentences, max |diff| {worst:.2e} (tol 1e-4), {}", cases.len(), secs(took)),
    )
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let report = grad_check(&NetworkConfig::default(), 100);
    let took = start.elapsed();
    match report {
        Ok(r) => outcome(
            "gradient correctness",
            r.max_relative_error <= 1e-4 && took < Duration::from_secs(30),
            format!(
                "100 trials on 50-64-64-50, {} probes ({} skipped at kinks), max rel err {:.2e} (tol 1e-4), {}",
                r.checked,
                r.skipped,
                r.max_relative_error,
                secs(took)
            ),
        ),
        Err(e) => outcome("gradient correctness", false, e.to_string()),
    }
}

fn grid_cardinality(smoke: &Path) -> Outcome {
    let grid = match read_sentiment_grid(&PipelinePaths::under(smoke).grid) {
        Ok(g) => g,
        Err(e) => return outcome("grid cardinality", false, e.to_string()),
    };
    let split = split_dataset(grid.len(), 0.8, 42);
    let (train, test) = split.map(|s| (s.train.len(), s.test.len())).unwrap_or((0, 0));
    outcome(
        "grid cardinality",
        grid.len() == 500 && train == 400 && test == 100,
        format!("{} state-year records, split {train}/{test}", grid.len()),
    )
}

fn overfit(smoke: &Path, scratch: &Path) -> Outcome {
    let paths = PipelinePaths::under(smoke);
    let out = scratch.join("vector.csv");
    let built = run_build(&BuildConfig {
        scores: Some(paths.scores.clone()),
        tags: Some(paths.tags.clone()),
        census_dir: Some(paths.fixture.join("census")),
        mode: Mode::Vector,
        out: Some(out.clone()),
        grid_out: Some(scratch.join("vector_grid.csv")),
        ..BuildConfig::default()
    });
    let ds = match built.and_then(|_| Ok(Dataset::load(&out)?)) {
        Ok(ds) => ds,
        Err(e) => return outcome("overfit sanity", false, e.to_string()),
    };
    let samples = ds.samples();
    let config = NetworkConfig::default();
    let start = Instant::now();
    let fitted = train(&samples, &config, "");
    let took = start.elapsed();
    match fitted {
        Ok(ck) => {
            let (first, last) = (ck.trace.initial().unwrap(), ck.trace.last().unwrap());
            let ratio = last / first;
            outcome(
                "overfit sanity",
                samples.len() == 10 && ratio < 0.01 && took < Duration::from_secs(60),
                format!(
                    "{} vector rows, {} epochs, loss {first:.4e} -> {last:.4e} ({:.3}% of initial, tol 1%), {}",
                    samples.len(),
                    config.epochs,
                    100.0 * ratio,
                    secs(took)
                ),
            )
        }
        Err(e) => outcome("overfit sanity", false, e.to_string()),
    }
}

fn end_to_end(signal: &Result<EvalReport, String>, null: &Result<EvalReport, String>, took: Duration) -> Outcome {
    match (signal, null) {
        (Ok(s), Ok(n)) => outcome(
            "synthetic end-to-end",
            s.improvement_over_mean >= 0.30 && n.improvement_over_mean <= 0.05 && took < Duration::from_secs(120),
            format!(
                "planted: mae {:.1} vs mean-predictor {:.1} ({:+.1}%, need >= 30%); \
                 zero gain: mae {:.1} vs {:.1} ({:+.1}%, need <= 5%); {}",
                s.mae,
                s.mean_predictor_mae,
                100.0 * s.improvement_over_mean,
                n.mae,
                n.mean_predictor_mae,
                100.0 * n.improvement_over_mean,
                secs(took)
            ),
        ),
        (Err(e), _) | (_, Err(e)) => outcome("synthetic end-to-end", false, e.clone()),
    }
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let mut diffs = Vec::new();
    for name in ["model.ckpt", "baseline.ckpt", "report.json", "dataset.csv", "comparison.csv"] {
        let same = match (std::fs::read(a.join(name)), std::fs::read(b.join(name))) {
            (Ok(x), Ok(y)) => x == y,
            _ => false,
        };
        if !same {
            diffs.push(name);
        }
    }
    outcome(
        "determinism",
        diffs.is_empty(),
        if diffs.is_empty() {
            "two seeded pipeline runs: checkpoints, report and dataset byte-identical".into()
        } else {
            format!("differing outputs: {}", diffs.join(", "))
        },
    )
}

fn disambiguation() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let records = tag_records(&TagConfig {
        input: vec![fixtures.join("tagger_corpus.jsonl")],
        years: YearRange::new(2015, 2015).unwrap(),
        ..TagConfig::default()
    });
    let records = match records {
        Ok(r) => r,
        Err(e) => return outcome("disambiguation", false, e.to_string()),
    };
    let washington = |prefix: &str| {
        records
            .iter()
            .filter(|r| r.article_id.starts_with(prefix) && r.state == "Washington")
            .count()
    };
    let per_article = |id: &str| records.iter().filter(|r| r.article_id == id && r.state == "Washington").count();
    let dc = washington("dc-");
    let ws_ok = ["ws-01", "ws-02", "ws-03", "ws-04"].iter().all(|id| per_article(id) == 1);
    outcome(
        "disambiguation",
        dc == 0 && ws_ok,
        format!(
            "D.C. articles -> {dc} Washington tags; each Washington State article -> exactly one: {ws_ok}"
        ),
    )
}

fn logistic_monotone(smoke: &Path) -> Outcome {
    let ds = match Dataset::load(&PipelinePaths::under(smoke).dataset) {
        Ok(Dataset::Pairwise(rows)) => rows,
        Ok(_) => return outcome("logistic monotonicity", false, "expected a pairwise dataset".into()),
        Err(e) => return outcome("logistic monotonicity", false, e.to_string()),
    };
    match fit_logistic_baseline(&ds, &LogisticConfig::default(), "") {
        Ok(ck) => {
            let rises = ck.trace.windows(2).filter(|w| w[1] > w[0]).count();
            outcome(
                "logistic monotonicity",
                rises == 0 && !ck.trace.is_empty(),
                format!(
                    "{} rows, {} epochs, log-loss {:.6} -> {:.6}, {rises} increases",
                    ds.len(),
                    ck.trace.len(),
                    ck.trace[0],
                    ck.trace[ck.trace.len() - 1]
                ),
            )
        }
        Err(e) => outcome("logistic monotonicity", false, e.to_string()),
    }
}

fn checkpoint_round_trip(scratch: &Path) -> Outcome {
    let mut identical = 0;
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let depth = rng.gen_range(1..=3);
        let mut sizes: Vec<usize> = (0..=depth + 1).map(|_| rng.gen_range(1..=12)).collect();
        sizes[0] = rng.gen_range(1..=8);
        let config = NetworkConfig {
            layer_sizes: sizes.clone(),
            activation: [Activation::Relu, Activation::Tanh, Activation::Linear][rng.gen_range(0..3)],
            epochs: rng.gen_range(1..=30),
            learning_rate: 1e-3,
            optimizer: if rng.gen_bool(0.5) { OptimizerKind::Adam } else { OptimizerKind::Sgd },
            seed,
            ..NetworkConfig::default()
        };
        let samples: Vec<Sample> = (0..rng.gen_range(2..=12))
            .map(|_| Sample {
                input: (0..sizes[0]).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                target: (0..*sizes.last().unwrap()).map(|_| rng.gen_range(0.0..5000.0)).collect(),
            })
            .collect();
        let fingerprint = format!("{:064x}", rng.gen::<u128>());
        let result = (|| -> Result<bool, Box<dyn std::error::Error>> {
            let ck = train(&samples, &config, &fingerprint)?;
            let (first, second) = (scratch.join(format!("a{seed}.ckpt")), scratch.join(format!("b{seed}.ckpt")));
            save_checkpoint(&ck, &first)?;
            let loaded = load_checkpoint(&first)?;
            save_checkpoint(&loaded, &second)?;
            Ok(std::fs::read(&first)? == std::fs::read(&second)? && loaded == ck)
        })();
        match result {
            Ok(true) => identical += 1,
            Ok(false) => failures.push(format!("seed {seed}: bytes differ")),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(
        "checkpoint round-trip",
        identical == 20,
        if failures.is_empty() {
            format!("{identical}/20 trained checkpoints byte-identical after save -> load -> save")
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let (smoke_a, smoke_b, null) = (
        scratch.path().join("smoke-a"),
        scratch.path().join("smoke-b"),
        scratch.path().join("null"),
    );

    let mut results = vec![sentiment_parity(), gradient_check()];

    let start = Instant::now();
    let signal = run_pipeline("smoke.cfg", &smoke_a);
    let zero = run_pipeline("null.cfg", &null);
    let took = start.elapsed();
    let _ = run_pipeline("smoke.cfg", &smoke_b);

    results.push(grid_cardinality(&smoke_a));
    results.push(overfit(&smoke_a, scratch.path()));
    results.push(end_to_end(&signal, &zero, took));
    results.push(determinism(&smoke_a, &smoke_b));
    results.push(disambiguation());
    results.push(logistic_monotone(&smoke_a));
    results.push(checkpoint_round_trip(scratch.path()));

    println!();
    for r in &results {
        println!("{} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
