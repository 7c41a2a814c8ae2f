//! The work behind each subcommand, on resolved settings.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use super::config::*;
use super::synth::generate_synthetic_fixture;
use crate::census::{ingest_dir, MigrationFlow};
use crate::corpus::{stream_corpus, Article, CorpusStats, YearRange};
use crate::dataset::{
    aggregate_state_year, build_pairwise_dataset, build_vector_dataset, fingerprint_bytes, group_tags,
    read_scores, read_tags, score_lookup, write_scores, write_sentiment_grid, write_tags, Dataset, Mode,
    ScoreRecord, TagRecord, TargetKind,
};
use crate::eval::{
    build_comparison_report, comparison_csv, comparison_svg, export_loss_curve, read_report, split,
    summarize, write_report, EvalReport,
};
use crate::model::{
    fit_logistic_baseline, load_baseline, load_checkpoint, predict, save_baseline, save_checkpoint, train,
    LogisticConfig, ModelCheckpoint, NetworkConfig,
};
use crate::sentiment::{score_text, Lexicon};
use crate::states::CANONICAL_STATES;
use crate::tagger::Gazetteer;

const CHUNK: usize = 4096;

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
    value.as_ref().ok_or_else(|| anyhow!(super::UsageError(format!("missing --{flag}"))))
}

fn require_inputs(inputs: &[PathBuf]) -> Result<()> {
    if inputs.is_empty() {
        bail!(super::UsageError("missing --input".into()));
    }
    Ok(())
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Streams the corpus in chunks, mapping each chunk in parallel while
/// keeping input order.
fn map_corpus<T, F>(inputs: &[PathBuf], years: YearRange, strict: bool, f: F) -> Result<(Vec<T>, CorpusStats)>
where
    T: Send,
    F: Fn(&Article) -> Vec<T> + Sync,
{
    let mut stream = stream_corpus(inputs, years, strict);
    let mut out = Vec::new();
    let mut chunk = Vec::with_capacity(CHUNK);
    loop {
        let next = stream.next().transpose()?;
        let done = next.is_none();
        chunk.extend(next);
        if chunk.len() >= CHUNK || (done && !chunk.is_empty()) {
            let mapped: Vec<Vec<T>> = chunk.par_iter().map(&f).collect();
            out.extend(mapped.into_iter().flatten());
            chunk.clear();
        }
        if done {
            break;
        }
    }
    let stats = stream.into_stats();
    eprint!("{}", stats.report());
    Ok((out, stats))
}

pub fn score_records(cfg: &ScoreConfig) -> Result<Vec<ScoreRecord>> {
    require_inputs(&cfg.input)?;
    let lexicon = match &cfg.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::bundled(),
    };
    log::info!("lexicon entries: {}", lexicon.len());
    let (records, _) = map_corpus(&cfg.input, cfg.years, cfg.strict, |a| {
        vec![ScoreRecord::new(a.id.clone(), a.year(), score_text(&a.text(), &lexicon))]
    })?;
    Ok(records)
}

pub fn run_score(cfg: &ScoreConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let records = score_records(cfg)?;
    write_scores(out, &records)?;
    println!("scored {} articles -> {}", records.len(), out.display());
    Ok(())
}

pub fn tag_records(cfg: &TagConfig) -> Result<Vec<TagRecord>> {
    require_inputs(&cfg.input)?;
    let gazetteer = Gazetteer::load(cfg.gazetteer.as_deref())?;
    let (records, _) = map_corpus(&cfg.input, cfg.years, cfg.strict, |a| {
        gazetteer
            .tag_text(&a.text())
            .into_iter()
            .map(|state| TagRecord {
                article_id: a.id.clone(),
                state,
            })
            .collect()
    })?;
    Ok(records)
}

pub fn run_tag(cfg: &TagConfig) -> Result<()> {
    let out = required(&cfg.out, "out")?;
    let records = tag_records(cfg)?;
    write_tags(out, &records)?;
    println!("wrote {} state tags -> {}", records.len(), out.display());
    Ok(())
}

fn load_flows(dir: &Path, years: YearRange) -> Result<Vec<MigrationFlow>> {
    let tables = ingest_dir(dir, years)?;
    Ok(tables.into_iter().flat_map(|t| t.flows).collect())
}

pub fn run_ingest(cfg: &IngestConfig) -> Result<()> {
    let dir = required(&cfg.dir, "dir")?;
    for t in ingest_dir(dir, cfg.years)? {
        println!(
            "year={} flows={} non_state_rows={} self_flow_rows={} suppressed_rows={}",
            t.year,
            t.flows.len(),
            t.non_state_rows,
            t.self_flow_rows,
            t.suppressed_rows
        );
    }
    Ok(())
}

pub fn run_build(cfg: &BuildConfig) -> Result<Dataset> {
    let out = required(&cfg.out, "out")?;
    let scores = read_scores(required(&cfg.scores, "scores")?)?;
    let tags = read_tags(required(&cfg.tags, "tags")?)?;
    let flows = load_flows(required(&cfg.census_dir, "census-dir")?, cfg.years)?;
    let grid = aggregate_state_year(&score_lookup(&scores), &group_tags(&tags), cfg.years)?;
    let flagged = grid.iter().filter(|c| c.flagged).count();
    if flagged > 0 {
        log::warn!("{flagged} state-year cells have no articles; their sentiment is 0");
    }
    let grid_out = cfg
        .grid_out
        .clone()
        .unwrap_or_else(|| parent_dir(out).join("sentiment_grid.csv"));
    write_sentiment_grid(&grid_out, &grid)?;
    let dataset = match cfg.mode {
        Mode::Pairwise => {
            let ds = build_pairwise_dataset(&grid, &flows);
            if ds.dropped_flows > 0 {
                log::warn!("{} flows had no sentiment cell and were dropped", ds.dropped_flows);
            }
            Dataset::Pairwise(ds.rows)
        }
        Mode::Vector => {
            let grid: Vec<_> = if cfg.allow_missing {
                grid
            } else {
                grid.into_iter().filter(|c| !c.flagged).collect()
            };
            Dataset::Vector(build_vector_dataset(&grid, &flows, cfg.target, cfg.allow_missing)?)
        }
    };
    dataset.save(out)?;
    println!(
        "state-year cells: {} ({flagged} without articles)\n{} dataset: {} rows -> {}\nfingerprint: {}",
        cfg.years.len() * CANONICAL_STATES.len(),
        dataset.mode(),
        dataset.len(),
        out.display(),
        dataset.fingerprint()
    );
    Ok(dataset)
}

/// Reads a dataset together with the hash of its bytes on disk.
fn load_dataset(path: &Path) -> Result<(Dataset, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok((Dataset::load(path)?, fingerprint_bytes(&bytes)))
}

fn network_config(dataset: &Dataset, cfg: &TrainConfig) -> NetworkConfig {
    let width = dataset.input_width();
    let mut layer_sizes = vec![width];
    layer_sizes.extend(&cfg.hidden);
    layer_sizes.push(width);
    NetworkConfig {
        layer_sizes,
        activation: cfg.activation,
        loss: cfg.loss,
        epochs: cfg.epochs,
        learning_rate: cfg.lr,
        optimizer: cfg.optimizer,
        seed: cfg.seed,
    }
}

pub fn run_train(cfg: &TrainConfig) -> Result<ModelCheckpoint> {
    let out = required(&cfg.out, "out")?;
    let (dataset, fingerprint) = load_dataset(required(&cfg.dataset, "dataset")?)?;
    if let Some(mode) = cfg.mode {
        if mode != dataset.mode() {
            bail!("--mode {mode} but the dataset file is {}", dataset.mode());
        }
    }
    let parts = split(&dataset.row_years(), cfg.split_by, cfg.split, cfg.seed)?;
    let (train_samples, _) = parts.take(&dataset.samples());
    let config = network_config(&dataset, cfg);
    log::info!(
        "training {:?} on {} of {} rows for {} epochs",
        config.layer_sizes,
        train_samples.len(),
        dataset.len(),
        config.epochs
    );
    let ck = train(&train_samples, &config, &fingerprint)?;
    save_checkpoint(&ck, out)?;
    println!(
        "trained on {} rows; loss {:.6e} -> {:.6e}; checkpoint -> {}",
        train_samples.len(),
        ck.trace.initial().unwrap_or(f64::NAN),
        ck.trace.last().unwrap_or(f64::NAN),
        out.display()
    );
    if let Some(dir) = &cfg.loss_curve_dir {
        std::fs::create_dir_all(dir)?;
        export_loss_curve(&ck.trace, dir)?;
    }
    if let Some(path) = &cfg.baseline_out {
        let Dataset::Pairwise(rows) = &dataset else {
            bail!("the logistic baseline needs a pairwise dataset");
        };
        let (train_rows, test_rows) = parts.take(rows);
        let baseline = fit_logistic_baseline(
            &train_rows,
            &LogisticConfig {
                learning_rate: cfg.baseline_lr,
                epochs: cfg.baseline_epochs,
            },
            &fingerprint,
        )?;
        save_baseline(&baseline, path)?;
        println!(
            "logistic baseline (above-median classifier): test accuracy {:.3} -> {}",
            baseline.accuracy(&test_rows),
            path.display()
        );
    }
    Ok(ck)
}

/// Input rows and the unit labels of each row.
type InputRows = (Vec<Vec<f64>>, Vec<Vec<String>>);

fn read_input_rows(path: &Path, width: usize) -> Result<InputRows> {
    if let Ok(ds) = Dataset::load(path) {
        let samples = ds.samples();
        let labels = (0..ds.len()).map(|i| ds.unit_labels(i)).collect();
        return Ok((samples.into_iter().map(|s| s.input).collect(), labels));
    }
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("row {}: bad number {v:?}", i + 1)))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != width {
            bail!("row {}: expected {width} inputs, found {}", i + 1, row.len());
        }
        labels.push((0..width).map(|j| format!("row{}/{j}", i + 1)).collect());
        rows.push(row);
    }
    Ok((rows, labels))
}

pub fn run_predict(cfg: &PredictConfig) -> Result<()> {
    let ck = load_checkpoint(required(&cfg.ckpt, "ckpt")?)?;
    let (rows, labels) = read_input_rows(required(&cfg.input, "input")?, ck.config.input_width())?;
    let predictions = rows
        .par_iter()
        .map(|x| predict(&ck, x, cfg.clamp_nonnegative))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "predicted"])?;
    for (pred, names) in predictions.iter().zip(&labels) {
        for (p, name) in pred.iter().zip(names) {
            w.write_record([name.clone(), p.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("{}", e.error()))?;
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(())
}

/// Mean published margin of error over the test units. For vector targets a
/// unit sums many flows, so their margins combine in quadrature.
fn moe_context(flows: &[MigrationFlow], dataset: &Dataset, test: &[usize], target: TargetKind) -> Option<f64> {
    let mut values = Vec::new();
    match dataset {
        Dataset::Pairwise(rows) => {
            let lookup: HashMap<(&str, &str, i32), u64> = flows
                .iter()
                .map(|f| ((f.origin.as_str(), f.destination.as_str(), f.year), f.moe))
                .collect();
            for &i in test {
                let r = &rows[i];
                if let Some(m) = lookup.get(&(r.origin.as_str(), r.destination.as_str(), r.year)) {
                    values.push(*m as f64);
                }
            }
        }
        Dataset::Vector(rows) => {
            let mut sq: HashMap<(&str, i32), f64> = HashMap::new();
            for f in flows {
                let m2 = (f.moe as f64).powi(2);
                *sq.entry((f.destination.as_str(), f.year)).or_default() += m2;
                if target == TargetKind::Net {
                    *sq.entry((f.origin.as_str(), f.year)).or_default() += m2;
                }
            }
            for &i in test {
                for state in CANONICAL_STATES {
                    if let Some(v) = sq.get(&(state, rows[i].year)) {
                        values.push(v.sqrt());
                    }
                }
            }
        }
    }
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn run_evaluate(cfg: &EvaluateConfig) -> Result<EvalReport> {
    let out_dir = required(&cfg.out_dir, "out-dir")?;
    let ck = load_checkpoint(required(&cfg.ckpt, "ckpt")?)?;
    let (dataset, fingerprint) = load_dataset(required(&cfg.dataset, "dataset")?)?;
    if ck.config.input_width() != dataset.input_width() {
        bail!(
            "checkpoint expects {} inputs but the {} dataset has {}",
            ck.config.input_width(),
            dataset.mode(),
            dataset.input_width()
        );
    }
    let parts = split(&dataset.row_years(), cfg.split_by, cfg.split, cfg.seed)?;
    let samples = dataset.samples();
    let test_samples: Vec<_> = parts.test.iter().map(|&i| samples[i].clone()).collect();
    let labels: Vec<_> = parts.test.iter().map(|&i| dataset.unit_labels(i)).collect();
    let mut report = build_comparison_report(&ck, &test_samples, &labels, cfg.clamp_nonnegative)?;
    report.set_dataset_fingerprint(&fingerprint);
    if let Some(dir) = &cfg.census_dir {
        let flows = load_flows(dir, cfg.years)?;
        report.census_moe_context = moe_context(&flows, &dataset, &parts.test, cfg.target);
    }
    if let Some(path) = &cfg.baseline {
        let baseline = load_baseline(path)?;
        match &dataset {
            Dataset::Pairwise(rows) => report.set_baseline(&baseline, &parts.take(rows).1),
            Dataset::Vector(_) => log::warn!("logistic baseline ignored: dataset is not pairwise"),
        }
    }
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    write_report(&report, out_dir)?;
    export_loss_curve(&ck.trace, out_dir)?;
    print!("{}", summarize(&report));
    Ok(report)
}

pub fn run_report(cfg: &ReportConfig) -> Result<()> {
    let report = read_report(required(&cfg.report, "report")?)?;
    let out_dir = required(&cfg.out_dir, "out-dir")?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("comparison.csv"), comparison_csv(&report)?)?;
    std::fs::write(out_dir.join("comparison.svg"), comparison_svg(&report))?;
    if let Some(path) = &cfg.ckpt {
        export_loss_curve(&load_checkpoint(path)?.trace, out_dir)?;
    }
    let summary = summarize(&report);
    std::fs::write(out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

/// File names used by `pipeline` inside its output directory.
pub struct PipelinePaths {
    pub fixture: PathBuf,
    pub scores: PathBuf,
    pub tags: PathBuf,
    pub grid: PathBuf,
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub baseline: PathBuf,
    pub report: PathBuf,
}

impl PipelinePaths {
    pub fn under(dir: &Path) -> PipelinePaths {
        PipelinePaths {
            fixture: dir.join("fixture"),
            scores: dir.join("scores.csv"),
            tags: dir.join("tags.csv"),
            grid: dir.join("sentiment_grid.csv"),
            dataset: dir.join("dataset.csv"),
            checkpoint: dir.join("model.ckpt"),
            baseline: dir.join("baseline.ckpt"),
            report: dir.join("report.json"),
        }
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EvalReport> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let paths = PipelinePaths::under(dir);
    let (input, census_dir, years) = match &cfg.synthetic {
        Some(synthetic) => {
            let fx = generate_synthetic_fixture(synthetic, &paths.fixture)?;
            (vec![fx.corpus], fx.census_dir, synthetic.years)
        }
        None => {
            require_inputs(&cfg.input)?;
            let census = required(&cfg.census_dir, "census-dir")?.clone();
            (cfg.input.clone(), census, cfg.years)
        }
    };
    run_score(&ScoreConfig {
        input: input.clone(),
        out: Some(paths.scores.clone()),
        lexicon: cfg.lexicon.clone(),
        years,
        strict: cfg.strict,
    })?;
    run_tag(&TagConfig {
        input,
        out: Some(paths.tags.clone()),
        gazetteer: cfg.gazetteer.clone(),
        years,
        strict: cfg.strict,
    })?;
    run_build(&BuildConfig {
        scores: Some(paths.scores.clone()),
        tags: Some(paths.tags.clone()),
        census_dir: Some(census_dir.clone()),
        mode: cfg.mode,
        target: cfg.target,
        years,
        allow_missing: cfg.allow_missing,
        out: Some(paths.dataset.clone()),
        grid_out: Some(paths.grid.clone()),
    })?;
    let with_baseline = cfg.baseline && cfg.mode == Mode::Pairwise;
    run_train(&TrainConfig {
        dataset: Some(paths.dataset.clone()),
        mode: Some(cfg.mode),
        hidden: cfg.hidden.clone(),
        activation: cfg.activation,
        loss: cfg.loss,
        optimizer: cfg.optimizer,
        epochs: cfg.epochs,
        lr: cfg.lr,
        seed: cfg.seed,
        split: cfg.split,
        split_by: cfg.split_by,
        out: Some(paths.checkpoint.clone()),
        baseline_out: with_baseline.then(|| paths.baseline.clone()),
        baseline_lr: cfg.baseline_lr,
        baseline_epochs: cfg.baseline_epochs,
        loss_curve_dir: None,
    })?;
    run_evaluate(&EvaluateConfig {
        ckpt: Some(paths.checkpoint.clone()),
        dataset: Some(paths.dataset.clone()),
        split: cfg.split,
        split_by: cfg.split_by,
        seed: cfg.seed,
        out_dir: Some(dir.clone()),
        census_dir: Some(census_dir),
        years,
        target: cfg.target,
        clamp_nonnegative: cfg.clamp_nonnegative,
        baseline: with_baseline.then(|| paths.baseline.clone()),
    })
}

pub fn run_synth(cfg: &SynthConfig) -> Result<()> {
    let dir = required(&cfg.out_dir, "out-dir")?;
    let paths = generate_synthetic_fixture(&cfg.fixture(), dir)?;
    println!(
        "corpus -> {}\ncensus tables -> {}\nmanifest -> {}",
        paths.corpus.display(),
        paths.census_dir.display(),
        paths.manifest.display()
    );
    Ok(())
}
