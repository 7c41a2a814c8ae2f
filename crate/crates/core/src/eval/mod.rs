//! Train/test splits, mean absolute error, and report files.

pub mod plot;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Sample;
use crate::model::{predict, BaselineCheckpoint, ModelCheckpoint, ModelError, TrainingTrace};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 rows to split, got {0}")]
    TooFewRows(usize),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("split of {n} {unit} at fraction {fraction} leaves one side empty")]
    EmptySide { n: usize, unit: &'static str, fraction: f64 },
    #[error("length mismatch: {0} predictions vs {1} actual values")]
    LengthMismatch(usize, usize),
    #[error("no values to compare")]
    Empty,
    #[error("{0} rows but {1} label sets")]
    LabelMismatch(usize, usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Random rows (the default) or whole years held out together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SplitBy {
    #[default]
    Row,
    Year,
}

/// Row indices of each side, both in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub fraction: f64,
}

impl SplitResult {
    pub fn take<T: Clone>(&self, rows: &[T]) -> (Vec<T>, Vec<T>) {
        let pick = |idx: &[usize]| idx.iter().map(|&i| rows[i].clone()).collect();
        (pick(&self.train), pick(&self.test))
    }
}

fn check_fraction(fraction: f64) -> Result<(), EvalError> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(EvalError::BadFraction(fraction))
    }
}

/// Seeded shuffle of `0..n`, then the first `round(fraction * n)` go to train.
pub fn split_dataset(n: usize, fraction: f64, seed: u64) -> Result<SplitResult, EvalError> {
    check_fraction(fraction)?;
    if n < 2 {
        return Err(EvalError::TooFewRows(n));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(EvalError::EmptySide { n, unit: "rows", fraction });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitResult {
        train,
        test,
        seed,
        fraction,
    })
}

/// Shuffles the distinct years instead of rows, so no year contributes to
/// both sides; `round(fraction * years)` years go to train.
pub fn split_by_year(years: &[i32], fraction: f64, seed: u64) -> Result<SplitResult, EvalError> {
    check_fraction(fraction)?;
    let mut distinct: Vec<i32> = years.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.len() < 2 {
        return Err(EvalError::TooFewRows(distinct.len()));
    }
    let n_train = (fraction * distinct.len() as f64).round() as usize;
    if n_train == 0 || n_train == distinct.len() {
        return Err(EvalError::EmptySide {
            n: distinct.len(),
            unit: "years",
            fraction,
        });
    }
    distinct.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train_years: BTreeSet<i32> = distinct[..n_train].iter().copied().collect();
    let (train, test) = (0..years.len()).partition(|i| train_years.contains(&years[*i]));
    Ok(SplitResult {
        train,
        test,
        seed,
        fraction,
    })
}

pub fn split(years: &[i32], by: SplitBy, fraction: f64, seed: u64) -> Result<SplitResult, EvalError> {
    match by {
        SplitBy::Row => split_dataset(years.len(), fraction, seed),
        SplitBy::Year => split_by_year(years, fraction, seed),
    }
}

pub fn mean_absolute_error(pred: &[f64], actual: &[f64]) -> Result<f64, EvalError> {
    if pred.len() != actual.len() {
        return Err(EvalError::LengthMismatch(pred.len(), actual.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let total: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(total / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRow {
    pub label: String,
    pub actual: f64,
    pub predicted: f64,
    /// `predicted - actual`
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub kind: String,
    pub threshold: f64,
    pub weight: f64,
    pub bias: f64,
    pub test_accuracy: f64,
    pub final_log_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Always `mean_absolute_error`.
    pub metric: String,
    /// Which rows the metric covers; always `test`.
    pub scope: String,
    pub mae: f64,
    /// MAE of always predicting the training-target mean.
    pub mean_predictor_mae: f64,
    /// `1 - mae / mean_predictor_mae`
    pub improvement_over_mean: f64,
    pub n_test: usize,
    pub n_units: usize,
    pub negative_prediction_count: usize,
    pub clamp_nonnegative: bool,
    /// Mean published census margin of error over the test units, when the
    /// flow tables were supplied. Context only.
    pub census_moe_context: Option<f64>,
    pub checkpoint_fingerprint: String,
    pub dataset_fingerprint: String,
    pub fingerprint_match: bool,
    pub final_training_loss: Option<f64>,
    pub logistic_baseline: Option<BaselineSummary>,
    pub per_unit_rows: Vec<UnitRow>,
}

impl EvalReport {
    pub fn recomputed_mae(&self) -> f64 {
        let total: f64 = self.per_unit_rows.iter().map(|r| r.error.abs()).sum();
        total / self.per_unit_rows.len() as f64
    }
}

/// Predicts every test sample and flattens outputs into labelled units.
/// `labels[i]` names the outputs of `samples[i]`.
pub fn build_comparison_report(
    checkpoint: &ModelCheckpoint,
    samples: &[Sample],
    labels: &[Vec<String>],
    clamp_nonnegative: bool,
) -> Result<EvalReport, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::Empty);
    }
    if labels.len() != samples.len() {
        return Err(EvalError::LabelMismatch(samples.len(), labels.len()));
    }
    let predictions = samples
        .par_iter()
        .map(|s| predict(checkpoint, &s.input, clamp_nonnegative))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut baseline_errors = Vec::new();
    for ((s, pred), names) in samples.iter().zip(&predictions).zip(labels) {
        if s.target.len() != pred.len() || names.len() != pred.len() {
            return Err(EvalError::LengthMismatch(pred.len(), s.target.len()));
        }
        for (((actual, predicted), label), mean) in s
            .target
            .iter()
            .zip(pred)
            .zip(names)
            .zip(&checkpoint.scaler.target.mean)
        {
            rows.push(UnitRow {
                label: label.clone(),
                actual: *actual,
                predicted: *predicted,
                error: predicted - actual,
            });
            baseline_errors.push((mean - actual).abs());
        }
    }
    let mut report = EvalReport {
        metric: "mean_absolute_error".into(),
        scope: "test".into(),
        mae: 0.0,
        mean_predictor_mae: baseline_errors.iter().sum::<f64>() / baseline_errors.len() as f64,
        improvement_over_mean: 0.0,
        n_test: samples.len(),
        n_units: rows.len(),
        negative_prediction_count: rows.iter().filter(|r| r.predicted < 0.0).count(),
        clamp_nonnegative,
        census_moe_context: None,
        checkpoint_fingerprint: checkpoint.dataset_fingerprint.clone(),
        dataset_fingerprint: String::new(),
        fingerprint_match: true,
        final_training_loss: checkpoint.trace.last(),
        logistic_baseline: None,
        per_unit_rows: rows,
    };
    report.mae = report.recomputed_mae();
    report.improvement_over_mean = if report.mean_predictor_mae > 0.0 {
        1.0 - report.mae / report.mean_predictor_mae
    } else {
        0.0
    };
    Ok(report)
}

impl EvalReport {
    /// Records the evaluated dataset's hash and warns when the checkpoint was
    /// trained on different data.
    pub fn set_dataset_fingerprint(&mut self, fingerprint: &str) {
        self.dataset_fingerprint = fingerprint.to_string();
        self.fingerprint_match = self.checkpoint_fingerprint == fingerprint;
        if !self.fingerprint_match {
            log::warn!(
                "checkpoint was trained on dataset {} but is evaluated on {}",
                short(&self.checkpoint_fingerprint),
                short(fingerprint)
            );
        }
    }

    pub fn set_baseline(&mut self, baseline: &BaselineCheckpoint, test: &[crate::dataset::PairwiseRow]) {
        self.logistic_baseline = Some(BaselineSummary {
            kind: "above-median flow classifier on sentiment_delta".into(),
            threshold: baseline.threshold,
            weight: baseline.weight,
            bias: baseline.bias,
            test_accuracy: baseline.accuracy(test),
            final_log_loss: baseline.trace.last().copied().unwrap_or(f64::NAN),
        });
    }
}

fn short(fp: &str) -> &str {
    if fp.is_empty() {
        "<none>"
    } else {
        &fp[..fp.len().min(12)]
    }
}

pub fn loss_curve_csv(trace: &TrainingTrace) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, l) in trace.losses.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, l));
    }
    out
}

pub fn parse_loss_curve_csv(text: &str) -> Result<TrainingTrace, EvalError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut losses = Vec::new();
    for rec in reader.deserialize::<(usize, f64)>() {
        losses.push(rec?.1);
    }
    Ok(TrainingTrace { losses })
}

pub fn loss_curve_svg(trace: &TrainingTrace) -> String {
    plot::line_chart(
        "Loss over epochs",
        "epoch",
        "training loss (standardised)",
        &[plot::Series {
            name: "loss",
            color: "#1f77b4",
            values: &trace.losses,
        }],
    )
}

pub fn comparison_csv(report: &EvalReport) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "actual", "predicted", "error"])?;
    for r in &report.per_unit_rows {
        w.write_record([
            r.label.clone(),
            r.actual.to_string(),
            r.predicted.to_string(),
            r.error.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn comparison_svg(report: &EvalReport) -> String {
    let actual: Vec<f64> = report.per_unit_rows.iter().map(|r| r.actual).collect();
    let predicted: Vec<f64> = report.per_unit_rows.iter().map(|r| r.predicted).collect();
    plot::line_chart(
        "Actual values compared to model predictions",
        "test unit",
        "migration flow",
        &[
            plot::Series {
                name: "actual",
                color: "#1f77b4",
                values: &actual,
            },
            plot::Series {
                name: "predicted",
                color: "#d62728",
                values: &predicted,
            },
        ],
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), EvalError> {
    std::fs::write(path, contents).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn export_loss_curve(trace: &TrainingTrace, dir: &Path) -> Result<(), EvalError> {
    if trace.losses.is_empty() {
        return Err(EvalError::Empty);
    }
    write_file(&dir.join("loss_curve.csv"), &loss_curve_csv(trace))?;
    write_file(&dir.join("loss_curve.svg"), &loss_curve_svg(trace))
}

/// Writes `report.json`, `comparison.csv` and `comparison.svg` into `dir`.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<(), EvalError> {
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    write_file(&dir.join("report.json"), &json)?;
    write_file(&dir.join("comparison.csv"), &comparison_csv(report)?)?;
    write_file(&dir.join("comparison.svg"), &comparison_svg(report))
}

pub fn read_report(path: &Path) -> Result<EvalReport, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// One-paragraph plain-text summary of a report.
pub fn summarize(report: &EvalReport) -> String {
    let mut s = format!(
        "test mean absolute error: {:.3} over {} units ({} test rows)\n\
         mean-predictor MAE: {:.3} (improvement {:.1}%)\n\
         negative predictions: {}{}\n",
        report.mae,
        report.n_units,
        report.n_test,
        report.mean_predictor_mae,
        100.0 * report.improvement_over_mean,
        report.negative_prediction_count,
        if report.clamp_nonnegative { " (clamped)" } else { "" },
    );
    if let Some(moe) = report.census_moe_context {
        s.push_str(&format!("mean census margin of error over test units: {moe:.1}\n"));
    }
    if let Some(b) = &report.logistic_baseline {
        s.push_str(&format!(
            "logistic baseline ({}): test accuracy {:.3}\n",
            b.kind, b.test_accuracy
        ));
    }
    if !report.fingerprint_match {
        s.push_str("warning: checkpoint was trained on a different dataset\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NetworkConfig, ModelParams, Scaler, Standardizer};

    #[test]
    fn split_sizes() {
        let s = split_dataset(500, 0.8, 42).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (400, 100));
        let s = split_dataset(2, 0.5, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
        assert_eq!(split_dataset(500, 0.8, 42).unwrap(), split_dataset(500, 0.8, 42).unwrap());
        assert_ne!(split_dataset(500, 0.8, 42).unwrap(), split_dataset(500, 0.8, 43).unwrap());
        assert!(matches!(split_dataset(1, 0.8, 0), Err(EvalError::TooFewRows(1))));
        assert!(split_dataset(10, 1.0, 0).is_err());
    }

    #[test]
    fn year_split_keeps_years_whole() {
        let years: Vec<i32> = (0..500).map(|i| 2010 + i % 10).collect();
        let s = split_by_year(&years, 0.8, 42).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (400, 100));
        let train_years: BTreeSet<i32> = s.train.iter().map(|&i| years[i]).collect();
        assert!(s.test.iter().all(|&i| !train_years.contains(&years[i])));
    }

    #[test]
    fn mae_cases() {
        let a = [1.0, -2.0, 300.0];
        assert_eq!(mean_absolute_error(&a, &a).unwrap(), 0.0);
        let shifted: Vec<f64> = a.iter().map(|v| v + 900.0).collect();
        assert_eq!(mean_absolute_error(&shifted, &a).unwrap(), 900.0);
        assert!(mean_absolute_error(&a, &a[..2]).is_err());
        assert!(mean_absolute_error(&[], &[]).is_err());
    }

    fn bias_only_checkpoint(out_bias: f64) -> ModelCheckpoint {
        let config = NetworkConfig {
            layer_sizes: vec![1, 2, 1],
            epochs: 1,
            ..NetworkConfig::default()
        };
        let mut params = ModelParams::zeros(&config.layer_sizes, config.activation);
        params.layers[0].weights = vec![1.0, -1.0];
        params.layers[1].weights = vec![1.0, 1.0];
        params.layers[1].bias = vec![out_bias];
        ModelCheckpoint {
            params,
            scaler: Scaler {
                input: Standardizer::identity(1),
                target: Standardizer::identity(1),
            },
            trace: TrainingTrace { losses: vec![1.0] },
            dataset_fingerprint: "fp".into(),
            config,
        }
    }

    fn samples(xs: &[(f64, f64)]) -> (Vec<Sample>, Vec<Vec<String>>) {
        let s = xs
            .iter()
            .map(|(x, t)| Sample {
                input: vec![*x],
                target: vec![*t],
            })
            .collect();
        let labels = (0..xs.len()).map(|i| vec![format!("u{i}")]).collect();
        (s, labels)
    }

    #[test]
    fn report_counts_one_negative() {
        // output = |x| - 3, so only x = 1 goes negative
        let ck = bias_only_checkpoint(-3.0);
        let (s, l) = samples(&[(1.0, 0.0), (5.0, 2.0), (-4.0, 1.0)]);
        let r = build_comparison_report(&ck, &s, &l, false).unwrap();
        assert_eq!(r.negative_prediction_count, 1);
        let preds: Vec<f64> = r.per_unit_rows.iter().map(|u| u.predicted).collect();
        assert_eq!(preds, vec![-2.0, 2.0, 1.0]);
        assert_eq!(r.mae, 2.0 / 3.0);
        assert_eq!(r.mae, r.recomputed_mae());
        let clamped = build_comparison_report(&ck, &s, &l, true).unwrap();
        assert_eq!(clamped.negative_prediction_count, 0);
    }

    #[test]
    fn permuting_rows_keeps_mae() {
        let ck = bias_only_checkpoint(0.5);
        let pairs = [(1.0, 0.0), (5.0, 2.0), (-4.0, 1.0), (0.2, 9.0)];
        let (s, l) = samples(&pairs);
        let a = build_comparison_report(&ck, &s, &l, false).unwrap();
        let rev: Vec<(f64, f64)> = pairs.iter().rev().copied().collect();
        let (s2, mut l2) = samples(&rev);
        l2.reverse();
        let b = build_comparison_report(&ck, &s2, &l2, false).unwrap();
        assert!((a.mae - b.mae).abs() < 1e-15);
        assert!(build_comparison_report(&ck, &[], &[], false).is_err());
    }

    #[test]
    fn fingerprint_mismatch_is_flagged() {
        let ck = bias_only_checkpoint(0.0);
        let (s, l) = samples(&[(1.0, 1.0)]);
        let mut r = build_comparison_report(&ck, &s, &l, false).unwrap();
        r.set_dataset_fingerprint("fp");
        assert!(r.fingerprint_match);
        r.set_dataset_fingerprint("other");
        assert!(!r.fingerprint_match);
        assert!(summarize(&r).contains("different dataset"));
    }

    #[test]
    fn loss_curve_round_trip() {
        let trace = TrainingTrace {
            losses: (0..2000).map(|i| (1.0 + i as f64).recip() * std::f64::consts::PI).collect(),
        };
        let csv = loss_curve_csv(&trace);
        assert_eq!(csv.lines().count(), 2001);
        assert_eq!(parse_loss_curve_csv(&csv).unwrap(), trace);
        let pts = plot::polyline_points(&loss_curve_svg(&trace), "loss").unwrap();
        assert_eq!(pts.len(), 2000);
        assert!(pts.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn report_files_are_consistent() {
        let ck = bias_only_checkpoint(-3.0);
        let (s, l) = samples(&[(1.0, 0.0), (5.0, 2.0)]);
        let r = build_comparison_report(&ck, &s, &l, false).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_report(&r, dir.path()).unwrap();
        assert_eq!(read_report(&dir.path().join("report.json")).unwrap(), r);
        let csv = std::fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
        assert_eq!(csv, "label,actual,predicted,error\nu0,0,-2,-2\nu1,2,2,0\n");
    }
}
