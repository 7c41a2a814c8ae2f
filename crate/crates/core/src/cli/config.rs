//! Resolved per-subcommand settings and the layering that produces them:
//! built-in defaults, then the `--config` file, then command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::synth::SyntheticConfig;
use crate::corpus::YearRange;
use crate::dataset::{Mode, TargetKind};
use crate::eval::SplitBy;
use crate::model::{Activation, LossKind, OptimizerKind};

/// Parsed `--config` file: global keys plus one table per subcommand.
#[derive(Debug, Default, Deserialize)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub verbose: Option<u8>,
    #[serde(flatten)]
    pub sections: BTreeMap<String, toml::Value>,
}

pub const SECTIONS: &[&str] = &[
    "score",
    "tag",
    "ingest-census",
    "build-dataset",
    "train",
    "predict",
    "evaluate",
    "report",
    "pipeline",
    "synth",
];

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let file: ConfigFile =
            toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))?;
        for (key, value) in &file.sections {
            if !SECTIONS.contains(&key.as_str()) || !value.is_table() {
                return Err(format!("config {}: unknown setting or section {key:?}", path.display()));
            }
        }
        Ok(file)
    }
}

fn overlay(base: &mut toml::Table, top: &toml::Table) {
    for (k, v) in top {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => overlay(b, t),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<toml::Table, String> {
    toml::Table::try_from(value).map_err(|e| e.to_string())
}

/// Layers defaults, the file's `[section]`, the global `--seed`, and the
/// subcommand's own flags (highest priority).
pub fn resolve<A, C>(
    section: &str,
    file: &ConfigFile,
    global_seed: Option<u64>,
    flags: &A,
) -> Result<C, String>
where
    A: Serialize,
    C: Serialize + DeserializeOwned + Default,
{
    let mut table = to_table(&C::default())?;
    let has_seed = table.contains_key("seed");
    if let (true, Some(seed)) = (has_seed, file.seed) {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    match file.sections.get(section) {
        Some(toml::Value::Table(t)) => overlay(&mut table, t),
        Some(_) => return Err(format!("config: [{section}] must be a table")),
        None => {}
    }
    if let (true, Some(seed)) = (has_seed, global_seed) {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    overlay(&mut table, &to_table(flags)?);
    C::deserialize(toml::Value::Table(table)).map_err(|e| format!("[{section}]: {e}"))
}

/// The resolved settings as a config file that reproduces the run.
pub fn echo<C: Serialize>(section: &str, config: &C) -> String {
    let mut root = toml::Table::new();
    root.insert(
        section.to_string(),
        toml::Value::Table(to_table(config).expect("resolved config serializes")),
    );
    format!(
        "# resolved settings for `pressflow {section}`; rerun with --config <this file>\n{}",
        toml::to_string(&root).expect("table serializes")
    )
}

pub fn write_echo<C: Serialize>(dir: &Path, section: &str, config: &C) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("run_config.{section}.toml")), echo(section, config))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub input: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub years: YearRange,
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TagConfig {
    pub input: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub years: YearRange,
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub dir: Option<PathBuf>,
    pub years: YearRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub scores: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub census_dir: Option<PathBuf>,
    pub mode: Mode,
    pub target: TargetKind,
    pub years: YearRange,
    pub allow_missing: bool,
    pub out: Option<PathBuf>,
    /// Defaults to `sentiment_grid.csv` next to `out`.
    pub grid_out: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            scores: None,
            tags: None,
            census_dir: None,
            mode: Mode::Vector,
            target: TargetKind::Inbound,
            years: YearRange::default(),
            allow_missing: false,
            out: None,
            grid_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: Option<PathBuf>,
    /// When set, the dataset file must be in this framing.
    pub mode: Option<Mode>,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub split: f64,
    pub split_by: SplitBy,
    pub out: Option<PathBuf>,
    /// Pairwise datasets only.
    pub baseline_out: Option<PathBuf>,
    pub baseline_lr: f64,
    pub baseline_epochs: usize,
    pub loss_curve_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dataset: None,
            mode: None,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            loss: LossKind::Mse,
            optimizer: OptimizerKind::Adam,
            epochs: 2000,
            lr: 1e-3,
            seed: 42,
            split: 0.8,
            split_by: SplitBy::Row,
            out: None,
            baseline_out: None,
            baseline_lr: 0.1,
            baseline_epochs: 2000,
            loss_curve_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    pub ckpt: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub clamp_nonnegative: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub ckpt: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub split: f64,
    pub split_by: SplitBy,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Flow tables for the margin-of-error context line.
    pub census_dir: Option<PathBuf>,
    pub years: YearRange,
    pub target: TargetKind,
    pub clamp_nonnegative: bool,
    pub baseline: Option<PathBuf>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            ckpt: None,
            dataset: None,
            split: 0.8,
            split_by: SplitBy::Row,
            seed: 42,
            out_dir: None,
            census_dir: None,
            years: YearRange::default(),
            target: TargetKind::Inbound,
            clamp_nonnegative: false,
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub report: Option<PathBuf>,
    pub ckpt: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Vec<PathBuf>,
    pub census_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub lexicon: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub years: YearRange,
    pub strict: bool,
    pub mode: Mode,
    pub target: TargetKind,
    pub allow_missing: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub split: f64,
    pub split_by: SplitBy,
    pub clamp_nonnegative: bool,
    /// Fit the logistic baseline too (pairwise mode only).
    pub baseline: bool,
    pub baseline_lr: f64,
    pub baseline_epochs: usize,
    /// Generate a planted-signal fixture and run on it instead of `input`
    /// and `census_dir`.
    pub synthetic: Option<SyntheticConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        PipelineConfig {
            input: Vec::new(),
            census_dir: None,
            out_dir: PathBuf::from("pressflow-out"),
            lexicon: None,
            gazetteer: None,
            years: YearRange::default(),
            strict: false,
            mode: Mode::Vector,
            target: TargetKind::Inbound,
            allow_missing: false,
            hidden: t.hidden,
            activation: t.activation,
            loss: t.loss,
            optimizer: t.optimizer,
            epochs: t.epochs,
            lr: t.lr,
            seed: t.seed,
            split: t.split,
            split_by: t.split_by,
            clamp_nonnegative: false,
            baseline: true,
            baseline_lr: t.baseline_lr,
            baseline_epochs: t.baseline_epochs,
            synthetic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    pub years: YearRange,
    pub articles_per_cell: usize,
    pub base: f64,
    pub gain: f64,
    pub noise_sd: f64,
    pub distractors_per_year: usize,
    pub multi_state_per_year: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let f = SyntheticConfig::default();
        SynthConfig {
            out_dir: None,
            seed: f.seed,
            years: f.years,
            articles_per_cell: f.articles_per_cell,
            base: f.base,
            gain: f.gain,
            noise_sd: f.noise_sd,
            distractors_per_year: f.distractors_per_year,
            multi_state_per_year: f.multi_state_per_year,
        }
    }
}

impl SynthConfig {
    pub fn fixture(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.seed,
            years: self.years,
            articles_per_cell: self.articles_per_cell,
            base: self.base,
            gain: self.gain,
            noise_sd: self.noise_sd,
            distractors_per_year: self.distractors_per_year,
            multi_state_per_year: self.multi_state_per_year,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Default)]
    struct Flags {
        #[serde(skip_serializing_if = "Option::is_none")]
        epochs: Option<usize>,
    }

    fn file(text: &str) -> ConfigFile {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn flags_override_file_overrides_defaults() {
        let f = file("seed = 9\n[train]\nepochs = 50\nlr = 0.5\n");
        let c: TrainConfig = resolve("train", &f, None, &Flags::default()).unwrap();
        assert_eq!((c.epochs, c.lr, c.seed), (50, 0.5, 9));
        let c: TrainConfig = resolve("train", &f, Some(3), &Flags { epochs: Some(7) }).unwrap();
        assert_eq!((c.epochs, c.lr, c.seed), (7, 0.5, 3));
        let c: TrainConfig = resolve("train", &ConfigFile::default(), None, &Flags::default()).unwrap();
        assert_eq!(c, TrainConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = file("[train]\nepoch = 50\n");
        assert!(resolve::<_, TrainConfig>("train", &f, None, &Flags::default()).is_err());
    }

    #[test]
    fn echo_reproduces_config() {
        let c = PipelineConfig {
            synthetic: Some(SyntheticConfig::default()),
            input: vec!["a.jsonl".into()],
            ..PipelineConfig::default()
        };
        let text = echo("pipeline", &c);
        let back: PipelineConfig = resolve("pipeline", &file(&text), None, &Flags::default()).unwrap();
        assert_eq!(back, c);
        let s = SynthConfig::default();
        let back: SynthConfig = resolve("synth", &file(&echo("synth", &s)), None, &Flags::default()).unwrap();
        assert_eq!(back, s);
    }
}
