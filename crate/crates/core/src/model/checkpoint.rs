//! Line-oriented text checkpoints.
//!
//! ```text
//! pressflow-checkpoint
//! schema_version 1
//! kind network
//! config.layer_sizes 50 64 64 50
//! config.activation relu
//! ...
//! layer 0 weights 64 50 <64*50 values, row-major>
//! layer 0 bias 64 <values>
//! scaler.input.mean 50 <values>
//! ...
//! trace 2000 <values>
//! dataset_fingerprint <hex | none>
//! checksum sha256 <hex of every preceding byte>
//! ```
//!
//! Reals are written with 17 significant digits, which is enough for an
//! exact round trip of every finite `f64`.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::logistic::{BaselineCheckpoint, LogisticConfig};
use super::network::{Layer, ModelParams};
use super::scaler::{Scaler, Standardizer};
use super::train::{ModelCheckpoint, TrainingTrace};
use super::{ModelError, NetworkConfig};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "pressflow-checkpoint";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_reals(out: &mut String, key: &str, values: &[f64]) {
    write!(out, "{key} {}", values.len()).unwrap();
    for v in values {
        out.push(' ');
        out.push_str(&real(*v));
    }
    out.push('\n');
}

fn push_usizes(out: &mut String, key: &str, values: &[usize]) {
    write!(out, "{key} {}", values.len()).unwrap();
    for v in values {
        write!(out, " {v}").unwrap();
    }
    out.push('\n');
}

fn header(kind: &str) -> String {
    format!("{MAGIC}\nschema_version {SCHEMA_VERSION}\nkind {kind}\n")
}

fn push_fingerprint(out: &mut String, fp: &str) {
    let fp = if fp.is_empty() { "none" } else { fp };
    writeln!(out, "dataset_fingerprint {fp}").unwrap();
}

fn seal(mut body: String) -> String {
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    writeln!(body, "checksum sha256 {digest}").unwrap();
    body
}

fn push_standardizer(out: &mut String, prefix: &str, s: &Standardizer) {
    push_reals(out, &format!("{prefix}.mean"), &s.mean);
    push_reals(out, &format!("{prefix}.scale"), &s.scale);
    push_usizes(out, &format!("{prefix}.degenerate"), &s.degenerate);
}

pub fn network_to_text(ck: &ModelCheckpoint) -> String {
    let c = &ck.config;
    let mut out = header("network");
    push_usizes(&mut out, "config.layer_sizes", &c.layer_sizes);
    writeln!(out, "config.activation {}", c.activation).unwrap();
    writeln!(out, "config.loss {}", c.loss).unwrap();
    writeln!(out, "config.epochs {}", c.epochs).unwrap();
    writeln!(out, "config.learning_rate {}", real(c.learning_rate)).unwrap();
    writeln!(out, "config.optimizer {}", c.optimizer).unwrap();
    writeln!(out, "config.seed {}", c.seed).unwrap();
    for (i, l) in ck.params.layers.iter().enumerate() {
        write!(out, "layer {i} weights {} {}", l.outputs, l.inputs).unwrap();
        for v in &l.weights {
            out.push(' ');
            out.push_str(&real(*v));
        }
        out.push('\n');
        push_reals(&mut out, &format!("layer {i} bias"), &l.bias);
    }
    push_standardizer(&mut out, "scaler.input", &ck.scaler.input);
    push_standardizer(&mut out, "scaler.target", &ck.scaler.target);
    push_reals(&mut out, "trace", &ck.trace.losses);
    push_fingerprint(&mut out, &ck.dataset_fingerprint);
    seal(out)
}

pub fn baseline_to_text(ck: &BaselineCheckpoint) -> String {
    let mut out = header("logistic-baseline");
    writeln!(out, "config.learning_rate {}", real(ck.config.learning_rate)).unwrap();
    writeln!(out, "config.epochs {}", ck.config.epochs).unwrap();
    writeln!(out, "weight {}", real(ck.weight)).unwrap();
    writeln!(out, "bias {}", real(ck.bias)).unwrap();
    writeln!(out, "threshold {}", real(ck.threshold)).unwrap();
    push_reals(&mut out, "trace", &ck.trace);
    push_fingerprint(&mut out, &ck.dataset_fingerprint);
    seal(out)
}

/// Sequential reader over the verified body.
struct Fields<'a> {
    lines: std::str::Lines<'a>,
}

type Parsed<T> = Result<T, String>;

impl<'a> Fields<'a> {
    /// Tokens after `key` on the next line.
    fn next(&mut self, key: &str) -> Parsed<Vec<&'a str>> {
        let line = self.lines.next().ok_or_else(|| format!("missing {key:?}"))?;
        let mut rest = line
            .strip_prefix(key)
            .filter(|r| r.is_empty() || r.starts_with(' '))
            .ok_or_else(|| format!("expected {key:?}, found {:?}", truncate(line)))?;
        rest = rest.trim_start_matches(' ');
        Ok(if rest.is_empty() { Vec::new() } else { rest.split(' ').collect() })
    }

    fn one(&mut self, key: &str) -> Parsed<&'a str> {
        match self.next(key)?.as_slice() {
            [v] => Ok(v),
            _ => Err(format!("{key} takes exactly one value")),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Parsed<T> {
        let v = self.one(key)?;
        v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
    }

    fn counted<T: std::str::FromStr>(&mut self, key: &str, lead: usize) -> Parsed<(Vec<usize>, Vec<T>)> {
        let tokens = self.next(key)?;
        if tokens.len() < lead {
            return Err(format!("{key}: missing length"));
        }
        let dims = tokens[..lead]
            .iter()
            .map(|t| t.parse::<usize>().map_err(|_| format!("{key}: bad length {t:?}")))
            .collect::<Parsed<Vec<usize>>>()?;
        let values = tokens[lead..]
            .iter()
            .map(|t| t.parse::<T>().map_err(|_| format!("{key}: bad value {t:?}")))
            .collect::<Parsed<Vec<T>>>()?;
        let expected: usize = dims.iter().product();
        if values.len() != expected {
            return Err(format!("{key}: expected {expected} values, found {}", values.len()));
        }
        Ok((dims, values))
    }

    fn reals(&mut self, key: &str) -> Parsed<Vec<f64>> {
        let values = self.counted::<f64>(key, 1)?.1;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(format!("{key}: non-finite value"));
        }
        Ok(values)
    }

    fn usizes(&mut self, key: &str) -> Parsed<Vec<usize>> {
        Ok(self.counted::<usize>(key, 1)?.1)
    }

    fn standardizer(&mut self, prefix: &str) -> Parsed<Standardizer> {
        Ok(Standardizer {
            mean: self.reals(&format!("{prefix}.mean"))?,
            scale: self.reals(&format!("{prefix}.scale"))?,
            degenerate: self.usizes(&format!("{prefix}.degenerate"))?,
        })
    }

    fn fingerprint(&mut self) -> Parsed<String> {
        let fp = self.one("dataset_fingerprint")?;
        Ok(if fp == "none" { String::new() } else { fp.to_string() })
    }

    fn finish(mut self) -> Parsed<()> {
        match self.lines.next() {
            None => Ok(()),
            Some(l) => Err(format!("unexpected trailing line {:?}", truncate(l))),
        }
    }
}

fn truncate(line: &str) -> &str {
    match line.char_indices().nth(60) {
        Some((i, _)) => &line[..i],
        None => line,
    }
}

/// Checks magic, checksum and version; returns the field lines after `kind`.
fn open<'a>(text: &'a str, origin: &str, kind: &str) -> Result<Fields<'a>, ModelError> {
    let corrupt = |reason: String| ModelError::CorruptCheckpoint {
        path: origin.to_string(),
        reason,
    };
    let body_end = text
        .strip_suffix('\n')
        .and_then(|t| t.rfind('\n'))
        .map(|i| i + 1)
        .ok_or_else(|| corrupt("file is truncated".into()))?;
    let (body, seal_line) = text.split_at(body_end);
    let expected = seal_line
        .trim_end_matches('\n')
        .strip_prefix("checksum sha256 ")
        .ok_or_else(|| corrupt("checksum line missing; file is truncated".into()))?;
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if expected != actual {
        return Err(corrupt("checksum mismatch".into()));
    }

    let mut fields = Fields { lines: body.lines() };
    if fields.lines.next() != Some(MAGIC) {
        return Err(corrupt("not a pressflow checkpoint".into()));
    }
    let version: u32 = fields.parse("schema_version").map_err(corrupt)?;
    if version != SCHEMA_VERSION {
        return Err(ModelError::SchemaVersion {
            found: version,
            supported: SCHEMA_VERSION,
        });
    }
    let found = fields.one("kind").map_err(corrupt)?;
    if found != kind {
        return Err(corrupt(format!("expected a {kind} checkpoint, found {found}")));
    }
    Ok(fields)
}

fn parse_network(f: &mut Fields) -> Parsed<ModelCheckpoint> {
    let layer_sizes = f.usizes("config.layer_sizes")?;
    let activation = f.parse("config.activation")?;
    let config = NetworkConfig {
        layer_sizes,
        activation,
        loss: f.parse("config.loss")?,
        epochs: f.parse("config.epochs")?,
        learning_rate: f.parse("config.learning_rate")?,
        optimizer: f.parse("config.optimizer")?,
        seed: f.parse("config.seed")?,
    };
    let mut layers = Vec::new();
    for i in 0..config.layer_sizes.len().saturating_sub(1) {
        let (dims, weights) = f.counted::<f64>(&format!("layer {i} weights"), 2)?;
        let bias = f.reals(&format!("layer {i} bias"))?;
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(format!("layer {i}: non-finite weight"));
        }
        layers.push(Layer {
            outputs: dims[0],
            inputs: dims[1],
            weights,
            bias,
        });
    }
    Ok(ModelCheckpoint {
        params: ModelParams { activation, layers },
        scaler: Scaler {
            input: f.standardizer("scaler.input")?,
            target: f.standardizer("scaler.target")?,
        },
        trace: TrainingTrace {
            losses: f.reals("trace")?,
        },
        dataset_fingerprint: f.fingerprint()?,
        config,
    })
}

pub fn network_from_text(text: &str, origin: &str) -> Result<ModelCheckpoint, ModelError> {
    let mut f = open(text, origin, "network")?;
    let corrupt = |reason: String| ModelError::CorruptCheckpoint {
        path: origin.to_string(),
        reason,
    };
    let ck = parse_network(&mut f).map_err(corrupt)?;
    f.finish().map_err(corrupt)?;
    ck.validate().map_err(|e| corrupt(e.to_string()))?;
    Ok(ck)
}

pub fn baseline_from_text(text: &str, origin: &str) -> Result<BaselineCheckpoint, ModelError> {
    let mut f = open(text, origin, "logistic-baseline")?;
    let parsed = (|| -> Parsed<BaselineCheckpoint> {
        let config = LogisticConfig {
            learning_rate: f.parse("config.learning_rate")?,
            epochs: f.parse("config.epochs")?,
        };
        let ck = BaselineCheckpoint {
            config,
            weight: f.parse("weight")?,
            bias: f.parse("bias")?,
            threshold: f.parse("threshold")?,
            trace: f.reals("trace")?,
            dataset_fingerprint: f.fingerprint()?,
        };
        if ![ck.weight, ck.bias, ck.threshold].iter().all(|v| v.is_finite()) {
            return Err("non-finite coefficient".into());
        }
        Ok(ck)
    })();
    let corrupt = |reason: String| ModelError::CorruptCheckpoint {
        path: origin.to_string(),
        reason,
    };
    let ck = parsed.map_err(corrupt)?;
    f.finish().map_err(corrupt)?;
    Ok(ck)
}

fn read(path: &Path) -> Result<String, ModelError> {
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    String::from_utf8(bytes).map_err(|_| ModelError::CorruptCheckpoint {
        path: path.display().to_string(),
        reason: "not valid UTF-8".into(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), ModelError> {
    std::fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_checkpoint(ck: &ModelCheckpoint, path: &Path) -> Result<(), ModelError> {
    ck.validate()?;
    write(path, &network_to_text(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint, ModelError> {
    network_from_text(&read(path)?, &path.display().to_string())
}

pub fn save_baseline(ck: &BaselineCheckpoint, path: &Path) -> Result<(), ModelError> {
    write(path, &baseline_to_text(ck))
}

pub fn load_baseline(path: &Path) -> Result<BaselineCheckpoint, ModelError> {
    baseline_from_text(&read(path)?, &path.display().to_string())
}
