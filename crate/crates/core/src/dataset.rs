//! State-year sentiment grid and the two model-ready datasets.
//!
//! * Pairwise: one row per migration flow, input = destination mean compound
//!   minus origin mean compound, target = flow estimate.
//! * Vector: one row per year, input = 50 state sentiments, target = 50
//!   per-state inbound (or net) migration totals, both in canonical state
//!   order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::census::MigrationFlow;
use crate::corpus::YearRange;
use crate::sentiment::CompoundScore;
use crate::states::{state_index, CANONICAL_STATES, STATE_COUNT};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("article {0:?} is tagged but has no sentiment score")]
    MissingScore(String),
    #[error("sentiment grid has no cell for {state} in {year}")]
    MissingCell { state: String, year: i32 },
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("{path}: unrecognised dataset header {header:?}")]
    UnknownLayout { path: PathBuf, header: Vec<String> },
    #[error("{path}: line {line}: {message}")]
    BadRow {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pairwise,
    Vector,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Pairwise => "pairwise",
            Mode::Vector => "vector",
        })
    }
}

/// What the vector dataset predicts per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    #[default]
    Inbound,
    /// inbound − outbound
    Net,
}

/// One scored article, as written by `pressflow score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub article_id: String,
    pub compound: f64,
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
    pub year: i32,
}

impl ScoreRecord {
    pub fn new(article_id: String, year: i32, score: CompoundScore) -> Self {
        ScoreRecord {
            article_id,
            compound: score.compound,
            pos: score.pos,
            neg: score.neg,
            neu: score.neu,
            year,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRecord {
    pub article_id: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateYearSentiment {
    pub state: String,
    pub year: i32,
    pub mean_compound: f64,
    pub article_count: u64,
    /// No articles for this cell; `mean_compound` is the placeholder 0.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub origin: String,
    pub destination: String,
    pub year: i32,
    pub sentiment_delta: f64,
    pub flow: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorRow {
    pub year: i32,
    pub sentiment: Vec<f64>,
    pub target: Vec<f64>,
    /// Some grid cells were missing and filled with 0.
    pub flagged: bool,
}

/// Mean compound per (state, year) over the full grid.
///
/// `scores` maps article id → (year, compound); `tags` maps article id → the
/// states it mentions. Articles tagged with several states count once for
/// each. Articles outside `years` are ignored.
pub fn aggregate_state_year(
    scores: &HashMap<String, (i32, f64)>,
    tags: &BTreeMap<String, BTreeSet<String>>,
    years: YearRange,
) -> Result<Vec<StateYearSentiment>, DatasetError> {
    let n_years = years.len();
    let mut sums = vec![0.0f64; STATE_COUNT * n_years];
    let mut counts = vec![0u64; STATE_COUNT * n_years];
    let mut lo = vec![f64::INFINITY; STATE_COUNT * n_years];
    let mut hi = vec![f64::NEG_INFINITY; STATE_COUNT * n_years];
    for (id, states) in tags {
        let &(year, compound) = scores
            .get(id)
            .ok_or_else(|| DatasetError::MissingScore(id.clone()))?;
        if !years.contains(year) {
            continue;
        }
        let y = (year - years.start()) as usize;
        for state in states {
            let s = state_index(state).ok_or_else(|| DatasetError::UnknownState(state.clone()))?;
            let k = s * n_years + y;
            sums[k] += compound;
            counts[k] += 1;
            lo[k] = lo[k].min(compound);
            hi[k] = hi[k].max(compound);
        }
    }
    let mut out = Vec::with_capacity(STATE_COUNT * n_years);
    for (s, state) in CANONICAL_STATES.iter().enumerate() {
        for (y, year) in years.years().enumerate() {
            let k = s * n_years + y;
            let n = counts[k];
            // rounding in the sum can push the mean an ulp past the extremes
            let mean = if n == 0 {
                0.0
            } else {
                (sums[k] / n as f64).clamp(lo[k], hi[k])
            };
            out.push(StateYearSentiment {
                state: state.to_string(),
                year,
                mean_compound: mean,
                article_count: n,
                flagged: n == 0,
            });
        }
    }
    Ok(out)
}

fn grid_lookup(sentiments: &[StateYearSentiment]) -> HashMap<(&str, i32), f64> {
    sentiments
        .iter()
        .map(|s| ((s.state.as_str(), s.year), s.mean_compound))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairwiseDataset {
    pub rows: Vec<PairwiseRow>,
    /// Flows with no sentiment cell for one of their endpoints.
    pub dropped_flows: usize,
}

/// Joins flows with the sentiment grid; `sentiment_delta` is destination
/// minus origin.
pub fn build_pairwise_dataset(
    sentiments: &[StateYearSentiment],
    flows: &[MigrationFlow],
) -> PairwiseDataset {
    let grid = grid_lookup(sentiments);
    let mut ds = PairwiseDataset::default();
    for f in flows {
        let o = grid.get(&(f.origin.as_str(), f.year));
        let d = grid.get(&(f.destination.as_str(), f.year));
        match (o, d) {
            (Some(o), Some(d)) => ds.rows.push(PairwiseRow {
                origin: f.origin.clone(),
                destination: f.destination.clone(),
                year: f.year,
                sentiment_delta: d - o,
                flow: f.estimate,
            }),
            _ => ds.dropped_flows += 1,
        }
    }
    ds
}

/// One row per year present in the sentiment grid.
pub fn build_vector_dataset(
    sentiments: &[StateYearSentiment],
    flows: &[MigrationFlow],
    target: TargetKind,
    allow_missing: bool,
) -> Result<Vec<VectorRow>, DatasetError> {
    let years: BTreeSet<i32> = sentiments.iter().map(|s| s.year).collect();
    let grid = grid_lookup(sentiments);
    let mut rows = Vec::with_capacity(years.len());
    for &year in &years {
        let mut flagged = false;
        let mut sentiment = vec![0.0; STATE_COUNT];
        for (i, state) in CANONICAL_STATES.iter().enumerate() {
            match grid.get(&(*state, year)) {
                Some(v) => sentiment[i] = *v,
                None if allow_missing => {
                    log::warn!("no sentiment for {state} in {year}; filling 0");
                    flagged = true;
                }
                None => {
                    return Err(DatasetError::MissingCell {
                        state: state.to_string(),
                        year,
                    })
                }
            }
        }
        let mut inbound = vec![0.0; STATE_COUNT];
        let mut outbound = vec![0.0; STATE_COUNT];
        for f in flows.iter().filter(|f| f.year == year) {
            let o = state_index(&f.origin).ok_or_else(|| DatasetError::UnknownState(f.origin.clone()))?;
            let d = state_index(&f.destination)
                .ok_or_else(|| DatasetError::UnknownState(f.destination.clone()))?;
            if o == d {
                continue;
            }
            inbound[d] += f.estimate as f64;
            outbound[o] += f.estimate as f64;
        }
        let target = match target {
            TargetKind::Inbound => inbound,
            TargetKind::Net => inbound.iter().zip(&outbound).map(|(i, o)| i - o).collect(),
        };
        rows.push(VectorRow {
            year,
            sentiment,
            target,
            flagged,
        });
    }
    Ok(rows)
}

/// A model-ready dataset in either framing.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Pairwise(Vec<PairwiseRow>),
    Vector(Vec<VectorRow>),
}

/// One training example: model input and target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

impl Dataset {
    pub fn mode(&self) -> Mode {
        match self {
            Dataset::Pairwise(_) => Mode::Pairwise,
            Dataset::Vector(_) => Mode::Vector,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Pairwise(r) => r.len(),
            Dataset::Vector(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_width(&self) -> usize {
        match self {
            Dataset::Pairwise(_) => 1,
            Dataset::Vector(_) => STATE_COUNT,
        }
    }

    pub fn samples(&self) -> Vec<Sample> {
        match self {
            Dataset::Pairwise(rows) => rows
                .iter()
                .map(|r| Sample {
                    input: vec![r.sentiment_delta],
                    target: vec![r.flow as f64],
                })
                .collect(),
            Dataset::Vector(rows) => rows
                .iter()
                .map(|r| Sample {
                    input: r.sentiment.clone(),
                    target: r.target.clone(),
                })
                .collect(),
        }
    }

    /// Years of each row, in row order.
    pub fn row_years(&self) -> Vec<i32> {
        match self {
            Dataset::Pairwise(rows) => rows.iter().map(|r| r.year).collect(),
            Dataset::Vector(rows) => rows.iter().map(|r| r.year).collect(),
        }
    }

    /// Labels for each output unit of row `i`: `origin->destination/year`
    /// for pairwise rows, `state/year` for each vector slot.
    pub fn unit_labels(&self, i: usize) -> Vec<String> {
        match self {
            Dataset::Pairwise(rows) => {
                let r = &rows[i];
                vec![format!("{}->{}/{}", r.origin, r.destination, r.year)]
            }
            Dataset::Vector(rows) => CANONICAL_STATES
                .iter()
                .map(|s| format!("{s}/{}", rows[i].year))
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(out);
        match self {
            Dataset::Pairwise(rows) => {
                w.write_record(PAIRWISE_HEADER)?;
                for r in rows {
                    w.write_record([
                        r.origin.clone(),
                        r.destination.clone(),
                        r.year.to_string(),
                        r.sentiment_delta.to_string(),
                        r.flow.to_string(),
                    ])?;
                }
            }
            Dataset::Vector(rows) => {
                w.write_record(vector_header())?;
                for r in rows {
                    let mut rec = Vec::with_capacity(1 + 2 * STATE_COUNT);
                    rec.push(r.year.to_string());
                    rec.extend(r.sentiment.iter().map(f64::to_string));
                    rec.extend(r.target.iter().map(f64::to_string));
                    w.write_record(rec)?;
                }
            }
        }
        w.flush().map_err(|e| DatasetError::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    /// Hex SHA-256 of the dataset's CSV export; equals the hash of the file
    /// written by [`Dataset::save`].
    pub fn fingerprint(&self) -> String {
        fingerprint_bytes(&self.to_csv_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        std::fs::write(path, self.to_csv_bytes()).map_err(io_err(path))
    }

    /// Reads either framing, chosen by the header.
    pub fn load(path: &Path) -> Result<Dataset, DatasetError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(io_err(path))?;
        Dataset::from_csv(&bytes, path)
    }

    fn from_csv(bytes: &[u8], path: &Path) -> Result<Dataset, DatasetError> {
        let mut r = csv::Reader::from_reader(bytes);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let bad = |line: u64, message: String| DatasetError::BadRow {
            path: path.to_path_buf(),
            line,
            message,
        };
        if header.iter().map(String::as_str).eq(PAIRWISE_HEADER.iter().copied()) {
            let mut rows = Vec::new();
            for rec in r.deserialize::<PairwiseRow>() {
                rows.push(rec?);
            }
            return Ok(Dataset::Pairwise(rows));
        }
        if header == vector_header() {
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec?;
                let line = rec.position().map_or(0, |p| p.line());
                let parse = |s: &str| -> Result<f64, DatasetError> {
                    s.parse().map_err(|_| bad(line, format!("bad number {s:?}")))
                };
                let year = rec[0].parse().map_err(|_| bad(line, format!("bad year {:?}", &rec[0])))?;
                let sentiment = (1..=STATE_COUNT).map(|i| parse(&rec[i])).collect::<Result<_, _>>()?;
                let target = (STATE_COUNT + 1..=2 * STATE_COUNT)
                    .map(|i| parse(&rec[i]))
                    .collect::<Result<_, _>>()?;
                rows.push(VectorRow {
                    year,
                    sentiment,
                    target,
                    flagged: false,
                });
            }
            return Ok(Dataset::Vector(rows));
        }
        Err(DatasetError::UnknownLayout {
            path: path.to_path_buf(),
            header,
        })
    }
}

pub const PAIRWISE_HEADER: [&str; 5] = ["origin", "destination", "year", "sentiment_delta", "flow"];
pub const SENTIMENT_HEADER: [&str; 5] = ["state", "year", "mean_compound", "article_count", "flagged"];

pub fn vector_header() -> Vec<String> {
    let mut h = vec!["year".to_string()];
    h.extend(CANONICAL_STATES.iter().map(|s| format!("sentiment:{s}")));
    h.extend(CANONICAL_STATES.iter().map(|s| format!("target:{s}")));
    h
}

pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_serialized<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), DatasetError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

fn read_serialized<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    r.deserialize().map(|rec| rec.map_err(DatasetError::from)).collect()
}

pub fn write_sentiment_grid(path: &Path, grid: &[StateYearSentiment]) -> Result<(), DatasetError> {
    write_serialized(path, grid)
}

pub fn read_sentiment_grid(path: &Path) -> Result<Vec<StateYearSentiment>, DatasetError> {
    read_serialized(path)
}

pub fn write_scores(path: &Path, scores: &[ScoreRecord]) -> Result<(), DatasetError> {
    write_serialized(path, scores)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>, DatasetError> {
    read_serialized(path)
}

pub fn write_tags(path: &Path, tags: &[TagRecord]) -> Result<(), DatasetError> {
    write_serialized(path, tags)
}

pub fn read_tags(path: &Path) -> Result<Vec<TagRecord>, DatasetError> {
    read_serialized(path)
}

/// Groups tag rows by article.
pub fn group_tags(tags: &[TagRecord]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in tags {
        out.entry(t.article_id.clone()).or_default().insert(t.state.clone());
    }
    out
}

pub fn score_lookup(scores: &[ScoreRecord]) -> HashMap<String, (i32, f64)> {
    scores
        .iter()
        .map(|s| (s.article_id.clone(), (s.year, s.compound)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flow(o: &str, d: &str, year: i32, estimate: u64) -> MigrationFlow {
        MigrationFlow {
            origin: o.into(),
            destination: d.into(),
            year,
            estimate,
            moe: 0,
        }
    }

    fn cell(state: &str, year: i32, mean: f64) -> StateYearSentiment {
        StateYearSentiment {
            state: state.into(),
            year,
            mean_compound: mean,
            article_count: 1,
            flagged: false,
        }
    }

    fn tags_of(pairs: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        pairs
            .iter()
            .map(|(id, states)| (id.to_string(), states.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn full_grid_and_symmetric_mean() {
        let scores: HashMap<String, (i32, f64)> =
            [("a".into(), (2015, 0.2)), ("b".into(), (2015, -0.2))].into();
        let tags = tags_of(&[("a", &["Ohio"]), ("b", &["Ohio"])]);
        let grid = aggregate_state_year(&scores, &tags, YearRange::default()).unwrap();
        assert_eq!(grid.len(), 500);
        let ohio = grid.iter().find(|c| c.state == "Ohio" && c.year == 2015).unwrap();
        assert_eq!(ohio.mean_compound, 0.0);
        assert_eq!(ohio.article_count, 2);
        assert!(!ohio.flagged);
        let empty = grid.iter().find(|c| c.state == "Iowa").unwrap();
        assert!(empty.flagged && empty.mean_compound == 0.0);
    }

    #[test]
    fn tagged_article_without_score_is_an_error() {
        let tags = tags_of(&[("zz", &["Ohio"])]);
        assert!(matches!(
            aggregate_state_year(&HashMap::new(), &tags, YearRange::default()),
            Err(DatasetError::MissingScore(_))
        ));
    }

    #[test]
    fn pairwise_delta_is_destination_minus_origin() {
        let grid = vec![cell("Alabama", 2015, 0.2), cell("Alaska", 2015, -0.1)];
        let ds = build_pairwise_dataset(
            &grid,
            &[flow("Alabama", "Alaska", 2015, 500), flow("Alabama", "Ohio", 2015, 3)],
        );
        assert_eq!(ds.rows.len(), 1);
        let r = &ds.rows[0];
        assert_eq!((r.origin.as_str(), r.destination.as_str(), r.year, r.flow), ("Alabama", "Alaska", 2015, 500));
        assert!((r.sentiment_delta - (-0.3)).abs() < 1e-15);
        assert_eq!(ds.dropped_flows, 1);

        let same = vec![cell("Ohio", 2011, 0.4), cell("Iowa", 2011, 0.4)];
        let ds = build_pairwise_dataset(&same, &[flow("Ohio", "Iowa", 2011, 1)]);
        assert_eq!(ds.rows[0].sentiment_delta, 0.0);
    }

    fn full_grid(year: i32) -> Vec<StateYearSentiment> {
        CANONICAL_STATES
            .iter()
            .enumerate()
            .map(|(i, s)| cell(s, year, i as f64 / 100.0))
            .collect()
    }

    #[test]
    fn vector_rows_and_zero_flows() {
        let rows = build_vector_dataset(&full_grid(2012), &[], TargetKind::Inbound, false).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].sentiment.len(), 50);
        assert!(rows[0].target.iter().all(|t| *t == 0.0));
        assert_eq!(rows[0].sentiment[49], 0.49);
    }

    #[test]
    fn net_target() {
        let flows = [flow("Ohio", "Iowa", 2012, 10), flow("Iowa", "Ohio", 2012, 4)];
        let rows = build_vector_dataset(&full_grid(2012), &flows, TargetKind::Net, false).unwrap();
        let ohio = state_index("Ohio").unwrap();
        let iowa = state_index("Iowa").unwrap();
        assert_eq!(rows[0].target[ohio], -6.0);
        assert_eq!(rows[0].target[iowa], 6.0);
    }

    #[test]
    fn missing_cell_policy() {
        let mut grid = full_grid(2012);
        grid.retain(|c| c.state != "Utah");
        assert!(matches!(
            build_vector_dataset(&grid, &[], TargetKind::Inbound, false),
            Err(DatasetError::MissingCell { .. })
        ));
        let rows = build_vector_dataset(&grid, &[], TargetKind::Inbound, true).unwrap();
        assert!(rows[0].flagged);
    }

    #[test]
    fn csv_round_trip_and_fingerprint() {
        let flows = [flow("Ohio", "Iowa", 2012, 10), flow("Utah", "Ohio", 2012, 4)];
        let grid = full_grid(2012);
        let vector = Dataset::Vector(build_vector_dataset(&grid, &flows, TargetKind::Inbound, false).unwrap());
        let pairwise = Dataset::Pairwise(build_pairwise_dataset(&grid, &flows).rows);
        let dir = tempfile::tempdir().unwrap();
        for ds in [vector, pairwise] {
            let p = dir.path().join(format!("{}.csv", ds.mode()));
            ds.save(&p).unwrap();
            let back = Dataset::load(&p).unwrap();
            assert_eq!(back, ds);
            assert_eq!(fingerprint_bytes(&std::fs::read(&p).unwrap()), ds.fingerprint());
        }
    }

    #[test]
    fn unknown_dataset_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(Dataset::load(&p), Err(DatasetError::UnknownLayout { .. })));
    }
}
