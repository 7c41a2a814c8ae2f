//! State-to-state migration flow tables.
//!
//! One long-format CSV per year, named `flows_<year>.csv`, with header
//! `origin,destination,estimate,moe`. Rows for non-state geographies
//! (District of Columbia, Puerto Rico, abroad, ...) are dropped and counted;
//! suppressed cells (`N/A`, empty) are skipped.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::YearRange;
use crate::states::state_index;

pub const FLOW_HEADER: [&str; 4] = ["origin", "destination", "estimate", "moe"];

const NON_STATE_GEOGRAPHIES: &[&str] = &[
    "district of columbia",
    "washington, d.c.",
    "washington d.c.",
    "washington dc",
    "d.c.",
    "dc",
    "puerto rico",
    "abroad",
    "foreign country",
    "u.s. island area",
    "u.s. island areas",
    "guam",
    "u.s. virgin islands",
    "united states",
    "total",
];

const SUPPRESSED: &[&str] = &["", "n/a", "na", "(x)", "-", "*"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationFlow {
    pub origin: String,
    pub destination: String,
    pub year: i32,
    pub estimate: u64,
    pub moe: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowTable {
    pub year: i32,
    pub flows: Vec<MigrationFlow>,
    pub non_state_rows: usize,
    pub self_flow_rows: usize,
    pub suppressed_rows: usize,
}

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("cannot read flow table {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unknown column layout {header:?}, expected origin,destination,estimate,moe")]
    UnknownLayout { path: PathBuf, header: Vec<String> },
    #[error("{path}: row {row}: {message}")]
    BadRow {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{path}: row {row}: negative {field} {value}")]
    Negative {
        path: PathBuf,
        row: u64,
        field: &'static str,
        value: String,
    },
    #[error("{path}: row {row}: unknown geography {name:?}")]
    UnknownGeography {
        path: PathBuf,
        row: u64,
        name: String,
    },
    #[error("{path}: row {row}: duplicate flow {origin} -> {destination}")]
    Duplicate {
        path: PathBuf,
        row: u64,
        origin: String,
        destination: String,
    },
    #[error("year {year} is outside the study range {range}")]
    YearOutOfRange { year: i32, range: YearRange },
    #[error("no flow table for {year} (expected {path})")]
    MissingYear { year: i32, path: PathBuf },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

enum Place {
    State(&'static str),
    NonState,
}

fn classify(name: &str) -> Option<Place> {
    let trimmed = name.trim();
    if let Some(i) = state_index(trimmed) {
        return Some(Place::State(crate::states::CANONICAL_STATES[i]));
    }
    let lower = trimmed.to_lowercase();
    NON_STATE_GEOGRAPHIES
        .contains(&lower.as_str())
        .then_some(Place::NonState)
}

enum Cell {
    Value(u64),
    Suppressed,
}

fn parse_count(raw: &str, field: &'static str, path: &Path, row: u64) -> Result<Cell, CensusError> {
    let t = raw.trim();
    if SUPPRESSED.contains(&t.to_lowercase().as_str()) {
        return Ok(Cell::Suppressed);
    }
    let cleaned = t.replace(',', "");
    if let Ok(v) = cleaned.parse::<u64>() {
        return Ok(Cell::Value(v));
    }
    match cleaned.parse::<i64>() {
        Ok(v) if v < 0 => Err(CensusError::Negative {
            path: path.to_path_buf(),
            row,
            field,
            value: t.to_string(),
        }),
        _ => Err(CensusError::BadRow {
            path: path.to_path_buf(),
            row,
            message: format!("{field} {t:?} is not a non-negative integer"),
        }),
    }
}

/// Parses one year's flow table.
pub fn parse_flow_table(path: &Path, year: i32) -> Result<FlowTable, CensusError> {
    let file = std::fs::File::open(path).map_err(|source| CensusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.iter().map(String::as_str).ne(FLOW_HEADER.iter().copied()) {
        return Err(CensusError::UnknownLayout {
            path: path.to_path_buf(),
            header,
        });
    }

    let mut table = FlowTable {
        year,
        ..FlowTable::default()
    };
    let mut seen: HashSet<(&'static str, &'static str)> = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != FLOW_HEADER.len() {
            return Err(CensusError::BadRow {
                path: path.to_path_buf(),
                row,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let place = |name: &str| {
            classify(name).ok_or_else(|| CensusError::UnknownGeography {
                path: path.to_path_buf(),
                row,
                name: name.to_string(),
            })
        };
        let (origin, destination) = match (place(&record[0])?, place(&record[1])?) {
            (Place::State(o), Place::State(d)) => (o, d),
            _ => {
                table.non_state_rows += 1;
                continue;
            }
        };
        let estimate = parse_count(&record[2], "estimate", path, row)?;
        let moe = parse_count(&record[3], "moe", path, row)?;
        if origin == destination {
            table.self_flow_rows += 1;
            continue;
        }
        let (Cell::Value(estimate), Cell::Value(moe)) = (estimate, moe) else {
            table.suppressed_rows += 1;
            continue;
        };
        if !seen.insert((origin, destination)) {
            return Err(CensusError::Duplicate {
                path: path.to_path_buf(),
                row,
                origin: origin.to_string(),
                destination: destination.to_string(),
            });
        }
        table.flows.push(MigrationFlow {
            origin: origin.to_string(),
            destination: destination.to_string(),
            year,
            estimate,
            moe,
        });
    }
    Ok(table)
}

pub fn flow_table_path(dir: &Path, year: i32) -> PathBuf {
    dir.join(format!("flows_{year}.csv"))
}

/// Parses `flows_<year>.csv` for every year in `years`.
pub fn ingest_dir(dir: &Path, years: YearRange) -> Result<Vec<FlowTable>, CensusError> {
    years
        .years()
        .map(|year| {
            let path = flow_table_path(dir, year);
            if !path.exists() {
                return Err(CensusError::MissingYear { year, path });
            }
            parse_flow_table(&path, year)
        })
        .collect()
}

/// Checks a year against the study range before parsing.
pub fn parse_flow_table_in_range(
    path: &Path,
    year: i32,
    range: YearRange,
) -> Result<FlowTable, CensusError> {
    if !range.contains(year) {
        return Err(CensusError::YearOutOfRange { year, range });
    }
    parse_flow_table(path, year)
}

pub fn write_flow_table<W: std::io::Write>(
    out: W,
    flows: &[MigrationFlow],
) -> Result<(), CensusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FLOW_HEADER)?;
    for f in flows {
        w.write_record([
            f.origin.as_str(),
            f.destination.as_str(),
            &f.estimate.to_string(),
            &f.moe.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CensusError::Csv(e.into()))?;
    Ok(())
}
