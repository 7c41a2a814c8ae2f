//! Streaming ingestion of newline-delimited article records.
//!
//! Each non-blank line of a corpus file is one JSON object with the keys
//! `id`, `pub_date` and at least one of `headline`, `abstract`, `keywords`.
//! Unknown keys are ignored. Records are parsed one at a time, so memory use
//! does not grow with corpus size apart from the set of ids seen so far
//! (needed for duplicate detection).

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Article {
    pub id: String,
    pub date: NaiveDate,
    pub headline: String,
    pub abstract_text: String,
    pub keywords: Vec<String>,
}

impl Article {
    pub fn year(&self) -> i32 {
        self.date.year()
    }

    /// Text handed to the scorer and the tagger: headline, abstract and the
    /// comma-joined keywords, one field per line. Empty fields are omitted.
    pub fn text(&self) -> String {
        let keywords = self.keywords.join(", ");
        [self.headline.as_str(), self.abstract_text.as_str(), keywords.as_str()]
            .iter()
            .filter(|s| !s.trim().is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Why a record did not make it into the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    Malformed,
    MissingId,
    MissingDate,
    InvalidDate,
    MissingText,
    OutOfRange,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::Malformed => "malformed",
            SkipReason::MissingId => "missing id",
            SkipReason::MissingDate => "missing date",
            SkipReason::InvalidDate => "invalid date",
            SkipReason::MissingText => "missing text",
            SkipReason::OutOfRange => "out of range",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawKeywords {
    List(Vec<String>),
    One(String),
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    pub_date: Option<String>,
    headline: Option<String>,
    #[serde(rename = "abstract")]
    abstract_text: Option<String>,
    keywords: Option<RawKeywords>,
}

fn parse_date(raw: &str) -> Result<NaiveDate, SkipReason> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(SkipReason::MissingDate);
    }
    // ISO-8601 datetimes: only the date part is used.
    let date_part = raw.split(['T', ' ']).next().unwrap_or(raw);
    NaiveDate::parse_from_str(date_part, "%Y-%m-%d").map_err(|_| SkipReason::InvalidDate)
}

/// Parses one corpus line into a validated [`Article`].
pub fn parse_article_record(raw_record: &str) -> Result<Article, SkipReason> {
    let raw: RawRecord = serde_json::from_str(raw_record).map_err(|_| SkipReason::Malformed)?;
    let id = match raw.id {
        Some(id) if !id.trim().is_empty() => id,
        _ => return Err(SkipReason::MissingId),
    };
    let date = parse_date(raw.pub_date.as_deref().ok_or(SkipReason::MissingDate)?)?;
    let keywords = match raw.keywords {
        Some(RawKeywords::List(list)) => list,
        Some(RawKeywords::One(one)) => vec![one],
        None => Vec::new(),
    };
    let keywords: Vec<String> = keywords.into_iter().filter(|k| !k.trim().is_empty()).collect();
    let headline = raw.headline.unwrap_or_default();
    let abstract_text = raw.abstract_text.unwrap_or_default();
    if headline.trim().is_empty() && abstract_text.trim().is_empty() && keywords.is_empty() {
        return Err(SkipReason::MissingText);
    }
    Ok(Article {
        id,
        date,
        headline,
        abstract_text,
        keywords,
    })
}

/// Inclusive range of calendar years, written `start:end` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearRange {
    start: i32,
    end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Result<Self, String> {
        if start > end {
            return Err(format!("year range {start}:{end} is empty"));
        }
        Ok(YearRange { start, end })
    }

    pub fn start(&self) -> i32 {
        self.start
    }

    pub fn end(&self) -> i32 {
        self.end
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for YearRange {
    fn default() -> Self {
        YearRange {
            start: 2010,
            end: 2019,
        }
    }
}

impl FromStr for YearRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected START:END, got {s:?}"))?;
        let start = a.trim().parse().map_err(|_| format!("bad start year in {s:?}"))?;
        let end = b.trim().parse().map_err(|_| format!("bad end year in {s:?}"))?;
        YearRange::new(start, end)
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl TryFrom<String> for YearRange {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<YearRange> for String {
    fn from(r: YearRange) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub records_read: u64,
    pub records_kept: u64,
    pub records_skipped: u64,
    pub duplicate_ids: u64,
    pub year_histogram: BTreeMap<i32, u64>,
    pub skip_reasons: BTreeMap<SkipReason, u64>,
}

impl CorpusStats {
    /// Associative merge for stats gathered from separate shards.
    pub fn merge(&mut self, other: &CorpusStats) {
        self.records_read += other.records_read;
        self.records_kept += other.records_kept;
        self.records_skipped += other.records_skipped;
        self.duplicate_ids += other.duplicate_ids;
        for (y, n) in &other.year_histogram {
            *self.year_histogram.entry(*y).or_default() += n;
        }
        for (r, n) in &other.skip_reasons {
            *self.skip_reasons.entry(*r).or_default() += n;
        }
    }

    pub fn reconciles(&self) -> bool {
        self.records_read == self.records_kept + self.records_skipped + self.duplicate_ids
    }

    /// Flat `key=value` lines for the diagnostic stream.
    pub fn report(&self) -> String {
        let mut out = format!(
            "records_read={}\nrecords_kept={}\nrecords_skipped={}\nduplicate_ids={}\n",
            self.records_read, self.records_kept, self.records_skipped, self.duplicate_ids
        );
        for (reason, n) in &self.skip_reasons {
            out.push_str(&format!("skipped.{}={}\n", reason.as_str().replace(' ', "_"), n));
        }
        for (year, n) in &self.year_histogram {
            out.push_str(&format!("year.{year}={n}\n"));
        }
        out
    }

    fn skip(&mut self, reason: SkipReason) {
        self.records_skipped += 1;
        *self.skip_reasons.entry(reason).or_default() += 1;
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason} record (strict mode)")]
    Strict {
        path: PathBuf,
        line: usize,
        reason: SkipReason,
    },
}

struct OpenFile {
    path: PathBuf,
    reader: BufReader<File>,
    line_no: usize,
}

/// Lazy article stream over a list of corpus files.
///
/// Yields `Err` once (and then stops) when a file cannot be read or, in strict
/// mode, on the first record that fails to parse.
pub struct CorpusStream {
    pending: VecDeque<PathBuf>,
    current: Option<OpenFile>,
    years: YearRange,
    strict: bool,
    seen: HashSet<String>,
    stats: CorpusStats,
    done: bool,
    buf: Vec<u8>,
}

pub fn stream_corpus<P: AsRef<Path>>(paths: &[P], years: YearRange, strict: bool) -> CorpusStream {
    CorpusStream {
        pending: paths.iter().map(|p| p.as_ref().to_path_buf()).collect(),
        current: None,
        years,
        strict,
        seen: HashSet::new(),
        stats: CorpusStats::default(),
        done: false,
        buf: Vec::new(),
    }
}

impl CorpusStream {
    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn into_stats(self) -> CorpusStats {
        self.stats
    }

    fn fail(&mut self, err: CorpusError) -> Option<Result<Article, CorpusError>> {
        self.done = true;
        Some(Err(err))
    }
}

impl Iterator for CorpusStream {
    type Item = Result<Article, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            if self.current.is_none() {
                let Some(path) = self.pending.pop_front() else {
                    self.done = true;
                    if self.stats.records_kept == 0 {
                        log::warn!("corpus stream produced no articles");
                    }
                    return None;
                };
                match File::open(&path) {
                    Ok(f) => {
                        self.current = Some(OpenFile {
                            path,
                            reader: BufReader::new(f),
                            line_no: 0,
                        })
                    }
                    Err(source) => return self.fail(CorpusError::Io { path, source }),
                }
            }
            let file = self.current.as_mut().expect("file opened above");
            self.buf.clear();
            match file.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.current = None;
                    continue;
                }
                Ok(_) => file.line_no += 1,
                Err(source) => {
                    let path = file.path.clone();
                    return self.fail(CorpusError::Io { path, source });
                }
            }
            let parsed = match std::str::from_utf8(&self.buf) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => parse_article_record(line),
                Err(_) => Err(SkipReason::Malformed),
            };
            self.stats.records_read += 1;
            let article = match parsed {
                Ok(a) => a,
                Err(reason) => {
                    if self.strict {
                        let err = CorpusError::Strict {
                            path: file.path.clone(),
                            line: file.line_no,
                            reason,
                        };
                        self.stats.skip(reason);
                        return self.fail(err);
                    }
                    self.stats.skip(reason);
                    continue;
                }
            };
            if !self.seen.insert(article.id.clone()) {
                self.stats.duplicate_ids += 1;
                continue;
            }
            if !self.years.contains(article.year()) {
                self.stats.skip(SkipReason::OutOfRange);
                continue;
            }
            self.stats.records_kept += 1;
            *self.stats.year_histogram.entry(article.year()).or_default() += 1;
            return Some(Ok(article));
        }
    }
}
