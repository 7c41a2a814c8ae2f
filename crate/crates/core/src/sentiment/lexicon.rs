use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

const BUNDLED: &str = include_str!("../../data/vader_lexicon.tsv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon line {line}: expected `token<TAB>valence`")]
    MissingField { line: usize },
    #[error("lexicon line {line}: unparseable valence {value:?}")]
    BadValence { line: usize, value: String },
    #[error("lexicon line {line}: token {token:?} must be non-empty, lowercase and contain no whitespace")]
    BadToken { line: usize, token: String },
    #[error("lexicon line {line}: duplicate token {token:?}")]
    Duplicate { line: usize, token: String },
}

/// Token → valence table. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
}

impl Lexicon {
    /// The valence table shipped with the crate (MIT-licensed VADER lexicon,
    /// reduced to tokens that can ever be looked up).
    pub fn bundled() -> Lexicon {
        Lexicon::parse(BUNDLED).expect("bundled lexicon is well-formed")
    }

    pub fn load(path: &Path) -> Result<Lexicon, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lex = Lexicon::parse(&text)?;
        log::info!("loaded {} lexicon entries from {}", lex.len(), path.display());
        Ok(lex)
    }

    /// Parses the tab-separated format `token valence [stddev ratings]`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Lexicon, LexiconError> {
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let token = fields.next().unwrap_or_default();
            let value = fields
                .next()
                .ok_or(LexiconError::MissingField { line: line_no })?;
            if token.is_empty()
                || token.chars().any(char::is_whitespace)
                || token.to_lowercase() != token
            {
                return Err(LexiconError::BadToken {
                    line: line_no,
                    token: token.to_string(),
                });
            }
            let valence: f64 = value
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| LexiconError::BadValence {
                    line: line_no,
                    value: value.to_string(),
                })?;
            if entries.insert(token.to_string(), valence).is_some() {
                return Err(LexiconError::Duplicate {
                    line: line_no,
                    token: token.to_string(),
                });
            }
        }
        if entries.is_empty() {
            log::warn!("lexicon is empty; every text will score 0");
        }
        Ok(Lexicon { entries })
    }

    pub fn from_entries<I, S>(entries: I) -> Lexicon
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Lexicon {
            entries: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_first_two_fields() {
        let lex = Lexicon::parse("good\t1.9\t0.9\t[2, 2]\nbad\t-2.5\t0.5\t[-2]\n").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.get("good"), Some(1.9));
        assert_eq!(lex.get("bad"), Some(-2.5));
    }

    #[test]
    fn bundled_values_match_published_file() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.get("good"), Some(1.9));
        assert_eq!(lex.get("bad"), Some(-2.5));
        assert_eq!(lex.get("great"), Some(3.1));
        assert!(lex.len() > 7000);
    }

    #[test]
    fn empty_and_comment_only() {
        assert!(Lexicon::parse("").unwrap().is_empty());
        assert!(Lexicon::parse("# header\n\n").unwrap().is_empty());
    }

    #[test]
    fn bad_valence_cites_line() {
        let err = Lexicon::parse("good\tone.nine").unwrap_err();
        assert!(matches!(err, LexiconError::BadValence { line: 1, .. }));
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn duplicate_and_bad_tokens_abort() {
        assert!(matches!(
            Lexicon::parse("ok\t1.0\nok\t1.2\n"),
            Err(LexiconError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            Lexicon::parse(":D\t2.3\n"),
            Err(LexiconError::BadToken { line: 1, .. })
        ));
        assert!(matches!(
            Lexicon::parse("good\n"),
            Err(LexiconError::MissingField { line: 1 })
        ));
    }

    #[test]
    fn loading_twice_is_identical() {
        assert_eq!(Lexicon::bundled(), Lexicon::bundled());
    }
}
