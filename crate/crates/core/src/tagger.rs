//! Rule-based detection of U.S. state mentions.
//!
//! A state is tagged when its name or one of its aliases occurs as a
//! case-insensitive whole-word match, unless one of the state's exclusion
//! patterns also occurs anywhere in the text ("Washington, D.C." vetoes
//! Washington). Overlapping matches resolve to the longest, so
//! "West Virginia" does not also tag Virginia.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::states::CANONICAL_STATES;

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("cannot read gazetteer {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("gazetteer {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("gazetteer must list exactly 50 states, found {0}")]
    StateCount(usize),
    #[error("gazetteer state {0:?} is not one of the 50 U.S. states")]
    UnknownState(String),
    #[error("alias {alias:?} points to {target:?}, which is not a listed state")]
    DanglingAlias { alias: String, target: String },
    #[error("exclusions listed for {0:?}, which is not a listed state")]
    DanglingExclusion(String),
}

/// Override file schema (TOML).
///
/// ```toml
/// # optional; when present must be exactly the 50 states
/// states = ["Alabama", "Alaska", ...]
/// # merge with the built-in aliases/exclusions (default true)
/// extend_defaults = true
///
/// [aliases]
/// "N.Y." = "New York"
///
/// [exclusions]
/// Washington = ["Washington, D.C.", "Washington Post"]
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GazetteerFile {
    states: Option<Vec<String>>,
    #[serde(default = "default_true")]
    extend_defaults: bool,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
    #[serde(default)]
    exclusions: BTreeMap<String, Vec<String>>,
}

fn default_true() -> bool {
    true
}

const DEFAULT_ALIASES: &[(&str, &str)] = &[("Washington State", "Washington")];

const DEFAULT_EXCLUSIONS: &[(&str, &[&str])] = &[
    (
        "Washington",
        &[
            "Washington, D.C.",
            "Washington D.C.",
            "Washington, DC",
            "Washington DC",
            "the Washington administration",
        ],
    ),
    ("Georgia", &["Tbilisi", "Republic of Georgia"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Gazetteer {
    states: Vec<String>,
    /// lowercased surface form → canonical state
    aliases: BTreeMap<String, String>,
    /// canonical state → lowercased veto patterns
    exclusions: BTreeMap<String, Vec<String>>,
}

impl Default for Gazetteer {
    fn default() -> Self {
        Gazetteer::builtin()
    }
}

impl Gazetteer {
    pub fn builtin() -> Gazetteer {
        let states: Vec<String> = CANONICAL_STATES.iter().map(|s| s.to_string()).collect();
        let mut g = Gazetteer {
            states,
            aliases: BTreeMap::new(),
            exclusions: BTreeMap::new(),
        };
        g.add_defaults();
        g
    }

    fn add_defaults(&mut self) {
        for (alias, state) in DEFAULT_ALIASES {
            self.aliases.insert(normalize(alias), state.to_string());
        }
        for (state, patterns) in DEFAULT_EXCLUSIONS {
            let list = self.exclusions.entry(state.to_string()).or_default();
            list.extend(patterns.iter().map(|p| normalize(p)));
        }
    }

    /// The built-in gazetteer, or the override file validated against the
    /// 50-state invariants.
    pub fn load(path: Option<&Path>) -> Result<Gazetteer, GazetteerError> {
        let Some(path) = path else {
            return Ok(Gazetteer::builtin());
        };
        let text = std::fs::read_to_string(path).map_err(|source| GazetteerError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: GazetteerFile = toml::from_str(&text).map_err(|source| GazetteerError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        Gazetteer::from_parts(file)
    }

    fn from_parts(file: GazetteerFile) -> Result<Gazetteer, GazetteerError> {
        let states = match file.states {
            Some(states) => {
                let unique: BTreeSet<&String> = states.iter().collect();
                if states.len() != CANONICAL_STATES.len() || unique.len() != states.len() {
                    return Err(GazetteerError::StateCount(unique.len()));
                }
                if let Some(bad) = states.iter().find(|s| !CANONICAL_STATES.contains(&s.as_str())) {
                    return Err(GazetteerError::UnknownState(bad.clone()));
                }
                let mut states = states;
                states.sort();
                states
            }
            None => CANONICAL_STATES.iter().map(|s| s.to_string()).collect(),
        };
        let mut g = Gazetteer {
            states,
            aliases: BTreeMap::new(),
            exclusions: BTreeMap::new(),
        };
        if file.extend_defaults {
            g.add_defaults();
        }
        for (alias, target) in file.aliases {
            if !g.states.contains(&target) {
                return Err(GazetteerError::DanglingAlias { alias, target });
            }
            g.aliases.insert(normalize(&alias), target);
        }
        for (state, patterns) in file.exclusions {
            if !g.states.contains(&state) {
                return Err(GazetteerError::DanglingExclusion(state));
            }
            let list = g.exclusions.entry(state).or_default();
            for p in patterns {
                let p = normalize(&p);
                if !list.contains(&p) {
                    list.push(p);
                }
            }
        }
        Ok(g)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// Canonical state for a surface form (state name or alias), any case.
    pub fn resolve(&self, surface: &str) -> Option<&str> {
        let key = normalize(surface);
        if let Some(s) = self.aliases.get(&key) {
            return Some(s);
        }
        self.states
            .iter()
            .find(|s| s.to_lowercase() == key)
            .map(String::as_str)
    }

    pub fn exclusions(&self, state: &str) -> &[String] {
        self.exclusions.get(state).map(Vec::as_slice).unwrap_or(&[])
    }

    fn surface_forms(&self) -> impl Iterator<Item = (String, &str)> {
        let names = self.states.iter().map(|s| (s.to_lowercase(), s.as_str()));
        let aliases = self.aliases.iter().map(|(a, s)| (a.clone(), s.as_str()));
        names.chain(aliases)
    }

    /// Every state mentioned in `text`, minus vetoed states.
    pub fn tag_text(&self, text: &str) -> BTreeSet<String> {
        let haystack = normalize(text);
        let mut hits: Vec<(usize, usize, &str)> = Vec::new();
        for (form, state) in self.surface_forms() {
            for start in whole_word_matches(&haystack, &form) {
                hits.push((start, start + form.len(), state));
            }
        }
        // leftmost, then longest, non-overlapping
        hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut tagged = BTreeSet::new();
        let mut covered_to = 0usize;
        for (start, end, state) in hits {
            if start < covered_to {
                continue;
            }
            covered_to = end;
            tagged.insert(state.to_string());
        }
        tagged.retain(|state| {
            !self
                .exclusions(state)
                .iter()
                .any(|p| whole_word_matches(&haystack, p).next().is_some())
        });
        tagged
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedArticle {
    pub article_id: String,
    pub states: BTreeSet<String>,
}

/// Lowercase and collapse whitespace runs to single spaces.
fn normalize(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Byte offsets where `needle` occurs in `haystack` with no alphanumeric
/// character glued to either end.
fn whole_word_matches<'a>(haystack: &'a str, needle: &'a str) -> impl Iterator<Item = usize> + 'a {
    let needs_left = needle.chars().next().is_some_and(char::is_alphanumeric);
    let needs_right = needle.chars().next_back().is_some_and(char::is_alphanumeric);
    haystack.match_indices(needle).filter_map(move |(start, _)| {
        let end = start + needle.len();
        let left_ok = !needs_left
            || haystack[..start]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric());
        let right_ok = !needs_right
            || haystack[end..]
                .chars()
                .next()
                .is_none_or(|c| !c.is_alphanumeric());
        (left_ok && right_ok).then_some(start)
    })
}
