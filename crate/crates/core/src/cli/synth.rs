//! Planted-signal fixture: a synthetic article corpus and census flow tables
//! generated from known per-state-year sentiments.
//!
//! Each state-year gets a planted sentiment `s` drawn uniformly from
//! `[-1, 1]`. Its articles are positive with probability `(1 + s) / 2` and
//! negative otherwise, and flows follow
//! `base + gain * (s_dest - s_origin) + noise`, floored at zero.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::census::{flow_table_path, write_flow_table, MigrationFlow};
use crate::corpus::YearRange;
use crate::states::CANONICAL_STATES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub years: YearRange,
    pub articles_per_cell: usize,
    pub base: f64,
    pub gain: f64,
    pub noise_sd: f64,
    /// Articles that mention only Washington, D.C.
    pub distractors_per_year: usize,
    /// Neutral articles naming two states.
    pub multi_state_per_year: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            years: YearRange::default(),
            articles_per_cell: 20,
            base: 3000.0,
            gain: 1500.0,
            noise_sd: 150.0,
            distractors_per_year: 5,
            multi_state_per_year: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixturePaths {
    pub corpus: PathBuf,
    pub census_dir: PathBuf,
    pub manifest: PathBuf,
}

impl FixturePaths {
    pub fn under(dir: &Path) -> FixturePaths {
        FixturePaths {
            corpus: dir.join("corpus.jsonl"),
            census_dir: dir.join("census"),
            manifest: dir.join("manifest.csv"),
        }
    }
}

/// One row of the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedCell {
    pub state: String,
    pub year: i32,
    pub planted: f64,
    pub positive_articles: usize,
    pub negative_articles: usize,
}

#[derive(Serialize)]
struct RawArticle<'a> {
    id: String,
    pub_date: String,
    headline: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    keywords: Vec<&'a str>,
}

const POSITIVE: &[(&str, &str)] = &[
    ("{S} residents celebrate a great year", "Local leaders in {S} praise the wonderful progress."),
    ("Schools in {S} post excellent results", "Parents in {S} are proud and happy."),
    ("{S} economy shows strong growth", "Analysts call the outlook for {S} the best in years."),
    ("{S} towns win praise for safe streets", "Families in {S} are hopeful and happy."),
];

const NEGATIVE: &[(&str, &str)] = &[
    ("{S} residents struggle after a terrible year", "Local leaders in {S} face an awful crisis."),
    ("Crime in {S} leaves families angry", "Residents of {S} describe a grim and painful season."),
    ("{S} economy is failing", "Analysts call the outlook for {S} the worst in years."),
    ("Factories in {S} close amid fear", "Workers in {S} are bitter about the horrible layoffs."),
];

const NEUTRAL_PAIR: (&str, &str) = (
    "Travelers moved between {S} and {T}",
    "Officials in {S} and {T} met to discuss the budget.",
);

const DISTRACTOR: (&str, &str) = (
    "Lawmakers in Washington, D.C. debate the budget",
    "Officials in Washington, D.C. met to discuss the plan.",
);

fn fill(template: &str, s: &str, t: &str) -> String {
    template.replace("{S}", s).replace("{T}", t)
}

fn date(rng: &mut ChaCha8Rng, year: i32) -> String {
    format!("{year}-{:02}-{:02}", rng.gen_range(1..=12), rng.gen_range(1..=28))
}

/// Writes the corpus, one flow table per year, and the manifest under `dir`.
pub fn generate_synthetic_fixture(config: &SyntheticConfig, dir: &Path) -> Result<FixturePaths> {
    let paths = FixturePaths::under(dir);
    std::fs::create_dir_all(&paths.census_dir)
        .with_context(|| format!("cannot create {}", paths.census_dir.display()))?;
    let noise = Normal::new(0.0, config.noise_sd.max(0.0)).context("noise_sd must be finite")?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let years: Vec<i32> = config.years.years().collect();
    let planted: Vec<Vec<f64>> = CANONICAL_STATES
        .iter()
        .map(|_| years.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();

    let mut corpus = String::new();
    let mut manifest = Vec::new();
    let mut next_id = 0usize;
    let push = |corpus: &mut String, id: String, pub_date: String, h: String, a: String, kw: Vec<&str>| {
        let raw = RawArticle {
            id,
            pub_date,
            headline: h,
            abstract_text: a,
            keywords: kw,
        };
        corpus.push_str(&serde_json::to_string(&raw).expect("article serializes"));
        corpus.push('\n');
    };
    let mut fresh_id = || {
        next_id += 1;
        format!("syn-{next_id:07}")
    };

    for (y, &year) in years.iter().enumerate() {
        for (s, state) in CANONICAL_STATES.iter().enumerate() {
            let p = (1.0 + planted[s][y]) / 2.0;
            let (mut pos, mut neg) = (0, 0);
            for _ in 0..config.articles_per_cell {
                let positive = rng.gen_bool(p.clamp(0.0, 1.0));
                let (h, a) = if positive {
                    pos += 1;
                    POSITIVE.choose(&mut rng).expect("non-empty")
                } else {
                    neg += 1;
                    NEGATIVE.choose(&mut rng).expect("non-empty")
                };
                let d = date(&mut rng, year);
                push(&mut corpus, fresh_id(), d, fill(h, state, ""), fill(a, state, ""), vec![state]);
            }
            manifest.push(PlantedCell {
                state: state.to_string(),
                year,
                planted: planted[s][y],
                positive_articles: pos,
                negative_articles: neg,
            });
        }
        for _ in 0..config.multi_state_per_year {
            let pair: Vec<&&str> = CANONICAL_STATES.choose_multiple(&mut rng, 2).collect();
            let d = date(&mut rng, year);
            push(
                &mut corpus,
                fresh_id(),
                d,
                fill(NEUTRAL_PAIR.0, pair[0], pair[1]),
                fill(NEUTRAL_PAIR.1, pair[0], pair[1]),
                vec![],
            );
        }
        for _ in 0..config.distractors_per_year {
            let d = date(&mut rng, year);
            push(&mut corpus, fresh_id(), d, DISTRACTOR.0.into(), DISTRACTOR.1.into(), vec!["Washington, D.C."]);
        }
    }
    // a repeated id and an out-of-range year exercise the corpus filters
    if let Some(first) = corpus.lines().next().map(str::to_string) {
        corpus.push_str(&first);
        corpus.push('\n');
    }
    let early = config.years.start() - 1;
    let d = date(&mut rng, early);
    push(&mut corpus, fresh_id(), d, "Ohio residents celebrate".into(), String::new(), vec![]);

    std::fs::write(&paths.corpus, &corpus)
        .with_context(|| format!("cannot write {}", paths.corpus.display()))?;

    for (y, &year) in years.iter().enumerate() {
        let mut flows = Vec::with_capacity(50 * 49);
        for (o, origin) in CANONICAL_STATES.iter().enumerate() {
            for (d, dest) in CANONICAL_STATES.iter().enumerate() {
                if o == d {
                    continue;
                }
                let mean = config.base + config.gain * (planted[d][y] - planted[o][y]);
                let estimate = (mean + noise.sample(&mut rng)).round().max(0.0) as u64;
                flows.push(MigrationFlow {
                    origin: origin.to_string(),
                    destination: dest.to_string(),
                    year,
                    estimate,
                    moe: estimate / 10 + 50,
                });
            }
        }
        let path = flow_table_path(&paths.census_dir, year);
        let mut buf = Vec::new();
        write_flow_table(&mut buf, &flows)?;
        // rows the ingester must drop
        let mut extra = String::new();
        writeln!(extra, "Puerto Rico,Ohio,120,40").unwrap();
        writeln!(extra, "Texas,District of Columbia,300,90").unwrap();
        buf.extend_from_slice(extra.as_bytes());
        std::fs::write(&path, buf).with_context(|| format!("cannot write {}", path.display()))?;
    }

    let mut w = csv::Writer::from_path(&paths.manifest)
        .with_context(|| format!("cannot write {}", paths.manifest.display()))?;
    for cell in &manifest {
        w.serialize(cell)?;
    }
    w.flush()?;
    Ok(paths)
}

pub fn read_manifest(path: &Path) -> Result<Vec<PlantedCell>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiment::{score_text, Lexicon};
    use crate::tagger::Gazetteer;

    #[test]
    fn templates_have_the_intended_polarity() {
        let lex = Lexicon::bundled();
        let g = Gazetteer::builtin();
        for state in CANONICAL_STATES {
            for (h, a) in POSITIVE {
                let text = format!("{}\n{}", fill(h, state, ""), fill(a, state, ""));
                assert!(score_text(&text, &lex).compound > 0.3, "{text}");
                assert_eq!(g.tag_text(&text).into_iter().collect::<Vec<_>>(), vec![state.to_string()]);
            }
            for (h, a) in NEGATIVE {
                let text = format!("{}\n{}", fill(h, state, ""), fill(a, state, ""));
                assert!(score_text(&text, &lex).compound < -0.3, "{text}");
                assert_eq!(g.tag_text(&text).len(), 1);
            }
            let text = format!("{}\n{}", fill(NEUTRAL_PAIR.0, state, "Ohio"), fill(NEUTRAL_PAIR.1, state, "Ohio"));
            assert_eq!(score_text(&text, &lex).compound, 0.0, "{text}");
        }
        let text = format!("{}\n{}\nWashington, D.C.", DISTRACTOR.0, DISTRACTOR.1);
        assert!(g.tag_text(&text).is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let config = SyntheticConfig {
            years: YearRange::new(2010, 2011).unwrap(),
            articles_per_cell: 2,
            ..SyntheticConfig::default()
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let pa = generate_synthetic_fixture(&config, a.path()).unwrap();
        let pb = generate_synthetic_fixture(&config, b.path()).unwrap();
        for (x, y) in [
            (pa.corpus, pb.corpus),
            (pa.manifest, pb.manifest),
            (flow_table_path(&pa.census_dir, 2011), flow_table_path(&pb.census_dir, 2011)),
        ] {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}
