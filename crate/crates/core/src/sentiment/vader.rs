//! Port of the VADER scoring rules (vaderSentiment 3.3.2).
//!
//! The heuristics are applied in the same order, with the same constants and
//! the same quirks as the reference implementation, so scores agree with it
//! to floating-point precision. Emoji-to-description translation is not
//! ported.

use serde::{Deserialize, Serialize};

use super::Lexicon;

pub mod constants {
    /// Booster word increment.
    pub const B_INCR: f64 = 0.293;
    /// Dampener word decrement.
    pub const B_DECR: f64 = -0.293;
    /// ALL-CAPS emphasis on a word when the text is not entirely capitalised.
    pub const C_INCR: f64 = 0.733;
    /// Negation factor.
    pub const N_SCALAR: f64 = -0.74;
    /// Booster damping two and three tokens away from the sentiment word.
    pub const DAMP_DIST_2: f64 = 0.95;
    pub const DAMP_DIST_3: f64 = 0.9;
    /// "never so/this" emphasis.
    pub const NEVER_SO: f64 = 1.25;
    pub const EXCLAMATION_INCR: f64 = 0.292;
    pub const EXCLAMATION_MAX: usize = 4;
    pub const QUESTION_INCR: f64 = 0.18;
    pub const QUESTION_MAX_AMP: f64 = 0.96;
    pub const BUT_BEFORE: f64 = 0.5;
    pub const BUT_AFTER: f64 = 1.5;
    /// Normalisation constant approximating the max expected raw sum.
    pub const ALPHA: f64 = 15.0;
}

use constants::*;

const NEGATE: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't",
    "can't", "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent",
    "isnt", "mightnt", "mustnt", "neither", "don't", "hadn't", "hasn't", "haven't", "isn't",
    "mightn't", "mustn't", "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing",
    "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent", "oughtn't", "shan't",
    "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt", "won't", "wouldn't",
    "rarely", "seldom", "despite",
];

const BOOSTERS: &[(&str, f64)] = &[
    ("absolutely", B_INCR),
    ("amazingly", B_INCR),
    ("awfully", B_INCR),
    ("completely", B_INCR),
    ("considerable", B_INCR),
    ("considerably", B_INCR),
    ("decidedly", B_INCR),
    ("deeply", B_INCR),
    ("effing", B_INCR),
    ("enormous", B_INCR),
    ("enormously", B_INCR),
    ("entirely", B_INCR),
    ("especially", B_INCR),
    ("exceptional", B_INCR),
    ("exceptionally", B_INCR),
    ("extreme", B_INCR),
    ("extremely", B_INCR),
    ("fabulously", B_INCR),
    ("flipping", B_INCR),
    ("flippin", B_INCR),
    ("frackin", B_INCR),
    ("fracking", B_INCR),
    ("fricking", B_INCR),
    ("frickin", B_INCR),
    ("frigging", B_INCR),
    ("friggin", B_INCR),
    ("fully", B_INCR),
    ("fuckin", B_INCR),
    ("fucking", B_INCR),
    ("fuggin", B_INCR),
    ("fugging", B_INCR),
    ("greatly", B_INCR),
    ("hella", B_INCR),
    ("highly", B_INCR),
    ("hugely", B_INCR),
    ("incredible", B_INCR),
    ("incredibly", B_INCR),
    ("intensely", B_INCR),
    ("major", B_INCR),
    ("majorly", B_INCR),
    ("more", B_INCR),
    ("most", B_INCR),
    ("particularly", B_INCR),
    ("purely", B_INCR),
    ("quite", B_INCR),
    ("really", B_INCR),
    ("remarkably", B_INCR),
    ("so", B_INCR),
    ("substantially", B_INCR),
    ("thoroughly", B_INCR),
    ("total", B_INCR),
    ("totally", B_INCR),
    ("tremendous", B_INCR),
    ("tremendously", B_INCR),
    ("uber", B_INCR),
    ("unbelievably", B_INCR),
    ("unusually", B_INCR),
    ("utter", B_INCR),
    ("utterly", B_INCR),
    ("very", B_INCR),
    ("almost", B_DECR),
    ("barely", B_DECR),
    ("hardly", B_DECR),
    ("just enough", B_DECR),
    ("kind of", B_DECR),
    ("kinda", B_DECR),
    ("kindof", B_DECR),
    ("kind-of", B_DECR),
    ("less", B_DECR),
    ("little", B_DECR),
    ("marginal", B_DECR),
    ("marginally", B_DECR),
    ("occasional", B_DECR),
    ("occasionally", B_DECR),
    ("partly", B_DECR),
    ("scarce", B_DECR),
    ("scarcely", B_DECR),
    ("slight", B_DECR),
    ("slightly", B_DECR),
    ("somewhat", B_DECR),
    ("sort of", B_DECR),
    ("sorta", B_DECR),
    ("sortof", B_DECR),
    ("sort-of", B_DECR),
];

/// Idioms and phrases containing lexicon words, with fixed valences.
const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];

fn booster(word: &str) -> Option<f64> {
    BOOSTERS.iter().find(|(w, _)| *w == word).map(|(_, v)| *v)
}

fn special_case(seq: &str) -> Option<f64> {
    SPECIAL_CASES.iter().find(|(w, _)| *w == seq).map(|(_, v)| *v)
}

fn negated(word: &str) -> bool {
    NEGATE.contains(&word) || word.contains("n't")
}

/// Python `str.isupper`: at least one cased character and none lowercase.
fn is_upper(s: &str) -> bool {
    s.chars().any(|c| c.is_uppercase() || c.is_lowercase()) && !s.chars().any(char::is_lowercase)
}

/// `x / sqrt(x² + alpha)`, clamped to [-1, 1].
pub fn normalize_valence(x: f64, alpha: f64) -> f64 {
    let norm = x / (x * x + alpha).sqrt();
    norm.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundScore {
    pub compound: f64,
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
}

impl CompoundScore {
    pub const NEUTRAL: CompoundScore = CompoundScore {
        compound: 0.0,
        pos: 0.0,
        neg: 0.0,
        neu: 1.0,
    };
}

/// Strips leading/trailing ASCII punctuation unless that would leave two
/// characters or fewer (which keeps emoticons like `:)` intact).
fn strip_punc_if_word(token: &str) -> &str {
    let stripped = token.trim_matches(|c: char| c.is_ascii_punctuation());
    if stripped.chars().count() <= 2 {
        token
    } else {
        stripped
    }
}

struct Tokens<'a> {
    words: Vec<&'a str>,
    lower: Vec<String>,
    is_cap_diff: bool,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let words: Vec<&str> = text.split_whitespace().map(strip_punc_if_word).collect();
        let lower = words.iter().map(|w| w.to_lowercase()).collect();
        let allcaps = words.iter().filter(|w| is_upper(w)).count();
        let diff = words.len() - allcaps;
        let is_cap_diff = diff > 0 && diff < words.len();
        Tokens {
            words,
            lower,
            is_cap_diff,
        }
    }

    fn len(&self) -> usize {
        self.words.len()
    }
}

fn scalar_inc_dec(word: &str, word_lower: &str, valence: f64, is_cap_diff: bool) -> f64 {
    let Some(mut scalar) = booster(word_lower) else {
        return 0.0;
    };
    if valence < 0.0 {
        scalar *= -1.0;
    }
    if is_upper(word) && is_cap_diff {
        if valence > 0.0 {
            scalar += C_INCR;
        } else {
            scalar -= C_INCR;
        }
    }
    scalar
}

fn negation_check(mut valence: f64, lower: &[String], start_i: usize, i: usize) -> f64 {
    let w = |k: usize| lower[i - k].as_str();
    match start_i {
        0 => {
            if negated(w(1)) {
                valence *= N_SCALAR;
            }
        }
        1 => {
            if w(2) == "never" && (w(1) == "so" || w(1) == "this") {
                valence *= NEVER_SO;
            } else if w(2) == "without" && w(1) == "doubt" {
            } else if negated(w(2)) {
                valence *= N_SCALAR;
            }
        }
        2 => {
            // Reference precedence: (never AND so/this two back) OR so/this one back.
            if (w(3) == "never" && (w(2) == "so" || w(2) == "this")) || (w(1) == "so" || w(1) == "this")
            {
                valence *= NEVER_SO;
            } else if w(3) == "without" && (w(2) == "doubt" || w(1) == "doubt") {
            } else if negated(w(3)) {
                valence *= N_SCALAR;
            }
        }
        _ => unreachable!("look-back window is three tokens"),
    }
    valence
}

fn special_idioms_check(mut valence: f64, lower: &[String], i: usize) -> f64 {
    let w = |k: usize| lower[k].as_str();
    let onezero = format!("{} {}", w(i - 1), w(i));
    let twoonezero = format!("{} {} {}", w(i - 2), w(i - 1), w(i));
    let twoone = format!("{} {}", w(i - 2), w(i - 1));
    let threetwoone = format!("{} {} {}", w(i - 3), w(i - 2), w(i - 1));
    let threetwo = format!("{} {}", w(i - 3), w(i - 2));

    for seq in [&onezero, &twoonezero, &twoone, &threetwoone, &threetwo] {
        if let Some(v) = special_case(seq) {
            valence = v;
            break;
        }
    }
    if lower.len() - 1 > i {
        if let Some(v) = special_case(&format!("{} {}", w(i), w(i + 1))) {
            valence = v;
        }
    }
    if lower.len() - 1 > i + 1 {
        if let Some(v) = special_case(&format!("{} {} {}", w(i), w(i + 1), w(i + 2))) {
            valence = v;
        }
    }
    // multi-word dampeners such as "kind of" / "sort of"
    for ngram in [&threetwoone, &threetwo, &twoone] {
        if let Some(b) = booster(ngram) {
            valence += b;
        }
    }
    valence
}

fn least_check(mut valence: f64, lower: &[String], lexicon: &Lexicon, i: usize) -> f64 {
    if i > 1 && !lexicon.contains(&lower[i - 1]) && lower[i - 1] == "least" {
        if lower[i - 2] != "at" && lower[i - 2] != "very" {
            valence *= N_SCALAR;
        }
    } else if i > 0 && !lexicon.contains(&lower[i - 1]) && lower[i - 1] == "least" {
        valence *= N_SCALAR;
    }
    valence
}

fn sentiment_valence(tokens: &Tokens<'_>, lexicon: &Lexicon, i: usize) -> f64 {
    let lower = &tokens.lower;
    let item_lower = lower[i].as_str();
    let Some(base) = lexicon.get(item_lower) else {
        return 0.0;
    };
    let mut valence = base;

    // "no" directly before another lexicon word acts as a negator, not a word
    if item_lower == "no" && i != tokens.len() - 1 && lexicon.contains(&lower[i + 1]) {
        valence = 0.0;
    }
    if (i > 0 && lower[i - 1] == "no")
        || (i > 1 && lower[i - 2] == "no")
        || (i > 2 && lower[i - 3] == "no" && (lower[i - 1] == "or" || lower[i - 1] == "nor"))
    {
        valence = base * N_SCALAR;
    }

    if is_upper(tokens.words[i]) && tokens.is_cap_diff {
        if valence > 0.0 {
            valence += C_INCR;
        } else {
            valence -= C_INCR;
        }
    }

    for start_i in 0..3 {
        if i > start_i && !lexicon.contains(&lower[i - (start_i + 1)]) {
            let k = i - (start_i + 1);
            let mut s = scalar_inc_dec(tokens.words[k], &lower[k], valence, tokens.is_cap_diff);
            if start_i == 1 && s != 0.0 {
                s *= DAMP_DIST_2;
            }
            if start_i == 2 && s != 0.0 {
                s *= DAMP_DIST_3;
            }
            valence += s;
            valence = negation_check(valence, lower, start_i, i);
            if start_i == 2 {
                valence = special_idioms_check(valence, lower, i);
            }
        }
    }

    least_check(valence, lower, lexicon, i)
}

/// Contrastive "but": halves sentiments before the first "but", boosts those
/// after it.
///
/// Mirrors the reference loop exactly, including its lookup of each value by
/// its first equal element, which matters when values repeat.
fn but_check(lower: &[String], sentiments: &mut [f64]) {
    let Some(bi) = lower.iter().position(|w| w == "but") else {
        return;
    };
    for k in 0..sentiments.len() {
        let value = sentiments[k];
        let si = sentiments
            .iter()
            .position(|s| *s == value)
            .expect("value is present at k");
        if si < bi {
            sentiments[si] = value * BUT_BEFORE;
        } else if si > bi {
            sentiments[si] = value * BUT_AFTER;
        }
    }
}

fn punctuation_emphasis(text: &str) -> f64 {
    let ep = text.matches('!').count().min(EXCLAMATION_MAX) as f64 * EXCLAMATION_INCR;
    let qm_count = text.matches('?').count();
    let qm = if qm_count > 1 {
        if qm_count <= 3 {
            qm_count as f64 * QUESTION_INCR
        } else {
            QUESTION_MAX_AMP
        }
    } else {
        0.0
    };
    ep + qm
}

fn score_valence(sentiments: &[f64], text: &str) -> CompoundScore {
    if sentiments.is_empty() {
        return CompoundScore::NEUTRAL;
    }
    let mut sum_s = 0.0;
    for s in sentiments {
        sum_s += s;
    }
    let amp = punctuation_emphasis(text);
    if sum_s > 0.0 {
        sum_s += amp;
    } else if sum_s < 0.0 {
        sum_s -= amp;
    }
    let compound = normalize_valence(sum_s, ALPHA);

    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut neu_count = 0usize;
    for &s in sentiments {
        if s > 0.0 {
            pos_sum += s + 1.0;
        }
        if s < 0.0 {
            neg_sum += s - 1.0;
        }
        if s == 0.0 {
            neu_count += 1;
        }
    }
    if pos_sum > neg_sum.abs() {
        pos_sum += amp;
    } else if pos_sum < neg_sum.abs() {
        neg_sum -= amp;
    }
    let total = pos_sum + neg_sum.abs() + neu_count as f64;
    CompoundScore {
        compound,
        pos: (pos_sum / total).abs(),
        neg: (neg_sum / total).abs(),
        neu: (neu_count as f64 / total).abs(),
    }
}

/// Scores one piece of text. Pure: no state survives the call.
pub fn score_text(text: &str, lexicon: &Lexicon) -> CompoundScore {
    let text = text.trim();
    let tokens = Tokens::new(text);
    let mut sentiments = Vec::with_capacity(tokens.len());
    for i in 0..tokens.len() {
        let item = tokens.lower[i].as_str();
        if booster(item).is_some() {
            sentiments.push(0.0);
            continue;
        }
        if i < tokens.len() - 1 && item == "kind" && tokens.lower[i + 1] == "of" {
            sentiments.push(0.0);
            continue;
        }
        sentiments.push(sentiment_valence(&tokens, lexicon, i));
    }
    but_check(&tokens.lower, &mut sentiments);
    score_valence(&sentiments, text)
}
