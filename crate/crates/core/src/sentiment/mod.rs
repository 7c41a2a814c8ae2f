//! Rule-based sentiment scoring (VADER).

mod lexicon;
mod vader;

pub use lexicon::{Lexicon, LexiconError};
pub use vader::{constants, normalize_valence, score_text, CompoundScore};
