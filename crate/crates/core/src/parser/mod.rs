mod cky;
mod oracle;

pub use cky::{cky_parse, Parser};
pub use oracle::{enumerate_parses, enumerate_strings, string_weight, MAX_SENTENCE_LEN, MAX_STRING_LEN};

use crate::symbol::Symbol;
use crate::tree::ParseTree;

/// One sentence per nonblank line, whitespace-separated tokens.
pub fn read_sentences(text: &str) -> Vec<Vec<Symbol>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(Symbol::base).collect())
        .collect()
}

/// `tree TAB log-weight`, or `(())` when there is no parse.
pub fn format_parse(result: Option<&(ParseTree, f64)>) -> String {
    match result {
        Some((t, w)) => format!("{t}\t{w}"),
        None => "(())".to_string(),
    }
}
