//! Labelled-bracket scoring, missing-production counts and parse coverage.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production};
use crate::parser::Parser;
use crate::relation::ProductionSet;
use crate::symbol::Symbol;
use crate::transform::TransformOptions;
use crate::tree::{tree_productions, ParseTree};
use crate::tree_transform::TreeTransformer;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParsevalOptions {
    /// Skip nodes whose only child is a leaf. Turn off for trees whose
    /// leaves are already part-of-speech tags.
    pub skip_preterminals: bool,
}

impl Default for ParsevalOptions {
    fn default() -> Self {
        ParsevalOptions { skip_preterminals: true }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BracketCounts {
    pub matched: usize,
    pub gold: usize,
    pub test: usize,
}

impl BracketCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.test)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.gold)
    }

    pub fn f1(&self) -> f64 {
        ratio(2 * self.matched, self.gold + self.test)
    }

    fn add(&mut self, o: &BracketCounts) {
        self.matched += o.matched;
        self.gold += o.gold;
        self.test += o.test;
    }
}

/// Empty denominators score 1: nothing was there to get wrong.
fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

fn constituents(t: &ParseTree, opts: &ParsevalOptions) -> IndexMap<(Symbol, usize, usize), usize> {
    fn walk(
        t: &ParseTree,
        start: usize,
        root: bool,
        opts: &ParsevalOptions,
        out: &mut IndexMap<(Symbol, usize, usize), usize>,
    ) -> usize {
        match t {
            ParseTree::Node { label, children } => {
                let mut end = start;
                for c in children {
                    end = walk(c, end, false, opts, out);
                }
                let pre = children.len() == 1 && matches!(children[0], ParseTree::Leaf(_));
                if !root && !(opts.skip_preterminals && pre) {
                    *out.entry((label.clone(), start, end)).or_insert(0) += 1;
                }
                end
            }
            ParseTree::Leaf(_) => start + 1,
            ParseTree::Epsilon => start,
        }
    }
    let mut out = IndexMap::new();
    walk(t, 0, true, opts, &mut out);
    out
}

/// Labelled-bracket counts with multiset matching; the root is not scored.
pub fn parseval(gold: &ParseTree, test: &ParseTree, opts: &ParsevalOptions) -> Result<BracketCounts> {
    let (gy, ty) = (gold.terminal_yield(), test.terminal_yield());
    if gy != ty {
        let show = |v: &[Symbol]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ");
        return Err(Error::YieldMismatch {
            gold: show(&gy),
            test: show(&ty),
        });
    }
    let g = constituents(gold, opts);
    let t = constituents(test, opts);
    let matched = g.iter().map(|(k, &n)| n.min(t.get(k).copied().unwrap_or(0))).sum();
    Ok(BracketCounts {
        matched,
        gold: g.values().sum(),
        test: t.values().sum(),
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub total: BracketCounts,
    pub sentences: usize,
    pub no_parse: Vec<usize>,
    pub missing_productions: Option<usize>,
    /// Per scored sentence: index and counts.
    pub per_sentence: Vec<(usize, BracketCounts)>,
}

impl EvalReport {
    /// Micro-averaged scores over sentences that received a parse.
    pub fn score(gold: &[ParseTree], test: &[Option<ParseTree>], opts: &ParsevalOptions) -> Result<EvalReport> {
        if gold.len() != test.len() {
            return Err(Error::YieldMismatch {
                gold: format!("{} trees", gold.len()),
                test: format!("{} trees", test.len()),
            });
        }
        let scored: Vec<(usize, Option<BracketCounts>)> = gold
            .par_iter()
            .zip(test.par_iter())
            .enumerate()
            .map(|(i, (g, t))| Ok((i, t.as_ref().map(|t| parseval(g, t, opts)).transpose()?)))
            .collect::<Result<_>>()?;
        let mut r = EvalReport {
            sentences: gold.len(),
            ..Default::default()
        };
        for (i, c) in scored {
            match c {
                Some(c) => {
                    r.total.add(&c);
                    r.per_sentence.push((i, c));
                }
                None => r.no_parse.push(i),
            }
        }
        Ok(r)
    }

    /// Tab-separated summary line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("sentences\tno_parse\tmatched\tgold\ttest\tprecision\trecall\tf1");
        if self.missing_productions.is_some() {
            s.push_str("\tmissing_productions");
        }
        let t = &self.total;
        write!(
            s,
            "\n{}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            self.sentences,
            self.no_parse.len(),
            t.matched,
            t.gold,
            t.test,
            t.precision(),
            t.recall(),
            t.f1()
        )
        .unwrap();
        if let Some(m) = self.missing_productions {
            write!(s, "\t{m}").unwrap();
        }
        s.push('\n');
        s
    }

    /// `key: value` block.
    pub fn to_key_values(&self) -> String {
        let t = &self.total;
        let mut s = String::new();
        writeln!(s, "sentences: {}", self.sentences).unwrap();
        writeln!(s, "no_parse: {}", self.no_parse.len()).unwrap();
        writeln!(s, "matched: {}", t.matched).unwrap();
        writeln!(s, "gold_constituents: {}", t.gold).unwrap();
        writeln!(s, "test_constituents: {}", t.test).unwrap();
        writeln!(s, "labelled_precision: {:.4}", t.precision()).unwrap();
        writeln!(s, "labelled_recall: {:.4}", t.recall()).unwrap();
        writeln!(s, "f1: {:.4}", t.f1()).unwrap();
        if let Some(m) = self.missing_productions {
            writeln!(s, "missing_productions: {m}").unwrap();
        }
        s
    }

    pub fn per_sentence_lines(&self) -> String {
        let mut s = String::new();
        for (i, c) in &self.per_sentence {
            writeln!(
                s,
                "{i}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                c.matched,
                c.gold,
                c.test,
                c.precision(),
                c.recall()
            )
            .unwrap();
        }
        for i in &self.no_parse {
            writeln!(s, "{i}\tno-parse").unwrap();
        }
        s
    }
}

/// A tree transform: the left-corner set and options. `None` means identity.
pub type TreeMap<'a> = Option<(&'a ProductionSet, TransformOptions)>;

pub fn transform_corpus(corpus: &[ParseTree], map: TreeMap<'_>) -> Result<Vec<ParseTree>> {
    match map {
        None => Ok(corpus.to_vec()),
        Some((l, opts)) => {
            let tr = TreeTransformer::new(l, opts);
            corpus.par_iter().map(|t| tr.transform(t)).collect()
        }
    }
}

fn production_inventory(corpus: &[ParseTree]) -> BTreeSet<Production> {
    corpus
        .iter()
        .flat_map(|t| tree_productions(t).into_keys())
        .collect()
}

/// Distinct productions of the transformed test trees that never occur in
/// the transformed training trees.
pub fn missing_productions(train: &[ParseTree], test: &[ParseTree], map: TreeMap<'_>) -> Result<BTreeSet<Production>> {
    let seen = production_inventory(&transform_corpus(train, map)?);
    let wanted = production_inventory(&transform_corpus(test, map)?);
    Ok(wanted.difference(&seen).cloned().collect())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub sentences: usize,
    /// Indices of sentences without a parse (including out-of-vocabulary ones).
    pub no_parse: Vec<usize>,
}

pub fn coverage_parse_report(g: &Grammar, sentences: &[Vec<Symbol>]) -> Result<CoverageReport> {
    let parser = Parser::new(g)?;
    let results: Vec<bool> = sentences
        .par_iter()
        .map(|s| match parser.parse(s) {
            Ok(r) => Ok(r.is_some()),
            Err(Error::OutOfVocabulary(_)) => Ok(false),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(CoverageReport {
        sentences: sentences.len(),
        no_parse: results.iter().enumerate().filter(|(_, &ok)| !ok).map(|(i, _)| i).collect(),
    })
}
