//! The treebank experiment: grammar sizes, no-parse counts, missing
//! productions and transform-detransform scoring for each left-corner set
//! and factorization.

use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::estimate_pcfg;
use crate::eval::{missing_productions, parseval, transform_corpus, BracketCounts, ParsevalOptions};
use crate::grammar::Grammar;
use crate::parser::Parser;
use crate::prune::prune_useless;
use crate::relation::{select_l, LMode, ProductionSet};
use crate::transform::{lc_transform, EpsilonMode, Factor, TransformOptions};
use crate::tree::ParseTree;
use crate::tree_transform::{break_unary_cycles_tree, Detransformer, Resolver};
use crate::unary::{remove_unary_cycles, UnaryCycles};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LSet {
    /// Every production: the standard left-corner transform.
    P,
    /// Productions whose RHS does not begin with a part-of-speech tag.
    N,
    /// The left-recursive productions.
    L0,
}

impl fmt::Display for LSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LSet::P => "P",
            LSet::N => "N",
            LSet::L0 => "L0",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variant {
    pub l: LSet,
    pub factor: Factor,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.l, self.factor)
    }
}

impl Variant {
    pub fn all() -> Vec<Variant> {
        let mut v = Vec::new();
        for l in [LSet::P, LSet::N, LSet::L0] {
            for factor in Factor::ALL {
                v.push(Variant { l, factor });
            }
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub variants: Vec<Variant>,
    /// Run the parsing rows (no-parse counts and scores).
    pub parse: bool,
    /// Epsilon handling for the tree transforms used in the parsing rows.
    pub epsilon: EpsilonMode,
    pub parseval: ParsevalOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            variants: Variant::all(),
            parse: true,
            epsilon: EpsilonMode::Full,
            parseval: ParsevalOptions { skip_preterminals: false },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeRow {
    pub variant: Variant,
    pub grammar_keep: usize,
    pub grammar_full: usize,
    pub trees_keep: usize,
    pub trees_full: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseRow {
    /// `None` for the untransformed baseline.
    pub variant: Option<Variant>,
    pub sentences: usize,
    pub no_parse: usize,
    pub detransform_failures: usize,
    pub missing: usize,
    pub counts: BracketCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub base_grammar: usize,
    pub base_trees: usize,
    pub l_sizes: [(LSet, usize); 3],
    pub sizes: Vec<SizeRow>,
    pub parsing: Vec<ParseRow>,
}

pub struct Experiment {
    /// The unary-cycle-free training grammar, without the unreachable
    /// productions cycle removal leaves behind.
    pub grammar: Grammar,
    pub train: Vec<ParseTree>,
    pub test: Vec<ParseTree>,
    pub l: [(LSet, ProductionSet); 3],
}

impl Experiment {
    /// Breaks unary cycles in both corpora using the training grammar's
    /// cycles and selects the left-corner sets from the cycle-free grammar.
    pub fn new(train: &[ParseTree], test: &[ParseTree]) -> Result<Experiment> {
        let raw = estimate_pcfg(train, None)?;
        let cycles = UnaryCycles::of(&raw);
        let grammar = prune_useless(&remove_unary_cycles(&raw, true)?).grammar;
        let grammar = grammar.with_pos_tags(Some(grammar.terminals().clone()));
        let bt = |c: &[ParseTree]| -> Vec<ParseTree> { c.par_iter().map(|t| break_unary_cycles_tree(t, &cycles)).collect() };
        let pick = |m: LMode| select_l(&grammar, &m).map(|s| s.productions);
        let l = [
            (LSet::P, pick(LMode::All)?),
            (LSet::N, pick(LMode::NonPosInitial)?),
            (LSet::L0, pick(LMode::L0)?),
        ];
        Ok(Experiment {
            train: bt(train),
            test: bt(test),
            grammar,
            l,
        })
    }

    pub fn l_of(&self, s: LSet) -> &ProductionSet {
        &self.l.iter().find(|(k, _)| *k == s).unwrap().1
    }

    fn tree_size(&self, l: &ProductionSet, opts: TransformOptions) -> Result<usize> {
        let trees = transform_corpus(&self.train, Some((l, opts)))?;
        Ok(estimate_pcfg(&trees, None)?.len())
    }

    pub fn size_row(&self, v: Variant) -> Result<SizeRow> {
        let l = self.l_of(v.l);
        let keep = TransformOptions::new(v.factor, EpsilonMode::Keep);
        let full = TransformOptions::new(v.factor, EpsilonMode::Full);
        Ok(SizeRow {
            variant: v,
            grammar_keep: lc_transform(&self.grammar, l, &keep)?.grammar.len(),
            grammar_full: lc_transform(&self.grammar, l, &full)?.grammar.len(),
            trees_keep: self.tree_size(l, keep)?,
            trees_full: self.tree_size(l, full)?,
        })
    }

    pub fn parse_row(&self, v: Option<Variant>, cfg: &PipelineConfig) -> Result<ParseRow> {
        let map = v.map(|v| (self.l_of(v.l), TransformOptions::new(v.factor, cfg.epsilon)));
        let train = transform_corpus(&self.train, map)?;
        let pcfg = estimate_pcfg(&train, None)?;
        let parser = Parser::new(&pcfg)?;
        let resolver = map.map(|(l, _)| Resolver::new(&self.grammar, l).lenient());
        let detransformer = map.map(|(_, o)| {
            let d = Detransformer::new(o);
            match &resolver {
                Some(r) => d.with_resolver(r),
                None => d,
            }
        });
        let missing = missing_productions(&self.train, &self.test, map)?.len();

        enum Outcome {
            NoParse,
            Failed,
            Scored(BracketCounts),
        }
        let outcomes: Vec<Outcome> = self
            .test
            .par_iter()
            .map(|gold| {
                let parsed = match parser.parse(&gold.terminal_yield()) {
                    Ok(Some((t, _))) => t,
                    Ok(None) | Err(Error::OutOfVocabulary(_)) => return Ok(Outcome::NoParse),
                    Err(e) => return Err(e),
                };
                let back = match &detransformer {
                    Some(d) => match d.detransform(&parsed) {
                        Ok(t) => t,
                        Err(_) => return Ok(Outcome::Failed),
                    },
                    None => parsed,
                };
                Ok(Outcome::Scored(parseval(gold, &back, &cfg.parseval)?))
            })
            .collect::<Result<_>>()?;
        let mut row = ParseRow {
            variant: v,
            sentences: self.test.len(),
            no_parse: 0,
            detransform_failures: 0,
            missing,
            counts: BracketCounts::default(),
        };
        for o in outcomes {
            match o {
                Outcome::NoParse => row.no_parse += 1,
                Outcome::Failed => row.detransform_failures += 1,
                Outcome::Scored(c) => {
                    row.counts.matched += c.matched;
                    row.counts.gold += c.gold;
                    row.counts.test += c.test;
                }
            }
        }
        Ok(row)
    }
}

pub fn run_pipeline(train: &[ParseTree], test: &[ParseTree], cfg: &PipelineConfig) -> Result<PipelineReport> {
    let ex = Experiment::new(train, test)?;
    let sizes = cfg
        .variants
        .iter()
        .map(|&v| ex.size_row(v))
        .collect::<Result<Vec<_>>>()?;
    let mut parsing = Vec::new();
    if cfg.parse {
        parsing.push(ex.parse_row(None, cfg)?);
        for &v in &cfg.variants {
            parsing.push(ex.parse_row(Some(v), cfg)?);
        }
    }
    Ok(PipelineReport {
        base_grammar: ex.grammar.len(),
        base_trees: estimate_pcfg(&ex.train, None)?.len(),
        l_sizes: [
            (LSet::P, ex.l_of(LSet::P).len()),
            (LSet::N, ex.l_of(LSet::N).len()),
            (LSet::L0, ex.l_of(LSet::L0).len()),
        ],
        sizes,
        parsing,
    })
}

impl PipelineReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "grammar\t{}", self.base_grammar).unwrap();
        writeln!(s, "tree_grammar\t{}", self.base_trees).unwrap();
        for (l, n) in &self.l_sizes {
            writeln!(s, "|{l}|\t{n}").unwrap();
        }
        writeln!(s, "\nvariant\tLC_keep\tLC_full\tT_keep\tT_full").unwrap();
        for r in &self.sizes {
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                r.variant, r.grammar_keep, r.grammar_full, r.trees_keep, r.trees_full
            )
            .unwrap();
        }
        if !self.parsing.is_empty() {
            writeln!(s, "\nvariant\tsentences\tno_parse\tdetransform_failures\tmissing\tprecision\trecall").unwrap();
            for r in &self.parsing {
                let name = r.variant.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
                writeln!(
                    s,
                    "{name}\t{}\t{}\t{}\t{}\t{:.4}\t{:.4}",
                    r.sentences,
                    r.no_parse,
                    r.detransform_failures,
                    r.missing,
                    r.counts.precision(),
                    r.counts.recall()
                )
                .unwrap();
            }
        }
        s
    }
}
