//! Relative-frequency PCFG estimation from trees.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production};
use crate::symbol::Symbol;
use crate::tree::{tree_productions, ParseTree};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountTable {
    counts: BTreeMap<Production, u64>,
    lhs_totals: BTreeMap<Symbol, u64>,
}

impl CountTable {
    pub fn from_corpus(corpus: &[ParseTree]) -> Self {
        corpus
            .par_iter()
            .map(|t| {
                let mut c = CountTable::default();
                for (p, n) in tree_productions(t) {
                    c.add(p, n as u64);
                }
                c
            })
            .reduce(CountTable::default, |mut a, b| {
                for (p, n) in b.counts {
                    a.add(p, n);
                }
                a
            })
    }

    fn add(&mut self, p: Production, n: u64) {
        *self.lhs_totals.entry(p.lhs.clone()).or_insert(0) += n;
        *self.counts.entry(p).or_insert(0) += n;
    }

    pub fn count(&self, p: &Production) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn lhs_total(&self, a: &Symbol) -> u64 {
        self.lhs_totals.get(a).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Production, u64)> {
        self.counts.iter().map(|(p, &n)| (p, n))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Maximum-likelihood PCFG of `corpus`. Without `start`, the root label of
/// the first tree is used; every root must match it. Productions are listed
/// in sorted order, independent of corpus order.
pub fn estimate_pcfg(corpus: &[ParseTree], start: Option<&Symbol>) -> Result<Grammar> {
    let first = corpus.first().ok_or(Error::EmptyCorpus)?;
    let start = match start {
        Some(s) => s.clone(),
        None => first.label().cloned().ok_or(Error::EmptyCorpus)?,
    };
    if let Some(t) = corpus.iter().find(|t| t.label() != Some(&start)) {
        return Err(Error::RootMismatch {
            expected: start.to_string(),
            found: t.label().map(|s| s.to_string()).unwrap_or_default(),
        });
    }
    let table = CountTable::from_corpus(corpus);
    let mut b = Grammar::builder(start);
    for (p, n) in table.iter() {
        b.add(p.clone(), n as f64 / table.lhs_total(&p.lhs) as f64);
    }
    b.build()
}

/// Product of the weights of the productions used in `t`.
pub fn tree_weight(t: &ParseTree, g: &Grammar) -> Result<f64> {
    let mut w = 1.0;
    for (p, n) in tree_productions(t) {
        let pw = g.weight(&p).ok_or_else(|| Error::UnknownProduction(p.to_string()))?;
        w *= pw.powi(n as i32);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::read_trees;

    #[test]
    fn two_tree_estimate() {
        let c = read_trees("(S (A a)(A a))\n(S (A a)(B b))").unwrap();
        let g = estimate_pcfg(&c, None).unwrap();
        let w = |s: &str| g.weight(&Production::parse(s).unwrap()).unwrap();
        assert_eq!(w("S -> A A"), 0.5);
        assert_eq!(w("S -> A B"), 0.5);
        assert_eq!(w("A -> a"), 1.0);
        assert_eq!(w("B -> b"), 1.0);
        assert_eq!(g.len(), 4);
        assert!(g.is_proper(1e-9));
    }

    #[test]
    fn three_of_four() {
        let c = read_trees("(S (S (S (S b) a) a) c)").unwrap();
        let g = estimate_pcfg(&c, None).unwrap();
        assert_eq!(g.weight(&Production::parse("S -> S a").unwrap()), Some(0.5));
        let c = read_trees("(S x) (S x) (S x) (S y)").unwrap();
        let g = estimate_pcfg(&c, None).unwrap();
        assert_eq!(g.weight(&Production::parse("S -> x").unwrap()), Some(0.75));
    }

    #[test]
    fn single_tree_weights_are_one() {
        let c = read_trees("(S (NP (d) (n)) (VP (v)))").unwrap();
        let g = estimate_pcfg(&c, None).unwrap();
        assert!(g.productions().all(|(_, w)| w == 1.0));
    }

    #[test]
    fn order_independent() {
        let mut c = read_trees("(S (A a)(A a))\n(S (A a)(B b))\n(S (B b))").unwrap();
        let g1 = estimate_pcfg(&c, None).unwrap();
        c.reverse();
        let g2 = estimate_pcfg(&c, None).unwrap();
        assert_eq!(crate::grammar::write_grammar(&g1), crate::grammar::write_grammar(&g2));
    }

    #[test]
    fn errors() {
        assert!(matches!(estimate_pcfg(&[], None), Err(Error::EmptyCorpus)));
        let c = read_trees("(S a) (T b)").unwrap();
        assert!(matches!(estimate_pcfg(&c, None), Err(Error::RootMismatch { .. })));
    }
}
