//! Brute-force enumeration oracles for small inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::grammar::Grammar;
use crate::relation::nullable_symbols;
use crate::symbol::Symbol;
use crate::tree::ParseTree;

pub const MAX_STRING_LEN: usize = 12;
pub const MAX_SENTENCE_LEN: usize = 8;

type Strings = BTreeSet<Vec<Symbol>>;

/// Every terminal string of length at most `max_len` derivable from the
/// start symbol.
pub fn enumerate_strings(g: &Grammar, max_len: usize) -> Result<Strings> {
    if max_len > MAX_STRING_LEN {
        return Err(Error::GuardExceeded {
            what: "string length",
            limit: MAX_STRING_LEN,
            got: max_len,
        });
    }
    let nullable = nullable_symbols(g);
    // by_len[n][X]: strings of length n derived from X
    let mut by_len: Vec<BTreeMap<Symbol, Strings>> = Vec::with_capacity(max_len + 1);
    let mut zero = BTreeMap::new();
    for x in &nullable {
        zero.insert(x.clone(), Strings::from([vec![]]));
    }
    by_len.push(zero);

    for n in 1..=max_len {
        let mut cur: BTreeMap<Symbol, Strings> = BTreeMap::new();
        if n == 1 {
            for w in g.terminals() {
                cur.insert(w.clone(), Strings::from([vec![w.clone()]]));
            }
        }
        // Iterate to a fixpoint: parts of full length n depend on `cur`.
        loop {
            let mut changed = false;
            for (p, w) in g.productions() {
                if w <= 0.0 || p.is_epsilon() {
                    continue;
                }
                let mut found = Strings::new();
                expand(&p.rhs, n, &by_len, &cur, &mut Vec::new(), &mut found);
                if found.is_empty() {
                    continue;
                }
                let entry = cur.entry(p.lhs.clone()).or_default();
                let before = entry.len();
                entry.extend(found);
                changed |= entry.len() != before;
            }
            if !changed {
                break;
            }
        }
        by_len.push(cur);
    }
    let mut out = Strings::new();
    for level in &by_len {
        if let Some(s) = level.get(g.start()) {
            out.extend(s.iter().cloned());
        }
    }
    Ok(out)
}

fn strings_of<'a>(
    s: &Symbol,
    len: usize,
    n: usize,
    by_len: &'a [BTreeMap<Symbol, Strings>],
    cur: &'a BTreeMap<Symbol, Strings>,
) -> Option<&'a Strings> {
    if len == n {
        cur.get(s)
    } else {
        by_len[len].get(s)
    }
}

fn expand(
    rhs: &[Symbol],
    remaining: usize,
    by_len: &[BTreeMap<Symbol, Strings>],
    cur: &BTreeMap<Symbol, Strings>,
    prefix: &mut Vec<Symbol>,
    out: &mut Strings,
) {
    let n = by_len.len();
    let Some((first, rest)) = rhs.split_first() else {
        if remaining == 0 {
            out.insert(prefix.clone());
        }
        return;
    };
    for len in 0..=remaining {
        let Some(options) = strings_of(first, len, n, by_len, cur) else { continue };
        for s in options.iter() {
            let mark = prefix.len();
            prefix.extend(s.iter().cloned());
            expand(rest, remaining - len, by_len, cur, prefix, out);
            prefix.truncate(mark);
        }
    }
}

type Parses = Vec<(ParseTree, f64)>;

struct Enumerator<'a> {
    g: &'a Grammar,
    tokens: &'a [Symbol],
    nullable: BTreeSet<Symbol>,
    memo: HashMap<(Symbol, usize, usize), std::rc::Rc<Parses>>,
    active: BTreeSet<(Symbol, usize, usize)>,
}

impl Enumerator<'_> {
    fn parses(&mut self, x: &Symbol, i: usize, j: usize) -> Result<std::rc::Rc<Parses>> {
        if self.g.is_terminal(x) {
            let hit = j == i + 1 && &self.tokens[i] == x;
            return Ok(std::rc::Rc::new(if hit {
                vec![(ParseTree::Leaf(x.clone()), 1.0)]
            } else {
                vec![]
            }));
        }
        if i == j && !self.nullable.contains(x) {
            return Ok(std::rc::Rc::new(vec![]));
        }
        let key = (x.clone(), i, j);
        if let Some(p) = self.memo.get(&key) {
            return Ok(p.clone());
        }
        if !self.active.insert(key.clone()) {
            return Err(Error::DerivationCycle(format!("{x} over {i}..{j}")));
        }
        let mut out = Parses::new();
        let g = self.g;
        for (p, w) in g.productions_of(x) {
            if w <= 0.0 {
                continue;
            }
            if p.is_epsilon() {
                if i == j {
                    out.push((ParseTree::node(x.clone(), vec![ParseTree::Epsilon]), w));
                }
                continue;
            }
            self.extend(&p.rhs, i, j, w, &mut out, x)?;
        }
        self.active.remove(&key);
        let rc = std::rc::Rc::new(out);
        self.memo.insert(key, rc.clone());
        Ok(rc)
    }

    /// Splits `i..j` over `rhs` in every way and appends complete parses.
    fn extend(
        &mut self,
        rhs: &[Symbol],
        i: usize,
        j: usize,
        weight: f64,
        out: &mut Parses,
        lhs: &Symbol,
    ) -> Result<()> {
        let splits = self.splits(rhs, i, j)?;
        for bounds in splits {
            let mut acc: Vec<(Vec<ParseTree>, f64)> = vec![(vec![], weight)];
            for (k, s) in rhs.iter().enumerate() {
                // Check cheaper empty parts before any part spanning all of i..j.
                let sub = self.parses(s, bounds[k], bounds[k + 1])?;
                let mut next = Vec::with_capacity(acc.len() * sub.len());
                for (kids, w) in &acc {
                    for (t, tw) in sub.iter() {
                        let mut kids = kids.clone();
                        kids.push(t.clone());
                        next.push((kids, w * tw));
                    }
                }
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            for (kids, w) in acc {
                out.push((ParseTree::node(lhs.clone(), kids), w));
            }
        }
        Ok(())
    }

    /// Boundary vectors; parts are empty only for nullable symbols. Parts
    /// covering the whole span are ordered after empty-span checks by
    /// requiring the empty parts to be derivable first.
    fn splits(&mut self, rhs: &[Symbol], i: usize, j: usize) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut cur = vec![i];
        self.split_rec(rhs, 0, j, &mut cur, &mut out)?;
        Ok(out)
    }

    fn split_rec(
        &mut self,
        rhs: &[Symbol],
        k: usize,
        j: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<()> {
        let at = *cur.last().unwrap();
        if k == rhs.len() {
            if at == j {
                out.push(cur.clone());
            }
            return Ok(());
        }
        let s = &rhs[k];
        let min = if self.g.is_terminal(s) || !self.nullable.contains(s) { 1 } else { 0 };
        let max = if self.g.is_terminal(s) { 1 } else { j - at };
        for len in min..=max.min(j - at) {
            if len == 0 && self.parses(s, at, at)?.is_empty() {
                continue;
            }
            cur.push(at + len);
            self.split_rec(rhs, k + 1, j, cur, out)?;
            cur.pop();
        }
        Ok(())
    }
}

/// Every parse of `tokens` rooted at the start symbol, with its weight.
pub fn enumerate_parses(g: &Grammar, tokens: &[Symbol]) -> Result<Vec<(ParseTree, f64)>> {
    if tokens.len() > MAX_SENTENCE_LEN {
        return Err(Error::GuardExceeded {
            what: "sentence length",
            limit: MAX_SENTENCE_LEN,
            got: tokens.len(),
        });
    }
    let mut e = Enumerator {
        g,
        tokens,
        nullable: nullable_symbols(g),
        memo: HashMap::new(),
        active: BTreeSet::new(),
    };
    let out = e.parses(g.start(), 0, tokens.len())?;
    Ok(out.as_ref().clone())
}

/// Sum of parse weights.
pub fn string_weight(g: &Grammar, tokens: &[Symbol]) -> Result<f64> {
    Ok(enumerate_parses(g, tokens)?.iter().map(|(_, w)| w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    fn strs(v: &[&str]) -> Strings {
        v.iter()
            .map(|s| s.split_whitespace().map(Symbol::base).collect())
            .collect()
    }

    fn toks(s: &str) -> Vec<Symbol> {
        s.split_whitespace().map(Symbol::base).collect()
    }

    #[test]
    fn strings_of_left_recursive_grammar() {
        let g = parse_grammar("S -> S a\nS -> b").unwrap();
        assert_eq!(enumerate_strings(&g, 3).unwrap(), strs(&["b", "b a", "b a a"]));
        assert!(enumerate_strings(&g, 0).unwrap().is_empty());
    }

    #[test]
    fn strings_of_np_pp() {
        let g = parse_grammar("NP -> NP PP\nNP -> d n\nPP -> p NP").unwrap();
        assert_eq!(enumerate_strings(&g, 5).unwrap(), strs(&["d n", "d n p d n"]));
    }

    #[test]
    fn strings_with_epsilon() {
        let g = parse_grammar("S -> b L\nL -> a L\nL ->").unwrap();
        assert_eq!(enumerate_strings(&g, 3).unwrap(), strs(&["b", "b a", "b a a"]));
    }

    #[test]
    fn guard() {
        let g = parse_grammar("S -> a").unwrap();
        assert!(matches!(enumerate_strings(&g, 13), Err(Error::GuardExceeded { .. })));
        assert!(matches!(
            enumerate_parses(&g, &toks("a a a a a a a a a")),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn ambiguous_parses() {
        let g = parse_grammar("0.4 S -> S S\n0.6 S -> a").unwrap();
        let ps = enumerate_parses(&g, &toks("a a a")).unwrap();
        assert_eq!(ps.len(), 2);
        for (_, w) in &ps {
            assert!((w - 0.03456).abs() < 1e-15);
        }
        assert!((string_weight(&g, &toks("a a a")).unwrap() - 0.06912).abs() < 1e-15);
        assert!(enumerate_parses(&g, &toks("a b")).unwrap().is_empty());
    }

    #[test]
    fn epsilon_parses_and_cycles() {
        let g = parse_grammar("S -> b L\nL -> a L\nL ->").unwrap();
        let ps = enumerate_parses(&g, &toks("b a")).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps[0].0.to_string(), "(S b (L a (L EPS)))");
        let cyc = parse_grammar("S -> A\nA -> S\nA -> a").unwrap();
        assert!(matches!(enumerate_parses(&cyc, &toks("a")), Err(Error::DerivationCycle(_))));
        // A production that needs an underivable empty part is no cycle.
        let ok = parse_grammar("S -> S X\nX -> x\nS -> a").unwrap();
        assert_eq!(enumerate_parses(&ok, &toks("a x x")).unwrap().len(), 1);
    }
}
