//! Seeded random grammars and trees for property tests.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{Grammar, Production};
use crate::prune::prune_useless;
use crate::relation::cyclic_nonterminals;
use crate::symbol::Symbol;
use crate::tree::ParseTree;

#[derive(Clone, Copy, Debug)]
pub struct GrammarShape {
    pub max_nonterminals: usize,
    pub max_productions: usize,
    pub terminals: usize,
    pub max_rhs: usize,
    /// Probability that a production starts with its own LHS.
    pub left_recursion: f64,
}

impl Default for GrammarShape {
    fn default() -> Self {
        GrammarShape {
            max_nonterminals: 8,
            max_productions: 25,
            terminals: 3,
            max_rhs: 3,
            left_recursion: 0.25,
        }
    }
}

/// An epsilon-free grammar without unary cycles or useless productions.
/// Weights are proper per LHS when `weighted`, else all 1.
pub fn random_grammar(seed: u64, shape: &GrammarShape, weighted: bool) -> Grammar {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        if let Some(g) = attempt(&mut rng, shape, weighted) {
            return g;
        }
    }
}

fn attempt(rng: &mut ChaCha8Rng, shape: &GrammarShape, weighted: bool) -> Option<Grammar> {
    let k = rng.gen_range(2..=shape.max_nonterminals);
    let nts: Vec<Symbol> = (0..k).map(|i| Symbol::base(&format!("N{i}"))).collect();
    let ts: Vec<Symbol> = (0..shape.terminals)
        .map(|i| Symbol::base(&((b'a' + i as u8) as char).to_string()))
        .collect();
    let total = rng.gen_range(k..=shape.max_productions.max(k));
    let mut b = Grammar::builder(nts[0].clone());
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..total {
        let lhs = if i < k { nts[i].clone() } else { nts.choose(rng).unwrap().clone() };
        let len = rng.gen_range(1..=shape.max_rhs);
        let mut rhs = Vec::with_capacity(len);
        for j in 0..len {
            let s = if j == 0 && len > 1 && rng.gen_bool(shape.left_recursion) {
                lhs.clone()
            } else if rng.gen_bool(0.5) {
                nts.choose(rng).unwrap().clone()
            } else {
                ts.choose(rng).unwrap().clone()
            };
            rhs.push(s);
        }
        let p = Production::new(lhs, rhs);
        if seen.insert(p.clone()) {
            let w = if weighted { rng.gen_range(0.1..1.0) } else { 1.0 };
            b.add(p, w);
        }
    }
    let g = b.build().ok()?;
    if !cyclic_nonterminals(&g).is_empty() {
        return None;
    }
    let pruned = prune_useless(&g);
    if pruned.start_unproductive || pruned.grammar.len() < 2 {
        return None;
    }
    let g = pruned.grammar;
    Some(if weighted { normalize(&g) } else { g })
}

/// Scales weights so that each LHS sums to one.
pub fn normalize(g: &Grammar) -> Grammar {
    let totals = g.lhs_totals();
    let mut b = g.empty_like();
    for (p, w) in g.productions() {
        b.add(p.clone(), w / totals[&p.lhs]);
    }
    b.build().expect("same symbols")
}

/// Minimum tree height of each nonterminal; absent for unproductive ones.
fn min_heights(g: &Grammar) -> BTreeMap<Symbol, usize> {
    let mut h: BTreeMap<Symbol, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for (p, _) in g.productions() {
            let mut m = 0;
            let mut ok = true;
            for s in &p.rhs {
                if g.is_terminal(s) {
                    continue;
                }
                match h.get(s) {
                    Some(&x) => m = m.max(x),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && h.get(&p.lhs).is_none_or(|&x| m + 1 < x) {
                h.insert(p.lhs.clone(), m + 1);
                changed = true;
            }
        }
        if !changed {
            return h;
        }
    }
}

/// Samples derivation trees proportionally to production weights, with
/// productions restricted near `max_depth` so every tree is finite.
pub struct TreeSampler<'a> {
    g: &'a Grammar,
    heights: BTreeMap<Symbol, usize>,
    max_depth: usize,
    rng: ChaCha8Rng,
}

impl<'a> TreeSampler<'a> {
    pub fn new(g: &'a Grammar, seed: u64, max_depth: usize) -> Self {
        let heights = min_heights(g);
        let need = heights.get(g.start()).copied().unwrap_or(usize::MAX);
        TreeSampler {
            g,
            heights,
            max_depth: max_depth.max(need),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn height(&self, p: &Production) -> Option<usize> {
        let mut m = 0;
        for s in &p.rhs {
            if !self.g.is_terminal(s) {
                m = m.max(*self.heights.get(s)?);
            }
        }
        Some(m + 1)
    }

    pub fn sample(&mut self) -> ParseTree {
        let start = self.g.start().clone();
        self.node(&start, self.max_depth)
    }

    fn node(&mut self, x: &Symbol, budget: usize) -> ParseTree {
        let options: Vec<(&Production, f64)> = self
            .g
            .productions_of(x)
            .filter(|(p, w)| *w > 0.0 && self.height(p).is_some_and(|h| h <= budget))
            .collect();
        let total: f64 = options.iter().map(|(_, w)| w).sum();
        let mut r = self.rng.gen_range(0.0..total);
        let mut chosen = options[options.len() - 1].0;
        for (p, w) in &options {
            if r < *w {
                chosen = p;
                break;
            }
            r -= w;
        }
        let chosen = chosen.clone();
        let children = chosen
            .rhs
            .iter()
            .map(|s| {
                if self.g.is_terminal(s) {
                    ParseTree::Leaf(s.clone())
                } else {
                    self.node(s, budget - 1)
                }
            })
            .collect();
        ParseTree::node(x.clone(), children)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::tree_productions;

    #[test]
    fn grammars_meet_the_contract() {
        for seed in 0..50 {
            let g = random_grammar(seed, &GrammarShape::default(), true);
            assert!(g.is_epsilon_free());
            assert!(cyclic_nonterminals(&g).is_empty());
            assert!(g.len() <= 25);
            assert!(g.stats().nonterminal_count <= 8);
            assert!(g.is_proper(1e-9));
            assert!(prune_useless(&g).grammar.same_structure(&g));
        }
    }

    #[test]
    fn seeded_and_deterministic() {
        let a = random_grammar(7, &GrammarShape::default(), false);
        let b = random_grammar(7, &GrammarShape::default(), false);
        assert!(a.same_structure(&b));
    }

    #[test]
    fn sampled_trees_use_grammar_productions() {
        let g = random_grammar(3, &GrammarShape::default(), true);
        let mut s = TreeSampler::new(&g, 11, 8);
        for _ in 0..50 {
            let t = s.sample();
            assert_eq!(t.label(), Some(g.start()));
            for p in tree_productions(&t).keys() {
                assert!(g.contains(p), "{p}");
            }
        }
    }
}
