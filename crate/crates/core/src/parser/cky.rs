//! Exhaustive Viterbi CKY over n-ary weighted grammars.
//!
//! Epsilon productions are handled by computing the best empty derivation
//! of every nullable symbol and pre-composing it into each consuming
//! production; the dropped subtrees are rebuilt on output. Productions are
//! then left-binarized with one dotted symbol per rule prefix.
//!
//! Ties are broken by a total key: higher log weight, then lower production
//! index in grammar order, then lower epsilon variant, then leftmost split.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, BTreeSet, HashMap};

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::grammar::Grammar;
use crate::relation::nullable_symbols;
use crate::symbol::Symbol;
use crate::tree::ParseTree;

type Id = u32;

#[derive(Clone, Debug)]
struct Rule {
    lhs: Id,
    prod: usize,
    variant: u32,
    /// Per source RHS position: kept (chart child) or dropped (empty subtree).
    kept: Vec<bool>,
}

#[derive(Clone, Copy, Debug)]
struct Step {
    parent: Id,
    right: Id,
    logw: f64,
    rule: u32,
}

#[derive(Clone, Copy, Debug)]
struct Unary {
    lhs: Id,
    logw: f64,
    rule: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Back {
    Token,
    Unary { rule: u32, child: Id },
    Binary { step: u32, left: Id, split: u32 },
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    score: f64,
    key: (usize, u32, u32),
    back: Back,
}

impl Entry {
    fn beats(&self, other: &Entry) -> bool {
        self.score > other.score || (self.score == other.score && self.key < other.key)
    }
}

enum Closure {
    /// Symbols in an order where every unary child precedes its parents.
    Topological(Vec<u32>),
    Dijkstra,
}

/// A grammar compiled for repeated parsing. Cheap to share across threads.
pub struct Parser {
    grammar: Grammar,
    ids: HashMap<Symbol, Id>,
    syms: Vec<Symbol>,
    start: Option<Id>,
    rules: Vec<Rule>,
    steps: Vec<Step>,
    by_left: HashMap<Id, Vec<u32>>,
    unary_by_child: Vec<Vec<Unary>>,
    closure: Closure,
    /// Best empty derivation: log weight and production index.
    nulls: Vec<Option<(f64, usize)>>,
}

const MAX_NULLABLE_POSITIONS: usize = 20;

impl Parser {
    pub fn new(g: &Grammar) -> Result<Parser> {
        let mut syms: Vec<Symbol> = g.nonterminals().iter().cloned().collect();
        syms.extend(g.terminals().iter().cloned());
        let ids: HashMap<Symbol, Id> = syms.iter().enumerate().map(|(i, s)| (s.clone(), i as Id)).collect();
        let n_real = syms.len();

        let nulls = best_nulls(g, &ids, n_real)?;

        let mut rules = Vec::new();
        let mut steps = Vec::new();
        let mut by_left: HashMap<Id, Vec<u32>> = HashMap::new();
        let mut unary_by_child: Vec<Vec<Unary>> = vec![Vec::new(); n_real];
        let mut next_dotted = n_real as Id;

        for (pi, (p, w)) in g.productions().enumerate() {
            if w <= 0.0 || p.is_epsilon() {
                continue;
            }
            let rhs: Vec<Id> = p.rhs.iter().map(|s| ids[s]).collect();
            let positions: Vec<usize> = (0..rhs.len()).filter(|&k| nulls[rhs[k] as usize].is_some()).collect();
            if positions.len() > MAX_NULLABLE_POSITIONS {
                return Err(Error::GuardExceeded {
                    what: "nullable symbols in one production",
                    limit: MAX_NULLABLE_POSITIONS,
                    got: positions.len(),
                });
            }
            for mask in 0u32..(1 << positions.len()) {
                let mut kept = vec![true; rhs.len()];
                let mut logw = w.ln();
                for (b, &k) in positions.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        kept[k] = false;
                        logw += nulls[rhs[k] as usize].unwrap().0;
                    }
                }
                let body: Vec<Id> = rhs.iter().zip(&kept).filter(|(_, &k)| k).map(|(&s, _)| s).collect();
                if body.is_empty() || logw == f64::NEG_INFINITY {
                    continue;
                }
                let rule = rules.len() as u32;
                let lhs = ids[&p.lhs];
                rules.push(Rule {
                    lhs,
                    prod: pi,
                    variant: mask,
                    kept,
                });
                if body.len() == 1 {
                    unary_by_child[body[0] as usize].push(Unary { lhs, logw, rule });
                    continue;
                }
                let mut prev = body[0];
                for t in 1..body.len() {
                    let last = t == body.len() - 1;
                    let parent = if last {
                        lhs
                    } else {
                        next_dotted += 1;
                        next_dotted - 1
                    };
                    by_left.entry(prev).or_default().push(steps.len() as u32);
                    steps.push(Step {
                        parent,
                        right: body[t],
                        logw: if last { logw } else { 0.0 },
                        rule,
                    });
                    prev = parent;
                }
            }
        }

        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n_real, 0);
        for _ in 0..n_real {
            graph.add_node(());
        }
        for (child, us) in unary_by_child.iter().enumerate() {
            for u in us {
                graph.add_edge((child as u32).into(), u.lhs.into(), ());
            }
        }
        let closure = match toposort(&graph, None) {
            Ok(order) => {
                let mut rank = vec![0u32; n_real];
                for (r, n) in order.into_iter().enumerate() {
                    rank[n.index()] = r as u32;
                }
                Closure::Topological(rank)
            }
            Err(_) => {
                if unary_by_child.iter().flatten().any(|u| u.logw > 0.0) {
                    return Err(Error::DerivationCycle(
                        "unary cycle with a production weight above 1".into(),
                    ));
                }
                Closure::Dijkstra
            }
        };

        Ok(Parser {
            grammar: g.clone(),
            start: ids.get(g.start()).copied(),
            ids,
            syms,
            rules,
            steps,
            by_left,
            unary_by_child,
            closure,
            nulls,
        })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    /// The best parse of `tokens` rooted at the start symbol, with its
    /// natural-log weight; `None` when there is no parse.
    pub fn parse(&self, tokens: &[Symbol]) -> Result<Option<(ParseTree, f64)>> {
        if tokens.is_empty() {
            return Err(Error::EmptySentence);
        }
        let oov: BTreeSet<String> = tokens
            .iter()
            .filter(|t| !self.ids.get(*t).is_some_and(|&i| self.grammar.is_terminal(&self.syms[i as usize])))
            .map(|t| t.to_string())
            .collect();
        if !oov.is_empty() {
            return Err(Error::OutOfVocabulary(oov.into_iter().collect()));
        }
        let Some(start) = self.start else {
            return Ok(None);
        };
        let n = tokens.len();
        let mut chart = Chart::new(n);
        for (i, t) in tokens.iter().enumerate() {
            let cell = chart.cell_mut(i, i + 1);
            cell.insert(
                self.ids[t],
                Entry {
                    score: 0.0,
                    key: (0, 0, 0),
                    back: Back::Token,
                },
            );
            self.close_unary(cell);
        }
        for len in 2..=n {
            for i in 0..=n - len {
                let j = i + len;
                let mut cell: HashMap<Id, Entry> = HashMap::new();
                for k in i + 1..j {
                    let (left, right) = (chart.cell(i, k), chart.cell(k, j));
                    for (&l, le) in left {
                        let Some(steps) = self.by_left.get(&l) else { continue };
                        for &si in steps {
                            let s = self.steps[si as usize];
                            let Some(re) = right.get(&s.right) else { continue };
                            let r = &self.rules[s.rule as usize];
                            let cand = Entry {
                                score: le.score + re.score + s.logw,
                                key: (r.prod, r.variant, k as u32),
                                back: Back::Binary {
                                    step: si,
                                    left: l,
                                    split: k as u32,
                                },
                            };
                            match cell.get(&s.parent) {
                                Some(old) if !cand.beats(old) => {}
                                _ => {
                                    cell.insert(s.parent, cand);
                                }
                            }
                        }
                    }
                }
                self.close_unary(&mut cell);
                *chart.cell_mut(i, j) = cell;
            }
        }
        let Some(root) = chart.cell(0, n).get(&start) else {
            return Ok(None);
        };
        let score = root.score;
        Ok(Some((self.build(&chart, start, 0, n), score)))
    }

    fn unary_candidate(&self, u: &Unary, child: Id, child_score: f64) -> Entry {
        let r = &self.rules[u.rule as usize];
        Entry {
            score: child_score + u.logw,
            key: (r.prod, r.variant, 0),
            back: Back::Unary { rule: u.rule, child },
        }
    }

    fn close_unary(&self, cell: &mut HashMap<Id, Entry>) {
        let n_real = self.unary_by_child.len() as Id;
        match &self.closure {
            Closure::Topological(rank) => {
                let mut heap: BinaryHeap<Reverse<(u32, Id)>> = cell
                    .keys()
                    .filter(|&&s| s < n_real)
                    .map(|&s| Reverse((rank[s as usize], s)))
                    .collect();
                let mut queued: BTreeSet<Id> = cell.keys().copied().collect();
                while let Some(Reverse((_, x))) = heap.pop() {
                    let xs = cell[&x].score;
                    for u in &self.unary_by_child[x as usize] {
                        let cand = self.unary_candidate(u, x, xs);
                        match cell.get(&u.lhs) {
                            Some(old) if !cand.beats(old) => {}
                            _ => {
                                cell.insert(u.lhs, cand);
                                if queued.insert(u.lhs) {
                                    heap.push(Reverse((rank[u.lhs as usize], u.lhs)));
                                }
                            }
                        }
                    }
                }
            }
            Closure::Dijkstra => {
                let mut heap: BinaryHeap<HeapItem> = cell
                    .iter()
                    .filter(|(&s, _)| s < n_real)
                    .map(|(&s, e)| HeapItem(*e, s))
                    .collect();
                let mut done: BTreeSet<Id> = BTreeSet::new();
                while let Some(HeapItem(e, x)) = heap.pop() {
                    if done.contains(&x) || cell[&x].back != e.back || cell[&x].score != e.score {
                        continue;
                    }
                    done.insert(x);
                    for u in &self.unary_by_child[x as usize] {
                        if done.contains(&u.lhs) {
                            continue;
                        }
                        let cand = self.unary_candidate(u, x, e.score);
                        match cell.get(&u.lhs) {
                            Some(old) if !cand.beats(old) => {}
                            _ => {
                                cell.insert(u.lhs, cand);
                                heap.push(HeapItem(cand, u.lhs));
                            }
                        }
                    }
                }
            }
        }
    }

    fn build(&self, chart: &Chart, sym: Id, i: usize, j: usize) -> ParseTree {
        let e = chart.cell(i, j)[&sym];
        match e.back {
            Back::Token => ParseTree::Leaf(self.syms[sym as usize].clone()),
            Back::Unary { rule, child } => self.expand(chart, rule, &[(child, i, j)]),
            Back::Binary { step, left, split } => {
                let s = self.steps[step as usize];
                let mut parts = vec![(s.right, split as usize, j)];
                let (mut l, mut end) = (left, split as usize);
                while l as usize >= self.syms.len() {
                    match chart.cell(i, end)[&l].back {
                        Back::Binary { step, left, split } => {
                            parts.push((self.steps[step as usize].right, split as usize, end));
                            l = left;
                            end = split as usize;
                        }
                        _ => unreachable!("dotted symbols are only built by binary steps"),
                    }
                }
                parts.push((l, i, end));
                parts.reverse();
                self.expand(chart, s.rule, &parts)
            }
        }
    }

    fn expand(&self, chart: &Chart, rule: u32, parts: &[(Id, usize, usize)]) -> ParseTree {
        let r = &self.rules[rule as usize];
        let (p, _) = self.grammar.production(r.prod);
        let mut parts = parts.iter();
        let children = p
            .rhs
            .iter()
            .zip(&r.kept)
            .map(|(s, &kept)| {
                if kept {
                    let &(c, a, b) = parts.next().expect("part");
                    self.build(chart, c, a, b)
                } else {
                    self.null_tree(self.ids[s])
                }
            })
            .collect();
        ParseTree::node(self.syms[r.lhs as usize].clone(), children)
    }

    fn null_tree(&self, sym: Id) -> ParseTree {
        let (_, pi) = self.nulls[sym as usize].expect("nullable");
        let (p, _) = self.grammar.production(pi);
        let children = if p.is_epsilon() {
            vec![ParseTree::Epsilon]
        } else {
            p.rhs.iter().map(|s| self.null_tree(self.ids[s])).collect()
        };
        ParseTree::node(p.lhs.clone(), children)
    }
}

struct HeapItem(Entry, Id);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .score
            .total_cmp(&other.0.score)
            .then_with(|| other.0.key.cmp(&self.0.key))
            .then_with(|| other.1.cmp(&self.1))
    }
}

struct Chart {
    n: usize,
    cells: Vec<HashMap<Id, Entry>>,
}

impl Chart {
    fn new(n: usize) -> Self {
        Chart {
            n,
            cells: (0..(n + 1) * (n + 1)).map(|_| HashMap::new()).collect(),
        }
    }

    fn cell(&self, i: usize, j: usize) -> &HashMap<Id, Entry> {
        &self.cells[i * (self.n + 1) + j]
    }

    fn cell_mut(&mut self, i: usize, j: usize) -> &mut HashMap<Id, Entry> {
        &mut self.cells[i * (self.n + 1) + j]
    }
}

/// Best empty derivation per symbol by Bellman-Ford relaxation.
fn best_nulls(g: &Grammar, ids: &HashMap<Symbol, Id>, n: usize) -> Result<Vec<Option<(f64, usize)>>> {
    let nullable = nullable_symbols(g);
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    let candidates: Vec<(usize, Id, Vec<Id>, f64)> = g
        .productions()
        .enumerate()
        .filter(|(_, (p, w))| *w > 0.0 && p.rhs.iter().all(|s| nullable.contains(s)))
        .map(|(i, (p, w))| (i, ids[&p.lhs], p.rhs.iter().map(|s| ids[s]).collect(), w.ln()))
        .collect();
    for round in 0..=nullable.len() + 1 {
        let mut changed = false;
        for (pi, lhs, rhs, logw) in &candidates {
            let mut score = *logw;
            for s in rhs {
                match best[*s as usize] {
                    Some((b, _)) => score += b,
                    None => {
                        score = f64::NEG_INFINITY;
                        break;
                    }
                }
            }
            if score == f64::NEG_INFINITY {
                continue;
            }
            if best[*lhs as usize].is_none_or(|(b, _)| score > b) {
                best[*lhs as usize] = Some((score, *pi));
                changed = true;
            }
        }
        if !changed {
            return Ok(best);
        }
        if round > nullable.len() {
            break;
        }
    }
    Err(Error::DerivationCycle("empty derivations with weight above 1".into()))
}

/// Parses one sentence; see [`Parser`] for repeated use.
pub fn cky_parse(g: &Grammar, tokens: &[Symbol]) -> Result<Option<(ParseTree, f64)>> {
    Parser::new(g)?.parse(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;
    use crate::relation::left_recursive_set;
    use crate::transform::{lc_transform, TransformOptions};
    use crate::tree_transform::lc_tree_detransform;

    fn toks(s: &str) -> Vec<Symbol> {
        s.split_whitespace().map(Symbol::base).collect()
    }

    #[test]
    fn unique_left_recursive_parse() {
        let g = parse_grammar("0.4 S -> S a\n0.6 S -> b").unwrap();
        let (t, lw) = cky_parse(&g, &toks("b a a")).unwrap().unwrap();
        assert_eq!(t.to_string(), "(S (S (S b) a) a)");
        assert!((lw.exp() - 0.096).abs() < 1e-12);
        assert!(cky_parse(&g, &toks("a b")).unwrap().is_none());
    }

    #[test]
    fn transformed_grammar_keeps_weight() {
        let g = parse_grammar("0.4 S -> S a\n0.6 S -> b").unwrap();
        let l = left_recursive_set(&g).unwrap();
        let opts = TransformOptions::default().weighted(true);
        let t = lc_transform(&g, &l, &opts).unwrap();
        let (tree, lw) = cky_parse(&t.grammar, &toks("b a a")).unwrap().unwrap();
        assert_eq!(tree.to_string(), "(S b (LC(S;S) a (LC(S;S) a (LC(S;S) EPS))))");
        assert!((lw.exp() - 0.096).abs() < 1e-12);
        assert_eq!(
            lc_tree_detransform(&tree, &opts).unwrap().to_string(),
            "(S (S (S b) a) a)"
        );
    }

    #[test]
    fn ties_prefer_earlier_production() {
        let g = parse_grammar("0.4 S -> S S\n0.6 S -> a").unwrap();
        let (t, lw) = cky_parse(&g, &toks("a a a")).unwrap().unwrap();
        assert!((lw.exp() - 0.03456).abs() < 1e-12);
        // Both bracketings tie; the leftmost final split wins.
        assert_eq!(t.to_string(), "(S (S a) (S (S a) (S a)))");
        let again = cky_parse(&g, &toks("a a a")).unwrap().unwrap();
        assert_eq!(again.0, t);
    }

    #[test]
    fn nary_and_unary() {
        let g = parse_grammar("S -> A B C\nA -> X\nX -> a\nB -> b\nC -> c\nS -> A").unwrap();
        let (t, _) = cky_parse(&g, &toks("a b c")).unwrap().unwrap();
        assert_eq!(t.to_string(), "(S (A (X a)) (B b) (C c))");
        let (t, _) = cky_parse(&g, &toks("a")).unwrap().unwrap();
        assert_eq!(t.to_string(), "(S (A (X a)))");
    }

    #[test]
    fn errors() {
        let g = parse_grammar("S -> a").unwrap();
        assert!(matches!(cky_parse(&g, &[]), Err(Error::EmptySentence)));
        match cky_parse(&g, &toks("a q z")) {
            Err(Error::OutOfVocabulary(v)) => assert_eq!(v, vec!["q".to_string(), "z".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(cky_parse(&g, &toks("S")), Err(Error::OutOfVocabulary(_))));
    }

    #[test]
    fn general_epsilon_rebuilt() {
        let g = parse_grammar("S -> a X Y\nX ->\nY -> Z\nZ ->\nY -> b").unwrap();
        let (t, _) = cky_parse(&g, &toks("a")).unwrap().unwrap();
        assert_eq!(t.to_string(), "(S a (X EPS) (Y (Z EPS)))");
        let (t, _) = cky_parse(&g, &toks("a b")).unwrap().unwrap();
        assert_eq!(t.to_string(), "(S a (X EPS) (Y b))");
    }

    #[test]
    fn cyclic_unary_closure() {
        let g = parse_grammar("0.5 A -> B\n0.5 B -> A\n0.5 A -> a\n0.5 B -> b").unwrap();
        let (t, lw) = cky_parse(&g, &toks("b")).unwrap().unwrap();
        assert_eq!(t.to_string(), "(A (B b))");
        assert!((lw.exp() - 0.25).abs() < 1e-12);
    }
}
