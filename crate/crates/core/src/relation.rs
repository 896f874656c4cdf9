//! Closure relations over grammars and left-recursion analysis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production};
use crate::symbol::Symbol;

pub type ProductionSet = BTreeSet<Production>;

/// A set of `(nonterminal, symbol)` pairs, indexed by the first component.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct PairRelation {
    pairs: BTreeMap<Symbol, BTreeSet<Symbol>>,
}

impl PairRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, d: Symbol, x: Symbol) -> bool {
        self.pairs.entry(d).or_default().insert(x)
    }

    pub fn contains(&self, d: &Symbol, x: &Symbol) -> bool {
        self.pairs.get(d).is_some_and(|s| s.contains(x))
    }

    /// All `X` with `(d, X)` in the relation.
    pub fn image(&self, d: &Symbol) -> impl Iterator<Item = &Symbol> {
        self.pairs.get(d).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.pairs.values().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Symbol)> {
        self.pairs
            .iter()
            .flat_map(|(d, xs)| xs.iter().map(move |x| (d, x)))
    }

    pub fn is_subset(&self, other: &PairRelation) -> bool {
        self.iter().all(|(d, x)| other.contains(d, x))
    }

    pub fn to_set(&self) -> BTreeSet<(Symbol, Symbol)> {
        self.iter().map(|(d, x)| (d.clone(), x.clone())).collect()
    }
}

impl std::fmt::Debug for PairRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set()
            .entries(self.iter().map(|(d, x)| format!("({d},{x})")))
            .finish()
    }
}

fn check_subset(g: &Grammar, l: &ProductionSet) -> Result<()> {
    match l.iter().find(|p| !g.contains(p)) {
        Some(p) => Err(Error::NotInGrammar(p.to_string())),
        None => Ok(()),
    }
}

/// `C -> B` edges for every `C -> B beta` in the given set, tagged with
/// whether `beta` is nonempty.
fn first_edges(l: &ProductionSet) -> BTreeMap<Symbol, Vec<(Symbol, bool)>> {
    let mut edges: BTreeMap<Symbol, Vec<(Symbol, bool)>> = BTreeMap::new();
    for p in l {
        if let Some(b) = p.first() {
            edges
                .entry(p.lhs.clone())
                .or_default()
                .push((b.clone(), p.rhs.len() > 1));
        }
    }
    edges
}

/// `(D, X)` such that `D =>*_L X gamma` for some gamma.
pub fn left_corner_relation(g: &Grammar, l: &ProductionSet) -> Result<PairRelation> {
    check_subset(g, l)?;
    let edges = first_edges(l);
    let mut rel = PairRelation::new();
    for d in g.nonterminals() {
        let mut seen = BTreeSet::from([d.clone()]);
        let mut queue = VecDeque::from([d.clone()]);
        while let Some(c) = queue.pop_front() {
            for (b, _) in edges.get(&c).into_iter().flatten() {
                if seen.insert(b.clone()) {
                    queue.push_back(b.clone());
                }
            }
        }
        for x in seen {
            rel.insert(d.clone(), x);
        }
    }
    Ok(rel)
}

/// `(D, X)` such that `D =>*_L X gamma` with gamma nonempty.
pub fn strict_left_corner_relation(g: &Grammar, l: &ProductionSet) -> Result<PairRelation> {
    check_subset(g, l)?;
    let edges = first_edges(l);
    let mut rel = PairRelation::new();
    for d in g.nonterminals() {
        let mut seen: BTreeSet<(Symbol, bool)> = BTreeSet::from([(d.clone(), false)]);
        let mut queue = VecDeque::from([(d.clone(), false)]);
        while let Some((c, flag)) = queue.pop_front() {
            for (b, nonempty) in edges.get(&c).into_iter().flatten() {
                let next = (b.clone(), flag || *nonempty);
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
        for (x, flag) in seen {
            if flag {
                rel.insert(d.clone(), x);
            }
        }
    }
    Ok(rel)
}

fn unary_closure(g: &Grammar, l: &ProductionSet, reflexive: bool) -> Result<PairRelation> {
    check_subset(g, l)?;
    let mut edges: BTreeMap<&Symbol, Vec<&Symbol>> = BTreeMap::new();
    for p in l.iter().filter(|p| p.is_unary()) {
        edges.entry(&p.lhs).or_default().push(&p.rhs[0]);
    }
    let mut rel = PairRelation::new();
    for d in g.nonterminals() {
        if reflexive {
            rel.insert(d.clone(), d.clone());
        }
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&Symbol> = edges.get(d).into_iter().flatten().copied().collect();
        while let Some(b) = queue.pop_front() {
            if seen.insert(b) {
                queue.extend(edges.get(b).into_iter().flatten().copied());
            }
        }
        for x in seen {
            rel.insert(d.clone(), x.clone());
        }
    }
    Ok(rel)
}

/// `(D, X)` such that `D =>*_L X` through unary productions of `L`
/// (reflexive on nonterminals).
pub fn unary_chain_relation(g: &Grammar, l: &ProductionSet) -> Result<PairRelation> {
    unary_closure(g, l, true)
}

/// Nonreflexive variant: `D =>+_L X`.
pub fn unary_chain_relation_plus(g: &Grammar, l: &ProductionSet) -> Result<PairRelation> {
    unary_closure(g, l, false)
}

/// Symbols lying on a cycle of the directed graph given by `edges`.
fn cyclic_nodes(edges: &BTreeMap<Symbol, BTreeSet<Symbol>>) -> BTreeSet<Symbol> {
    let mut graph: DiGraph<Symbol, ()> = DiGraph::new();
    let mut index: BTreeMap<Symbol, NodeIndex> = BTreeMap::new();
    let mut node = |graph: &mut DiGraph<Symbol, ()>, s: &Symbol| {
        *index
            .entry(s.clone())
            .or_insert_with(|| graph.add_node(s.clone()))
    };
    let mut self_loops = BTreeSet::new();
    for (a, bs) in edges {
        let ia = node(&mut graph, a);
        for b in bs {
            if a == b {
                self_loops.insert(a.clone());
            }
            let ib = node(&mut graph, b);
            graph.add_edge(ia, ib, ());
        }
    }
    let mut out = self_loops;
    for scc in tarjan_scc(&graph) {
        if scc.len() > 1 {
            out.extend(scc.into_iter().map(|i| graph[i].clone()));
        }
    }
    out
}

/// Nonterminals `A` with `A =>+ A` through unary productions.
pub fn cyclic_nonterminals(g: &Grammar) -> BTreeSet<Symbol> {
    let mut edges: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
    for (p, _) in g.productions() {
        if p.is_unary() && g.is_nonterminal(&p.rhs[0]) {
            edges.entry(p.lhs.clone()).or_default().insert(p.rhs[0].clone());
        }
    }
    cyclic_nodes(&edges)
}

/// Symbols that derive the empty string.
pub fn nullable_symbols(g: &Grammar) -> BTreeSet<Symbol> {
    let mut nullable = BTreeSet::new();
    loop {
        let before = nullable.len();
        for (p, _) in g.productions() {
            if !nullable.contains(&p.lhs) && p.rhs.iter().all(|s| nullable.contains(s)) {
                nullable.insert(p.lhs.clone());
            }
        }
        if nullable.len() == before {
            return nullable;
        }
    }
}

/// Nonterminals `A` with a nonempty left-corner chain `A =>+ A gamma`.
///
/// Nullable prefixes are looked through, so `A -> N A` with `N =>* eps`
/// counts as left-recursive.
pub fn left_recursive_nonterminals(g: &Grammar) -> BTreeSet<Symbol> {
    let nullable = nullable_symbols(g);
    let mut edges: BTreeMap<Symbol, BTreeSet<Symbol>> = BTreeMap::new();
    for (p, _) in g.productions() {
        for s in &p.rhs {
            if g.is_nonterminal(s) {
                edges.entry(p.lhs.clone()).or_default().insert(s.clone());
            }
            if !nullable.contains(s) {
                break;
            }
        }
    }
    cyclic_nodes(&edges)
}

pub fn is_left_recursive(g: &Grammar) -> bool {
    !left_recursive_nonterminals(g).is_empty()
}

/// The left-recursive productions `L0 = { A -> B beta : B =>*_P A gamma }`.
pub fn left_recursive_set(g: &Grammar) -> Result<ProductionSet> {
    let cyclic = cyclic_nonterminals(g);
    if !cyclic.is_empty() {
        return Err(Error::UnaryCycles(cyclic.iter().map(|s| s.to_string()).collect()));
    }
    let all: ProductionSet = g
        .productions()
        .filter(|(p, _)| !p.is_epsilon())
        .map(|(p, _)| p.clone())
        .collect();
    let rel = left_corner_relation(g, &all)?;
    Ok(all
        .into_iter()
        .filter(|p| {
            let b = &p.rhs[0];
            g.is_nonterminal(b) && rel.contains(b, &p.lhs)
        })
        .collect())
}

/// How the left-corner production set is chosen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LMode {
    /// Every non-epsilon production (the standard left-corner transform).
    All,
    /// Productions whose first RHS symbol is neither a POS tag nor a terminal.
    NonPosInitial,
    /// The minimal left-recursive set.
    L0,
    Explicit(ProductionSet),
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub productions: ProductionSet,
    /// Set when the selection omits members of `L0`.
    pub warning: Option<String>,
}

pub fn select_l(g: &Grammar, mode: &LMode) -> Result<Selection> {
    let non_eps = || {
        g.productions()
            .filter(|(p, _)| !p.is_epsilon())
            .map(|(p, _)| p.clone())
    };
    let productions: ProductionSet = match mode {
        LMode::All => non_eps().collect(),
        LMode::NonPosInitial => {
            let pos = g.pos_tags().ok_or(Error::MissingPosTags)?;
            non_eps()
                .filter(|p| {
                    let x = &p.rhs[0];
                    !pos.contains(x) && g.is_nonterminal(x)
                })
                .collect()
        }
        LMode::L0 => left_recursive_set(g)?,
        LMode::Explicit(set) => {
            check_subset(g, set)?;
            if let Some(p) = set.iter().find(|p| p.is_epsilon()) {
                return Err(Error::EpsilonProduction(p.to_string()));
            }
            set.clone()
        }
    };
    let warning = match (mode, left_recursive_set(g)) {
        (LMode::Explicit(_), Ok(l0)) => {
            let missing: Vec<String> = l0
                .difference(&productions)
                .map(|p| p.to_string())
                .collect();
            (!missing.is_empty()).then(|| {
                format!(
                    "output may be left-recursive: L omits left-recursive productions {}",
                    missing.join(", ")
                )
            })
        }
        _ => None,
    };
    Ok(Selection {
        productions,
        warning,
    })
}
