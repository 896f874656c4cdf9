//! Weighted context-free grammars and the text grammar format.
//!
//! One production per line, an optional leading weight, then
//! `LHS -> RHS...`. `#` starts a comment. Directives: `%start S`,
//! `%pos t1 t2 ...`, `%nonterminals A B ...`, `%terminals a b ...`.
//! A base symbol is a nonterminal iff it is some production's LHS or is
//! declared; derived symbols are always nonterminals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::symbol::Symbol;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Production {
    pub lhs: Symbol,
    pub rhs: Vec<Symbol>,
}

impl Production {
    pub fn new(lhs: Symbol, rhs: Vec<Symbol>) -> Self {
        Production { lhs, rhs }
    }

    /// Builds a production from base-symbol names, e.g. `("S", &["S", "a"])`.
    pub fn from_names(lhs: &str, rhs: &[&str]) -> Self {
        Production {
            lhs: Symbol::base(lhs),
            rhs: rhs.iter().map(|s| Symbol::base(s)).collect(),
        }
    }

    /// Parses `A -> b c` (no weight).
    pub fn parse(text: &str) -> Result<Self> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() < 2 || toks[1] != "->" {
            return Err(Error::GrammarSyntax {
                line: 1,
                msg: format!("expected `LHS -> RHS`, got `{text}`"),
            });
        }
        let lhs = Symbol::parse(toks[0])?;
        let rhs = toks[2..]
            .iter()
            .map(|t| Symbol::parse(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Production { lhs, rhs })
    }

    pub fn is_epsilon(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn is_unary(&self) -> bool {
        self.rhs.len() == 1
    }

    pub fn first(&self) -> Option<&Symbol> {
        self.rhs.first()
    }
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        for s in &self.rhs {
            write!(f, " {s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Size figures for a grammar.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GrammarStats {
    pub production_count: usize,
    pub nonterminal_count: usize,
    pub terminal_count: usize,
    pub total_rhs_symbols: usize,
}

/// A CFG `(V, T, P, S)` with a nonnegative weight on every production.
///
/// Productions keep insertion order, which the parser uses for
/// tie-breaking. Duplicate productions merge with weights summed.
#[derive(Clone)]
pub struct Grammar {
    start: Symbol,
    productions: IndexMap<Production, f64>,
    by_lhs: IndexMap<Symbol, Vec<usize>>,
    nonterminals: BTreeSet<Symbol>,
    terminals: BTreeSet<Symbol>,
    declared_nonterminals: BTreeSet<Symbol>,
    declared_terminals: BTreeSet<Symbol>,
    pos_tags: Option<BTreeSet<Symbol>>,
}

/// Accumulates productions before symbol classes are inferred.
#[derive(Clone)]
pub struct GrammarBuilder {
    start: Symbol,
    productions: IndexMap<Production, f64>,
    declared_nonterminals: BTreeSet<Symbol>,
    declared_terminals: BTreeSet<Symbol>,
    pos_tags: Option<BTreeSet<Symbol>>,
}

impl GrammarBuilder {
    pub fn new(start: Symbol) -> Self {
        GrammarBuilder {
            start,
            productions: IndexMap::new(),
            declared_nonterminals: BTreeSet::new(),
            declared_terminals: BTreeSet::new(),
            pos_tags: None,
        }
    }

    pub fn add(&mut self, p: Production, weight: f64) -> &mut Self {
        *self.productions.entry(p).or_insert(0.0) += weight;
        self
    }

    pub fn declare_nonterminal(&mut self, s: Symbol) -> &mut Self {
        self.declared_nonterminals.insert(s);
        self
    }

    pub fn declare_terminal(&mut self, s: Symbol) -> &mut Self {
        self.declared_terminals.insert(s);
        self
    }

    pub fn pos_tags(&mut self, tags: Option<BTreeSet<Symbol>>) -> &mut Self {
        self.pos_tags = tags;
        self
    }

    pub fn build(self) -> Result<Grammar> {
        let mut nonterminals: BTreeSet<Symbol> = self.declared_nonterminals.clone();
        let mut by_lhs: IndexMap<Symbol, Vec<usize>> = IndexMap::new();
        for (i, p) in self.productions.keys().enumerate() {
            nonterminals.insert(p.lhs.clone());
            by_lhs.entry(p.lhs.clone()).or_default().push(i);
        }
        if self.declared_terminals.contains(&self.start) {
            return Err(Error::StartIsTerminal(self.start.to_string()));
        }
        nonterminals.insert(self.start.clone());
        let mut terminals = BTreeSet::new();
        for p in self.productions.keys() {
            for s in &p.rhs {
                if s.is_derived() {
                    nonterminals.insert(s.clone());
                } else if !nonterminals.contains(s) {
                    terminals.insert(s.clone());
                }
            }
        }
        for t in &self.declared_terminals {
            if nonterminals.contains(t) {
                return Err(Error::GrammarSyntax {
                    line: 0,
                    msg: format!("`{t}` declared terminal but has productions"),
                });
            }
            terminals.insert(t.clone());
        }
        Ok(Grammar {
            start: self.start,
            productions: self.productions,
            by_lhs,
            nonterminals,
            terminals,
            declared_nonterminals: self.declared_nonterminals,
            declared_terminals: self.declared_terminals,
            pos_tags: self.pos_tags,
        })
    }
}

impl Grammar {
    pub fn builder(start: Symbol) -> GrammarBuilder {
        GrammarBuilder::new(start)
    }

    /// Builds a grammar from weighted productions, inferring `V` and `T`.
    pub fn from_productions<I>(start: Symbol, productions: I) -> Result<Grammar>
    where
        I: IntoIterator<Item = (Production, f64)>,
    {
        let mut b = GrammarBuilder::new(start);
        for (p, w) in productions {
            b.add(p, w);
        }
        b.build()
    }

    /// A builder seeded with this grammar's start symbol, declarations and
    /// POS tags, but no productions.
    pub fn empty_like(&self) -> GrammarBuilder {
        GrammarBuilder {
            start: self.start.clone(),
            productions: IndexMap::new(),
            declared_nonterminals: self.declared_nonterminals.clone(),
            declared_terminals: self.declared_terminals.clone(),
            pos_tags: self.pos_tags.clone(),
        }
    }

    /// Rebuilds with a subset of productions (keeping order and weights).
    pub fn retain<F: FnMut(&Production, f64) -> bool>(&self, mut keep: F) -> Grammar {
        let mut b = self.empty_like();
        for (p, &w) in &self.productions {
            if keep(p, w) {
                b.add(p.clone(), w);
            }
        }
        b.build().expect("subset of a valid grammar is valid")
    }

    pub fn start(&self) -> &Symbol {
        &self.start
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    pub fn productions(&self) -> impl Iterator<Item = (&Production, f64)> {
        self.productions.iter().map(|(p, &w)| (p, w))
    }

    pub fn production(&self, index: usize) -> (&Production, f64) {
        let (p, &w) = self.productions.get_index(index).expect("production index");
        (p, w)
    }

    pub fn index_of(&self, p: &Production) -> Option<usize> {
        self.productions.get_index_of(p)
    }

    pub fn production_set(&self) -> BTreeSet<Production> {
        self.productions.keys().cloned().collect()
    }

    pub fn contains(&self, p: &Production) -> bool {
        self.productions.contains_key(p)
    }

    pub fn weight(&self, p: &Production) -> Option<f64> {
        self.productions.get(p).copied()
    }

    /// Production indices with the given LHS, in grammar order.
    pub fn indices_of(&self, lhs: &Symbol) -> &[usize] {
        self.by_lhs.get(lhs).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn productions_of<'a>(&'a self, lhs: &Symbol) -> impl Iterator<Item = (&'a Production, f64)> + 'a {
        self.indices_of(lhs).iter().map(move |&i| self.production(i))
    }

    pub fn nonterminals(&self) -> &BTreeSet<Symbol> {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &BTreeSet<Symbol> {
        &self.terminals
    }

    pub fn is_nonterminal(&self, s: &Symbol) -> bool {
        self.nonterminals.contains(s)
    }

    pub fn is_terminal(&self, s: &Symbol) -> bool {
        !self.nonterminals.contains(s)
    }

    pub fn pos_tags(&self) -> Option<&BTreeSet<Symbol>> {
        self.pos_tags.as_ref()
    }

    pub fn with_pos_tags(&self, tags: Option<BTreeSet<Symbol>>) -> Grammar {
        let mut g = self.clone();
        g.pos_tags = tags;
        g
    }

    pub fn is_epsilon_free(&self) -> bool {
        self.productions.keys().all(|p| !p.is_epsilon())
    }

    /// Per-LHS weight sums, keyed by LHS.
    pub fn lhs_totals(&self) -> BTreeMap<Symbol, f64> {
        let mut totals = BTreeMap::new();
        for (p, w) in self.productions() {
            *totals.entry(p.lhs.clone()).or_insert(0.0) += w;
        }
        totals
    }

    /// Every LHS's productions sum to 1 within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        self.lhs_totals().values().all(|t| (t - 1.0).abs() <= tol)
    }

    pub fn stats(&self) -> GrammarStats {
        GrammarStats {
            production_count: self.productions.len(),
            nonterminal_count: if self.productions.is_empty() {
                0
            } else {
                self.nonterminals.len()
            },
            terminal_count: self.terminals.len(),
            total_rhs_symbols: self.productions.keys().map(|p| p.rhs.len()).sum(),
        }
    }

    /// Same start, productions and weights (order-insensitive).
    pub fn same_structure(&self, other: &Grammar) -> bool {
        self.start == other.start
            && self.productions.len() == other.productions.len()
            && self
                .productions
                .iter()
                .all(|(p, w)| other.productions.get(p) == Some(w))
            && self.nonterminals == other.nonterminals
            && self.terminals == other.terminals
            && self.pos_tags == other.pos_tags
    }
}

impl fmt::Debug for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_grammar(self))
    }
}

fn parse_symbols(toks: &[&str], line: usize) -> Result<Vec<Symbol>> {
    toks.iter()
        .map(|t| {
            Symbol::parse(t).map_err(|e| Error::GrammarSyntax {
                line,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Reads the grammar text format.
pub fn parse_grammar(text: &str) -> Result<Grammar> {
    let mut start: Option<Symbol> = None;
    let mut pos: Option<BTreeSet<Symbol>> = None;
    let mut declared_nt = BTreeSet::new();
    let mut declared_t = BTreeSet::new();
    let mut prods: Vec<(Production, f64)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if let Some(directive) = toks[0].strip_prefix('%') {
            let args = parse_symbols(&toks[1..], line)?;
            match directive {
                "start" => {
                    if args.len() != 1 {
                        return Err(Error::GrammarSyntax {
                            line,
                            msg: "%start takes exactly one symbol".into(),
                        });
                    }
                    start = Some(args[0].clone());
                }
                "pos" => pos.get_or_insert_with(BTreeSet::new).extend(args),
                "nonterminals" => declared_nt.extend(args),
                "terminals" => declared_t.extend(args),
                other => {
                    return Err(Error::GrammarSyntax {
                        line,
                        msg: format!("unknown directive `%{other}`"),
                    })
                }
            }
            continue;
        }
        let arrow = toks.iter().position(|t| *t == "->");
        let (weight, lhs_tok, rhs_toks) = match arrow {
            Some(1) => (1.0, toks[0], &toks[2..]),
            Some(2) => {
                let w: f64 = toks[0].parse().map_err(|_| Error::BadWeight {
                    line,
                    text: toks[0].to_string(),
                })?;
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::BadWeight {
                        line,
                        text: toks[0].to_string(),
                    });
                }
                (w, toks[1], &toks[3..])
            }
            _ => {
                return Err(Error::GrammarSyntax {
                    line,
                    msg: "expected `[weight] LHS -> RHS...`".into(),
                })
            }
        };
        let lhs = parse_symbols(&[lhs_tok], line)?.remove(0);
        let rhs = parse_symbols(rhs_toks, line)?;
        prods.push((Production::new(lhs, rhs), weight));
    }

    let start = match start.or_else(|| prods.first().map(|(p, _)| p.lhs.clone())) {
        Some(s) => s,
        None => {
            return Err(Error::GrammarSyntax {
                line: 0,
                msg: "no productions and no %start directive".into(),
            })
        }
    };
    let start_has_lhs = prods.iter().any(|(p, _)| p.lhs == start) || declared_nt.contains(&start);
    let start_on_rhs = prods.iter().any(|(p, _)| p.rhs.contains(&start));
    if start.is_base() && !start_has_lhs && start_on_rhs {
        return Err(Error::StartIsTerminal(start.to_string()));
    }

    let mut b = GrammarBuilder::new(start);
    for s in declared_nt {
        b.declare_nonterminal(s);
    }
    for s in declared_t {
        b.declare_terminal(s);
    }
    b.pos_tags(pos);
    for (p, w) in prods {
        b.add(p, w);
    }
    b.build()
}

fn join(symbols: impl IntoIterator<Item = impl fmt::Display>) -> String {
    symbols
        .into_iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Writes the grammar text format; productions sorted by rendered LHS then RHS.
pub fn write_grammar(g: &Grammar) -> String {
    let mut out = String::new();
    out.push_str(&format!("%start {}\n", g.start));
    if let Some(tags) = &g.pos_tags {
        out.push_str(&format!("%pos {}\n", join(tags)));
    }
    let mut lhs_seen: BTreeSet<&Symbol> = g.productions.keys().map(|p| &p.lhs).collect();
    lhs_seen.insert(&g.start);
    let bare: Vec<&Symbol> = g
        .nonterminals
        .iter()
        .filter(|s| s.is_base() && !lhs_seen.contains(s))
        .collect();
    if !bare.is_empty() {
        out.push_str(&format!("%nonterminals {}\n", join(bare)));
    }
    let used: BTreeSet<&Symbol> = g.productions.keys().flat_map(|p| p.rhs.iter()).collect();
    let unused_t: Vec<&Symbol> = g.terminals.iter().filter(|t| !used.contains(t)).collect();
    if !unused_t.is_empty() {
        out.push_str(&format!("%terminals {}\n", join(unused_t)));
    }

    let weighted = g.productions.values().any(|&w| w != 1.0);
    let mut lines: Vec<(String, String, f64)> = g
        .productions
        .iter()
        .map(|(p, &w)| (p.lhs.to_string(), join(&p.rhs), w))
        .collect();
    lines.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    for (lhs, rhs, w) in lines {
        if weighted {
            out.push_str(&format!("{w} "));
        }
        out.push_str(&lhs);
        out.push_str(" ->");
        if !rhs.is_empty() {
            out.push(' ');
            out.push_str(&rhs);
        }
        out.push('\n');
    }
    out
}
