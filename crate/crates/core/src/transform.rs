//! The selective left-corner grammar transform.
//!
//! Productions in `L` are recognised left-corner, the rest top-down. The
//! output is built from schema instances:
//!
//! ```text
//! 1a  D -> w LC(D;w)
//! 1b  D -> alpha LC(D;A)          A -> alpha in P-L
//! 1c  LC(D;B) -> beta LC(D;C)     C -> B beta in L
//! 1d  LC(D;D) -> eps
//! 2a  D -> TD(A) LC(D;A)          top-down factoring of 1b
//! 2b  TD(A) -> alpha
//! 3a  LC(D;B) -> PT(C;B) LC(D;C)  left-corner factoring of 1c
//! 3b  PT(C;B) -> beta
//! ```
//!
//! Epsilon removal is applied to that grammar afterwards, either one step
//! (dropping only symbols with a direct epsilon production) or fully.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::epsilon::{epsilon_variants, EpsilonScope};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, GrammarStats, Production};
use crate::prune::prune_useless;
use crate::relation::{
    cyclic_nonterminals, left_corner_relation, strict_left_corner_relation, PairRelation,
    ProductionSet,
};
use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Factor {
    #[default]
    None,
    Td,
    Lc,
    TdLc,
}

impl Factor {
    pub const ALL: [Factor; 4] = [Factor::None, Factor::Td, Factor::Lc, Factor::TdLc];

    pub fn top_down(self) -> bool {
        matches!(self, Factor::Td | Factor::TdLc)
    }

    pub fn left_corner(self) -> bool {
        matches!(self, Factor::Lc | Factor::TdLc)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Factor::None => "none",
            Factor::Td => "td",
            Factor::Lc => "lc",
            Factor::TdLc => "td-lc",
        })
    }
}

impl FromStr for Factor {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Factor::None),
            "td" => Ok(Factor::Td),
            "lc" => Ok(Factor::Lc),
            "td-lc" | "td_lc" | "tdlc" => Ok(Factor::TdLc),
            _ => Err(format!("unknown factor mode `{s}` (none|td|lc|td-lc)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum EpsilonMode {
    #[default]
    Keep,
    OneStep,
    Full,
}

impl EpsilonMode {
    pub const ALL: [EpsilonMode; 3] = [EpsilonMode::Keep, EpsilonMode::OneStep, EpsilonMode::Full];

    pub fn scope(self) -> Option<EpsilonScope> {
        match self {
            EpsilonMode::Keep => None,
            EpsilonMode::OneStep => Some(EpsilonScope::OneStep),
            EpsilonMode::Full => Some(EpsilonScope::Full),
        }
    }
}

impl fmt::Display for EpsilonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EpsilonMode::Keep => "keep",
            EpsilonMode::OneStep => "one-step",
            EpsilonMode::Full => "full",
        })
    }
}

impl FromStr for EpsilonMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "keep" => Ok(EpsilonMode::Keep),
            "one-step" | "one_step" => Ok(EpsilonMode::OneStep),
            "full" => Ok(EpsilonMode::Full),
            _ => Err(format!("unknown epsilon mode `{s}` (keep|one-step|full)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransformOptions {
    pub factor: Factor,
    pub epsilon: EpsilonMode,
    /// Generate only instances satisfying the link constraint, then drop
    /// useless productions.
    pub prune_links: bool,
    /// Additionally require every predicted `D` to be the start symbol or to
    /// occur non-initially on some RHS.
    pub moore_constraint: bool,
    /// Carry production weights through; otherwise every output weight is 1.
    pub weighted: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            factor: Factor::None,
            epsilon: EpsilonMode::Keep,
            prune_links: true,
            moore_constraint: false,
            weighted: false,
        }
    }
}

impl TransformOptions {
    pub fn new(factor: Factor, epsilon: EpsilonMode) -> Self {
        TransformOptions {
            factor,
            epsilon,
            ..Default::default()
        }
    }

    pub fn weighted(mut self, on: bool) -> Self {
        self.weighted = on;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaId {
    S1a,
    S1b,
    S1c,
    S1d,
    EpsA1,
    EpsA2,
    EpsB1,
    EpsB2,
    EpsC1,
    EpsC2,
    S2a,
    S2b,
    S3a,
    S3b,
    /// 2a with its trailing pair removed.
    Eps2a,
    /// 3a with one or both of its symbols removed.
    Eps3a,
}

impl SchemaId {
    /// Whether instances of this schema carry a source production.
    pub fn has_origin(self) -> bool {
        !matches!(self, SchemaId::S1a | SchemaId::S1d | SchemaId::S2a | SchemaId::S3a | SchemaId::EpsA1)
    }

    fn after_epsilon(self, dropped_any: bool) -> SchemaId {
        match (self, dropped_any) {
            (SchemaId::S1a, false) => SchemaId::EpsA1,
            (SchemaId::S1a, true) => SchemaId::EpsA2,
            (SchemaId::S1b, false) => SchemaId::EpsB1,
            (SchemaId::S1b, true) => SchemaId::EpsB2,
            (SchemaId::S1c, false) => SchemaId::EpsC1,
            (SchemaId::S1c, true) => SchemaId::EpsC2,
            (SchemaId::S2a, true) => SchemaId::Eps2a,
            (SchemaId::S3a, true) => SchemaId::Eps3a,
            (other, _) => other,
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemaId::S1a => "1a",
            SchemaId::S1b => "1b",
            SchemaId::S1c => "1c",
            SchemaId::S1d => "1d",
            SchemaId::EpsA1 => "eps_a1",
            SchemaId::EpsA2 => "eps_a2",
            SchemaId::EpsB1 => "eps_b1",
            SchemaId::EpsB2 => "eps_b2",
            SchemaId::EpsC1 => "eps_c1",
            SchemaId::EpsC2 => "eps_c2",
            SchemaId::S2a => "2a",
            SchemaId::S2b => "2b",
            SchemaId::S3a => "3a",
            SchemaId::S3b => "3b",
            SchemaId::Eps2a => "eps_2a",
            SchemaId::Eps3a => "eps_3a",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemaInstance {
    pub schema: SchemaId,
    pub production: Production,
    /// Source productions; several when epsilon removal merged instances.
    pub origins: Vec<Production>,
}

/// A transformed grammar with one provenance record per production, in
/// grammar order.
#[derive(Clone, Debug)]
pub struct Transformed {
    pub grammar: Grammar,
    pub instances: Vec<SchemaInstance>,
}

impl Transformed {
    pub fn schema_counts(&self) -> BTreeMap<SchemaId, usize> {
        let mut counts = BTreeMap::new();
        for i in &self.instances {
            *counts.entry(i.schema).or_insert(0) += 1;
        }
        counts
    }

    pub fn count(&self, schema: SchemaId) -> usize {
        self.instances.iter().filter(|i| i.schema == schema).count()
    }
}

/// Sidecar text: `<schema> TAB <production> TAB <origins or ->`.
pub fn write_provenance(t: &Transformed) -> String {
    let mut rows: Vec<String> = t
        .instances
        .iter()
        .map(|i| {
            let origin = if i.origins.is_empty() {
                "-".to_string()
            } else {
                i.origins.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" | ")
            };
            format!("{}\t{}\t{}", i.schema, i.production, origin)
        })
        .collect();
    rows.sort();
    let mut s = rows.join("\n");
    if !s.is_empty() {
        s.push('\n');
    }
    s
}

pub fn grammar_stats(g: &Grammar) -> GrammarStats {
    g.stats()
}

/// Which `D` may be predicted.
enum Link {
    All,
    Relation(PairRelation),
}

impl Link {
    fn allows(&self, d: &Symbol, x: &Symbol) -> bool {
        match self {
            Link::All => true,
            Link::Relation(r) => r.contains(d, x),
        }
    }
}

/// Nonterminals that are the start symbol or occur non-initially on some RHS.
/// Symbols that can be predicted: the start symbol, anything after the first
/// RHS position, and the first symbol of a top-down production.
fn moore_predictable(g: &Grammar, l: &ProductionSet) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::from([g.start().clone()]);
    for (p, _) in g.productions() {
        let skip = usize::from(l.contains(p));
        out.extend(p.rhs.iter().skip(skip).filter(|s| g.is_nonterminal(s)).cloned());
    }
    out
}

struct Acc {
    rows: Vec<(Production, f64, SchemaId, Option<Production>)>,
    seen: BTreeSet<Production>,
}

impl Acc {
    fn push(&mut self, p: Production, w: f64, s: SchemaId, origin: Option<Production>) {
        if self.seen.insert(p.clone()) {
            self.rows.push((p, w, s, origin));
        }
    }
}

/// The selective left-corner transform of `g` with respect to `l`.
pub fn lc_transform(g: &Grammar, l: &ProductionSet, opts: &TransformOptions) -> Result<Transformed> {
    if let Some(p) = l.iter().find(|p| !g.contains(p)) {
        return Err(Error::NotInGrammar(p.to_string()));
    }
    if let Some((p, _)) = g.productions().find(|(p, _)| p.is_epsilon()) {
        return Err(Error::EpsilonProduction(p.to_string()));
    }
    let cyclic = cyclic_nonterminals(g);
    if !cyclic.is_empty() {
        return Err(Error::UnaryCycles(cyclic.iter().map(|s| s.to_string()).collect()));
    }

    let link = if opts.prune_links {
        Link::Relation(left_corner_relation(g, l)?)
    } else {
        Link::All
    };
    let predictable = opts.moore_constraint.then(|| moore_predictable(g, l));
    let weight = |w: f64| if opts.weighted { w } else { 1.0 };

    let top_down: Vec<(&Production, f64)> = g.productions().filter(|(p, _)| !l.contains(p)).collect();
    let left_corner: Vec<(&Production, f64)> = g.productions().filter(|(p, _)| l.contains(p)).collect();

    let mut acc = Acc {
        rows: Vec::new(),
        seen: BTreeSet::new(),
    };
    for d in g.nonterminals() {
        if predictable.as_ref().is_some_and(|s| !s.contains(d)) {
            continue;
        }
        for w in g.terminals() {
            if link.allows(d, w) {
                acc.push(
                    Production::new(d.clone(), vec![w.clone(), Symbol::lc_pair(d, w)]),
                    1.0,
                    SchemaId::S1a,
                    None,
                );
            }
        }
        for &(p, w) in &top_down {
            let a = &p.lhs;
            if !link.allows(d, a) {
                continue;
            }
            if opts.factor.top_down() {
                acc.push(
                    Production::new(d.clone(), vec![Symbol::td_prime(a), Symbol::lc_pair(d, a)]),
                    1.0,
                    SchemaId::S2a,
                    None,
                );
            } else {
                let mut rhs = p.rhs.clone();
                rhs.push(Symbol::lc_pair(d, a));
                acc.push(Production::new(d.clone(), rhs), weight(w), SchemaId::S1b, Some(p.clone()));
            }
        }
        for &(p, w) in &left_corner {
            let c = &p.lhs;
            if !link.allows(d, c) {
                continue;
            }
            let b = &p.rhs[0];
            if opts.factor.left_corner() {
                acc.push(
                    Production::new(
                        Symbol::lc_pair(d, b),
                        vec![Symbol::lc_fact(c, b), Symbol::lc_pair(d, c)],
                    ),
                    1.0,
                    SchemaId::S3a,
                    None,
                );
            } else {
                let mut rhs = p.rhs[1..].to_vec();
                rhs.push(Symbol::lc_pair(d, c));
                acc.push(
                    Production::new(Symbol::lc_pair(d, b), rhs),
                    weight(w),
                    SchemaId::S1c,
                    Some(p.clone()),
                );
            }
        }
        acc.push(Production::new(Symbol::lc_pair(d, d), vec![]), 1.0, SchemaId::S1d, None);
    }
    if opts.factor.top_down() {
        for &(p, w) in &top_down {
            acc.push(
                Production::new(Symbol::td_prime(&p.lhs), p.rhs.clone()),
                weight(w),
                SchemaId::S2b,
                Some(p.clone()),
            );
        }
    }
    if opts.factor.left_corner() {
        for &(p, w) in &left_corner {
            acc.push(
                Production::new(Symbol::lc_fact(&p.lhs, &p.rhs[0]), p.rhs[1..].to_vec()),
                weight(w),
                SchemaId::S3b,
                Some(p.clone()),
            );
        }
    }

    let mut keep = g.empty_like();
    for (p, w, _, _) in &acc.rows {
        keep.add(p.clone(), *w);
    }
    let keep = keep.build()?;

    // Output rows: production -> (weight, schema, origins)
    let mut out: indexmap::IndexMap<Production, (f64, SchemaId, BTreeSet<Production>)> = indexmap::IndexMap::new();
    match opts.epsilon.scope() {
        None => {
            for (p, w, s, o) in acc.rows {
                out.insert(p, (w, s, o.into_iter().collect()));
            }
        }
        Some(scope) => {
            for v in epsilon_variants(&keep, scope)? {
                let (_, _, schema, origin) = &acc.rows[v.source];
                let schema = schema.after_epsilon(!v.dropped.is_empty());
                let entry = out
                    .entry(v.production)
                    .or_insert((0.0, schema, BTreeSet::new()));
                entry.0 += v.weight;
                entry.2.extend(origin.iter().cloned());
            }
        }
    }

    let strict = match (opts.prune_links, opts.epsilon) {
        (true, EpsilonMode::Full) => Some(strict_left_corner_relation(g, l)?),
        _ => None,
    };
    let pair_ok = |s: &Symbol| match (s.as_lc_pair(), &strict) {
        (Some((d, x)), Some(r)) => r.contains(d, x),
        _ => true,
    };

    let mut b = g.empty_like();
    for (p, (w, _, _)) in &out {
        if pair_ok(&p.lhs) && p.rhs.iter().all(pair_ok) {
            b.add(p.clone(), if opts.weighted { *w } else { 1.0 });
        }
    }
    let mut grammar = b.build()?;
    if opts.prune_links {
        grammar = prune_useless(&grammar).grammar;
    }
    let instances = grammar
        .productions()
        .map(|(p, _)| {
            let (_, schema, origins) = &out[p];
            SchemaInstance {
                schema: *schema,
                production: p.clone(),
                origins: origins.iter().cloned().collect(),
            }
        })
        .collect();
    Ok(Transformed { grammar, instances })
}
