//! The tree transforms matching the grammar transform, and their inverses.
//!
//! A node predicted as `D` has its left spine of left-corner productions
//! turned into a right-branching chain of `LC(D;X)` nodes. Under the epsilon
//! modes the empty `LC(D;D)` / `PT(C;B)` nodes are deleted again.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production};
use crate::relation::ProductionSet;
use crate::symbol::Symbol;
use crate::transform::{EpsilonMode, TransformOptions};
use crate::tree::ParseTree;
use crate::unary::UnaryCycles;

/// Maps trees over the source grammar to trees over `lc_transform(g, L, opts)`.
pub struct TreeTransformer<'a> {
    l: &'a ProductionSet,
    opts: TransformOptions,
    grammar: Option<&'a Grammar>,
}

impl<'a> TreeTransformer<'a> {
    /// Productions outside `l` are treated as top-down.
    pub fn new(l: &'a ProductionSet, opts: TransformOptions) -> Self {
        TreeTransformer { l, opts, grammar: None }
    }

    /// Rejects nodes whose production is not in `g`.
    pub fn strict(mut self, g: &'a Grammar) -> Self {
        self.grammar = Some(g);
        self
    }

    pub fn transform(&self, t: &ParseTree) -> Result<ParseTree> {
        if !t.is_node() {
            return Err(Error::Detransform {
                path: "root".into(),
                msg: "tree root must be an internal node".into(),
            });
        }
        let keep = self.predicted(t)?;
        Ok(match self.opts.epsilon {
            EpsilonMode::Keep => keep,
            EpsilonMode::OneStep => drop_direct_epsilon(&keep),
            EpsilonMode::Full => drop_empty(&keep).expect("nonempty yield"),
        })
    }

    fn production(&self, n: &ParseTree) -> Result<Production> {
        let p = n.production().expect("node");
        if let Some(g) = self.grammar {
            if !g.contains(&p) {
                return Err(Error::UnknownProduction(p.to_string()));
            }
        }
        Ok(p)
    }

    fn child(&self, c: &ParseTree) -> Result<ParseTree> {
        match c {
            ParseTree::Node { .. } => self.predicted(c),
            ParseTree::Leaf(_) => Ok(c.clone()),
            ParseTree::Epsilon => Err(Error::EpsilonProduction("EPS leaf in source tree".into())),
        }
    }

    fn children(&self, cs: &[ParseTree]) -> Result<Vec<ParseTree>> {
        cs.iter().map(|c| self.child(c)).collect()
    }

    fn predicted(&self, n: &ParseTree) -> Result<ParseTree> {
        let d = n.label().expect("node").clone();
        let mut spine = Vec::new();
        let mut cur = n;
        while cur.is_node() {
            let p = self.production(cur)?;
            if p.is_epsilon() {
                return Err(Error::EpsilonProduction(p.to_string()));
            }
            if !self.l.contains(&p) {
                break;
            }
            spine.push(cur);
            cur = &cur.children()[0];
        }
        let (mut head, x) = match cur {
            ParseTree::Leaf(w) => (vec![cur.clone()], w.clone()),
            ParseTree::Node { label, children } => {
                let kids = self.children(children)?;
                if self.opts.factor.top_down() {
                    (vec![ParseTree::node(Symbol::td_prime(label), kids)], label.clone())
                } else {
                    (kids, label.clone())
                }
            }
            ParseTree::Epsilon => return Err(Error::EpsilonProduction("EPS leaf in source tree".into())),
        };

        let mut lc = ParseTree::node(Symbol::lc_pair(&d, &d), vec![ParseTree::Epsilon]);
        for s in &spine {
            let c = s.label().expect("node");
            let b = s.children()[0].label().expect("left corner");
            let kids = self.children(&s.children()[1..])?;
            let pair = Symbol::lc_pair(&d, b);
            lc = if self.opts.factor.left_corner() {
                let kids = if kids.is_empty() { vec![ParseTree::Epsilon] } else { kids };
                ParseTree::node(pair, vec![ParseTree::node(Symbol::lc_fact(c, b), kids), lc])
            } else {
                let mut kids = kids;
                kids.push(lc);
                ParseTree::node(pair, kids)
            };
        }
        debug_assert_eq!(lc.label().and_then(|s| s.as_lc_pair()).map(|(_, x)| x), Some(&x));
        head.push(lc);
        Ok(ParseTree::node(d, head))
    }
}

pub fn lc_tree_transform(t: &ParseTree, l: &ProductionSet, opts: &TransformOptions) -> Result<ParseTree> {
    TreeTransformer::new(l, *opts).transform(t)
}

fn is_direct_epsilon(t: &ParseTree) -> bool {
    matches!(t.children(), [ParseTree::Epsilon])
}

/// Deletes nodes that are themselves epsilon productions, once.
fn drop_direct_epsilon(t: &ParseTree) -> ParseTree {
    match t {
        ParseTree::Node { label, children } => {
            let kids: Vec<ParseTree> = children
                .iter()
                .filter(|c| !is_direct_epsilon(c))
                .map(drop_direct_epsilon)
                .collect();
            let kids = if kids.is_empty() { vec![ParseTree::Epsilon] } else { kids };
            ParseTree::node(label.clone(), kids)
        }
        other => other.clone(),
    }
}

/// Deletes every subtree with an empty yield.
fn drop_empty(t: &ParseTree) -> Option<ParseTree> {
    match t {
        ParseTree::Node { label, children } => {
            let kids: Vec<ParseTree> = children.iter().filter_map(drop_empty).collect();
            (!kids.is_empty()).then(|| ParseTree::node(label.clone(), kids))
        }
        ParseTree::Leaf(_) => Some(t.clone()),
        ParseTree::Epsilon => None,
    }
}

/// Source-grammar knowledge used to restore unary left-corner chains that
/// full epsilon removal leaves no trace of.
#[derive(Clone, Debug, Default)]
pub struct Resolver {
    top_down: BTreeMap<Vec<Symbol>, Vec<Symbol>>,
    left_corner: BTreeMap<(Symbol, Vec<Symbol>), Vec<Symbol>>,
    unary_up: BTreeMap<Symbol, Vec<Symbol>>,
    strict: bool,
}

impl Resolver {
    pub fn new(g: &Grammar, l: &ProductionSet) -> Self {
        let mut r = Resolver {
            strict: true,
            ..Default::default()
        };
        for (p, _) in g.productions() {
            if let (true, Some(b)) = (l.contains(p), p.first()) {
                r.left_corner
                    .entry((b.clone(), p.rhs[1..].to_vec()))
                    .or_default()
                    .push(p.lhs.clone());
                if p.is_unary() {
                    r.unary_up.entry(b.clone()).or_default().push(p.lhs.clone());
                }
            } else {
                r.top_down.entry(p.rhs.clone()).or_default().push(p.lhs.clone());
            }
        }
        r
    }

    /// When several readings exist, take the first instead of failing.
    pub fn lenient(mut self) -> Self {
        self.strict = false;
        self
    }

    /// Label sequences `C1 .. Ck = to` with `C1 -> from`, ..., `Ck -> C(k-1)` in L.
    fn paths(&self, from: &Symbol, to: &Symbol) -> Vec<Vec<Symbol>> {
        if from == to {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for c in self.unary_up.get(from).into_iter().flatten() {
            for mut rest in self.paths(c, to) {
                rest.insert(0, c.clone());
                out.push(rest);
            }
        }
        out
    }
}

fn wrap_unary(mut t: ParseTree, labels: &[Symbol]) -> ParseTree {
    for c in labels {
        t = ParseTree::node(c.clone(), vec![t]);
    }
    t
}

fn is_chain_label(s: &Symbol) -> bool {
    s.as_lc_pair().is_some() || s.as_td_prime().is_some() || s.as_lc_fact().is_some()
}

fn show_path(path: &[usize]) -> String {
    if path.is_empty() {
        "root".into()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

fn labels(ts: &[ParseTree]) -> Vec<Symbol> {
    ts.iter().filter_map(|t| t.label().cloned()).collect()
}

/// Inverts [`TreeTransformer`]. Membership in L is read off the derived labels.
pub struct Detransformer<'a> {
    opts: TransformOptions,
    resolver: Option<&'a Resolver>,
}

impl<'a> Detransformer<'a> {
    pub fn new(opts: TransformOptions) -> Self {
        Detransformer { opts, resolver: None }
    }

    pub fn with_resolver(mut self, r: &'a Resolver) -> Self {
        self.resolver = Some(r);
        self
    }

    pub fn detransform(&self, t: &ParseTree) -> Result<ParseTree> {
        let mut path = Vec::new();
        match t {
            ParseTree::Node { label, .. } if !is_chain_label(label) => self.predicted(t, &mut path),
            _ => Err(self.err(&path, "root must be an ordinary internal node")),
        }
    }

    fn err(&self, path: &[usize], msg: impl Into<String>) -> Error {
        Error::Detransform {
            path: show_path(path),
            msg: msg.into(),
        }
    }

    fn choose<T>(&self, mut cands: Vec<T>, path: &[usize], what: &str) -> Result<T> {
        match cands.len() {
            0 => Err(self.err(path, format!("no reading for {what}"))),
            1 => Ok(cands.remove(0)),
            n if self.resolver.is_some_and(|r| r.strict) => {
                Err(self.err(path, format!("{n} readings for {what}")))
            }
            _ => Ok(cands.remove(0)),
        }
    }

    fn children(&self, cs: &[ParseTree], offset: usize, path: &mut Vec<usize>) -> Result<Vec<ParseTree>> {
        let mut out = Vec::with_capacity(cs.len());
        for (i, c) in cs.iter().enumerate() {
            path.push(offset + i);
            out.push(match c {
                ParseTree::Leaf(_) => c.clone(),
                ParseTree::Node { label, .. } if !is_chain_label(label) => self.predicted(c, path)?,
                ParseTree::Node { label, .. } => return Err(self.err(path, format!("unexpected `{label}`"))),
                ParseTree::Epsilon => return Err(self.err(path, "unexpected EPS")),
            });
            path.pop();
        }
        Ok(out)
    }

    fn predicted(&self, n: &ParseTree, path: &mut Vec<usize>) -> Result<ParseTree> {
        let d = n.label().expect("node").clone();
        let children = n.children();
        let (head, lc) = match children.split_last() {
            Some((last @ ParseTree::Node { label, .. }, rest)) if label.as_lc_pair().is_some() => {
                let (d2, _) = label.as_lc_pair().unwrap();
                if *d2 != d {
                    path.push(children.len() - 1);
                    return Err(self.err(path, format!("`{label}` under `{d}`")));
                }
                (rest, Some(last))
            }
            _ => (children, None),
        };
        if head.is_empty() {
            return Err(self.err(path, "missing left corner"));
        }
        let lc_x = lc.map(|t| t.label().unwrap().as_lc_pair().unwrap().1.clone());

        let bottom = if self.opts.factor.top_down() {
            match head {
                [ParseTree::Node { label, children: kids }] if label.as_td_prime().is_some() => {
                    let a = label.as_td_prime().unwrap().clone();
                    path.push(0);
                    let kids = self.children(kids, 0, path)?;
                    path.pop();
                    ParseTree::node(a, kids)
                }
                [ParseTree::Leaf(_)] => head[0].clone(),
                _ => return Err(self.err(path, "expected a TD node or a terminal")),
            }
        } else {
            let kids = self.children(head, 0, path)?;
            match &lc_x {
                Some(x) if matches!(&kids[..], [ParseTree::Leaf(w)] if w == x) => kids[0].clone(),
                Some(x) => ParseTree::node(x.clone(), kids),
                None => return self.elided_bottom(&d, kids, path),
            }
        };
        if let (Some(x), Some(found)) = (&lc_x, bottom.label()) {
            if x != found {
                return Err(self.err(path, format!("left corner `{found}` but chain starts at `{x}`")));
            }
        }
        path.push(children.len() - 1);
        let out = self.chain(&d, bottom, lc, path);
        path.pop();
        out
    }

    /// Top-down node with no chain at all: the chain was empty after
    /// epsilon deletion.
    fn elided_bottom(&self, d: &Symbol, kids: Vec<ParseTree>, path: &[usize]) -> Result<ParseTree> {
        match (self.opts.epsilon, self.resolver) {
            (EpsilonMode::Keep, _) => Err(self.err(path, "missing LC chain")),
            (EpsilonMode::Full, Some(r)) => {
                let mut cands: Vec<(ParseTree, Vec<Symbol>)> = Vec::new();
                for a in r.top_down.get(&labels(&kids)).into_iter().flatten() {
                    for p in r.paths(a, d) {
                        cands.push((ParseTree::node(a.clone(), kids.clone()), p));
                    }
                }
                if let [leaf @ ParseTree::Leaf(w)] = &kids[..] {
                    for p in r.paths(w, d) {
                        cands.push((leaf.clone(), p));
                    }
                }
                let (bottom, p) = self.choose(cands, path, &format!("`{d}` left corner"))?;
                Ok(wrap_unary(bottom, &p))
            }
            _ => Ok(ParseTree::node(d.clone(), kids)),
        }
    }

    /// Closes the chain: `cur` must reach `d` through unary left-corner steps.
    fn close(&self, d: &Symbol, cur: ParseTree, path: &[usize]) -> Result<ParseTree> {
        let y = cur.label().expect("labelled").clone();
        if y == *d {
            return Ok(cur);
        }
        match (self.opts.epsilon, self.resolver) {
            (EpsilonMode::Full, Some(r)) => {
                let p = self.choose(r.paths(&y, d), path, &format!("chain `{y}` to `{d}`"))?;
                Ok(wrap_unary(cur, &p))
            }
            _ => Err(self.err(path, format!("chain ends at `{y}`, expected `{d}`"))),
        }
    }

    fn chain(&self, d: &Symbol, mut cur: ParseTree, mut lc: Option<&ParseTree>, path: &mut Vec<usize>) -> Result<ParseTree> {
        let eps = self.opts.epsilon;
        let depth = path.len();
        let result = loop {
            let Some(node) = lc else {
                if eps == EpsilonMode::Keep {
                    break Err(self.err(path, "missing LC chain"));
                }
                break self.close(d, cur, path);
            };
            let label = node.label().unwrap();
            let (d2, b) = label.as_lc_pair().unwrap();
            let y = cur.label().expect("labelled");
            if d2 != d || b != y {
                break Err(self.err(path, format!("`{label}` does not continue `{d}` from `{y}`")));
            }
            let ch = node.children();
            if let [ParseTree::Epsilon] = ch {
                match eps {
                    EpsilonMode::Keep if b == d => break Ok(cur),
                    EpsilonMode::OneStep => break Ok(ParseTree::node(d.clone(), vec![cur])),
                    _ => break Err(self.err(path, format!("unexpected EPS under `{label}`"))),
                }
            }
            let next = match ch.last() {
                Some(t @ ParseTree::Node { label, .. }) if label.as_lc_pair().is_some() => Some(t),
                _ => None,
            };
            let next_c = next.map(|t| t.label().unwrap().as_lc_pair().unwrap().1.clone());
            if self.opts.factor.left_corner() {
                let pt = match ch.first() {
                    Some(t @ ParseTree::Node { label, .. }) if label.as_lc_fact().is_some() => Some(t),
                    _ => None,
                };
                let want = pt.is_some() as usize + next.is_some() as usize;
                if ch.len() != want || (pt.is_none() && eps == EpsilonMode::Keep) {
                    break Err(self.err(path, format!("malformed `{label}` node")));
                }
                let c = match (pt, &next_c) {
                    (Some(t), _) => {
                        let (c, b2) = t.label().unwrap().as_lc_fact().unwrap();
                        if b2 != b {
                            break Err(self.err(path, format!("`{}` under `{label}`", t.label().unwrap())));
                        }
                        if next_c.as_ref().is_some_and(|n| n != c) {
                            break Err(self.err(path, format!("`{label}` chain skips from `{c}`")));
                        }
                        c.clone()
                    }
                    (None, Some(c)) => c.clone(),
                    (None, None) => unreachable!(),
                };
                let beta = match pt.map(|t| t.children()) {
                    Some([ParseTree::Epsilon]) | None => vec![],
                    Some(kids) => {
                        path.push(0);
                        let out = self.children(kids, 0, path);
                        path.pop();
                        match out {
                            Ok(v) => v,
                            Err(e) => break Err(e),
                        }
                    }
                };
                let mut kids = vec![cur];
                kids.extend(beta);
                cur = ParseTree::node(c, kids);
            } else {
                let beta_len = ch.len() - next.is_some() as usize;
                let beta = match self.children(&ch[..beta_len], 0, path) {
                    Ok(v) => v,
                    Err(e) => break Err(e),
                };
                match &next_c {
                    Some(c) => {
                        let mut kids = vec![cur];
                        kids.extend(beta);
                        cur = ParseTree::node(c.clone(), kids);
                    }
                    None => break self.elided_chain_top(d, cur, beta, path),
                }
            }
            if next.is_some() {
                path.push(node.children().len() - 1);
            }
            lc = next;
        };
        path.truncate(depth);
        result
    }

    /// Non-factored chain step whose successor pair was deleted.
    fn elided_chain_top(&self, d: &Symbol, cur: ParseTree, beta: Vec<ParseTree>, path: &[usize]) -> Result<ParseTree> {
        let b = cur.label().unwrap().clone();
        let mut kids = vec![cur];
        match (self.opts.epsilon, self.resolver) {
            (EpsilonMode::Keep, _) => Err(self.err(path, "missing LC chain")),
            (EpsilonMode::Full, Some(r)) => {
                let mut cands = Vec::new();
                for c in r.left_corner.get(&(b, labels(&beta))).into_iter().flatten() {
                    for p in r.paths(c, d) {
                        cands.push((c.clone(), p));
                    }
                }
                let (c, p) = self.choose(cands, path, &format!("chain step under `{d}`"))?;
                kids.extend(beta);
                Ok(wrap_unary(ParseTree::node(c, kids), &p))
            }
            _ => {
                kids.extend(beta);
                Ok(ParseTree::node(d.clone(), kids))
            }
        }
    }
}

pub fn lc_tree_detransform(t: &ParseTree, opts: &TransformOptions) -> Result<ParseTree> {
    Detransformer::new(*opts).detransform(t)
}

/// Collapses each maximal unary chain inside a unary cycle to `X0 -> NAT(Xm)`.
pub fn break_unary_cycles_tree(t: &ParseTree, cycles: &UnaryCycles) -> ParseTree {
    match t {
        ParseTree::Node { label, children } => {
            if !cycles.is_cyclic(label) {
                return ParseTree::node(label.clone(), children.iter().map(|c| break_unary_cycles_tree(c, cycles)).collect());
            }
            let mut cur = t;
            while let [c @ ParseTree::Node { label: next, .. }] = cur.children() {
                if !cycles.same_cycle(cur.label().unwrap(), next) {
                    break;
                }
                cur = c;
            }
            let inner = ParseTree::node(
                Symbol::natural(cur.label().unwrap()),
                cur.children().iter().map(|c| break_unary_cycles_tree(c, cycles)).collect(),
            );
            ParseTree::node(label.clone(), vec![inner])
        }
        other => other.clone(),
    }
}
