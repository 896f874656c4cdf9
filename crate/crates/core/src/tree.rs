//! Ordered labelled trees and the bracketed tree format.

use std::fmt;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::grammar::Production;
use crate::symbol::{is_reserved_char, Symbol, EPSILON_TOKEN};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParseTree {
    Node { label: Symbol, children: Vec<ParseTree> },
    /// A terminal leaf.
    Leaf(Symbol),
    /// The empty-yield marker, rendered `EPS`.
    Epsilon,
}

impl ParseTree {
    pub fn node(label: Symbol, children: Vec<ParseTree>) -> Self {
        ParseTree::Node { label, children }
    }

    pub fn leaf(name: &str) -> Self {
        ParseTree::Leaf(Symbol::base(name))
    }

    /// Parses exactly one bracketed tree.
    pub fn parse(text: &str) -> Result<Self> {
        let mut trees = read_trees(text)?;
        match trees.len() {
            1 => Ok(trees.remove(0)),
            n => Err(Error::TreeSyntax {
                pos: 0,
                msg: format!("expected one tree, found {n}"),
            }),
        }
    }

    pub fn label(&self) -> Option<&Symbol> {
        match self {
            ParseTree::Node { label, .. } | ParseTree::Leaf(label) => Some(label),
            ParseTree::Epsilon => None,
        }
    }

    pub fn children(&self) -> &[ParseTree] {
        match self {
            ParseTree::Node { children, .. } => children,
            _ => &[],
        }
    }

    pub fn is_node(&self) -> bool {
        matches!(self, ParseTree::Node { .. })
    }

    /// The production of an internal node; `EPS` children contribute nothing.
    pub fn production(&self) -> Option<Production> {
        match self {
            ParseTree::Node { label, children } => Some(Production::new(
                label.clone(),
                children.iter().filter_map(|c| c.label().cloned()).collect(),
            )),
            _ => None,
        }
    }

    /// Terminal leaves left to right, epsilon markers excluded.
    pub fn terminal_yield(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.collect_yield(&mut out);
        out
    }

    fn collect_yield(&self, out: &mut Vec<Symbol>) {
        match self {
            ParseTree::Node { children, .. } => children.iter().for_each(|c| c.collect_yield(out)),
            ParseTree::Leaf(s) => out.push(s.clone()),
            ParseTree::Epsilon => {}
        }
    }

    pub fn yield_len(&self) -> usize {
        match self {
            ParseTree::Node { children, .. } => children.iter().map(|c| c.yield_len()).sum(),
            ParseTree::Leaf(_) => 1,
            ParseTree::Epsilon => 0,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            ParseTree::Node { children, .. } => 1 + children.iter().map(|c| c.node_count()).sum::<usize>(),
            _ => 0,
        }
    }

    /// Visits internal nodes in preorder.
    pub fn for_each_node<F: FnMut(&ParseTree)>(&self, f: &mut F) {
        if let ParseTree::Node { children, .. } = self {
            f(self);
            for c in children {
                c.for_each_node(f);
            }
        }
    }

    /// Replaces each preterminal `(T w)` by the leaf `T`, so tags act as terminals.
    pub fn strip_words(&self) -> ParseTree {
        match self {
            ParseTree::Node { label, children } => {
                if children.len() == 1 && matches!(children[0], ParseTree::Leaf(_)) {
                    ParseTree::Leaf(label.clone())
                } else {
                    ParseTree::node(label.clone(), children.iter().map(|c| c.strip_words()).collect())
                }
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
            ParseTree::Leaf(s) => write!(f, "{s}"),
            ParseTree::Epsilon => f.write_str(EPSILON_TOKEN),
        }
    }
}

impl fmt::Debug for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// One production per internal node, with multiplicity, in first-seen order.
pub fn tree_productions(t: &ParseTree) -> IndexMap<Production, usize> {
    let mut counts = IndexMap::new();
    t.for_each_node(&mut |n| {
        *counts.entry(n.production().expect("node")).or_insert(0) += 1;
    });
    counts
}

struct TreeReader<'a> {
    src: &'a str,
    pos: usize,
}

impl TreeReader<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::TreeSyntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    /// A label or leaf token; derived-symbol brackets are consumed as part
    /// of the token.
    fn token(&mut self) -> Result<String> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        loop {
            let rest = &self.src[self.pos..];
            let run = rest.find(is_reserved_char).unwrap_or(rest.len());
            self.pos += run;
            let word = &self.src[start..self.pos];
            let derived_head = ["LC", "PT", "TD", "NAT"].contains(&word);
            if self.pos < bytes.len() && bytes[self.pos] == b'(' && derived_head {
                let mut depth = 0usize;
                while self.pos < bytes.len() {
                    match bytes[self.pos] {
                        b'(' => depth += 1,
                        b')' => {
                            depth -= 1;
                            if depth == 0 {
                                self.pos += 1;
                                break;
                            }
                        }
                        b' ' | b'\t' | b'\n' | b'\r' => return Err(self.err("whitespace inside derived label")),
                        _ => {}
                    }
                    self.pos += 1;
                }
                if depth != 0 {
                    return Err(self.err("unterminated derived label"));
                }
                continue;
            }
            break;
        }
        if self.pos == start {
            return Err(self.err("empty label"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn symbol(&self, tok: &str, at: usize) -> Result<Symbol> {
        Symbol::parse(tok).map_err(|e| Error::TreeSyntax {
            pos: at,
            msg: e.to_string(),
        })
    }

    fn tree(&mut self) -> Result<ParseTree> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let at = self.pos;
                if self.peek() == Some('(') || self.peek() == Some(')') {
                    return Err(self.err("empty label"));
                }
                let label = self.token()?;
                let label = self.symbol(&label, at)?;
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => children.push(self.tree()?),
                        None => return Err(self.err("unbalanced brackets: missing `)`")),
                    }
                }
                if children.is_empty() {
                    // `(w)` denotes a bare leaf.
                    return Ok(ParseTree::Leaf(label));
                }
                Ok(ParseTree::Node { label, children })
            }
            Some(')') => Err(self.err("unbalanced brackets: unexpected `)`")),
            Some(_) => {
                let at = self.pos;
                let tok = self.token()?;
                if tok == EPSILON_TOKEN {
                    Ok(ParseTree::Epsilon)
                } else {
                    Ok(ParseTree::Leaf(self.symbol(&tok, at)?))
                }
            }
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Reads every top-level bracketed tree in `text`.
pub fn read_trees(text: &str) -> Result<Vec<ParseTree>> {
    let mut r = TreeReader { src: text, pos: 0 };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        match r.peek() {
            None => return Ok(out),
            Some('(') => {
                let t = r.tree()?;
                if !t.is_node() {
                    return Err(r.err("top-level tree must have children"));
                }
                out.push(t);
            }
            Some(_) => return Err(r.err("expected `(` at top level")),
        }
    }
}

/// One tree per line.
pub fn write_trees(trees: &[ParseTree]) -> String {
    let mut s = String::new();
    for t in trees {
        s.push_str(&t.to_string());
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_simple_tree() {
        let t = ParseTree::parse("(S (A a) (B b))").unwrap();
        assert_eq!(t.production().unwrap(), Production::from_names("S", &["A", "B"]));
        assert_eq!(t.to_string(), "(S (A a) (B b))");
    }

    #[test]
    fn reads_left_branching() {
        let t = ParseTree::parse("(S (S (S (b b)) (a a)) (a a))").unwrap();
        assert_eq!(t.node_count(), 6);
        let prods = tree_productions(&t);
        assert_eq!(prods[&Production::from_names("S", &["S", "a"])], 2);
        assert_eq!(prods[&Production::from_names("S", &["b"])], 1);
        assert_eq!(prods[&Production::from_names("a", &["a"])], 2);
    }

    #[test]
    fn bracketed_bare_leaves() {
        let t = ParseTree::parse("(S (S (S (b)) (a)) (a))").unwrap();
        assert_eq!(t.to_string(), "(S (S (S b) a) a)");
        let prods = tree_productions(&t);
        assert_eq!(prods[&Production::from_names("S", &["S", "a"])], 2);
        assert_eq!(prods[&Production::from_names("S", &["b"])], 1);
        assert_eq!(prods.len(), 2);
    }

    #[test]
    fn multiple_trees_per_line() {
        let ts = read_trees("(A a) (B (C c))\n(D d)").unwrap();
        assert_eq!(ts.len(), 3);
        assert_eq!(write_trees(&ts), "(A a)\n(B (C c))\n(D d)\n");
    }

    #[test]
    fn derived_labels_and_epsilon() {
        let text = "(S b (LC(S;S) a (LC(S;S) EPS)))";
        let t = ParseTree::parse(text).unwrap();
        assert_eq!(t.to_string(), text);
        assert_eq!(t.terminal_yield(), vec![Symbol::base("b"), Symbol::base("a")]);
        let lc = Symbol::lc_pair(&Symbol::base("S"), &Symbol::base("S"));
        assert!(tree_productions(&t).contains_key(&Production::new(lc, vec![])));
        let nested = ParseTree::parse("(LC(NAT(A);PT(B;c)) x)").unwrap();
        assert_eq!(nested.to_string(), "(LC(NAT(A);PT(B;c)) x)");
    }

    #[test]
    fn single_leaf_tree() {
        let t = ParseTree::parse("(A a)").unwrap();
        assert_eq!(tree_productions(&t).into_iter().collect::<Vec<_>>(), vec![(Production::from_names("A", &["a"]), 1)]);
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(read_trees("(S (A a)"), Err(Error::TreeSyntax { .. })));
        assert!(matches!(read_trees("(S a))"), Err(Error::TreeSyntax { .. })));
        assert!(matches!(read_trees("( (S a))"), Err(Error::TreeSyntax { .. })));
        assert!(matches!(read_trees("()"), Err(Error::TreeSyntax { .. })));
        match read_trees("(S (A a)") {
            Err(Error::TreeSyntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strips_words() {
        let t = ParseTree::parse("(S (NP (d the) (n dog)) (VP (v runs)))").unwrap();
        assert_eq!(t.strip_words().to_string(), "(S (NP d n) (VP v))");
    }
}
