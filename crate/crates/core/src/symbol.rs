//! Grammar symbols and their textual rendering.
//!
//! Base symbols are plain names; whether a base symbol is a terminal or a
//! nonterminal is decided by the grammar it lives in. The derived kinds
//! introduced by the transforms are always nonterminals and render as
//! `LC(D;X)`, `TD(A)`, `PT(C;B)` and `NAT(A)`.

use std::fmt;
use std::sync::Arc;

use crate::error::Error;

/// Token used for the empty-yield leaf in bracketed trees.
pub const EPSILON_TOKEN: &str = "EPS";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// A named terminal or nonterminal from the source grammar.
    Base(Arc<str>),
    /// `D` predicted top-down, `X` recognised as its left corner.
    LcPair(Arc<Symbol>, Arc<Symbol>),
    /// Top-down factored copy of a nonterminal.
    TdPrime(Arc<Symbol>),
    /// Left-corner factored remainder of `C -> B beta`.
    LcFact(Arc<Symbol>, Arc<Symbol>),
    /// A nonterminal of a unary cycle, expanded only by cycle-exiting productions.
    Natural(Arc<Symbol>),
}

impl Symbol {
    pub fn base(name: &str) -> Symbol {
        Symbol::Base(Arc::from(name))
    }

    pub fn lc_pair(d: &Symbol, x: &Symbol) -> Symbol {
        Symbol::LcPair(Arc::new(d.clone()), Arc::new(x.clone()))
    }

    pub fn td_prime(a: &Symbol) -> Symbol {
        Symbol::TdPrime(Arc::new(a.clone()))
    }

    pub fn lc_fact(c: &Symbol, b: &Symbol) -> Symbol {
        Symbol::LcFact(Arc::new(c.clone()), Arc::new(b.clone()))
    }

    pub fn natural(a: &Symbol) -> Symbol {
        Symbol::Natural(Arc::new(a.clone()))
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Symbol::Base(_))
    }

    /// Derived symbols are nonterminals regardless of grammar context.
    pub fn is_derived(&self) -> bool {
        !self.is_base()
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Symbol::Base(n) => Some(n),
            _ => None,
        }
    }

    /// The `(D, X)` of an `LC(D;X)` symbol.
    pub fn as_lc_pair(&self) -> Option<(&Symbol, &Symbol)> {
        match self {
            Symbol::LcPair(d, x) => Some((d, x)),
            _ => None,
        }
    }

    pub fn as_td_prime(&self) -> Option<&Symbol> {
        match self {
            Symbol::TdPrime(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_lc_fact(&self) -> Option<(&Symbol, &Symbol)> {
        match self {
            Symbol::LcFact(c, b) => Some((c, b)),
            _ => None,
        }
    }

    pub fn as_natural(&self) -> Option<&Symbol> {
        match self {
            Symbol::Natural(a) => Some(a),
            _ => None,
        }
    }

    /// Parses a single rendered symbol token such as `LC(NP;NAT(S))`.
    pub fn parse(token: &str) -> Result<Symbol, Error> {
        let mut p = SymbolParser { src: token, pos: 0 };
        let sym = p.symbol()?;
        if p.pos != token.len() {
            return Err(p.err("trailing characters"));
        }
        Ok(sym)
    }
}

/// True when `c` may not appear inside a base name.
pub fn is_reserved_char(c: char) -> bool {
    c == '(' || c == ')' || c == ';' || c.is_whitespace()
}

struct SymbolParser<'a> {
    src: &'a str,
    pos: usize,
}

impl SymbolParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::BadSymbol {
            token: self.src.to_string(),
            reason: format!("{msg} at offset {}", self.pos),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), Error> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{s}`")))
        }
    }

    fn symbol(&mut self) -> Result<Symbol, Error> {
        if self.eat("LC(") {
            let d = self.symbol()?;
            self.expect(";")?;
            let x = self.symbol()?;
            self.expect(")")?;
            Ok(Symbol::lc_pair(&d, &x))
        } else if self.eat("PT(") {
            let c = self.symbol()?;
            self.expect(";")?;
            let b = self.symbol()?;
            self.expect(")")?;
            Ok(Symbol::lc_fact(&c, &b))
        } else if self.eat("TD(") {
            let a = self.symbol()?;
            self.expect(")")?;
            Ok(Symbol::td_prime(&a))
        } else if self.eat("NAT(") {
            let a = self.symbol()?;
            self.expect(")")?;
            Ok(Symbol::natural(&a))
        } else {
            let start = self.pos;
            let len = self
                .rest()
                .find(is_reserved_char)
                .unwrap_or(self.rest().len());
            if len == 0 {
                return Err(self.err("empty name"));
            }
            self.pos += len;
            Ok(Symbol::base(&self.src[start..self.pos]))
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Base(n) => f.write_str(n),
            Symbol::LcPair(d, x) => write!(f, "LC({d};{x})"),
            Symbol::TdPrime(a) => write!(f, "TD({a})"),
            Symbol::LcFact(c, b) => write!(f, "PT({c};{b})"),
            Symbol::Natural(a) => write!(f, "NAT({a})"),
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
