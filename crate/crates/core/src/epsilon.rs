//! Weighted epsilon-production elimination.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production};
use crate::relation::nullable_symbols;
use crate::symbol::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsilonScope {
    /// Only symbols with a direct epsilon production are dropped, once.
    OneStep,
    /// Every nullable symbol is dropped; the result is epsilon-free.
    Full,
}

/// One output production and the source production it came from.
#[derive(Clone, Debug)]
pub struct Variant {
    pub production: Production,
    pub weight: f64,
    pub source: usize,
    /// RHS positions of the source production that were dropped.
    pub dropped: Vec<usize>,
}

/// Total weight of the epsilon derivations of each nullable symbol.
pub fn null_weights(g: &Grammar, scope: EpsilonScope) -> Result<BTreeMap<Symbol, f64>> {
    match scope {
        EpsilonScope::OneStep => {
            let mut out = BTreeMap::new();
            for (p, w) in g.productions() {
                if p.is_epsilon() {
                    *out.entry(p.lhs.clone()).or_insert(0.0) += w;
                }
            }
            Ok(out)
        }
        EpsilonScope::Full => {
            let nullable = nullable_symbols(g);
            let mut done: BTreeMap<Symbol, f64> = BTreeMap::new();
            let mut active = BTreeSet::new();
            for x in &nullable {
                null_weight(g, x, &nullable, &mut done, &mut active)?;
            }
            Ok(done)
        }
    }
}

fn null_weight(
    g: &Grammar,
    x: &Symbol,
    nullable: &BTreeSet<Symbol>,
    done: &mut BTreeMap<Symbol, f64>,
    active: &mut BTreeSet<Symbol>,
) -> Result<f64> {
    if let Some(&w) = done.get(x) {
        return Ok(w);
    }
    if !active.insert(x.clone()) {
        return Err(Error::DerivationCycle(x.to_string()));
    }
    let mut total = 0.0;
    for (p, w) in g.productions_of(x) {
        if p.rhs.iter().all(|s| nullable.contains(s)) {
            let mut prod = w;
            for s in &p.rhs {
                prod *= null_weight(g, s, nullable, done, active)?;
            }
            total += prod;
        }
    }
    active.remove(x);
    done.insert(x.clone(), total);
    Ok(total)
}

/// Epsilon-dropping variants of every production, in source order.
pub fn epsilon_variants(g: &Grammar, scope: EpsilonScope) -> Result<Vec<Variant>> {
    let nulls = null_weights(g, scope)?;
    let mut out = Vec::new();
    for (i, (p, w)) in g.productions().enumerate() {
        if p.is_epsilon() {
            if scope == EpsilonScope::OneStep && !nulls.contains_key(&p.lhs) {
                out.push(Variant {
                    production: p.clone(),
                    weight: w,
                    source: i,
                    dropped: vec![],
                });
            }
            continue;
        }
        let positions: Vec<usize> = p
            .rhs
            .iter()
            .enumerate()
            .filter(|(_, s)| nulls.contains_key(s))
            .map(|(k, _)| k)
            .collect();
        if positions.len() > 20 {
            return Err(Error::GuardExceeded {
                what: "nullable symbols in one production",
                limit: 20,
                got: positions.len(),
            });
        }
        for mask in 0u32..(1 << positions.len()) {
            let dropped: Vec<usize> = positions
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &k)| k)
                .collect();
            let rhs: Vec<Symbol> = p
                .rhs
                .iter()
                .enumerate()
                .filter(|(k, _)| !dropped.contains(k))
                .map(|(_, s)| s.clone())
                .collect();
            if rhs.is_empty() && scope == EpsilonScope::Full {
                continue;
            }
            let weight = dropped.iter().fold(w, |acc, &k| acc * nulls[&p.rhs[k]]);
            out.push(Variant {
                production: Production::new(p.lhs.clone(), rhs),
                weight,
                source: i,
                dropped,
            });
        }
    }
    Ok(out)
}

/// Eliminates epsilon productions, merging coinciding variants by summing weights.
pub fn remove_epsilon(g: &Grammar, scope: EpsilonScope) -> Result<Grammar> {
    let mut b = g.empty_like();
    for v in epsilon_variants(g, scope)? {
        b.add(v.production, v.weight);
    }
    b.build()
}
