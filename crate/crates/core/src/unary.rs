//! Unary-cycle removal.
//!
//! Every nonterminal `A` on a unary cycle gets a companion `NAT(A)` that
//! expands only by `A`'s cycle-exiting productions; the cycle itself is
//! collapsed into direct `A -> NAT(D)` productions for every `D` in `A`'s
//! strongly connected unary component.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::grammar::{Grammar, Production};
use crate::symbol::Symbol;

/// Strongly connected components of the unary-production graph that
/// contain a cycle.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnaryCycles {
    component: BTreeMap<Symbol, usize>,
    members: Vec<Vec<Symbol>>,
}

impl UnaryCycles {
    pub fn of(g: &Grammar) -> Self {
        let mut graph: DiGraph<Symbol, ()> = DiGraph::new();
        let nodes: BTreeMap<&Symbol, _> = g
            .nonterminals()
            .iter()
            .map(|s| (s, graph.add_node(s.clone())))
            .collect();
        let mut self_loops = BTreeSet::new();
        for (p, _) in g.productions() {
            if p.is_unary() && g.is_nonterminal(&p.rhs[0]) {
                if p.lhs == p.rhs[0] {
                    self_loops.insert(p.lhs.clone());
                }
                graph.add_edge(nodes[&p.lhs], nodes[&p.rhs[0]], ());
            }
        }
        let mut comps: Vec<Vec<Symbol>> = tarjan_scc(&graph)
            .into_iter()
            .map(|c| {
                let mut v: Vec<Symbol> = c.into_iter().map(|i| graph[i].clone()).collect();
                v.sort();
                v
            })
            .filter(|c| c.len() > 1 || self_loops.contains(&c[0]))
            .collect();
        comps.sort();
        let mut component = BTreeMap::new();
        for (i, c) in comps.iter().enumerate() {
            for s in c {
                component.insert(s.clone(), i);
            }
        }
        UnaryCycles {
            component,
            members: comps,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The cyclic components, each sorted.
    pub fn components(&self) -> &[Vec<Symbol>] {
        &self.members
    }

    pub fn is_cyclic(&self, s: &Symbol) -> bool {
        self.component.contains_key(s)
    }

    pub fn cyclic_set(&self) -> BTreeSet<Symbol> {
        self.component.keys().cloned().collect()
    }

    /// Both symbols lie on a common unary cycle.
    pub fn same_cycle(&self, a: &Symbol, b: &Symbol) -> bool {
        match (self.component.get(a), self.component.get(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    pub fn component_of(&self, s: &Symbol) -> Option<&[Symbol]> {
        self.component.get(s).map(|&i| self.members[i].as_slice())
    }

    /// `A -> alpha` with `alpha =>* A` (a unary production staying on `A`'s cycle).
    pub fn returns_to_cycle(&self, p: &Production) -> bool {
        p.is_unary() && self.same_cycle(&p.lhs, &p.rhs[0])
    }
}

/// Removes unary cycles. With `weighted`, chain weights are summed in
/// closed form so that string and collapsed-tree probabilities are kept;
/// otherwise every output weight is 1.
pub fn remove_unary_cycles(g: &Grammar, weighted: bool) -> Result<Grammar> {
    let cycles = UnaryCycles::of(g);
    if cycles.is_empty() {
        return Ok(g.clone());
    }
    let mut out = g.empty_like();

    // Exit mass Z_D and chain sums per component.
    let mut exit_mass: BTreeMap<&Symbol, f64> = BTreeMap::new();
    for (p, w) in g.productions() {
        if cycles.is_cyclic(&p.lhs) && !cycles.returns_to_cycle(p) {
            *exit_mass.entry(&p.lhs).or_insert(0.0) += w;
        }
    }

    let mut chain_sums: BTreeMap<(Symbol, Symbol), f64> = BTreeMap::new();
    for comp in &cycles.members {
        let n = comp.len();
        let idx: BTreeMap<&Symbol, usize> = comp.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let sums = if weighted {
            let mut m = DMatrix::<f64>::identity(n, n);
            for a in comp {
                for (p, w) in g.productions_of(a) {
                    if cycles.returns_to_cycle(p) {
                        m[(idx[a], idx[&p.rhs[0]])] -= w;
                    }
                }
            }
            let names = || comp.iter().map(|s| s.to_string()).collect::<Vec<_>>();
            let inv = m.try_inverse().ok_or_else(|| Error::DivergentChains(names()))?;
            if inv.iter().any(|&x| !x.is_finite() || x < -1e-12) {
                return Err(Error::DivergentChains(names()));
            }
            inv
        } else {
            DMatrix::from_element(n, n, 1.0)
        };
        for a in comp {
            for d in comp {
                chain_sums.insert((a.clone(), d.clone()), sums[(idx[a], idx[d])].max(0.0));
            }
        }
    }

    for (p, w) in g.productions() {
        let a = &p.lhs;
        if !cycles.is_cyclic(a) {
            out.add(p.clone(), w);
        }
    }
    for comp in &cycles.members {
        for a in comp {
            for d in comp {
                let z = exit_mass.get(d).copied().unwrap_or(0.0);
                if z <= 0.0 {
                    continue;
                }
                let w = if weighted {
                    chain_sums[&(a.clone(), d.clone())] * z
                } else {
                    1.0
                };
                out.add(Production::new(a.clone(), vec![Symbol::natural(d)]), w);
            }
        }
    }
    for (p, w) in g.productions() {
        if cycles.is_cyclic(&p.lhs) && !cycles.returns_to_cycle(p) {
            let z = exit_mass[&p.lhs];
            let w = if weighted { w / z } else { 1.0 };
            out.add(Production::new(Symbol::natural(&p.lhs), p.rhs.clone()), w);
        }
    }
    out.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;
    use crate::relation::cyclic_nonterminals;

    #[test]
    fn two_cycle_schemata() {
        let g = parse_grammar("A -> B\nB -> A\nA -> a\nB -> b").unwrap();
        let out = remove_unary_cycles(&g, false).unwrap();
        let expected = parse_grammar(
            "%start A\nA -> NAT(A)\nA -> NAT(B)\nB -> NAT(A)\nB -> NAT(B)\nNAT(A) -> a\nNAT(B) -> b",
        )
        .unwrap();
        assert_eq!(out.production_set(), expected.production_set());
        assert!(cyclic_nonterminals(&out).is_empty());
    }

    #[test]
    fn acyclic_is_unchanged() {
        let g = parse_grammar("S -> S a\nS -> b").unwrap();
        assert!(remove_unary_cycles(&g, true).unwrap().same_structure(&g));
    }

    #[test]
    fn weighted_chain_sums() {
        let g = parse_grammar("0.5 A -> B\n0.5 B -> A\n0.5 A -> a\n0.5 B -> b").unwrap();
        let out = remove_unary_cycles(&g, true).unwrap();
        let w = |s: &str| out.weight(&Production::parse(s).unwrap()).unwrap();
        // P(A =>* a) = 0.5 * sum_k 0.25^k = 2/3
        assert!((w("A -> NAT(A)") * w("NAT(A) -> a") - 2.0 / 3.0).abs() < 1e-12);
        assert!((w("A -> NAT(B)") * w("NAT(B) -> b") - 1.0 / 3.0).abs() < 1e-12);
        assert!(out.is_proper(1e-9));
    }

    #[test]
    fn divergent_chain_is_an_error() {
        let g = parse_grammar("1 A -> B\n1 B -> A\n0.5 A -> a").unwrap();
        assert!(matches!(
            remove_unary_cycles(&g, true),
            Err(Error::DivergentChains(_))
        ));
    }

    #[test]
    fn self_loop_is_dropped() {
        let g = parse_grammar("0.5 A -> A\n0.5 A -> a").unwrap();
        let out = remove_unary_cycles(&g, true).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.weight(&Production::parse("A -> NAT(A)").unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }
}
