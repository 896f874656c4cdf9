use std::collections::{BTreeSet, VecDeque};

use crate::grammar::Grammar;
use crate::symbol::Symbol;

#[derive(Clone, Debug)]
pub struct Pruned {
    pub grammar: Grammar,
    /// The start symbol derives no terminal string; `grammar` is empty.
    pub start_unproductive: bool,
}

/// Keeps exactly the productions that are productive and reachable from
/// the start symbol.
pub fn prune_useless(g: &Grammar) -> Pruned {
    let mut productive: BTreeSet<&Symbol> = BTreeSet::new();
    loop {
        let before = productive.len();
        for (p, _) in g.productions() {
            if !productive.contains(&p.lhs)
                && p
                    .rhs
                    .iter()
                    .all(|s| g.is_terminal(s) || productive.contains(s))
            {
                productive.insert(&p.lhs);
            }
        }
        if productive.len() == before {
            break;
        }
    }
    let ok = |s: &Symbol| g.is_terminal(s) || productive.contains(s);

    if !productive.contains(g.start()) {
        return Pruned {
            grammar: g.retain(|_, _| false),
            start_unproductive: true,
        };
    }

    let mut reachable: BTreeSet<&Symbol> = BTreeSet::from([g.start()]);
    let mut queue = VecDeque::from([g.start()]);
    while let Some(a) = queue.pop_front() {
        for (p, _) in g.productions_of(a) {
            if p.rhs.iter().all(&ok) {
                for s in &p.rhs {
                    if g.is_nonterminal(s) && reachable.insert(s) {
                        queue.push_back(s);
                    }
                }
            }
        }
    }
    let grammar = g.retain(|p, _| reachable.contains(&p.lhs) && p.rhs.iter().all(&ok));
    Pruned {
        grammar,
        start_unproductive: false,
    }
}
