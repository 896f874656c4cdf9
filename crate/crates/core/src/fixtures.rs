//! Small named grammars used by the test suites and the CLI's oracle checks.
//! All are proper PCFGs; `cyclic` has a unary cycle and is only usable after
//! [`remove_unary_cycles`].

use crate::grammar::{parse_grammar, Grammar};
use crate::unary::remove_unary_cycles;

pub const SAB: &str = "\
0.4 S -> S a
0.6 S -> b
";

pub const NP_PP: &str = "\
%start NP
0.3 NP -> NP PP
0.7 NP -> d n
1 PP -> p NP
";

pub const MUTUAL: &str = "\
1 S -> A x
0.4 A -> S y
0.6 A -> z
";

pub const AMBIGUOUS: &str = "\
0.4 S -> S S
0.6 S -> a
";

pub const EXPR: &str = "\
0.3 E -> E plus T
0.7 E -> T
0.25 T -> T times F
0.75 T -> F
0.2 F -> lp E rp
0.8 F -> x
";

/// Left recursion through a unary production in the left-corner set.
pub const UNARY_LR: &str = "\
0.5 S -> A
0.5 S -> b
0.3 A -> S y
0.7 A -> a
";

pub const CLAUSES: &str = "\
1 S -> NP VP
0.2 NP -> NP PP
0.8 NP -> d n
0.5 VP -> v NP
0.3 VP -> VP PP
0.2 VP -> v
1 PP -> p NP
";

pub const CYCLIC: &str = "\
%start A
0.5 A -> B
0.5 A -> a
0.5 B -> A
0.5 B -> b
";

pub const ALL: [(&str, &str); 8] = [
    ("sab", SAB),
    ("np-pp", NP_PP),
    ("mutual", MUTUAL),
    ("ambiguous", AMBIGUOUS),
    ("expr", EXPR),
    ("unary-lr", UNARY_LR),
    ("clauses", CLAUSES),
    ("cyclic", CYCLIC),
];

/// Every fixture as an acyclic grammar, cycles removed where present.
pub fn acyclic() -> Vec<(&'static str, Grammar)> {
    ALL.iter()
        .map(|(name, text)| {
            let g = parse_grammar(text).expect("fixture parses");
            let g = remove_unary_cycles(&g, true).expect("cycle removal");
            (*name, g)
        })
        .collect()
}
