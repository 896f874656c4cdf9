//! The bundled mini-treebank: trees sampled from a small treebank-like
//! grammar with left recursion and one unary cycle (`NP -> NX -> NP`).
//! Leaves are part-of-speech tags.

use crate::grammar::{parse_grammar, Grammar};
use crate::random::TreeSampler;
use crate::tree::{read_trees, ParseTree};

pub const GENERATOR_GRAMMAR: &str = "\
%start S
0.35 S -> NP VP
0.1 S -> NP MD VP
0.08 S -> S CC S
0.05 S -> S PP
0.04 S -> S SBAR
0.1 S -> PP NP VP
0.2 S -> VP
0.2 NP -> DT NN
0.08 NP -> DT ADJP NN
0.06 NP -> DT NNS
0.08 NP -> NP PP
0.1 NP -> PRP
0.08 NP -> NNS
0.08 NP -> NNP
0.04 NP -> NP CC NP
0.04 NP -> NP SBAR
0.04 NP -> NP POS NN
0.05 NP -> CD NNS
0.05 NP -> NX
0.02 NP -> S
0.3 NX -> NP
0.7 NX -> NN NN
0.4 VP -> VB NP
0.15 VP -> VBD NP PP
0.12 VP -> VP PP
0.15 VP -> VBD
0.08 VP -> TO VP
0.1 VP -> VBD SBAR
0.6 PP -> IN NP
0.2 PP -> TO NP
0.2 PP -> NP IN
0.7 SBAR -> IN S
0.3 SBAR -> WDT VP
0.6 ADJP -> JJ
0.2 ADJP -> RB JJ
0.2 ADJP -> NP JJ
";

pub const SEED: u64 = 19_980_605;
pub const SIZE: usize = 200;
pub const MAX_DEPTH: usize = 9;

const DATA: &str = include_str!("../data/minitb.mrg");

pub fn generator_grammar() -> Grammar {
    parse_grammar(GENERATOR_GRAMMAR).expect("valid generator grammar")
}

/// Regenerates the treebank from the generator grammar.
pub fn generate() -> Vec<ParseTree> {
    let g = generator_grammar();
    let mut s = TreeSampler::new(&g, SEED, MAX_DEPTH);
    (0..SIZE).map(|_| s.sample()).collect()
}

/// The frozen treebank shipped in `data/minitb.mrg`.
pub fn mini_treebank() -> Vec<ParseTree> {
    read_trees(DATA).expect("bundled treebank parses")
}
