//! Selective left-corner grammar transforms, with the tree transforms,
//! estimation, parsing and evaluation needed to study them.

pub mod epsilon;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod fixtures;
pub mod grammar;
pub mod parser;
pub mod pipeline;
pub mod prune;
pub mod random;
pub mod relation;
pub mod symbol;
pub mod transform;
pub mod tree;
pub mod tree_transform;
pub mod treebank;
pub mod unary;

pub use error::{Error, Result};
pub use grammar::{parse_grammar, write_grammar, Grammar, GrammarBuilder, GrammarStats, Production};
pub use relation::{left_corner_relation, left_recursive_set, select_l, LMode, PairRelation, ProductionSet};
pub use symbol::Symbol;
pub use transform::{lc_transform, EpsilonMode, Factor, TransformOptions, Transformed};
pub use tree::{read_trees, write_trees, ParseTree};
pub use unary::{remove_unary_cycles, UnaryCycles};
pub use tree_transform::{
    break_unary_cycles_tree, lc_tree_detransform, lc_tree_transform, Detransformer, Resolver, TreeTransformer,
};
pub use estimate::{estimate_pcfg, tree_weight, CountTable};
pub use parser::{cky_parse, enumerate_parses, enumerate_strings, Parser};
pub use eval::{coverage_parse_report, missing_productions, parseval, BracketCounts, EvalReport, ParsevalOptions};
