//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the report prints in order. Any FAIL
//! makes the process exit nonzero.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lcgram::fixtures;
use lcgram::parser::string_weight;
use lcgram::pipeline::{Experiment, LSet, PipelineConfig, Variant};
use lcgram::random::{random_grammar, GrammarShape, TreeSampler};
use lcgram::relation::is_left_recursive;
use lcgram::transform::SchemaId;
use lcgram::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PROB_TOL: f64 = 1e-12;
const STRING_LEN: usize = 8;
const PROB_STRING_LEN: usize = 5;
const VITERBI_LEN: usize = 6;
const RANDOM_GRAMMARS: u64 = 100;
const ROUND_TRIP_TREES: usize = 1000;
const ROUND_TRIP_DEPTH: usize = 10;
const TREE_WEIGHT_TREES: usize = 200;
const SPLITS: u64 = 20;
const TEST_FRACTION: f64 = 0.1;
const WSJ_ENV: &str = "LCGRAM_WSJ_DIR";

const LIMIT_1: Duration = Duration::from_secs(1);
const LIMIT_2: Duration = Duration::from_secs(30);
const LIMIT_3: Duration = Duration::from_secs(10);
const LIMIT_4: Duration = Duration::from_secs(60);
const LIMIT_6: Duration = Duration::from_secs(30);
const LIMIT_9: Duration = Duration::from_secs(30 * 60);

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> std::result::Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn err(e: Error) -> String {
    e.to_string()
}

fn l_modes() -> [(&'static str, LMode); 3] {
    [("P", LMode::All), ("N", LMode::NonPosInitial), ("L0", LMode::L0)]
}

/// Every factor and epsilon mode with the remaining options at defaults.
fn twelve(weighted: bool) -> Vec<TransformOptions> {
    let mut v = Vec::new();
    for f in Factor::ALL {
        for e in EpsilonMode::ALL {
            v.push(TransformOptions::new(f, e).weighted(weighted));
        }
    }
    v
}

/// `twelve` crossed with both pruning and Moore settings.
fn all_options() -> Vec<TransformOptions> {
    let mut v = Vec::new();
    for base in twelve(false) {
        for prune_links in [true, false] {
            for moore_constraint in [false, true] {
                v.push(TransformOptions {
                    prune_links,
                    moore_constraint,
                    ..base
                });
            }
        }
    }
    v
}

/// Fixtures have no POS directive; their terminals stand in as the tags.
fn l_of(g: &Grammar, mode: &LMode) -> std::result::Result<ProductionSet, String> {
    let tagged;
    let g = if g.pos_tags().is_none() {
        tagged = g.with_pos_tags(Some(g.terminals().clone()));
        &tagged
    } else {
        g
    };
    select_l(g, mode).map(|s| s.productions).map_err(err)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let cases = [
        (
            fixtures::SAB,
            EpsilonMode::Keep,
            "S -> b LC(S;S)\nLC(S;S) -> a LC(S;S)\nLC(S;S) ->\n",
        ),
        (
            fixtures::NP_PP,
            EpsilonMode::Full,
            "%start NP\nNP -> d n\nNP -> d n LC(NP;NP)\nPP -> p NP\nLC(NP;NP) -> PP\nLC(NP;NP) -> PP LC(NP;NP)\n",
        ),
    ];
    for (src, eps, want) in cases {
        let g = parse_grammar(src).map_err(err)?;
        let l = l_of(&g, &LMode::L0)?;
        let got = lc_transform(&g, &l, &TransformOptions::new(Factor::None, eps)).map_err(err)?;
        let want = parse_grammar(want).map_err(err)?;
        ensure(got.grammar.production_set() == want.production_set(), || {
            format!("{eps}: got\n{}", write_grammar(&got.grammar))
        })?;
    }
    within(LIMIT_1, start)?;
    Ok(format!("2 worked examples exact in {:.2?}", start.elapsed()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let shape = GrammarShape::default();
    let mut checked = 0;
    for seed in 0..RANDOM_GRAMMARS {
        let g = random_grammar(seed, &shape, false);
        let l = l_of(&g, &LMode::L0)?;
        for opts in twelve(false) {
            let t = lc_transform(&g, &l, &opts).map_err(err)?;
            ensure(!is_left_recursive(&t.grammar), || {
                format!("seed {seed} {}/{} is left-recursive", opts.factor, opts.epsilon)
            })?;
            checked += 1;
        }
    }
    within(LIMIT_2, start)?;
    Ok(format!("{checked} transforms of {RANDOM_GRAMMARS} random grammars in {:.2?}", start.elapsed()))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut grammars = fixtures::acyclic();
    grammars.push(("mini-treebank", Experiment::new(&treebank::mini_treebank(), &[]).map_err(err)?.grammar));
    let mut checked = 0;
    for (name, g) in &grammars {
        let l0 = l_of(g, &LMode::L0)?;
        for p in &l0 {
            let mut l = l0.clone();
            l.remove(p);
            for opts in twelve(false) {
                let t = lc_transform(g, &l, &opts).map_err(err)?;
                ensure(is_left_recursive(&t.grammar), || {
                    format!("{name}: L0 without {p} gives a non-left-recursive {}/{}", opts.factor, opts.epsilon)
                })?;
                checked += 1;
            }
        }
    }
    within(LIMIT_3, start)?;
    Ok(format!("{checked} reduced sets over {} grammars in {:.2?}", grammars.len(), start.elapsed()))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut checked = 0;
    for (name, text) in fixtures::ALL {
        let raw = parse_grammar(text).map_err(err)?;
        let want = enumerate_strings(&raw, STRING_LEN).map_err(err)?;
        let g = remove_unary_cycles(&raw, true).map_err(err)?;
        ensure(enumerate_strings(&g, STRING_LEN).map_err(err)? == want, || {
            format!("{name}: cycle removal changed the language")
        })?;
        for (lname, mode) in l_modes() {
            let l = l_of(&g, &mode)?;
            for opts in all_options() {
                let t = lc_transform(&g, &l, &opts).map_err(err)?;
                let got = enumerate_strings(&t.grammar, STRING_LEN).map_err(err)?;
                ensure(got == want, || {
                    format!("{name} {lname} {opts:?}: {} strings, want {}", got.len(), want.len())
                })?;
                checked += 1;
            }
        }
    }
    within(LIMIT_4, start)?;
    Ok(format!("{checked} transforms equal up to length {STRING_LEN} in {:.2?}", start.elapsed()))
}

fn criterion_5() -> Check {
    let mut strings_checked = 0;
    let mut trees_checked = 0;
    let mut worst: f64 = 0.0;
    for (i, (name, g)) in fixtures::acyclic().into_iter().enumerate() {
        let strings = enumerate_strings(&g, PROB_STRING_LEN).map_err(err)?;
        let want: Vec<f64> = strings
            .iter()
            .map(|s| string_weight(&g, s))
            .collect::<Result<_>>()
            .map_err(err)?;
        let mut sampler = TreeSampler::new(&g, 1000 + i as u64, ROUND_TRIP_DEPTH);
        let trees: Vec<ParseTree> = (0..TREE_WEIGHT_TREES).map(|_| sampler.sample()).collect();
        let tree_w: Vec<f64> = trees.iter().map(|t| tree_weight(t, &g)).collect::<Result<_>>().map_err(err)?;
        for (lname, mode) in l_modes() {
            let l = l_of(&g, &mode)?;
            for opts in twelve(true) {
                let t = lc_transform(&g, &l, &opts).map_err(err)?;
                for (s, w) in strings.iter().zip(&want) {
                    let got = string_weight(&t.grammar, s).map_err(err)?;
                    worst = worst.max((got - w).abs());
                    ensure((got - w).abs() <= PROB_TOL, || {
                        format!("{name} {lname} {opts:?} string {s:?}: {got} vs {w}")
                    })?;
                    strings_checked += 1;
                }
                for (tree, w) in trees.iter().zip(&tree_w) {
                    let tt = lc_tree_transform(tree, &l, &opts).map_err(err)?;
                    let got = tree_weight(&tt, &t.grammar).map_err(err)?;
                    worst = worst.max((got - w).abs());
                    ensure((got - w).abs() <= PROB_TOL, || {
                        format!("{name} {lname} {opts:?} tree {tree}: {got} vs {w}")
                    })?;
                    trees_checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{strings_checked} string and {trees_checked} tree weights, max error {worst:.1e} (tol {PROB_TOL:.0e})"
    ))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut grammars = fixtures::acyclic();
    grammars.push(("mini-treebank", Experiment::new(&treebank::mini_treebank(), &[]).map_err(err)?.grammar));
    let mut checked = 0;
    for (i, (name, g)) in grammars.iter().enumerate() {
        let mut sampler = TreeSampler::new(g, i as u64, ROUND_TRIP_DEPTH);
        let trees: Vec<ParseTree> = (0..ROUND_TRIP_TREES).map(|_| sampler.sample()).collect();
        for (lname, mode) in [("P", LMode::All), ("L0", LMode::L0)] {
            let l = l_of(g, &mode)?;
            let resolver = Resolver::new(g, &l);
            for opts in twelve(false) {
                let forward = TreeTransformer::new(&l, opts);
                let back = Detransformer::new(opts).with_resolver(&resolver);
                for t in &trees {
                    let tt = forward.transform(t).map_err(err)?;
                    let got = back.detransform(&tt).map_err(|e| format!("{name} {lname} {opts:?} {t}: {e}"))?;
                    ensure(&got == t, || format!("{name} {lname} {opts:?}: {t} came back as {got}"))?;
                    checked += 1;
                }
            }
        }
    }
    within(LIMIT_6, start)?;
    Ok(format!("{checked} round trips in {:.2?}", start.elapsed()))
}

fn criterion_7() -> Check {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (name, g) in fixtures::acyclic() {
        let strings = enumerate_strings(&g, VITERBI_LEN).map_err(err)?;
        let mut grammars = vec![("source".to_string(), g.clone())];
        let l = l_of(&g, &LMode::L0)?;
        for opts in twelve(true) {
            let t = lc_transform(&g, &l, &opts).map_err(err)?;
            grammars.push((format!("L0/{}/{}", opts.factor, opts.epsilon), t.grammar));
        }
        for (gname, h) in &grammars {
            let parser = Parser::new(h).map_err(err)?;
            for s in &strings {
                let best = enumerate_parses(h, s)
                    .map_err(err)?
                    .into_iter()
                    .map(|(_, w)| w)
                    .fold(0.0, f64::max);
                let got = parser.parse(s).map_err(err)?.map(|(_, lw)| lw.exp()).unwrap_or(0.0);
                worst = worst.max((got - best).abs());
                ensure((got - best).abs() <= PROB_TOL, || format!("{name} {gname} {s:?}: {got} vs {best}"))?;
                checked += 1;
            }
        }
    }
    // two equal-weight readings of a a a
    let g = parse_grammar(fixtures::AMBIGUOUS).map_err(err)?;
    let s: Vec<Symbol> = ["a", "a", "a"].iter().map(|w| Symbol::base(w)).collect();
    let parses = enumerate_parses(&g, &s).map_err(err)?;
    let total: f64 = parses.iter().map(|(_, w)| w).sum();
    ensure(parses.len() == 2 && (total - 0.06912).abs() <= PROB_TOL, || {
        format!("a a a: {} parses, total {total}", parses.len())
    })?;
    let best = cky_parse(&g, &s).map_err(err)?.map(|(_, lw)| lw.exp()).unwrap_or(0.0);
    ensure((best - 0.03456).abs() <= PROB_TOL, || format!("a a a: viterbi {best}"))?;
    Ok(format!("{checked} sentences, max error {worst:.1e} (tol {PROB_TOL:.0e})"))
}

fn criterion_8() -> Check {
    let ex = Experiment::new(&treebank::mini_treebank(), &[]).map_err(err)?;
    let g = &ex.grammar;
    let v = g.nonterminals().len();
    let mut report = Vec::new();
    for eps in [EpsilonMode::Keep, EpsilonMode::Full] {
        let size = |s: LSet, f: Factor| -> std::result::Result<usize, String> {
            Ok(lc_transform(g, ex.l_of(s), &TransformOptions::new(f, eps)).map_err(err)?.grammar.len())
        };
        let row = [
            size(LSet::P, Factor::None)?,
            size(LSet::L0, Factor::None)?,
            size(LSet::L0, Factor::Td)?,
            size(LSet::L0, Factor::TdLc)?,
        ];
        ensure(row.windows(2).all(|w| w[0] > w[1]), || format!("{eps}: sizes {row:?} not decreasing"))?;
        report.push(format!("{eps} {}>{}>{}>{}", row[0], row[1], row[2], row[3]));
    }
    for s in [LSet::P, LSet::N, LSet::L0] {
        let l = ex.l_of(s);
        for f in Factor::ALL {
            let t = lc_transform(g, l, &TransformOptions::new(f, EpsilonMode::Keep)).map_err(err)?;
            let (n2a, n2b, n3b) = (t.count(SchemaId::S2a), t.count(SchemaId::S2b), t.count(SchemaId::S3b));
            if f.top_down() {
                ensure(n2a < v * v, || format!("{s}/{f}: #2a {n2a} >= |V|^2 {}", v * v))?;
                ensure(n2b == g.len() - l.len(), || format!("{s}/{f}: #2b {n2b} != |P-L| {}", g.len() - l.len()))?;
            }
            if f.left_corner() {
                ensure(n3b == l.len(), || format!("{s}/{f}: #3b {n3b} != |L| {}", l.len()))?;
            }
        }
    }
    Ok(format!("{}; schema bounds hold for P, N, L0", report.join(", ")))
}

fn wsj_dir() -> Option<PathBuf> {
    std::env::var_os(WSJ_ENV).map(PathBuf::from).filter(|p| p.is_dir())
}

fn read_corpus(p: &Path) -> std::result::Result<Vec<ParseTree>, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    read_trees(&text).map_err(err)
}

/// Expects `train.mrg` (the usual training sections) and `test.mrg`
/// (the usual test section), already preprocessed.
fn criterion_9(dir: &Path) -> Check {
    let start = Instant::now();
    let train = read_corpus(&dir.join("train.mrg"))?;
    let test = read_corpus(&dir.join("test.mrg"))?;
    let ex = Experiment::new(&train, &test).map_err(err)?;
    let g = &ex.grammar;
    let size = |s: LSet, f: Factor, e: EpsilonMode| -> std::result::Result<usize, String> {
        Ok(lc_transform(g, ex.l_of(s), &TransformOptions::new(f, e)).map_err(err)?.grammar.len())
    };
    let mut failures = Vec::new();
    let mut expect = |what: &str, got: usize, want: usize| {
        if got != want {
            failures.push(format!("{what} {got} (want {want})"));
        }
    };
    expect("base grammar", g.len(), 15_040);
    expect("LC_P", size(LSet::P, Factor::None, EpsilonMode::Keep)?, 346_344);
    expect("LC_L0 td-lc", size(LSet::L0, Factor::TdLc, EpsilonMode::Keep)?, 21_364);
    expect("LC_P eps-removed", size(LSet::P, Factor::None, EpsilonMode::Full)?, 564_430);
    let cfg = PipelineConfig::default();
    let tp = ex.parse_row(Some(Variant { l: LSet::P, factor: Factor::None }), &cfg).map_err(err)?;
    let tl0 = ex.parse_row(Some(Variant { l: LSet::L0, factor: Factor::None }), &cfg).map_err(err)?;
    expect("no-parse T_P", tp.no_parse, 2);
    expect("no-parse T_L0", tl0.no_parse, 0);
    let none = missing_productions(&ex.train, &ex.test, None).map_err(err)?.len();
    let l0 = ex.l_of(LSet::L0);
    let tdlc = missing_productions(&ex.train, &ex.test, Some((l0, TransformOptions::new(Factor::TdLc, EpsilonMode::Full))))
        .map_err(err)?
        .len();
    expect("missing none", none, 514);
    expect("missing T_L0 td-lc", tdlc, 522);
    within(LIMIT_9, start)?;
    if failures.is_empty() {
        Ok(format!("all counts exact in {:.2?}", start.elapsed()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_10() -> Check {
    let tb = treebank::mini_treebank();
    let n_test = (tb.len() as f64 * TEST_FRACTION).round() as usize;
    let mut checked = 0;
    for seed in 0..SPLITS {
        let mut shuffled = tb.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (test, train) = shuffled.split_at(n_test);
        let ex = Experiment::new(train, test).map_err(err)?;
        let base = missing_productions(&ex.train, &ex.test, None).map_err(err)?.len();
        for v in Variant::all() {
            for eps in EpsilonMode::ALL {
                let opts = TransformOptions::new(v.factor, eps);
                let got = missing_productions(&ex.train, &ex.test, Some((ex.l_of(v.l), opts))).map_err(err)?.len();
                ensure(got >= base, || format!("split {seed} {v}/{eps}: {got} < untransformed {base}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} transformed counts over {SPLITS} splits none below untransformed"))
}

fn run(n: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let (tag, detail, ok) = match f() {
        Outcome::Pass(d) => ("PASS", d, true),
        Outcome::Fail(d) => ("FAIL", d, false),
        Outcome::Skip(d) => ("SKIP", d, true),
    };
    println!("{tag} {n:>2} {title}: {detail}");
    ok
}

fn checked(c: Check) -> Outcome {
    match c {
        Ok(d) => Outcome::Pass(d),
        Err(d) => Outcome::Fail(d),
    }
}

fn main() {
    let results = [
        run(1, "worked-transform exactness", || checked(criterion_1())),
        run(2, "non-left-recursion", || checked(criterion_2())),
        run(3, "minimality of L0", || checked(criterion_3())),
        run(4, "weak equivalence", || checked(criterion_4())),
        run(5, "probability preservation", || checked(criterion_5())),
        run(6, "tree round-trip", || checked(criterion_6())),
        run(7, "viterbi correctness", || checked(criterion_7())),
        run(8, "size accounting on the mini-treebank", || checked(criterion_8())),
        run(9, "WSJ counts", || match wsj_dir() {
            Some(dir) => checked(criterion_9(&dir)),
            None => Outcome::Skip(format!("set {WSJ_ENV} to a directory with train.mrg and test.mrg")),
        }),
        run(10, "missing-production monotonicity", || checked(criterion_10())),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    let names: BTreeSet<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    if failed > 0 {
        println!("{failed} criteria failed: {names:?}");
        std::process::exit(1);
    }
}
