use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lcgram::{fixtures, parse_grammar, EpsilonMode, Factor};
use tempfile::TempDir;

fn lcgram(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcgram"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = lcgram(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_reports_the_left_recursive_set() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "np.gr", fixtures::NP_PP);
    let out = ok(&["analyze", s(&g)]);
    assert!(out.contains("productions\t3\n"), "{out}");
    assert!(out.contains("unary_cycles\t0\n"));
    assert!(out.contains("L0\t1\n  NP -> NP PP\n"));
}

#[test]
fn transform_writes_the_factored_grammar_and_provenance() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "np.gr", fixtures::NP_PP);
    let prov = dir.path().join("np.prov");
    let out = ok(&["transform", "--L", "l0", "--factor", "td_lc", "--epsilon", "full", s(&g), "--provenance", s(&prov)]);
    let got = parse_grammar(&out).unwrap().production_set();
    let want = parse_grammar(
        "%start NP\n\
         NP -> TD(NP)\nNP -> TD(NP) LC(NP;NP)\nTD(NP) -> d n\n\
         PP -> TD(PP)\nTD(PP) -> p NP\n\
         LC(NP;NP) -> PT(NP;NP)\nLC(NP;NP) -> PT(NP;NP) LC(NP;NP)\nPT(NP;NP) -> PP\n",
    )
    .unwrap()
    .production_set();
    assert_eq!(got, want);
    let prov = std::fs::read_to_string(prov).unwrap();
    assert!(prov.contains("3b\tPT(NP;NP) -> PP\tNP -> NP PP\n"), "{prov}");
    assert_eq!(prov.lines().count(), want.len());
}

#[test]
fn config_is_echoed_to_stderr() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "np.gr", fixtures::NP_PP);
    let o = lcgram(&["transform", "--factor", "td", s(&g)]);
    let err = stderr(&o);
    assert!(err.contains("factor=td"), "{err}");
    assert!(err.contains("epsilon=keep"));
}

/// transform then `oracle equiv` for every fixture and flag combination.
#[test]
fn transformed_fixtures_are_equivalent() {
    let dir = TempDir::new().unwrap();
    let mut runs = 0;
    for (name, text) in fixtures::ALL {
        let g = write(&dir, &format!("{name}.gr"), text);
        let grammar = parse_grammar(text).unwrap();
        let tags: Vec<String> = grammar.terminals().iter().map(|t| t.to_string()).collect();
        let pos = write(&dir, &format!("{name}.pos"), &tags.join(" "));
        let out = dir.path().join(format!("{name}.lc.gr"));
        for l in ["all", "non-pos", "l0"] {
            for f in Factor::ALL {
                for e in EpsilonMode::ALL {
                    for extra in [&[][..], &["--no-prune-links"][..], &["--moore"][..]] {
                        let (f, e) = (f.to_string(), e.to_string());
                        let mut args = vec!["transform", s(&g), "--remove-unary-cycles", "--pos", s(&pos)];
                        args.extend(["--L", l, "--factor", &f, "--epsilon", &e, "-o", s(&out)]);
                        args.extend(extra);
                        ok(&args);
                        let eq = ok(&["oracle", "equiv", "--max-len", "8", s(&g), s(&out)]);
                        assert!(eq.starts_with("EQUIVALENT"), "{name} {args:?}: {eq}");
                        runs += 1;
                    }
                }
            }
        }
    }
    assert_eq!(runs, fixtures::ALL.len() * 3 * 12 * 3);
}

#[test]
fn oracle_equiv_reports_a_difference() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.gr", fixtures::SAB);
    let b = write(&dir, "b.gr", "S -> S a\nS -> b\nS -> c\n");
    let o = lcgram(&["oracle", "equiv", s(&a), s(&b)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("DIFFERENT\nonly in"), "{}", stdout(&o));
}

#[test]
fn oracle_parses_lists_both_readings() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "amb.gr", fixtures::AMBIGUOUS);
    let out = ok(&["oracle", "parses", s(&g), "a", "a", "a"]);
    assert_eq!(out.lines().count(), 3);
    let total: f64 = out.lines().last().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!((total - 0.06912).abs() < 1e-12);
}

#[test]
fn exit_codes_separate_usage_and_domain_errors() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.gr", "S -> a\nS a\n");
    let o = lcgram(&["analyze", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.gr"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"));

    let cyclic = write(&dir, "cyc.gr", fixtures::CYCLIC);
    assert_eq!(lcgram(&["transform", s(&cyclic)]).status.code(), Some(1));

    assert_eq!(lcgram(&["transform", "--epsilon", "twice", s(&bad)]).status.code(), Some(2));
    assert_eq!(lcgram(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lcgram(&["trees", "detransform", "--lenient", s(&bad)]).status.code(), Some(2));
    assert_eq!(lcgram(&["experiment", "--train", s(&bad)]).status.code(), Some(2));
}

/// The bundled treebank through estimate, trees, parse and eval.
#[test]
fn treebank_round_trip_and_scoring() {
    let dir = TempDir::new().unwrap();
    let tb = lcgram::treebank::mini_treebank();
    let train = write(&dir, "train.mrg", &lcgram::write_trees(&tb[..180]));
    let test = write(&dir, "test.mrg", &lcgram::write_trees(&tb[180..]));
    let raw = dir.path().join("raw.gr");
    ok(&["estimate", s(&train), "-o", s(&raw)]);

    let broken = dir.path().join("broken.mrg");
    ok(&["trees", "break-cycles", "--grammar", s(&raw), s(&train), "-o", s(&broken)]);
    let g = dir.path().join("g.gr");
    ok(&["estimate", s(&broken), "-o", s(&g)]);
    let lc = dir.path().join("lc.mrg");
    let flags = ["--factor", "td-lc", "--epsilon", "full"];
    let mut args = vec!["trees", "transform", "--grammar", s(&g), s(&broken), "-o", s(&lc)];
    args.extend(flags);
    ok(&args);
    let mut args = vec!["trees", "detransform", "--grammar", s(&g), s(&lc)];
    args.extend(flags);
    assert_eq!(ok(&args), std::fs::read_to_string(&broken).unwrap());

    let sentences: String = tb[180..]
        .iter()
        .map(|t| {
            let words: Vec<String> = t.terminal_yield().iter().map(|w| w.to_string()).collect();
            words.join(" ") + "\n"
        })
        .collect();
    let sents = write(&dir, "test.txt", &sentences);
    let one = ok(&["--jobs", "1", "parse", s(&g), s(&sents)]);
    let four = ok(&["--jobs", "4", "parse", s(&g), s(&sents)]);
    assert_eq!(one, four);
    assert_eq!(one.lines().count(), 20);
    let parses = write(&dir, "test.parse", &one);

    let gold_broken = dir.path().join("gold.mrg");
    ok(&["trees", "break-cycles", "--grammar", s(&raw), s(&test), "-o", s(&gold_broken)]);
    let report = ok(&["eval", "parseval", "--keep-preterminals", s(&gold_broken), s(&parses)]);
    assert!(report.contains("sentences: 20\nno_parse: 0\n"), "{report}");
    let self_score = ok(&["eval", "parseval", s(&gold_broken), s(&gold_broken), "--per-sentence"]);
    assert!(self_score.contains("labelled_precision: 1.0000"));
    assert_eq!(self_score.lines().filter(|l| l.ends_with("\t1.0000\t1.0000")).count(), 20);

    let cov = ok(&["eval", "coverage", s(&g), s(&sents)]);
    assert_eq!(cov, "sentences\t20\nno_parse\t0\n");

    let base = ok(&["eval", "missing", s(&train), s(&test)]);
    let lc_missing = ok(&["eval", "missing", s(&train), s(&test), "--transformed", "--factor", "td-lc"]);
    let count = |t: &str| -> usize { t.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap() };
    assert!(count(&lc_missing) >= count(&base));
}

#[test]
fn reruns_are_byte_identical() {
    let a = ok(&["experiment", "--sizes-only"]);
    let b = ok(&["--jobs", "2", "experiment", "--sizes-only"]);
    assert_eq!(a, b);
    assert!(a.contains("L0/td-lc\t81\t87"), "{a}");
    let r1 = ok(&["oracle", "random", "--seed", "9", "--weighted"]);
    let r2 = ok(&["oracle", "random", "--seed", "9", "--weighted"]);
    assert_eq!(r1, r2);
}
