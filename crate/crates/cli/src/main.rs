use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser as ClapParser, Subcommand};
use lcgram::eval::{coverage_parse_report, EvalReport, ParsevalOptions};
use lcgram::parser::{format_parse, read_sentences, string_weight};
use lcgram::pipeline::{run_pipeline, Experiment, PipelineConfig};
use lcgram::random::{random_grammar, GrammarShape};
use lcgram::relation::{cyclic_nonterminals, is_left_recursive};
use lcgram::transform::{grammar_stats, write_provenance};
use lcgram::*;
use rayon::prelude::*;

#[derive(ClapParser, Debug)]
#[command(name = "lcgram", version, about = "Selective left-corner grammar and tree transforms")]
struct Cli {
    /// Worker threads for corpus-level work (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report sizes, unary cycles and the left-recursive set of a grammar.
    Analyze {
        grammar: PathBuf,
        #[arg(long)]
        pos: Option<PathBuf>,
    },
    /// Apply the selective left-corner grammar transform.
    Transform {
        grammar: PathBuf,
        #[command(flatten)]
        t: TransformArgs,
        /// Write one provenance line per output production.
        #[arg(long)]
        provenance: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tree transforms.
    Trees {
        #[command(subcommand)]
        op: TreesOp,
    },
    /// Relative-frequency PCFG from a treebank.
    Estimate {
        trees: PathBuf,
        /// Required root label; defaults to the first tree's root.
        #[arg(long)]
        start: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Viterbi-parse one sentence per line.
    Parse {
        grammar: PathBuf,
        sentences: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Scoring and coverage.
    Eval {
        #[command(subcommand)]
        op: EvalOp,
    },
    /// Brute-force enumeration checks for small grammars.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
    },
    /// Grammar sizes, coverage and scores for every left-corner set and
    /// factorization.
    Experiment {
        /// Training trees; the bundled mini-treebank when absent.
        #[arg(long, requires = "test")]
        train: Option<PathBuf>,
        #[arg(long, requires = "train")]
        test: Option<PathBuf>,
        /// Held-out trees taken from the end of the bundled treebank.
        #[arg(long, default_value_t = 20, conflicts_with = "train")]
        test_size: usize,
        #[arg(long, default_value = "full")]
        epsilon: EpsilonMode,
        /// Only report grammar sizes.
        #[arg(long)]
        sizes_only: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum TreesOp {
    /// Map trees of the grammar to left-corner trees.
    Transform {
        #[arg(long)]
        grammar: PathBuf,
        trees: PathBuf,
        #[command(flatten)]
        t: TransformArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Map left-corner trees back. With `--grammar`, unary chains erased by
    /// full epsilon removal are restored from it.
    Detransform {
        #[arg(long)]
        grammar: Option<PathBuf>,
        trees: PathBuf,
        #[command(flatten)]
        t: TransformArgs,
        /// Take the first reading of an ambiguous erased chain.
        #[arg(long, requires = "grammar")]
        lenient: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Collapse unary-cycle chains using the grammar's cycles.
    BreakCycles {
        #[arg(long)]
        grammar: PathBuf,
        trees: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum EvalOp {
    /// Labelled precision and recall against gold trees.
    Parseval {
        gold: PathBuf,
        /// Parser output: one tree per line, `(())` for no parse.
        test: PathBuf,
        /// Score preterminal brackets too (needed when leaves are tags).
        #[arg(long)]
        keep_preterminals: bool,
        #[arg(long)]
        per_sentence: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Test-corpus productions never seen in training, optionally after a
    /// tree transform.
    Missing {
        train: PathBuf,
        test: PathBuf,
        /// Transform both corpora with these settings first.
        #[arg(long)]
        transformed: bool,
        #[command(flatten)]
        t: TransformArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sentences the grammar cannot parse.
    Coverage {
        grammar: PathBuf,
        sentences: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum OracleOp {
    /// Compare enumerated string sets of two grammars.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// List every string up to a length.
    Strings {
        grammar: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// List every parse of a sentence with its weight.
    Parses {
        grammar: PathBuf,
        #[arg(required = true)]
        tokens: Vec<String>,
    },
    /// Print a seeded random epsilon-free, unary-cycle-free grammar.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 8)]
        max_nonterminals: usize,
        #[arg(long, default_value_t = 25)]
        max_productions: usize,
    },
}

#[derive(Clone, Debug)]
enum LArg {
    All,
    NonPos,
    L0,
    File(PathBuf),
}

impl FromStr for LArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(LArg::All),
            "non-pos" => Ok(LArg::NonPos),
            "l0" => Ok(LArg::L0),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(LArg::File(p.into())),
                _ => Err(format!("unknown left-corner set `{s}` (all|non-pos|l0|file:PATH)")),
            },
        }
    }
}

impl std::fmt::Display for LArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LArg::All => f.write_str("all"),
            LArg::NonPos => f.write_str("non-pos"),
            LArg::L0 => f.write_str("l0"),
            LArg::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Args, Clone, Debug)]
struct TransformArgs {
    #[arg(long = "L", default_value = "l0")]
    l: LArg,
    #[arg(long, default_value = "none")]
    factor: Factor,
    #[arg(long, default_value = "keep")]
    epsilon: EpsilonMode,
    #[arg(long)]
    no_prune_links: bool,
    #[arg(long)]
    moore: bool,
    /// Whitespace-separated part-of-speech tags.
    #[arg(long)]
    pos: Option<PathBuf>,
    #[arg(long)]
    weighted: bool,
    /// Collapse unary cycles first (weights summed in closed form with
    /// `--weighted`).
    #[arg(long)]
    remove_unary_cycles: bool,
}

impl TransformArgs {
    fn options(&self) -> TransformOptions {
        TransformOptions {
            factor: self.factor,
            epsilon: self.epsilon,
            prune_links: !self.no_prune_links,
            moore_constraint: self.moore,
            weighted: self.weighted,
        }
    }

    fn describe(&self) -> String {
        format!(
            "L={} factor={} epsilon={} prune_links={} moore={} weighted={} remove_unary_cycles={} pos={}",
            self.l,
            self.factor,
            self.epsilon,
            !self.no_prune_links,
            self.moore,
            self.weighted,
            self.remove_unary_cycles,
            self.pos.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "-".into())
        )
    }

    fn select(&self, g: &Grammar) -> Result<(Grammar, ProductionSet)> {
        let g = with_pos(g, self.pos.as_deref())?;
        let g = if self.remove_unary_cycles {
            remove_unary_cycles(&g, self.weighted)?
        } else {
            g
        };
        let mode = match &self.l {
            LArg::All => LMode::All,
            LArg::NonPos => LMode::NonPosInitial,
            LArg::L0 => LMode::L0,
            LArg::File(p) => LMode::Explicit(read_productions(p)?),
        };
        let sel = select_l(&g, &mode)?;
        if let Some(w) = &sel.warning {
            eprintln!("warning: {w}");
        }
        Ok((g, sel.productions))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_grammar(path: &Path) -> Result<Grammar> {
    parse_grammar(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn read_corpus(path: &Path) -> Result<Vec<ParseTree>> {
    read_trees(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn read_productions(path: &Path) -> Result<ProductionSet> {
    let text = read(path)?;
    let mut out = ProductionSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            out.insert(Production::parse(line).with_context(|| format!("{}: line {}", path.display(), i + 1))?);
        }
    }
    Ok(out)
}

fn with_pos(g: &Grammar, pos: Option<&Path>) -> Result<Grammar> {
    Ok(match pos {
        None => g.clone(),
        Some(p) => {
            let tags = read(p)?
                .split_whitespace()
                .map(Symbol::parse)
                .collect::<std::result::Result<BTreeSet<_>, _>>()
                .with_context(|| format!("{}", p.display()))?;
            g.with_pos_tags(Some(tags))
        }
    })
}

/// Parser output lines: the tree before an optional tab, `(())` for none.
fn read_parses(path: &Path) -> Result<Vec<Option<ParseTree>>> {
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let tree = l.split('\t').next().unwrap_or("").trim();
            if tree == "(())" {
                Ok(None)
            } else {
                ParseTree::parse(tree)
                    .map(Some)
                    .with_context(|| format!("{}: line {}", path.display(), i + 1))
            }
        })
        .collect()
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn analyze(path: &Path, pos: Option<&Path>) -> Result<String> {
    let g = with_pos(&read_grammar(path)?, pos)?;
    let st = grammar_stats(&g);
    let cycles = UnaryCycles::of(&g);
    let mut s = String::new();
    writeln!(s, "productions\t{}", st.production_count)?;
    writeln!(s, "nonterminals\t{}", st.nonterminal_count)?;
    writeln!(s, "terminals\t{}", st.terminal_count)?;
    writeln!(s, "rhs_symbols\t{}", st.total_rhs_symbols)?;
    writeln!(s, "unary_cycles\t{}", cycles.components().len())?;
    for c in cycles.components() {
        writeln!(s, "  {}", join(c))?;
    }
    // left recursion is only defined here on the cycle-free grammar
    let acyclic = if cycles.is_empty() {
        g.clone()
    } else {
        writeln!(s, "# below: after unary-cycle removal")?;
        remove_unary_cycles(&g, false)?
    };
    writeln!(s, "left_recursive\t{}", if is_left_recursive(&acyclic) { "yes" } else { "no" })?;
    let l0 = left_recursive_set(&acyclic)?;
    writeln!(s, "L0\t{}", l0.len())?;
    for p in &l0 {
        writeln!(s, "  {p}")?;
    }
    match select_l(&acyclic, &LMode::NonPosInitial) {
        Ok(n) => writeln!(s, "N\t{}", n.productions.len())?,
        Err(Error::MissingPosTags) => writeln!(s, "N\t- (no POS tags)")?,
        Err(e) => return Err(e.into()),
    }
    Ok(s)
}

fn transform(path: &Path, t: &TransformArgs, provenance: Option<&Path>) -> Result<String> {
    let g = read_grammar(path)?;
    let (g, l) = t.select(&g)?;
    let out = lc_transform(&g, &l, &t.options())?;
    if let Some(p) = provenance {
        emit(Some(p), &write_provenance(&out))?;
    }
    Ok(write_grammar(&out.grammar))
}

fn trees(op: &TreesOp) -> Result<(String, Option<&Path>)> {
    Ok(match op {
        TreesOp::Transform { grammar, trees, t, output } => {
            let (g, l) = t.select(&read_grammar(grammar)?)?;
            let tr = TreeTransformer::new(&l, t.options()).strict(&g);
            let corpus = read_corpus(trees)?;
            let out = corpus.par_iter().map(|x| tr.transform(x)).collect::<lcgram::Result<Vec<_>>>()?;
            (write_trees(&out), output.as_deref())
        }
        TreesOp::Detransform {
            grammar,
            trees,
            t,
            lenient,
            output,
        } => {
            let corpus = read_corpus(trees)?;
            let resolver = match grammar {
                Some(p) => {
                    let (g, l) = t.select(&read_grammar(p)?)?;
                    let r = Resolver::new(&g, &l);
                    Some(if *lenient { r.lenient() } else { r })
                }
                None => None,
            };
            let d = Detransformer::new(t.options());
            let d = match &resolver {
                Some(r) => d.with_resolver(r),
                None => d,
            };
            let out = corpus
                .par_iter()
                .enumerate()
                .map(|(i, x)| d.detransform(x).with_context(|| format!("tree {}", i + 1)))
                .collect::<Result<Vec<_>>>()?;
            (write_trees(&out), output.as_deref())
        }
        TreesOp::BreakCycles { grammar, trees, output } => {
            let cycles = UnaryCycles::of(&read_grammar(grammar)?);
            let corpus = read_corpus(trees)?;
            let out: Vec<_> = corpus.par_iter().map(|x| break_unary_cycles_tree(x, &cycles)).collect();
            (write_trees(&out), output.as_deref())
        }
    })
}

fn parse(grammar: &Path, sentences: &Path) -> Result<String> {
    let g = read_grammar(grammar)?;
    let parser = lcgram::Parser::new(&g)?;
    let sents = read_sentences(&read(sentences)?);
    let results: Vec<String> = sents
        .par_iter()
        .enumerate()
        .map(|(i, s)| match parser.parse(s) {
            Ok(r) => Ok(format_parse(r.as_ref())),
            Err(Error::OutOfVocabulary(w)) => {
                eprintln!("sentence {}: out-of-vocabulary {}", i + 1, w.join(" "));
                Ok(format_parse(None))
            }
            Err(e) => Err(anyhow::Error::from(e).context(format!("sentence {}", i + 1))),
        })
        .collect::<Result<_>>()?;
    Ok(results.iter().map(|l| format!("{l}\n")).collect())
}

fn eval(op: &EvalOp) -> Result<(String, Option<&Path>)> {
    Ok(match op {
        EvalOp::Parseval {
            gold,
            test,
            keep_preterminals,
            per_sentence,
            output,
        } => {
            let gold = read_corpus(gold)?;
            let test = read_parses(test)?;
            let opts = ParsevalOptions {
                skip_preterminals: !keep_preterminals,
            };
            let r = EvalReport::score(&gold, &test, &opts)?;
            let mut s = r.to_key_values();
            if *per_sentence {
                s.push_str("\nsentence\tmatched\tgold\ttest\tprecision\trecall\n");
                s.push_str(&r.per_sentence_lines());
            }
            (s, output.as_deref())
        }
        EvalOp::Missing {
            train,
            test,
            transformed,
            t,
            output,
        } => {
            let ex = Experiment::new(&read_corpus(train)?, &read_corpus(test)?)?;
            let missing = if *transformed {
                let (_, l) = t.select(&ex.grammar)?;
                missing_productions(&ex.train, &ex.test, Some((&l, t.options())))?
            } else {
                missing_productions(&ex.train, &ex.test, None)?
            };
            let mut s = format!("missing\t{}\n", missing.len());
            for p in &missing {
                writeln!(s, "{p}")?;
            }
            (s, output.as_deref())
        }
        EvalOp::Coverage {
            grammar,
            sentences,
            output,
        } => {
            let g = read_grammar(grammar)?;
            let r = coverage_parse_report(&g, &read_sentences(&read(sentences)?))?;
            let mut s = format!("sentences\t{}\nno_parse\t{}\n", r.sentences, r.no_parse.len());
            for i in &r.no_parse {
                writeln!(s, "{}", i + 1)?;
            }
            (s, output.as_deref())
        }
    })
}

/// Returns the report and whether the check passed.
fn oracle(op: &OracleOp) -> Result<(String, bool)> {
    Ok(match op {
        OracleOp::Equiv { a, b, max_len } => {
            let sa = enumerate_strings(&read_grammar(a)?, *max_len)?;
            let sb = enumerate_strings(&read_grammar(b)?, *max_len)?;
            if sa == sb {
                (format!("EQUIVALENT\t{} strings up to length {max_len}\n", sa.len()), true)
            } else {
                let mut s = String::from("DIFFERENT\n");
                if let Some(x) = sa.difference(&sb).next() {
                    writeln!(s, "only in {}: {}", a.display(), join(x))?;
                }
                if let Some(x) = sb.difference(&sa).next() {
                    writeln!(s, "only in {}: {}", b.display(), join(x))?;
                }
                (s, false)
            }
        }
        OracleOp::Strings { grammar, max_len } => {
            let strings = enumerate_strings(&read_grammar(grammar)?, *max_len)?;
            (strings.iter().map(|x| format!("{}\n", join(x))).collect(), true)
        }
        OracleOp::Parses { grammar, tokens } => {
            let g = read_grammar(grammar)?;
            let toks: Vec<Symbol> = tokens.iter().map(|t| Symbol::base(t)).collect();
            let mut s = String::new();
            for (t, w) in enumerate_parses(&g, &toks)? {
                writeln!(s, "{t}\t{w}")?;
            }
            writeln!(s, "total\t{}", string_weight(&g, &toks)?)?;
            (s, true)
        }
        OracleOp::Random {
            seed,
            weighted,
            max_nonterminals,
            max_productions,
        } => {
            let shape = GrammarShape {
                max_nonterminals: (*max_nonterminals).max(2),
                max_productions: *max_productions,
                ..Default::default()
            };
            let g = random_grammar(*seed, &shape, *weighted);
            debug_assert!(cyclic_nonterminals(&g).is_empty());
            (write_grammar(&g), true)
        }
    })
}

fn experiment(
    train: Option<&Path>,
    test: Option<&Path>,
    test_size: usize,
    epsilon: EpsilonMode,
    sizes_only: bool,
) -> Result<String> {
    let (train, test) = match (train, test) {
        (Some(a), Some(b)) => (read_corpus(a)?, read_corpus(b)?),
        _ => {
            let tb = treebank::mini_treebank();
            if test_size >= tb.len() {
                bail!("--test-size must be below {}", tb.len());
            }
            let (a, b) = tb.split_at(tb.len() - test_size);
            (a.to_vec(), b.to_vec())
        }
    };
    let cfg = PipelineConfig {
        parse: !sizes_only,
        epsilon,
        ..Default::default()
    };
    Ok(run_pipeline(&train, &test, &cfg)?.to_text())
}

fn describe(cmd: &Command) -> String {
    match cmd {
        Command::Analyze { grammar, .. } => format!("analyze {}", grammar.display()),
        Command::Transform { grammar, t, .. } => format!("transform {} {}", grammar.display(), t.describe()),
        Command::Trees { op } => match op {
            TreesOp::Transform { trees, t, .. } => format!("trees transform {} {}", trees.display(), t.describe()),
            TreesOp::Detransform { trees, t, lenient, .. } => {
                format!("trees detransform {} {} lenient={lenient}", trees.display(), t.describe())
            }
            TreesOp::BreakCycles { trees, .. } => format!("trees break-cycles {}", trees.display()),
        },
        Command::Estimate { trees, start, .. } => {
            format!("estimate {} start={}", trees.display(), start.as_deref().unwrap_or("-"))
        }
        Command::Parse { grammar, sentences, .. } => format!("parse {} {}", grammar.display(), sentences.display()),
        Command::Eval { op } => match op {
            EvalOp::Parseval {
                keep_preterminals,
                per_sentence,
                ..
            } => format!("eval parseval keep_preterminals={keep_preterminals} per_sentence={per_sentence}"),
            EvalOp::Missing { transformed, t, .. } => {
                if *transformed {
                    format!("eval missing {}", t.describe())
                } else {
                    "eval missing untransformed".into()
                }
            }
            EvalOp::Coverage { grammar, .. } => format!("eval coverage {}", grammar.display()),
        },
        Command::Oracle { op } => match op {
            OracleOp::Equiv { max_len, .. } => format!("oracle equiv max_len={max_len}"),
            OracleOp::Strings { max_len, .. } => format!("oracle strings max_len={max_len}"),
            OracleOp::Parses { .. } => "oracle parses".into(),
            OracleOp::Random { seed, weighted, .. } => format!("oracle random seed={seed} weighted={weighted}"),
        },
        Command::Experiment {
            train,
            test_size,
            epsilon,
            sizes_only,
            ..
        } => format!(
            "experiment data={} epsilon={epsilon} sizes_only={sizes_only}",
            match train {
                Some(p) => p.display().to_string(),
                None => format!("mini-treebank test_size={test_size}"),
            }
        ),
    }
}

fn run(cmd: &Command) -> Result<bool> {
    match cmd {
        Command::Analyze { grammar, pos } => emit(None, &analyze(grammar, pos.as_deref())?)?,
        Command::Transform {
            grammar,
            t,
            provenance,
            output,
        } => emit(output.as_deref(), &transform(grammar, t, provenance.as_deref())?)?,
        Command::Trees { op } => {
            let (s, out) = trees(op)?;
            emit(out, &s)?
        }
        Command::Estimate { trees, start, output } => {
            let start = start.as_deref().map(Symbol::parse).transpose()?;
            let g = estimate_pcfg(&read_corpus(trees)?, start.as_ref())?;
            emit(output.as_deref(), &write_grammar(&g))?
        }
        Command::Parse {
            grammar,
            sentences,
            output,
        } => emit(output.as_deref(), &parse(grammar, sentences)?)?,
        Command::Eval { op } => {
            let (s, out) = eval(op)?;
            emit(out, &s)?
        }
        Command::Oracle { op } => {
            let (s, ok) = oracle(op)?;
            emit(None, &s)?;
            return Ok(ok);
        }
        Command::Experiment {
            train,
            test,
            test_size,
            epsilon,
            sizes_only,
            output,
        } => emit(
            output.as_deref(),
            &experiment(train.as_deref(), test.as_deref(), *test_size, *epsilon, *sizes_only)?,
        )?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    eprintln!("lcgram {} jobs={}", describe(&cli.command), cli.jobs);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
