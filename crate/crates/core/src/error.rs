use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("bad symbol `{token}`: {reason}")]
    BadSymbol { token: String, reason: String },

    #[error("line {line}: {msg}")]
    GrammarSyntax { line: usize, msg: String },

    #[error("line {line}: weight `{text}` is not a nonnegative decimal")]
    BadWeight { line: usize, text: String },

    #[error("start symbol `{0}` is a terminal")]
    StartIsTerminal(String),

    #[error("production `{0}` is not in the grammar")]
    NotInGrammar(String),

    #[error("epsilon production `{0}` not allowed here")]
    EpsilonProduction(String),

    #[error("grammar has unary cycles through {0:?}; apply remove_unary_cycles first")]
    UnaryCycles(Vec<String>),

    #[error("unary chain weights through {0:?} do not converge (spectral radius >= 1)")]
    DivergentChains(Vec<String>),

    #[error("POS tag set required for this selection mode")]
    MissingPosTags,

    #[error("tree syntax at byte {pos}: {msg}")]
    TreeSyntax { pos: usize, msg: String },

    #[error("unknown production `{0}` in tree")]
    UnknownProduction(String),

    #[error("cannot detransform node at {path}: {msg}")]
    Detransform { path: String, msg: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("tree root `{found}` does not match start symbol `{expected}`")]
    RootMismatch { expected: String, found: String },

    #[error("out-of-vocabulary tokens: {0:?}")]
    OutOfVocabulary(Vec<String>),

    #[error("empty sentence")]
    EmptySentence,

    #[error("{what} exceeds guard ({got} > {limit})")]
    GuardExceeded { what: &'static str, limit: usize, got: usize },

    #[error("derivation cycle through `{0}`; parse set is infinite")]
    DerivationCycle(String),

    #[error("yields differ: gold `{gold}` vs test `{test}`")]
    YieldMismatch { gold: String, test: String },
}

pub type Result<T> = std::result::Result<T, Error>;
