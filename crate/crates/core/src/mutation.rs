//! Token-level mutation baseline: delete, insert or replace one token of a
//! valid snippet and classify what the parser makes of the result.
//!
//! Mutants are rendered from the token stream alone. Tokens on a line are
//! joined by single spaces, line starts get the indentation implied by the
//! INDENT/DEDENT tokens seen so far, and the pieces of a split f-string stay
//! glued together. Continuation backslashes and original spacing are lost,
//! which never changes the token stream.
//!
//! Only tokens with a non-empty lexeme are mutation sites. DEDENT and the
//! synthetic end-of-input NEWLINE are zero-width; editing them has no
//! textual counterpart.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::DistributionReport;
use crate::oracle::{OracleError, ParseOracle, ParseOutcome, Token, TokenOracle};

pub const STILL_VALID_LABEL: &str = "still-valid";

#[derive(Debug, Error)]
pub enum MutationError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("nothing to mutate: {0}")]
    NoCandidate(String),
    #[error("snippet {index} does not parse and cannot seed mutations")]
    InvalidSnippet { index: usize },
    #[error("unknown mutation kind {0:?} (expected delete, insert or replace)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationKind {
    Delete,
    Insert,
    Replace,
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutationKind::Delete => "delete",
            MutationKind::Insert => "insert",
            MutationKind::Replace => "replace",
        })
    }
}

impl FromStr for MutationKind {
    type Err = MutationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delete" => Ok(MutationKind::Delete),
            "insert" => Ok(MutationKind::Insert),
            "replace" => Ok(MutationKind::Replace),
            other => Err(MutationError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationSpec {
    pub kind: MutationKind,
    pub seed: u64,
    pub trials: u64,
    /// Lexemes available to insert/replace. Empty means "derive from the
    /// snippets".
    pub vocabulary: Vec<String>,
    /// Walk every possible mutant in a fixed order (trial `t` takes mutant
    /// `t mod N`) instead of sampling.
    pub exhaustive: bool,
}

impl MutationSpec {
    pub fn new(kind: MutationKind, seed: u64, trials: u64) -> Self {
        MutationSpec {
            kind,
            seed,
            trials,
            vocabulary: Vec::new(),
            exhaustive: false,
        }
    }
}

fn is_site(token: &Token) -> bool {
    !token.text.is_empty()
}

/// Number of tokens with a non-empty lexeme; the quantity the token-count
/// laws are stated over.
pub fn lexeme_count(tokens: &[Token]) -> usize {
    tokens.iter().filter(|t| is_site(t)).count()
}

/// Distinct lexemes usable as inserted/replacement tokens: no comments and
/// nothing made only of whitespace (newlines and indentation only exist as
/// layout).
pub fn vocabulary_from<'a, I>(token_sets: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a [Token]>,
{
    let mut vocab = BTreeSet::new();
    for tokens in token_sets {
        for t in tokens {
            if t.kind != "COMMENT" && !t.text.trim().is_empty() {
                vocab.insert(t.text.clone());
            }
        }
    }
    vocab.into_iter().collect()
}

#[derive(Debug, Clone, Copy)]
enum Piece<'a> {
    Original(&'a Token),
    Inserted(&'a str),
}

fn glued_after(kind: &str) -> bool {
    matches!(kind, "FSTRING_START" | "FSTRING_MIDDLE")
}

fn glued_before(kind: &str) -> bool {
    matches!(kind, "FSTRING_MIDDLE" | "FSTRING_END" | "NEWLINE" | "NL")
}

fn render(pieces: &[Piece<'_>]) -> String {
    let mut indents: Vec<&str> = vec![""];
    let mut out = String::new();
    let mut at_line_start = true;
    let mut prev_kind: Option<&str> = None;
    for piece in pieces {
        let (kind, text) = match piece {
            Piece::Original(t) => (t.kind.as_str(), t.text.as_str()),
            Piece::Inserted(text) => ("", *text),
        };
        match kind {
            "INDENT" => {
                indents.push(text);
                continue;
            }
            "DEDENT" => {
                if indents.len() > 1 {
                    indents.pop();
                }
                continue;
            }
            _ if text.is_empty() => continue,
            _ => {}
        }
        if at_line_start {
            out.push_str(indents.last().expect("indent stack never empties"));
        } else if !(prev_kind.is_some_and(glued_after) || glued_before(kind)) {
            out.push(' ');
        }
        out.push_str(text);
        at_line_start = text.ends_with('\n');
        prev_kind = Some(kind);
    }
    out
}

/// Canonical rendering of an unmutated token stream.
pub fn render_tokens(tokens: &[Token]) -> String {
    render(&tokens.iter().map(Piece::Original).collect::<Vec<_>>())
}

/// One token-level edit. Indices refer to the full token list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    Delete(usize),
    /// Insert before `before`; `before == tokens.len()` appends.
    Insert { before: usize, text: String },
    Replace { at: usize, text: String },
}

pub fn apply_edit(tokens: &[Token], edit: &Edit) -> String {
    let mut pieces: Vec<Piece<'_>> = Vec::with_capacity(tokens.len() + 1);
    for (i, t) in tokens.iter().enumerate() {
        match edit {
            Edit::Delete(at) if *at == i => {}
            Edit::Replace { at, text } if *at == i => pieces.push(Piece::Inserted(text)),
            Edit::Insert { before, text } if *before == i => {
                pieces.push(Piece::Inserted(text));
                pieces.push(Piece::Original(t));
            }
            _ => pieces.push(Piece::Original(t)),
        }
    }
    if let Edit::Insert { before, text } = edit {
        if *before >= tokens.len() {
            pieces.push(Piece::Inserted(text));
        }
    }
    render(&pieces)
}

fn sites(tokens: &[Token]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| is_site(t))
        .map(|(i, _)| i)
        .collect()
}

/// Insertion points: before every site, plus the end of the stream. A point
/// right after a comment is skipped; text placed there joins the comment.
fn boundaries(tokens: &[Token]) -> Vec<usize> {
    let sites = sites(tokens);
    let mut b = Vec::with_capacity(sites.len() + 1);
    let mut last: Option<usize> = None;
    for at in sites.into_iter().chain(std::iter::once(tokens.len())) {
        if !last.is_some_and(|l| tokens[l].kind == "COMMENT") {
            b.push(at);
        }
        if at < tokens.len() {
            last = Some(at);
        }
    }
    b
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutant {
    pub edit: Edit,
    pub text: String,
}

/// Applies one uniformly chosen edit of `kind`.
pub fn mutate<R: Rng + ?Sized>(
    tokens: &[Token],
    kind: MutationKind,
    vocabulary: &[String],
    rng: &mut R,
) -> Result<Mutant, MutationError> {
    let sites = sites(tokens);
    if sites.is_empty() {
        return Err(MutationError::NoCandidate("token stream has no lexemes".into()));
    }
    let edit = match kind {
        MutationKind::Delete => Edit::Delete(sites[rng.gen_range(0..sites.len())]),
        MutationKind::Insert => {
            if vocabulary.is_empty() {
                return Err(MutationError::NoCandidate("empty vocabulary".into()));
            }
            let bounds = boundaries(tokens);
            let before = bounds[rng.gen_range(0..bounds.len())];
            let text = vocabulary[rng.gen_range(0..vocabulary.len())].clone();
            Edit::Insert { before, text }
        }
        MutationKind::Replace => {
            let at = sites[rng.gen_range(0..sites.len())];
            let original = &tokens[at].text;
            let choices: Vec<&String> = vocabulary.iter().filter(|v| *v != original).collect();
            if choices.is_empty() {
                return Err(MutationError::NoCandidate(format!(
                    "vocabulary has no lexeme other than {original:?}"
                )));
            }
            Edit::Replace {
                at,
                text: choices[rng.gen_range(0..choices.len())].clone(),
            }
        }
    };
    let text = apply_edit(tokens, &edit);
    Ok(Mutant { edit, text })
}

/// Every mutant of `kind`, in site order then vocabulary order.
pub fn enumerate_mutants(tokens: &[Token], kind: MutationKind, vocabulary: &[String]) -> Vec<Mutant> {
    let edits: Vec<Edit> = match kind {
        MutationKind::Delete => sites(tokens).into_iter().map(Edit::Delete).collect(),
        MutationKind::Insert => boundaries(tokens)
            .into_iter()
            .flat_map(|before| {
                vocabulary.iter().map(move |v| Edit::Insert {
                    before,
                    text: v.clone(),
                })
            })
            .collect(),
        MutationKind::Replace => sites(tokens)
            .into_iter()
            .flat_map(|at| {
                vocabulary
                    .iter()
                    .filter(move |v| **v != tokens[at].text)
                    .map(move |v| Edit::Replace { at, text: v.clone() })
            })
            .collect(),
    };
    edits
        .into_iter()
        .map(|edit| Mutant {
            text: apply_edit(tokens, &edit),
            edit,
        })
        .collect()
}

/// Per-trial generator: one ChaCha stream per trial index, so trials can run
/// in any order or in parallel.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRun {
    pub report: DistributionReport,
    pub snippet_count: usize,
    pub trials_completed: u64,
    /// Set when the oracle failed part-way; the report then covers the
    /// trials before the first failure.
    pub partial: Option<String>,
}

fn classify<O: ParseOracle + ?Sized>(oracle: &O, text: &str) -> Result<String, OracleError> {
    Ok(match oracle.check_parse(text)? {
        ParseOutcome::Ok => STILL_VALID_LABEL.to_string(),
        ParseOutcome::Error(e) => e.kind.to_string(),
    })
}

/// Mutates randomly chosen snippets `spec.trials` times and tallies the
/// parse outcome of each mutant.
pub fn generate_error_distribution<O>(
    snippets: &[String],
    spec: &MutationSpec,
    oracle: &O,
) -> Result<MutationRun, MutationError>
where
    O: ParseOracle + TokenOracle + ?Sized,
{
    if spec.trials == 0 {
        return Ok(MutationRun {
            report: DistributionReport::default(),
            snippet_count: snippets.len(),
            trials_completed: 0,
            partial: None,
        });
    }
    let mut streams = Vec::with_capacity(snippets.len());
    for (index, code) in snippets.iter().enumerate() {
        if !oracle.check_parse(code)?.is_ok() {
            return Err(MutationError::InvalidSnippet { index });
        }
        let tokens = oracle.tokenize(code)?;
        if lexeme_count(&tokens) > 0 {
            streams.push(tokens);
        }
    }
    if streams.is_empty() {
        return Err(MutationError::NoCandidate("no snippet has a token to mutate".into()));
    }
    let vocabulary = if spec.vocabulary.is_empty() {
        vocabulary_from(streams.iter().map(Vec::as_slice))
    } else {
        spec.vocabulary.clone()
    };
    if spec.kind != MutationKind::Delete && vocabulary.is_empty() {
        return Err(MutationError::NoCandidate("empty vocabulary".into()));
    }

    let mutants: Vec<Result<String, MutationError>> = if spec.exhaustive {
        let all: Vec<String> = streams
            .iter()
            .flat_map(|tokens| enumerate_mutants(tokens, spec.kind, &vocabulary))
            .map(|m| m.text)
            .collect();
        if all.is_empty() {
            return Err(MutationError::NoCandidate("no mutant can be formed".into()));
        }
        (0..spec.trials)
            .map(|t| Ok(all[(t % all.len() as u64) as usize].clone()))
            .collect()
    } else {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(spec.seed, t);
                let tokens = &streams[rng.gen_range(0..streams.len())];
                mutate(tokens, spec.kind, &vocabulary, &mut rng).map(|m| m.text)
            })
            .collect()
    };

    let outcomes: Vec<Result<String, MutationError>> = mutants
        .into_par_iter()
        .map(|m| Ok(classify(oracle, &m?)?))
        .collect();
    let mut labels = Vec::with_capacity(outcomes.len());
    let mut partial = None;
    for outcome in outcomes {
        match outcome {
            Ok(label) => labels.push(label),
            Err(MutationError::Oracle(e)) => {
                partial = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(MutationRun {
        trials_completed: labels.len() as u64,
        report: DistributionReport::from_counts(labels.into_iter().map(|l| (l, 1))),
        snippet_count: streams.len(),
        partial,
    })
}
