#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use sofix::oracle::{OracleClient, OracleConfig};

pub const STUB: &str = env!("CARGO_BIN_EXE_sofix-stub-oracle");
pub const SOFIX: &str = env!("CARGO_BIN_EXE_sofix");

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn stub_config(workers: usize) -> OracleConfig {
    OracleConfig {
        command: vec![STUB.to_string()],
        workers,
        request_timeout: Duration::from_secs(10),
    }
}

pub fn stub_client(workers: usize) -> OracleClient {
    OracleClient::new(stub_config(workers))
}

/// Client whose workers run the stub under a behaviour script.
pub fn scripted_client(script: &Path, workers: usize) -> OracleClient {
    let mut config = stub_config(workers);
    config.command = vec![
        "env".to_string(),
        format!("SOFIX_STUB_SCRIPT={}", script.display()),
        STUB.to_string(),
    ];
    OracleClient::new(config)
}

/// Worker launch string for `SOFIX_WORKER_CMD`, optionally scripted.
pub fn stub_command(script: Option<&Path>) -> String {
    match script {
        None => shell_quote(STUB),
        Some(s) => format!(
            "env {} {}",
            shell_quote(&format!("SOFIX_STUB_SCRIPT={}", s.display())),
            shell_quote(STUB)
        ),
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

/// A randomized indented snippet and the text normalization must produce for
/// it, built from the pieces rather than by re-running any stripping logic.
pub struct IndentFixture {
    pub input: String,
    pub expected: String,
    pub prefix: String,
}

pub fn indent_fixture(seed: u64) -> IndentFixture {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    const BODIES: &[&str] = &[
        "x = 1", "print(a)", "# note", "if x:", "return y", "s = 'a\u{a0}b'", "ü = [1,  2]",
        "\u{a0}z", "def f(a, b):", "pass",
    ];
    const WS: &[char] = &[' ', '\t', '\x0c'];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ws = |rng: &mut rand_chacha::ChaCha8Rng, max: usize| -> String {
        let n = rng.gen_range(0..=max);
        (0..n).map(|_| *WS.choose(rng).unwrap()).collect()
    };
    let prefix = ws(&mut rng, 6);
    let terminator = *["\n", "\r\n", "\r"].choose(&mut rng).unwrap();
    let count = rng.gen_range(1..=12);
    let anchor = rng.gen_range(0..count);
    let mut input_lines = Vec::new();
    let mut expected_lines = Vec::new();
    for i in 0..count {
        if i != anchor && rng.gen_bool(0.2) {
            input_lines.push(ws(&mut rng, 4));
            expected_lines.push(String::new());
            continue;
        }
        let extra = if i == anchor { String::new() } else { ws(&mut rng, 8) };
        let body = *BODIES.choose(&mut rng).unwrap();
        let trailing = ws(&mut rng, 3);
        input_lines.push(format!("{prefix}{extra}{body}{trailing}"));
        expected_lines.push(format!("{extra}{body}"));
    }
    let mut input = input_lines.join(terminator);
    let mut expected = expected_lines.join("\n");
    if rng.gen_bool(0.5) {
        input.push_str(terminator);
        expected.push('\n');
    }
    IndentFixture { input, expected, prefix }
}

/// Valid snippets the mutation tests draw from.
pub const MUTATION_CORPUS: &[&str] = &[
    "x = 1\n",
    "def add(a, b):\n    return a + b\n",
    "for i in range(3):\n    if i % 2:\n        print(i)\n",
    "name = 'Ada'  # who\nprint(name.upper())\n",
    "items = [1, 2, 3]\ntotal = sum(items) / len(items)\n",
    "class C:\n    pass\n",
    "while n > 0:\n    n -= 1\nelse:\n    done = True\n",
];

/// Outcome of checking the token-count laws on seeded random mutants.
#[derive(Debug, Default)]
pub struct LawCheck {
    pub trials: u64,
    /// Mutants that still parsed and were re-tokenized.
    pub retokenized: u64,
    /// Edits that removed or replaced a line break. Joining two lines makes
    /// the tokenizer re-derive indentation tokens, so only `mutant != source`
    /// is checked for these.
    pub line_joins: u64,
    pub violations: Vec<String>,
}

/// Draws `trials` mutants of `kind` from the corpus and checks that each
/// differs from its source and, when it still parses and keeps its line
/// breaks, re-tokenizes to the source lexeme count minus one, plus one, or
/// unchanged.
pub fn check_count_laws(
    client: &OracleClient,
    kind: sofix::mutation::MutationKind,
    seed: u64,
    trials: u64,
) -> LawCheck {
    use rand::Rng;
    use rayon::prelude::*;
    use sofix::mutation::{lexeme_count, mutate, render_tokens, trial_rng, vocabulary_from, Edit, MutationKind};
    use sofix::oracle::{ParseOracle, TokenOracle};

    let streams: Vec<_> = MUTATION_CORPUS.iter().map(|c| client.tokenize(c).unwrap()).collect();
    let vocab = vocabulary_from(streams.iter().map(Vec::as_slice));
    let delta: i64 = match kind {
        MutationKind::Delete => -1,
        MutationKind::Insert => 1,
        MutationKind::Replace => 0,
    };
    let results: Vec<(u8, Option<String>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let tokens = &streams[rng.gen_range(0..streams.len())];
            let m = mutate(tokens, kind, &vocab, &mut rng).unwrap();
            if m.text == render_tokens(tokens) {
                return (0, Some(format!("trial {t}: mutant equals source: {:?}", m.text)));
            }
            let edited = match &m.edit {
                Edit::Delete(at) | Edit::Replace { at, .. } => Some(&tokens[*at]),
                Edit::Insert { .. } => None,
            };
            if edited.is_some_and(|e| matches!(e.kind.as_str(), "NEWLINE" | "NL")) {
                return (2, None);
            }
            if !client.check_parse(&m.text).unwrap().is_ok() {
                return (0, None);
            }
            let got = lexeme_count(&client.tokenize(&m.text).unwrap()) as i64;
            let want = lexeme_count(tokens) as i64 + delta;
            let bad = (got != want).then(|| format!("trial {t}: {:?} has {got} lexemes, want {want}", m.text));
            (1, bad)
        })
        .collect();
    let mut check = LawCheck { trials, ..LawCheck::default() };
    for (class, bad) in results {
        check.retokenized += u64::from(class == 1);
        check.line_joins += u64::from(class == 2);
        check.violations.extend(bad);
    }
    check
}

/// Deletion mutants of a one-line snippet built by hand from its
/// whitespace-separated words.
pub fn word_deletions(line: &str) -> Vec<String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    (0..words.len())
        .map(|skip| {
            words
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, w)| *w)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Runs the `sofix` binary with the stub as its worker unless `worker`
/// overrides the launch string.
pub fn sofix(args: &[&str], worker: Option<&str>) -> std::process::Output {
    let worker = worker.map_or_else(|| stub_command(None), str::to_string);
    std::process::Command::new(SOFIX)
        .args(args)
        .env(sofix::oracle::WORKER_CMD_ENV, worker)
        .output()
        .expect("sofix runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
