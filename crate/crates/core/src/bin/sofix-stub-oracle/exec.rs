//! Pretend execution: walks the tokens in order and raises the first error a
//! real run would plausibly hit.

use std::collections::BTreeSet;

use crate::parse::is_keyword;
use crate::tokenize::{tokenize, Kind, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    NoError,
    Exception { exc_type: String, message: String, line: u32 },
    Hang,
    Crash,
}

const BUILTINS: &[&str] = &[
    "print", "len", "range", "str", "int", "float", "list", "dict", "set", "tuple", "input", "open",
    "type", "isinstance", "enumerate", "zip", "map", "filter", "sorted", "sum", "min", "max", "abs",
    "round", "object", "super", "bool", "bytes", "chr", "ord", "hex", "bin", "format", "repr", "iter",
    "next", "any", "all", "getattr", "setattr", "hasattr", "id", "hash", "vars", "dir", "help", "exit",
    "quit", "reversed", "slice", "staticmethod", "classmethod", "property", "divmod", "pow",
    "globals", "locals", "exec", "eval", "compile", "callable", "frozenset", "complex", "memoryview",
    "bytearray", "NotImplemented", "Ellipsis", "__name__", "__file__", "__doc__", "self", "cls",
    "Exception", "BaseException", "ValueError", "TypeError", "KeyError", "IndexError", "NameError",
    "AttributeError", "RuntimeError", "StopIteration", "ZeroDivisionError", "ImportError",
    "ModuleNotFoundError", "OSError", "IOError", "FileNotFoundError", "EOFError",
    "NotImplementedError", "KeyboardInterrupt", "AssertionError", "SystemExit",
];

const MODULES: &[&str] = &[
    "sys", "os", "math", "re", "json", "random", "time", "datetime", "collections", "itertools",
    "functools", "string", "io", "subprocess", "typing", "pathlib", "csv", "logging", "unittest",
    "abc", "copy", "pickle", "socket", "threading", "argparse", "decimal", "fractions", "statistics",
    "heapq", "bisect", "struct", "glob", "shutil", "tempfile", "urllib", "http", "hashlib", "base64",
    "textwrap", "pprint", "operator", "enum", "dataclasses", "contextlib", "warnings", "traceback",
    "turtle", "tkinter", "sqlite3", "queue", "uuid", "platform", "getpass", "signal", "__future__",
];

/// Names bound anywhere in the snippet. Order is ignored.
fn bound_names(toks: &[Tok]) -> BTreeSet<String> {
    let mut bound = BTreeSet::new();
    let mut line_start = 0;
    for i in 0..toks.len() {
        let t = &toks[i];
        let prev = i.checked_sub(1).map(|p| &toks[p]);
        if t.kind == Kind::Name && !prev.is_some_and(|p| p.is_op(".")) {
            let binder = prev.is_some_and(|p| {
                ["def", "class", "as", "import", "global", "nonlocal"].iter().any(|k| p.is_name(k))
            });
            let next_assign = toks.get(i + 1).is_some_and(|n| {
                n.kind == Kind::Op && (n.text == "=" || n.text.ends_with('=') && !matches!(n.text.as_str(), "==" | "<=" | ">=" | "!="))
            });
            if binder || next_assign {
                bound.insert(t.text.clone());
            }
        }
        if matches!(t.kind, Kind::Newline | Kind::EndMarker) {
            let line = &toks[line_start..i];
            bind_line(line, &mut bound);
            line_start = i + 1;
        }
    }
    bound
}

/// Targets of `for`, `lambda`, `def` parameters and top-level assignments.
fn bind_line(line: &[Tok], bound: &mut BTreeSet<String>) {
    let names = |toks: &[Tok], bound: &mut BTreeSet<String>| {
        for (j, t) in toks.iter().enumerate() {
            if t.kind == Kind::Name && !is_keyword(&t.text) && !(j > 0 && toks[j - 1].is_op(".")) {
                bound.insert(t.text.clone());
            }
        }
    };
    if let Some(at) = line.iter().position(|t| t.is_name("import")) {
        let mut after_dot = false;
        for t in &line[at + 1..] {
            if t.kind == Kind::Name && !is_keyword(&t.text) && !after_dot {
                bound.insert(t.text.clone());
            }
            after_dot = t.is_op(".");
        }
    }
    for (i, t) in line.iter().enumerate() {
        if t.is_name("for") || t.is_name("lambda") {
            let stop = if t.is_name("for") { "in" } else { ":" };
            let end = line[i..]
                .iter()
                .position(|x| x.is_name(stop) || x.is_op(stop))
                .map_or(line.len(), |p| i + p);
            names(&line[i + 1..end], bound);
        }
        if t.is_name("def") {
            let end = line.iter().rposition(|x| x.is_op(")")).unwrap_or(line.len());
            names(&line[i + 1..end], bound);
        }
    }
    let mut depth = 0i32;
    let mut last_assign = None;
    for (i, t) in line.iter().enumerate() {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == Kind::Op => depth += 1,
            ")" | "]" | "}" if t.kind == Kind::Op => depth -= 1,
            "=" if t.kind == Kind::Op && depth == 0 => last_assign = Some(i),
            _ => {}
        }
    }
    if let Some(end) = last_assign {
        names(&line[..end], bound);
    }
}

fn first_string(toks: &[Tok]) -> String {
    toks.iter()
        .take_while(|t| !t.is_op(")"))
        .find(|t| t.kind == Kind::Str)
        .map(|t| t.text.trim_start_matches(|c: char| c.is_ascii_alphabetic()).trim_matches(|c| c == '\'' || c == '"').to_string())
        .unwrap_or_default()
}

pub fn run(code: &str) -> Outcome {
    if code.contains("__stub_crash__") {
        return Outcome::Crash;
    }
    if code.contains("__stub_hang__") {
        return Outcome::Hang;
    }
    let Ok(toks) = tokenize(code) else {
        return Outcome::Exception {
            exc_type: "SyntaxError".into(),
            message: "invalid syntax".into(),
            line: 1,
        };
    };
    let toks: Vec<Tok> = toks.into_iter().filter(|t| !matches!(t.kind, Kind::Nl | Kind::Comment)).collect();
    let bound = bound_names(&toks);
    let has_break = toks.iter().any(|t| t.is_name("break") || t.is_name("return"));
    let exc = |exc_type: &str, message: String, line: u32| Outcome::Exception {
        exc_type: exc_type.into(),
        message,
        line,
    };
    for (i, t) in toks.iter().enumerate() {
        let next = toks.get(i + 1);
        let prev = i.checked_sub(1).map(|p| &toks[p]);
        if t.is_name("while")
            && next.is_some_and(|n| n.is_name("True") || n.text == "1")
            && !has_break
        {
            return Outcome::Hang;
        }
        if t.is_name("import") || (t.is_name("from") && next.is_some_and(|n| n.kind == Kind::Name)) {
            if let Some(module) = next.filter(|n| n.kind == Kind::Name) {
                if !MODULES.contains(&module.text.as_str()) {
                    return exc("ModuleNotFoundError", format!("No module named '{}'", module.text), t.line);
                }
            }
        }
        if t.is_name("raise") {
            if let Some(n) = next.filter(|n| n.kind == Kind::Name && !is_keyword(&n.text)) {
                let message = if toks.get(i + 2).is_some_and(|p| p.is_op("(")) {
                    first_string(&toks[i + 2..])
                } else {
                    String::new()
                };
                return exc(&n.text, message, t.line);
            }
        }
        if t.is_op("/") && next.is_some_and(|n| n.text == "0") {
            return exc("ZeroDivisionError", "division by zero".into(), t.line);
        }
        if t.kind != Kind::Name || is_keyword(&t.text) || prev.is_some_and(|p| p.is_op(".")) {
            continue;
        }
        let called = next.is_some_and(|n| n.is_op("("));
        if t.text == "input" && called {
            return exc("EOFError", "EOF when reading a line".into(), t.line);
        }
        if t.text == "open" && called {
            let path = first_string(&toks[i + 1..]);
            return exc(
                "FileNotFoundError",
                format!("[Errno 2] No such file or directory: '{path}'"),
                t.line,
            );
        }
        let kwarg = next.is_some_and(|n| n.is_op("=")) && prev.is_some_and(|p| p.is_op("(") || p.is_op(","));
        if !kwarg && !bound.contains(&t.text) && !BUILTINS.contains(&t.text.as_str()) {
            return exc("NameError", format!("name '{}' is not defined", t.text), t.line);
        }
    }
    Outcome::NoError
}

pub fn stack_trace(exc_type: &str, message: &str, line: u32) -> String {
    let tail = if message.is_empty() {
        exc_type.to_string()
    } else {
        format!("{exc_type}: {message}")
    };
    format!("Traceback (most recent call last):\n  File \"<snippet>\", line {line}, in <module>\n{tail}\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exc_type(code: &str) -> Option<String> {
        match run(code) {
            Outcome::Exception { exc_type, .. } => Some(exc_type),
            _ => None,
        }
    }

    #[test]
    fn clean_runs() {
        assert_eq!(run("x = 1\nprint(x + 1)\n"), Outcome::NoError);
        assert_eq!(run("import os\nfor i in range(3):\n    print(i, os.sep, end='')\n"), Outcome::NoError);
        assert_eq!(run("def f(a, b=1):\n    return a * b\nf(2)\n"), Outcome::NoError);
        assert_eq!(run("sq = lambda q: q * q\nys = [v for v in range(3)]\n"), Outcome::NoError);
        assert_eq!(run("a, b = 1, 2\nwhile True:\n    break\n"), Outcome::NoError);
    }

    #[test]
    fn raised_errors() {
        assert_eq!(exc_type("print(y)").as_deref(), Some("NameError"));
        assert_eq!(exc_type("name = input('?')").as_deref(), Some("EOFError"));
        assert_eq!(exc_type("import numpy as np").as_deref(), Some("ModuleNotFoundError"));
        assert_eq!(exc_type("f = open('data.txt')").as_deref(), Some("FileNotFoundError"));
        assert_eq!(exc_type("x = 1 / 0").as_deref(), Some("ZeroDivisionError"));
        assert_eq!(exc_type("raise ValueError('bad')").as_deref(), Some("ValueError"));
        assert_eq!(run("while True:\n    pass\n"), Outcome::Hang);
        assert_eq!(run("__stub_crash__ = 1"), Outcome::Crash);
    }

    #[test]
    fn trace_names_the_snippet() {
        assert_eq!(
            stack_trace("NameError", "name 'y' is not defined", 2),
            "Traceback (most recent call last):\n  File \"<snippet>\", line 2, in <module>\nNameError: name 'y' is not defined\n"
        );
    }
}
