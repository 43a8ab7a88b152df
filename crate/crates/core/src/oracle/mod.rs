//! The interpreter oracle: parse classification, sandboxed execution and
//! tokenization, answered by external worker processes.
//!
//! [`OracleClient`] is the production implementation. Pipeline stages only
//! see the [`ParseOracle`], [`TokenOracle`] and [`SnippetRunner`] traits, so
//! tests can substitute in-process fakes.

mod client;
pub mod protocol;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use client::{parse_command, OracleClient, OracleConfig, DEFAULT_WORKER_CMD, WORKER_CMD_ENV};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle unavailable: {0}")]
    Unavailable(String),
    #[error("oracle contract violated: {0}")]
    Contract(String),
    #[error("tokenize failed at {line:?}:{col:?}: {message}")]
    Tokenize {
        message: String,
        line: Option<u32>,
        col: Option<u32>,
    },
}

impl OracleError {
    pub fn is_unavailable(&self) -> bool {
        matches!(self, OracleError::Unavailable(_))
    }
}

/// Exception class raised by AST compilation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParseErrorKind {
    SyntaxError,
    IndentationError,
    TabError,
    MemoryError,
    /// Any other class, reported verbatim by the worker.
    Other(String),
}

impl ParseErrorKind {
    pub fn as_str(&self) -> &str {
        match self {
            ParseErrorKind::SyntaxError => "SyntaxError",
            ParseErrorKind::IndentationError => "IndentationError",
            ParseErrorKind::TabError => "TabError",
            ParseErrorKind::MemoryError => "MemoryError",
            ParseErrorKind::Other(name) => name,
        }
    }

    pub fn from_name(name: &str) -> Self {
        match name {
            "SyntaxError" => ParseErrorKind::SyntaxError,
            "IndentationError" => ParseErrorKind::IndentationError,
            "TabError" => ParseErrorKind::TabError,
            "MemoryError" => ParseErrorKind::MemoryError,
            other => ParseErrorKind::Other(other.to_string()),
        }
    }
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ParseErrorKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ParseErrorKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Ok(ParseErrorKind::from_name(&name))
    }
}

/// A classified parse failure. Line is 1-based, column is a 0-based offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: Option<String>,
    pub line: Option<u32>,
    pub col: Option<u32>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, message: impl Into<String>, line: u32, col: u32) -> Self {
        ParseError {
            kind,
            message: Some(message.into()),
            line: Some(line),
            col: Some(col),
        }
    }

    pub fn memory() -> Self {
        ParseError {
            kind: ParseErrorKind::MemoryError,
            message: None,
            line: None,
            col: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.kind {
            ParseErrorKind::MemoryError if self.line.is_some() || self.col.is_some() => {
                Err("MemoryError must not carry a position".into())
            }
            ParseErrorKind::SyntaxError
            | ParseErrorKind::IndentationError
            | ParseErrorKind::TabError
                if self.message.is_none() =>
            {
                Err(format!("{} without a message", self.kind))
            }
            _ if self.line == Some(0) => Err("line numbers start at 1".into()),
            _ => Ok(()),
        }
    }

    /// `Kind: message`, or just the kind when there is no message.
    pub fn label(&self) -> String {
        match &self.message {
            Some(m) => format!("{}: {m}", self.kind),
            None => self.kind.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Ok,
    Error(ParseError),
}

impl ParseOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, ParseOutcome::Ok)
    }

    pub fn error(&self) -> Option<&ParseError> {
        match self {
            ParseOutcome::Ok => None,
            ParseOutcome::Error(e) => Some(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuntimeStatus {
    NoError,
    Exception,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuntimeOutcome {
    pub status: RuntimeStatus,
    pub exc_type: Option<String>,
    pub exc_message: Option<String>,
    pub stack_trace: Option<String>,
    pub duration_ms: u64,
}

pub const NO_ERROR_LABEL: &str = "No Error";
pub const TIMEOUT_LABEL: &str = "Execution Timeout";

impl RuntimeOutcome {
    pub fn no_error(duration_ms: u64) -> Self {
        RuntimeOutcome {
            status: RuntimeStatus::NoError,
            exc_type: None,
            exc_message: None,
            stack_trace: None,
            duration_ms,
        }
    }

    pub fn exception(
        exc_type: impl Into<String>,
        exc_message: Option<String>,
        stack_trace: Option<String>,
        duration_ms: u64,
    ) -> Self {
        RuntimeOutcome {
            status: RuntimeStatus::Exception,
            exc_type: Some(exc_type.into()),
            exc_message,
            stack_trace,
            duration_ms,
        }
    }

    pub fn timeout(duration_ms: u64) -> Self {
        RuntimeOutcome {
            status: RuntimeStatus::Timeout,
            exc_type: None,
            exc_message: None,
            stack_trace: None,
            duration_ms,
        }
    }

    /// Category used when tallying runtime results.
    pub fn label(&self) -> &str {
        match self.status {
            RuntimeStatus::NoError => NO_ERROR_LABEL,
            RuntimeStatus::Timeout => TIMEOUT_LABEL,
            RuntimeStatus::Exception => self.exc_type.as_deref().unwrap_or("Exception"),
        }
    }

    /// Same outcome apart from wall-clock duration.
    pub fn same_classification(&self, other: &RuntimeOutcome) -> bool {
        self.status == other.status && self.exc_type == other.exc_type
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    #[serde(rename = "type")]
    pub kind: String,
    pub text: String,
}

impl Token {
    pub fn new(kind: impl Into<String>, text: impl Into<String>) -> Self {
        Token {
            kind: kind.into(),
            text: text.into(),
        }
    }
}

pub trait ParseOracle: Sync {
    fn check_parse(&self, code: &str) -> Result<ParseOutcome, OracleError>;
}

pub trait TokenOracle: Sync {
    /// Tokens in source order, without the end-of-stream marker.
    fn tokenize(&self, code: &str) -> Result<Vec<Token>, OracleError>;
}

pub trait SnippetRunner: Sync {
    fn run_snippet(&self, code: &str, timeout_s: f64) -> Result<RuntimeOutcome, OracleError>;
}

impl<T: ParseOracle + ?Sized> ParseOracle for &T {
    fn check_parse(&self, code: &str) -> Result<ParseOutcome, OracleError> {
        (**self).check_parse(code)
    }
}

impl<T: TokenOracle + ?Sized> TokenOracle for &T {
    fn tokenize(&self, code: &str) -> Result<Vec<Token>, OracleError> {
        (**self).tokenize(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_invariants() {
        assert!(ParseError::memory().validate().is_ok());
        let mut bad = ParseError::memory();
        bad.line = Some(3);
        assert!(bad.validate().is_err());
        let silent = ParseError {
            kind: ParseErrorKind::TabError,
            message: None,
            line: Some(1),
            col: Some(0),
        };
        assert!(silent.validate().is_err());
        let e = ParseError::new(ParseErrorKind::SyntaxError, "invalid syntax", 1, 2);
        assert!(e.validate().is_ok());
        assert_eq!(e.label(), "SyntaxError: invalid syntax");
    }

    #[test]
    fn kinds_round_trip_through_json() {
        let e = ParseError {
            kind: ParseErrorKind::Other("ValueError".into()),
            message: Some("source code string cannot contain null bytes".into()),
            line: None,
            col: None,
        };
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.starts_with(r#"{"kind":"ValueError","message""#), "{json}");
        assert_eq!(serde_json::from_str::<ParseError>(&json).unwrap(), e);
    }

    #[test]
    fn runtime_labels() {
        assert_eq!(RuntimeOutcome::no_error(1).label(), "No Error");
        assert_eq!(RuntimeOutcome::timeout(4000).label(), "Execution Timeout");
        let e = RuntimeOutcome::exception("NameError", None, None, 2);
        assert_eq!(e.label(), "NameError");
        assert!(e.same_classification(&RuntimeOutcome::exception("NameError", None, None, 9)));
        assert_eq!(
            serde_json::to_value(&e).unwrap()["status"],
            serde_json::json!("exception")
        );
    }
}
