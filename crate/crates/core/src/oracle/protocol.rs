//! Worker wire protocol: newline-delimited UTF-8 JSON over stdin/stdout, one
//! in-flight request per worker.
//!
//! Requests:
//!
//! ```text
//! {"id": 1, "action": "parse", "code": "x = 1"}
//! {"id": 2, "action": "exec", "code": "x = 1", "timeout_s": 4.0}
//! ```
//!
//! Any response may instead be an error frame
//! `{"id": n, "error": {"kind": .., "message": .., "line": .., "col": ..}}`,
//! which is how tokenizer failures are reported.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ParseError, ParseErrorKind, ParseOutcome, RuntimeOutcome, RuntimeStatus, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Parse,
    Exec,
    Tokenize,
    Version,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub action: Action,
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_s: Option<f64>,
}

impl Request {
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("request serializes");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResponse {
    pub id: u64,
    pub status: String,
    pub kind: Option<String>,
    pub message: Option<String>,
    pub line: Option<i64>,
    pub col: Option<i64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unexpected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecResponse {
    pub id: u64,
    pub status: String,
    pub exc_type: Option<String>,
    pub exc_message: Option<String>,
    pub stack_trace: Option<String>,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizeResponse {
    pub id: u64,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionResponse {
    pub id: u64,
    pub interpreter: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub kind: String,
    pub message: String,
    pub line: Option<i64>,
    pub col: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub id: u64,
    pub error: ErrorDetail,
}

/// A response line that could not be understood. The worker that sent it is
/// treated as broken.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolViolation(pub String);

/// Either the expected payload or a worker-reported error frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply<T> {
    Payload(T),
    Error(ErrorDetail),
}

pub fn decode<T: for<'de> Deserialize<'de>>(line: &str, expected_id: u64) -> Result<Reply<T>, ProtocolViolation> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| ProtocolViolation(format!("response is not JSON: {e}")))?;
    let id = value.get("id").and_then(Value::as_u64);
    if id != Some(expected_id) {
        return Err(ProtocolViolation(format!(
            "response id {id:?} does not echo request id {expected_id}"
        )));
    }
    if value.get("error").is_some() {
        let frame: ErrorFrame = serde_json::from_value(value)
            .map_err(|e| ProtocolViolation(format!("bad error frame: {e}")))?;
        return Ok(Reply::Error(frame.error));
    }
    serde_json::from_value(value)
        .map(Reply::Payload)
        .map_err(|e| ProtocolViolation(format!("bad response: {e}")))
}

fn position(v: Option<i64>, what: &str, min: i64) -> Result<Option<u32>, ProtocolViolation> {
    match v {
        None => Ok(None),
        Some(n) if n >= min => u32::try_from(n)
            .map(Some)
            .map_err(|_| ProtocolViolation(format!("{what} {n} out of range"))),
        // line 0 / negative offsets show up for errors at end of input
        Some(_) => Ok(Some(min as u32)),
    }
}

impl ParseResponse {
    pub fn into_outcome(self) -> Result<ParseOutcome, ProtocolViolation> {
        match self.status.as_str() {
            "ok" => Ok(ParseOutcome::Ok),
            "error" => {
                let kind = self
                    .kind
                    .map(|k| ParseErrorKind::from_name(&k))
                    .ok_or_else(|| ProtocolViolation("parse error without kind".into()))?;
                let err = ParseError {
                    kind,
                    message: self.message,
                    line: position(self.line, "line", 1)?,
                    col: position(self.col, "col", 0)?,
                };
                err.validate().map_err(ProtocolViolation)?;
                Ok(ParseOutcome::Error(err))
            }
            other => Err(ProtocolViolation(format!("unknown parse status {other:?}"))),
        }
    }
}

impl ExecResponse {
    pub fn into_outcome(self) -> Result<RuntimeOutcome, ProtocolViolation> {
        let status = match self.status.as_str() {
            "no_error" => RuntimeStatus::NoError,
            "exception" => RuntimeStatus::Exception,
            other => return Err(ProtocolViolation(format!("unknown exec status {other:?}"))),
        };
        if status == RuntimeStatus::Exception && self.exc_type.is_none() {
            return Err(ProtocolViolation("exception without exc_type".into()));
        }
        Ok(RuntimeOutcome {
            status,
            exc_type: self.exc_type,
            exc_message: self.exc_message,
            stack_trace: self.stack_trace,
            duration_ms: self.duration_ms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_serialize_bit_exact() {
        let parse = Request {
            id: 7,
            action: Action::Parse,
            code: "x = 1".into(),
            timeout_s: None,
        };
        assert_eq!(parse.to_line(), "{\"id\":7,\"action\":\"parse\",\"code\":\"x = 1\"}\n");
        let exec = Request {
            id: 8,
            action: Action::Exec,
            code: "while True: pass".into(),
            timeout_s: Some(4.0),
        };
        assert_eq!(
            exec.to_line(),
            "{\"id\":8,\"action\":\"exec\",\"code\":\"while True: pass\",\"timeout_s\":4.0}\n"
        );
    }

    #[test]
    fn decodes_parse_error() {
        let line = r#"{"id": 3, "status": "error", "kind": "IndentationError", "message": "expected an indented block", "line": 2, "col": 6}"#;
        let Reply::Payload(resp) = decode::<ParseResponse>(line, 3).unwrap() else {
            panic!("expected payload")
        };
        let ParseOutcome::Error(err) = resp.into_outcome().unwrap() else {
            panic!("expected error")
        };
        assert_eq!(err.kind, ParseErrorKind::IndentationError);
        assert_eq!((err.line, err.col), (Some(2), Some(6)));
    }

    #[test]
    fn rejects_wrong_id_and_bad_frames() {
        let ok = r#"{"id": 1, "status": "ok", "kind": null, "message": null, "line": null, "col": null}"#;
        assert!(decode::<ParseResponse>(ok, 2).is_err());
        assert!(decode::<ParseResponse>("not json", 1).is_err());
        let no_kind = r#"{"id": 1, "status": "error", "kind": null, "message": "x", "line": 1, "col": 0}"#;
        let Reply::Payload(resp) = decode::<ParseResponse>(no_kind, 1).unwrap() else {
            panic!()
        };
        assert!(resp.into_outcome().is_err());
        let memory_with_pos = r#"{"id": 1, "status": "error", "kind": "MemoryError", "message": null, "line": 1, "col": 0}"#;
        let Reply::Payload(resp) = decode::<ParseResponse>(memory_with_pos, 1).unwrap() else {
            panic!()
        };
        assert!(resp.into_outcome().is_err());
    }

    #[test]
    fn error_frames_pass_through() {
        let line = r#"{"id": 4, "error": {"kind": "TokenizeError", "message": "EOF in multi-line string", "line": 1, "col": 0}}"#;
        match decode::<TokenizeResponse>(line, 4).unwrap() {
            Reply::Error(detail) => assert_eq!(detail.kind, "TokenizeError"),
            Reply::Payload(_) => panic!("expected error frame"),
        }
    }

    #[test]
    fn exec_exception_requires_type() {
        let resp = ExecResponse {
            id: 1,
            status: "exception".into(),
            exc_type: None,
            exc_message: None,
            stack_trace: None,
            duration_ms: 3,
        };
        assert!(resp.into_outcome().is_err());
    }
}
