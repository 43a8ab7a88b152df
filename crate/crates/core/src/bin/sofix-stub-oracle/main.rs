//! Stand-in interpreter worker speaking the sofix wire protocol. It answers
//! parse, tokenize, exec and version requests without a Python runtime, so
//! the pipeline can be exercised end to end.
//!
//! `SOFIX_STUB_SCRIPT` may name a JSON file that overrides behaviour:
//!
//! ```text
//! {"version": "3.8-stub",
//!  "exit_after": 5,
//!  "rules": [{"action": "exec", "contains": "boom", "do": "crash", "once_file": "/tmp/m"},
//!            {"action": "parse", "do": "reply", "reply": {"status": "ok"}}]}
//! ```
//!
//! `do` is one of `crash`, `hang`, `garbage`, `wrong_id`, `reply`. A rule
//! with `once_file` fires only while that file does not exist yet, and
//! creates it.

mod exec;
mod parse;
mod tokenize;

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::{json, Value};
use sofix::oracle::protocol::{Action, Request};

const DEFAULT_VERSION: &str = "3.6-stub";

#[derive(Debug, Default, Deserialize)]
struct Script {
    version: Option<String>,
    exit_after: Option<u64>,
    #[serde(default)]
    rules: Vec<Rule>,
}

#[derive(Debug, Deserialize)]
struct Rule {
    action: Option<Action>,
    contains: Option<String>,
    #[serde(rename = "do")]
    behaviour: String,
    reply: Option<Value>,
    once_file: Option<PathBuf>,
}

impl Script {
    fn load() -> Script {
        let Some(path) = std::env::var_os("SOFIX_STUB_SCRIPT") else {
            return Script::default();
        };
        let text = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("cannot read {}: {e}", PathBuf::from(&path).display()));
        serde_json::from_str(&text).expect("SOFIX_STUB_SCRIPT is not a valid script")
    }

    fn matching(&self, req: &Request) -> Option<&Rule> {
        self.rules.iter().find(|r| {
            r.action.is_none_or(|a| a == req.action)
                && r.contains.as_deref().is_none_or(|c| req.code.contains(c))
                && match &r.once_file {
                    None => true,
                    Some(marker) => std::fs::OpenOptions::new()
                        .write(true)
                        .create_new(true)
                        .open(marker)
                        .is_ok(),
                }
        })
    }
}

fn hang() -> ! {
    loop {
        std::thread::sleep(Duration::from_secs(3600));
    }
}

fn crash() -> ! {
    std::process::exit(101)
}

fn respond(req: &Request, version: &str) -> Value {
    match req.action {
        Action::Version => json!({"id": req.id, "interpreter": version}),
        Action::Parse => match parse::check(&req.code) {
            None => json!({"id": req.id, "status": "ok", "kind": null, "message": null, "line": null, "col": null}),
            Some(f) => json!({
                "id": req.id, "status": "error", "kind": f.kind,
                "message": f.message, "line": f.line, "col": f.col,
            }),
        },
        Action::Tokenize => match tokenize::tokenize(&req.code) {
            Ok(toks) => {
                let tokens: Vec<Value> = toks
                    .iter()
                    .map(|t| json!({"type": t.kind.as_str(), "text": t.text}))
                    .collect();
                json!({"id": req.id, "tokens": tokens})
            }
            Err(e) => json!({
                "id": req.id,
                "error": {"kind": "TokenizeError", "message": e.message, "line": e.line, "col": e.col},
            }),
        },
        Action::Exec => {
            let started = Instant::now();
            let outcome = exec::run(&req.code);
            let duration_ms = started.elapsed().as_millis() as u64;
            match outcome {
                exec::Outcome::Crash => crash(),
                exec::Outcome::Hang => hang(),
                exec::Outcome::NoError => json!({
                    "id": req.id, "status": "no_error", "exc_type": null,
                    "exc_message": null, "stack_trace": null, "duration_ms": duration_ms,
                }),
                exec::Outcome::Exception { exc_type, message, line } => json!({
                    "id": req.id, "status": "exception",
                    "stack_trace": exec::stack_trace(&exc_type, &message, line),
                    "exc_type": exc_type, "exc_message": message, "duration_ms": duration_ms,
                }),
            }
        }
    }
}

fn main() {
    let script = Script::load();
    let version = script.version.clone().unwrap_or_else(|| DEFAULT_VERSION.to_string());
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    let mut served = 0u64;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("sofix-stub-oracle: bad request: {e}");
                continue;
            }
        };
        if script.exit_after.is_some_and(|n| served >= n) {
            crash();
        }
        served += 1;
        let reply = match script.matching(&req) {
            None => respond(&req, &version),
            Some(rule) => match rule.behaviour.as_str() {
                "crash" => crash(),
                "hang" => hang(),
                "garbage" => {
                    let _ = writeln!(stdout, "this is not json");
                    let _ = stdout.flush();
                    continue;
                }
                "wrong_id" => {
                    let mut v = respond(&req, &version);
                    v["id"] = json!(req.id + 1000);
                    v
                }
                "reply" => {
                    let mut v = rule.reply.clone().unwrap_or_else(|| json!({}));
                    v["id"] = json!(req.id);
                    v
                }
                other => panic!("unknown stub behaviour {other:?}"),
            },
        };
        if writeln!(stdout, "{reply}").and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
}
