use std::io::{BufRead, BufReader, Write};
use std::os::unix::process::CommandExt;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{
    decode, Action, ExecResponse, ParseResponse, ProtocolViolation, Reply, Request,
    TokenizeResponse, VersionResponse,
};
use super::{
    OracleError, ParseOracle, ParseOutcome, RuntimeOutcome, SnippetRunner, Token, TokenOracle,
};

pub const WORKER_CMD_ENV: &str = "SOFIX_WORKER_CMD";
pub const DEFAULT_WORKER_CMD: &str = "sofix-worker";

/// Exception class recorded when a snippet takes its worker down twice in a
/// row.
pub(crate) const WORKER_CRASH_LABEL: &str = "WorkerCrash";

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Program and arguments used to launch one worker.
    pub command: Vec<String>,
    pub workers: usize,
    /// Deadline for parse, tokenize and version requests.
    pub request_timeout: Duration,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            command: vec![DEFAULT_WORKER_CMD.to_string()],
            workers: 1,
            request_timeout: Duration::from_secs(30),
        }
    }
}

impl OracleConfig {
    /// Default config with the launch command taken from `SOFIX_WORKER_CMD`
    /// when set.
    pub fn from_env() -> Result<Self, OracleError> {
        let mut config = OracleConfig::default();
        if let Ok(cmd) = std::env::var(WORKER_CMD_ENV) {
            config.command = parse_command(&cmd)?;
        }
        Ok(config)
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

pub fn parse_command(cmd: &str) -> Result<Vec<String>, OracleError> {
    match shlex::split(cmd) {
        Some(parts) if !parts.is_empty() => Ok(parts),
        _ => Err(OracleError::Unavailable(format!(
            "cannot parse worker command {cmd:?}"
        ))),
    }
}

enum CallFailure {
    TimedOut(Duration),
    Died(String),
    Protocol(ProtocolViolation),
}

impl CallFailure {
    fn describe(&self) -> String {
        match self {
            CallFailure::TimedOut(d) => format!("no response after {d:?}"),
            CallFailure::Died(why) => why.clone(),
            CallFailure::Protocol(ProtocolViolation(why)) => format!("protocol violation: {why}"),
        }
    }
}

struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

impl Worker {
    fn spawn(command: &[String]) -> Result<Worker, OracleError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| OracleError::Unavailable("empty worker command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            // own process group, so a timeout can kill everything the snippet forked
            .process_group(0)
            .spawn()
            .map_err(|e| OracleError::Unavailable(format!("cannot launch {program:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Worker {
            child,
            stdin,
            lines,
            next_id: 1,
        })
    }

    /// Sends one request and waits up to `deadline` for the matching line.
    fn call(
        &mut self,
        action: Action,
        code: &str,
        timeout_s: Option<f64>,
        deadline: Duration,
    ) -> Result<(u64, String, Duration), CallFailure> {
        let id = self.next_id;
        self.next_id += 1;
        let request = Request {
            id,
            action,
            code: code.to_string(),
            timeout_s,
        };
        let started = Instant::now();
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| CallFailure::Died("worker stdin closed".into()))?;
        stdin
            .write_all(request.to_line().as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| CallFailure::Died(format!("write to worker failed: {e}")))?;
        match self.lines.recv_timeout(deadline) {
            Ok(Ok(line)) => Ok((id, line, started.elapsed())),
            Ok(Err(e)) => Err(CallFailure::Died(format!("read from worker failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(CallFailure::TimedOut(started.elapsed())),
            Err(RecvTimeoutError::Disconnected) => {
                let status = match self.child.try_wait() {
                    Ok(Some(s)) => s.to_string(),
                    Ok(None) => "stdout closed".to_string(),
                    Err(e) => e.to_string(),
                };
                Err(CallFailure::Died(format!("worker exited ({status})")))
            }
        }
    }

    fn kill(&mut self) {
        self.stdin.take();
        let pgid = self.child.id() as libc::pid_t;
        // SAFETY: signalling a process group we created; a stale id only
        // yields ESRCH.
        unsafe {
            libc::kill(-pgid, libc::SIGKILL);
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.kill();
    }
}

struct Pool {
    idle: Vec<Worker>,
    live: usize,
}

/// Supervises a pool of single-request worker processes.
///
/// Workers are spawned lazily, at most `config.workers` at a time. A request
/// whose worker dies is retried once on a fresh worker. Exec requests that
/// overrun their budget get the worker's whole process group killed and are
/// reported as timeouts.
pub struct OracleClient {
    config: OracleConfig,
    pool: Mutex<Pool>,
    returned: Condvar,
}

impl OracleClient {
    pub fn new(config: OracleConfig) -> Self {
        OracleClient {
            config,
            pool: Mutex::new(Pool {
                idle: Vec::new(),
                live: 0,
            }),
            returned: Condvar::new(),
        }
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    fn checkout(&self) -> Result<Worker, OracleError> {
        let mut pool = self.pool.lock().expect("pool lock");
        loop {
            if let Some(worker) = pool.idle.pop() {
                return Ok(worker);
            }
            if pool.live < self.config.workers.max(1) {
                pool.live += 1;
                drop(pool);
                return Worker::spawn(&self.config.command).inspect_err(|_| self.discard());
            }
            pool = self.returned.wait(pool).expect("pool lock");
        }
    }

    fn checkin(&self, worker: Worker) {
        self.pool.lock().expect("pool lock").idle.push(worker);
        self.returned.notify_one();
    }

    fn discard(&self) {
        self.pool.lock().expect("pool lock").live -= 1;
        self.returned.notify_one();
    }

    fn retire(&self, mut worker: Worker) {
        worker.kill();
        drop(worker);
        self.discard();
    }

    /// Runs a request that must succeed, retrying once on a fresh worker.
    fn request<T, F>(&self, action: Action, code: &str, mut accept: F) -> Result<T, OracleError>
    where
        F: FnMut(u64, &str) -> Result<T, CallFailure>,
    {
        let mut last = String::new();
        for _ in 0..2 {
            let mut worker = self.checkout()?;
            let result = worker
                .call(action, code, None, self.config.request_timeout)
                .and_then(|(id, line, _)| accept(id, &line));
            match result {
                Ok(v) => {
                    self.checkin(worker);
                    return Ok(v);
                }
                Err(failure) => {
                    last = failure.describe();
                    self.retire(worker);
                }
            }
        }
        Err(OracleError::Unavailable(format!(
            "{action:?} request failed twice: {last}"
        )))
    }

    /// Interpreter version reported by a worker.
    pub fn worker_version(&self) -> Result<String, OracleError> {
        let version = self.request(Action::Version, "", |id, line| {
            match decode::<VersionResponse>(line, id).map_err(CallFailure::Protocol)? {
                Reply::Payload(v) => Ok(v.interpreter),
                Reply::Error(e) => Err(CallFailure::Died(e.message)),
            }
        })?;
        if version.trim().is_empty() {
            return Err(OracleError::Unavailable("worker reported an empty version".into()));
        }
        Ok(version)
    }

    fn exec_once(&self, code: &str, timeout_s: f64) -> Result<Result<RuntimeOutcome, String>, OracleError> {
        let budget = Duration::from_secs_f64(timeout_s.max(0.0));
        let mut worker = self.checkout()?;
        let result = worker
            .call(Action::Exec, code, Some(timeout_s), budget)
            .and_then(|(id, line, _)| {
                match decode::<ExecResponse>(&line, id).map_err(CallFailure::Protocol)? {
                    Reply::Payload(resp) => resp.into_outcome().map_err(CallFailure::Protocol),
                    Reply::Error(e) => Err(CallFailure::Protocol(ProtocolViolation(e.message))),
                }
            });
        match result {
            Ok(outcome) => {
                self.checkin(worker);
                Ok(Ok(outcome))
            }
            Err(CallFailure::TimedOut(elapsed)) => {
                self.retire(worker);
                let ms = elapsed.max(budget).as_millis() as u64;
                Ok(Ok(RuntimeOutcome::timeout(ms)))
            }
            Err(failure) => {
                self.retire(worker);
                Ok(Err(failure.describe()))
            }
        }
    }
}

impl ParseOracle for OracleClient {
    fn check_parse(&self, code: &str) -> Result<ParseOutcome, OracleError> {
        self.request(Action::Parse, code, |id, line| {
            match decode::<ParseResponse>(line, id).map_err(CallFailure::Protocol)? {
                Reply::Payload(resp) => resp.into_outcome().map_err(CallFailure::Protocol),
                Reply::Error(e) => Err(CallFailure::Protocol(ProtocolViolation(e.message))),
            }
        })
    }
}

impl TokenOracle for OracleClient {
    fn tokenize(&self, code: &str) -> Result<Vec<Token>, OracleError> {
        let reply = self.request(Action::Tokenize, code, |id, line| {
            decode::<TokenizeResponse>(line, id).map_err(CallFailure::Protocol)
        })?;
        match reply {
            Reply::Payload(resp) => Ok(resp
                .tokens
                .into_iter()
                .filter(|t| t.kind != "ENDMARKER")
                .collect()),
            Reply::Error(e) => Err(OracleError::Tokenize {
                message: e.message,
                line: e.line.and_then(|l| u32::try_from(l).ok()),
                col: e.col.and_then(|c| u32::try_from(c).ok()),
            }),
        }
    }
}

impl SnippetRunner for OracleClient {
    /// Executes parse-passing code under a wall-clock budget. Parse-failing
    /// code is refused: its exception would just repeat the parse error.
    fn run_snippet(&self, code: &str, timeout_s: f64) -> Result<RuntimeOutcome, OracleError> {
        if !(timeout_s.is_finite() && timeout_s > 0.0) {
            return Err(OracleError::Contract(format!("timeout must be positive, got {timeout_s}")));
        }
        if let ParseOutcome::Error(e) = self.check_parse(code)? {
            return Err(OracleError::Contract(format!(
                "refusing to execute code that does not parse ({})",
                e.label()
            )));
        }
        match self.exec_once(code, timeout_s)? {
            Ok(outcome) => Ok(outcome),
            Err(_) => match self.exec_once(code, timeout_s)? {
                Ok(outcome) => Ok(outcome),
                Err(why) => Ok(RuntimeOutcome::exception(WORKER_CRASH_LABEL, Some(why), None, 0)),
            },
        }
    }
}
