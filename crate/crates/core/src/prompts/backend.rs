// Copyright 2026 The ljp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Text-in/text-out inference backends and the retrying call wrapper.

use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeler::{
    classify_context, combine_verdicts, find_contexts, tail_window, DecisionLabel, Evidence, LabelerConfig, Lexicons,
};
use crate::text::{sha256_hex, whitespace_spans};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_new_tokens: usize,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InferError {
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("prompt is {units} units, backend budget is {budget}")]
    OverBudget { units: usize, budget: usize },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    Protocol(String),
}

impl InferError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, InferError::Timeout(_) | InferError::Transport(_))
    }
}

pub trait InferenceBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Largest prompt accepted, in [`InferenceBackend::count_units`] units.
    fn prompt_budget(&self) -> usize;

    fn count_units(&self, prompt: &str) -> usize {
        whitespace_spans(prompt).len()
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, InferError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 200,
            max_delay_ms: 5_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferOutcome {
    pub text: String,
    pub retries: u32,
}

/// Budget is checked before anything is sent; timeouts and transport
/// failures are retried with exponential backoff.
pub fn infer(
    backend: &dyn InferenceBackend,
    request: &GenerationRequest,
    policy: &RetryPolicy,
) -> Result<InferOutcome, InferError> {
    let units = backend.count_units(&request.prompt);
    let budget = backend.prompt_budget();
    if units > budget {
        return Err(InferError::OverBudget { units, budget });
    }
    let prompt_digest = sha256_hex(&request.prompt);
    let mut retries = 0;
    loop {
        match backend.generate(request) {
            Ok(resp) => {
                log::debug!(
                    "backend={} prompt={} response={} retries={}",
                    backend.name(),
                    &prompt_digest[..12],
                    &sha256_hex(&resp.text)[..12],
                    retries
                );
                return Ok(InferOutcome {
                    text: resp.text,
                    retries,
                });
            }
            Err(e) if e.is_retryable() && retries < policy.max_retries => {
                log::warn!("backend={} attempt {} failed: {e}", backend.name(), retries + 1);
                thread::sleep(policy.delay(retries));
                retries += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Returns a fixed reply.
#[derive(Debug, Clone)]
pub struct EchoStub {
    pub reply: String,
    pub budget: usize,
}

impl EchoStub {
    pub fn new(reply: impl Into<String>) -> Self {
        EchoStub {
            reply: reply.into(),
            budget: usize::MAX,
        }
    }
}

impl InferenceBackend for EchoStub {
    fn name(&self) -> &str {
        "echo"
    }
    fn prompt_budget(&self) -> usize {
        self.budget
    }
    fn generate(&self, _: &GenerationRequest) -> Result<GenerationResponse, InferError> {
        Ok(GenerationResponse {
            text: self.reply.clone(),
        })
    }
}

/// Fails with a transport error a set number of times, then replies.
#[derive(Debug)]
pub struct FlakyStub {
    remaining_failures: AtomicUsize,
    calls: AtomicUsize,
    reply: String,
}

impl FlakyStub {
    pub fn new(failures: usize, reply: impl Into<String>) -> Self {
        FlakyStub {
            remaining_failures: AtomicUsize::new(failures),
            calls: AtomicUsize::new(0),
            reply: reply.into(),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl InferenceBackend for FlakyStub {
    fn name(&self) -> &str {
        "flaky"
    }
    fn prompt_budget(&self) -> usize {
        usize::MAX
    }
    fn generate(&self, _: &GenerationRequest) -> Result<GenerationResponse, InferError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let left = self.remaining_failures.load(Ordering::SeqCst);
        if left > 0 {
            self.remaining_failures.store(left - 1, Ordering::SeqCst);
            return Err(InferError::Transport("injected failure".into()));
        }
        Ok(GenerationResponse {
            text: self.reply.clone(),
        })
    }
}

/// Offline baseline: reads the case out of the prompt's angle brackets and
/// answers with the keyword labeler's verdict as `[d, sentence]`.
#[derive(Debug, Clone, Default)]
pub struct KeywordStub {
    lexicons: Lexicons,
    config: LabelerConfig,
}

impl KeywordStub {
    pub fn new(lexicons: Lexicons, config: LabelerConfig) -> Self {
        KeywordStub { lexicons, config }
    }

    fn case_text(prompt: &str) -> &str {
        let open = prompt.rfind("Input: <").map(|i| i + "Input: <".len()).or_else(|| {
            prompt
                .rfind("case_proceeding: <")
                .map(|i| i + "case_proceeding: <".len())
        });
        match open {
            Some(start) => match prompt.rfind('>') {
                Some(end) if end >= start => &prompt[start..end],
                _ => &prompt[start..],
            },
            None => prompt,
        }
    }
}

fn sentence_around(text: &str, start: usize, end: usize) -> &str {
    let is_stop = |c: char| matches!(c, '.' | '!' | '?' | '\n');
    let s = text[..start].rfind(is_stop).map(|i| i + 1).unwrap_or(0);
    let e = text[end..].find(is_stop).map(|i| end + i + 1).unwrap_or(text.len());
    text[s..e].trim()
}

impl InferenceBackend for KeywordStub {
    fn name(&self) -> &str {
        "keyword-stub"
    }
    fn prompt_budget(&self) -> usize {
        usize::MAX
    }
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, InferError> {
        let case = Self::case_text(&request.prompt);
        let window = tail_window(case, self.config.window_words);
        let evidence: Vec<Evidence> = find_contexts(window.text, &self.lexicons, self.config.context_radius)
            .iter()
            .filter_map(|c| classify_context(c, &self.lexicons, self.config.negation_radius))
            .collect();
        let text = match combine_verdicts(evidence.iter().map(Evidence::verdict)) {
            Some((label, _)) => {
                let d = if label == DecisionLabel::Rejected { 0 } else { 1 };
                let last = evidence.last().expect("a verdict implies evidence");
                let sentence = sentence_around(window.text, last.span.0, last.span.1);
                format!("[{d}, {sentence}]")
            }
            None => "No clear decision generated.".to_string(),
        };
        Ok(GenerationResponse { text })
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    prompt: &'a str,
    max_new_tokens: usize,
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    id: Option<u64>,
    text: String,
}

struct PipeState {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

/// A long-lived subprocess speaking one JSON record per line on
/// stdin/stdout. Responses may echo the request `id`; stale replies to
/// timed-out requests are skipped by id.
pub struct PipeBackend {
    name: String,
    budget: usize,
    timeout: Duration,
    next_id: AtomicU64,
    state: Mutex<PipeState>,
}

impl PipeBackend {
    pub fn spawn(program: &str, args: &[String], budget: usize, timeout: Duration) -> Result<Self, InferError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| InferError::Transport(format!("spawn {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(PipeBackend {
            name: format!("pipe:{program}"),
            budget,
            timeout,
            next_id: AtomicU64::new(1),
            state: Mutex::new(PipeState {
                child,
                stdin,
                lines: rx,
            }),
        })
    }
}

impl Drop for PipeBackend {
    fn drop(&mut self) {
        if let Ok(st) = self.state.get_mut() {
            let _ = st.child.kill();
            let _ = st.child.wait();
        }
    }
}

impl InferenceBackend for PipeBackend {
    fn name(&self) -> &str {
        &self.name
    }
    fn prompt_budget(&self) -> usize {
        self.budget
    }
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, InferError> {
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let line = serde_json::to_string(&WireRequest {
            id,
            prompt: &request.prompt,
            max_new_tokens: request.max_new_tokens,
            temperature: request.temperature,
        })
        .map_err(|e| InferError::Protocol(e.to_string()))?;
        let mut st = self
            .state
            .lock()
            .map_err(|_| InferError::Transport("backend lock poisoned".into()))?;
        writeln!(st.stdin, "{line}")
            .and_then(|_| st.stdin.flush())
            .map_err(|e| InferError::Transport(e.to_string()))?;
        let deadline = std::time::Instant::now() + self.timeout;
        loop {
            let left = deadline.saturating_duration_since(std::time::Instant::now());
            let reply = match st.lines.recv_timeout(left) {
                Ok(l) => l,
                Err(RecvTimeoutError::Timeout) => return Err(InferError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(InferError::Transport("backend process closed its output".into()))
                }
            };
            let resp: WireResponse =
                serde_json::from_str(&reply).map_err(|e| InferError::Protocol(format!("{e}: {reply}")))?;
            match resp.id {
                Some(rid) if rid != id => continue,
                _ => return Ok(GenerationResponse { text: resp.text }),
            }
        }
    }
}

/// One TCP connection per request, one JSON line each way.
pub struct SocketBackend {
    addr: String,
    budget: usize,
    timeout: Duration,
}

impl SocketBackend {
    pub fn new(addr: impl Into<String>, budget: usize, timeout: Duration) -> Self {
        SocketBackend {
            addr: addr.into(),
            budget,
            timeout,
        }
    }
}

impl InferenceBackend for SocketBackend {
    fn name(&self) -> &str {
        &self.addr
    }
    fn prompt_budget(&self) -> usize {
        self.budget
    }
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, InferError> {
        let transport = |e: std::io::Error| match e.kind() {
            ErrorKind::WouldBlock | ErrorKind::TimedOut => InferError::Timeout(self.timeout),
            _ => InferError::Transport(e.to_string()),
        };
        let addr = self
            .addr
            .to_socket_addrs()
            .map_err(transport)?
            .next()
            .ok_or_else(|| InferError::Transport(format!("cannot resolve {}", self.addr)))?;
        let mut stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(transport)?;
        stream.set_read_timeout(Some(self.timeout)).map_err(transport)?;
        stream.set_write_timeout(Some(self.timeout)).map_err(transport)?;
        let line = serde_json::to_string(request).map_err(|e| InferError::Protocol(e.to_string()))?;
        writeln!(stream, "{line}").map_err(transport)?;
        let mut reply = String::new();
        BufReader::new(stream).read_line(&mut reply).map_err(transport)?;
        if reply.is_empty() {
            return Err(InferError::Transport("connection closed without a reply".into()));
        }
        let resp: WireResponse =
            serde_json::from_str(reply.trim_end()).map_err(|e| InferError::Protocol(format!("{e}: {reply}")))?;
        Ok(GenerationResponse { text: resp.text })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    fn req(p: &str) -> GenerationRequest {
        GenerationRequest {
            prompt: p.into(),
            max_new_tokens: 64,
            temperature: 0.0,
        }
    }

    fn fast() -> RetryPolicy {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 1,
            max_delay_ms: 4,
        }
    }

    #[test]
    fn echo_stub() {
        let out = infer(&EchoStub::new("1"), &req("anything"), &fast()).unwrap();
        assert_eq!(
            out,
            InferOutcome {
                text: "1".into(),
                retries: 0
            }
        );
    }

    #[test]
    fn over_budget_sends_nothing() {
        let b = FlakyStub::new(0, "1");
        struct Tight<'a>(&'a FlakyStub);
        impl InferenceBackend for Tight<'_> {
            fn name(&self) -> &str {
                "tight"
            }
            fn prompt_budget(&self) -> usize {
                3
            }
            fn generate(&self, r: &GenerationRequest) -> Result<GenerationResponse, InferError> {
                self.0.generate(r)
            }
        }
        let e = infer(&Tight(&b), &req("one two three four"), &fast()).unwrap_err();
        assert_eq!(e, InferError::OverBudget { units: 4, budget: 3 });
        assert_eq!(b.calls(), 0);
    }

    #[test]
    fn flaky_backend_recovers() {
        let b = FlakyStub::new(2, "0");
        let out = infer(&b, &req("p"), &fast()).unwrap();
        assert_eq!(out.retries, 2);
        assert_eq!(b.calls(), 3);
        let dead = FlakyStub::new(10, "0");
        assert!(matches!(
            infer(&dead, &req("p"), &fast()),
            Err(InferError::Transport(_))
        ));
        assert_eq!(dead.calls(), 4);
    }

    #[test]
    fn backoff_is_exponential_and_capped() {
        let p = RetryPolicy::default();
        assert_eq!(p.delay(0), Duration::from_millis(200));
        assert_eq!(p.delay(2), Duration::from_millis(800));
        assert_eq!(p.delay(10), Duration::from_millis(5000));
    }

    #[test]
    fn keyword_stub_reads_the_case() {
        let s = KeywordStub::default();
        let p = "### Instructions: x\n### Input: <Arguments were heard. The appeal is dismissed with costs.>\n### Response:";
        let out = s.generate(&req(p)).unwrap().text;
        assert_eq!(out, "[0, The appeal is dismissed with costs.]");
        let none = s.generate(&req("### Input: <Nothing decided here.>")).unwrap().text;
        assert!(none.starts_with("No clear decision"));
    }

    #[test]
    fn pipe_backend_round_trip() {
        let script = r#"while read -r line; do printf '{"text":"1"}\n'; done"#;
        let b = PipeBackend::spawn("sh", &["-c".into(), script.into()], 100, Duration::from_secs(5)).unwrap();
        assert_eq!(b.generate(&req("hello")).unwrap().text, "1");
        assert_eq!(b.generate(&req("again")).unwrap().text, "1");
    }

    #[test]
    fn pipe_backend_times_out() {
        let b = PipeBackend::spawn("sh", &["-c".into(), "sleep 5".into()], 100, Duration::from_millis(50)).unwrap();
        assert!(matches!(b.generate(&req("x")), Err(InferError::Timeout(_))));
    }

    #[test]
    fn socket_backend_round_trip() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut line = String::new();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            reader.read_line(&mut line).unwrap();
            let r: GenerationRequest = serde_json::from_str(&line).unwrap();
            let mut w = stream;
            writeln!(w, "{}", serde_json::json!({ "text": format!("got {}", r.prompt) })).unwrap();
        });
        let b = SocketBackend::new(addr.to_string(), 100, Duration::from_secs(5));
        assert_eq!(b.generate(&req("ping")).unwrap().text, "got ping");
        server.join().unwrap();
    }
}
