//! Scripted chat-completions server for offline tests.

use std::net::{SocketAddr, TcpListener};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockReply {
    /// Plain message content.
    Text { text: String },
    /// A `choose_action` tool call.
    Tool { action: u64 },
    /// Bare HTTP status with an error body.
    Status { code: u16 },
    /// Wait, then answer with `then`.
    Delay { ms: u64, then: Box<MockReply> },
}

impl MockReply {
    pub fn text(s: impl Into<String>) -> MockReply {
        MockReply::Text { text: s.into() }
    }

    pub fn delay(ms: u64, then: MockReply) -> MockReply {
        MockReply::Delay { ms, then: Box::new(then) }
    }
}

/// Matches on model name and/or a regex over the last user message. The
/// n-th hit gets `replies[n]`; the last reply repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub replies: Vec<MockReply>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MockScript {
    pub rules: Vec<MockRule>,
}

impl MockScript {
    pub fn always(reply: MockReply) -> MockScript {
        MockScript::sequence(vec![reply])
    }

    pub fn sequence(replies: Vec<MockReply>) -> MockScript {
        MockScript { rules: vec![MockRule { model: None, pattern: None, replies }] }
    }

    pub fn rule(mut self, model: Option<&str>, pattern: Option<&str>, replies: Vec<MockReply>) -> MockScript {
        self.rules.push(MockRule {
            model: model.map(str::to_string),
            pattern: pattern.map(str::to_string),
            replies,
        });
        self
    }

    pub fn from_json(text: &str) -> Result<MockScript, String> {
        let s: MockScript = serde_json::from_str(text).map_err(|e| e.to_string())?;
        s.compile()?;
        Ok(s)
    }

    fn compile(&self) -> Result<Vec<Option<Regex>>, String> {
        self.rules
            .iter()
            .map(|r| r.pattern.as_deref().map(Regex::new).transpose().map_err(|e| e.to_string()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedRequest {
    pub model: String,
    pub prompt: String,
    /// Index of the rule that answered.
    pub rule: Option<usize>,
    pub status: u16,
}

struct Shared {
    script: MockScript,
    patterns: Vec<Option<Regex>>,
    hits: Mutex<Vec<usize>>,
    log: Mutex<Vec<LoggedRequest>>,
}

pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    /// Serve on a free local port.
    pub fn start(script: MockScript) -> std::io::Result<MockServer> {
        MockServer::bind("127.0.0.1:0", script)
    }

    pub fn bind(addr: &str, script: MockScript) -> std::io::Result<MockServer> {
        let patterns = script
            .compile()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            hits: Mutex::new(vec![0; script.rules.len()]),
            script,
            patterns,
            log: Mutex::new(Vec::new()),
        });
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let state = shared.clone();
        let thread = std::thread::spawn(move || {
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).expect("tokio listener");
                let app = Router::new()
                    .route("/chat/completions", post(complete))
                    .route("/v1/chat/completions", post(complete))
                    .with_state(state);
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = stopped.await;
                    })
                    .await
                    .expect("mock server");
            })
        });
        Ok(MockServer { addr, shared, stop: Some(stop), thread: Some(thread) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL for [`crate::LlmConfig::endpoint`].
    pub fn url(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.shared.log.lock().unwrap().clone()
    }

    /// Blocks until stopped from another thread or the process exits.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn last_user_message(body: &Value) -> String {
    body.get("messages")
        .and_then(Value::as_array)
        .and_then(|m| m.iter().rev().find(|m| m["role"] == "user"))
        .and_then(|m| m["content"].as_str())
        .unwrap_or_default()
        .to_string()
}

fn pick(shared: &Shared, model: &str, prompt: &str) -> Option<(usize, MockReply)> {
    let i = shared.script.rules.iter().enumerate().position(|(i, r)| {
        r.model.as_deref().is_none_or(|m| m == model)
            && shared.patterns[i].as_ref().is_none_or(|re| re.is_match(prompt))
    })?;
    let rule = &shared.script.rules[i];
    let mut hits = shared.hits.lock().unwrap();
    let n = hits[i].min(rule.replies.len().saturating_sub(1));
    hits[i] += 1;
    rule.replies.get(n).cloned().map(|r| (i, r))
}

fn completion(model: &str, message: Value) -> Value {
    json!({
        "id": "mock",
        "object": "chat.completion",
        "created": 0,
        "model": model,
        "choices": [{"index": 0, "message": message, "finish_reason": "stop"}],
    })
}

async fn complete(State(shared): State<Arc<Shared>>, Json(body): Json<Value>) -> Response {
    let model = body["model"].as_str().unwrap_or_default().to_string();
    let prompt = last_user_message(&body);
    let picked = pick(&shared, &model, &prompt);
    let rule = picked.as_ref().map(|p| p.0);
    let mut reply = picked.map(|p| p.1);
    while let Some(MockReply::Delay { ms, then }) = reply {
        tokio::time::sleep(Duration::from_millis(ms)).await;
        reply = Some(*then);
    }
    let (status, resp) = match reply {
        Some(MockReply::Text { text }) => (
            StatusCode::OK,
            Json(completion(&model, json!({"role": "assistant", "content": text}))).into_response(),
        ),
        Some(MockReply::Tool { action }) => {
            let call = json!({
                "id": "call_0",
                "type": "function",
                "function": {"name": "choose_action", "arguments": json!({"action": action}).to_string()},
            });
            (
                StatusCode::OK,
                Json(completion(&model, json!({"role": "assistant", "content": null, "tool_calls": [call]})))
                    .into_response(),
            )
        }
        Some(MockReply::Status { code }) => {
            let code = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (code, (code, Json(json!({"error": {"message": "scripted failure"}}))).into_response())
        }
        Some(MockReply::Delay { .. }) => unreachable!(),
        None => {
            let code = StatusCode::NOT_FOUND;
            (code, (code, Json(json!({"error": {"message": "no rule matched"}}))).into_response())
        }
    };
    shared.log.lock().unwrap().push(LoggedRequest { model, prompt, rule, status: status.as_u16() });
    resp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_json_round_trip() {
        let s = MockScript::sequence(vec![
            MockReply::Status { code: 500 },
            MockReply::delay(10, MockReply::text("1: x")),
            MockReply::Tool { action: 2 },
        ])
        .rule(Some("small"), Some("move"), vec![MockReply::text("0")]);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(MockScript::from_json(&text).unwrap(), s);
        assert!(MockScript::from_json(r#"{"rules":[{"pattern":"(","replies":[]}]}"#).is_err());
    }
}
