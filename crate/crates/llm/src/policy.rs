use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use skirmish_core::adversaries::{Policy, PolicyError};
use skirmish_core::engine::{Action, GameState};
use skirmish_core::llm::{build_prompt, parse_response, route, Route};
use skirmish_core::rng::RngStream;
use skirmish_core::tournament::{CoreFactory, PolicyFactory, PolicyKind, PolicyRef};

use crate::client::{ChatClient, LlmConfig};

/// One decision as seen by telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub policy: String,
    pub model: String,
    pub route: Route,
    pub menu_size: usize,
    pub latency_ms: f64,
    pub attempts: u32,
    pub valid: bool,
    pub chosen: usize,
    pub reply: Option<String>,
    pub error: Option<String>,
}

/// Shared, append-only decision log.
#[derive(Debug, Clone, Default)]
pub struct Telemetry {
    records: Arc<Mutex<Vec<TelemetryRecord>>>,
}

impl Telemetry {
    pub fn new() -> Telemetry {
        Telemetry::default()
    }

    pub fn push(&self, r: TelemetryRecord) {
        self.records.lock().unwrap().push(r);
    }

    pub fn records(&self) -> Vec<TelemetryRecord> {
        self.records.lock().unwrap().clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// valid replies / requests; `None` before the first request.
    pub fn validity_rate(&self) -> Option<f64> {
        let r = self.records.lock().unwrap();
        if r.is_empty() {
            return None;
        }
        Some(r.iter().filter(|r| r.valid).count() as f64 / r.len() as f64)
    }

    pub fn fallback_count(&self) -> usize {
        self.records.lock().unwrap().iter().filter(|r| !r.valid).count()
    }

    /// One JSON object per line.
    pub fn write_jsonl(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in self.records.lock().unwrap().iter() {
            serde_json::to_writer(&mut f, r)?;
            f.write_all(b"\n")?;
        }
        f.flush()
    }
}

/// Language-model adversary. Unparseable replies and transport failures fall
/// back to a uniform legal action, so `choose` never errors.
pub struct LlmPolicy {
    client: Arc<ChatClient>,
    primary: String,
    secondary: String,
    rng: RngStream,
    telemetry: Telemetry,
    label: String,
}

impl LlmPolicy {
    pub fn new(client: Arc<ChatClient>, telemetry: Telemetry, label: &str) -> LlmPolicy {
        let primary = client.config().primary_model.clone();
        let secondary = client.config().secondary().to_string();
        LlmPolicy {
            client,
            primary,
            secondary,
            rng: RngStream::new(0),
            telemetry,
            label: label.to_string(),
        }
    }

    pub fn with_models(mut self, primary: &str, secondary: &str) -> LlmPolicy {
        self.primary = primary.to_string();
        self.secondary = secondary.to_string();
        self
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }
}

impl Policy for LlmPolicy {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn choose(&mut self, state: &GameState, actions: &[Action]) -> Result<usize, PolicyError> {
        let pov = state.active().ok_or_else(|| PolicyError("no active entity".into()))?;
        let r = route(actions);
        let model = match r {
            Route::Primary => &self.primary,
            Route::Secondary => &self.secondary,
        };
        let prompt = build_prompt(state, pov);
        let (parsed, reply, error, latency_ms, attempts) = match self.client.complete(model, &prompt) {
            Ok(c) => (parse_response(&c.text, actions.len()), Some(c.text), None, c.latency_ms, c.attempts),
            Err(e) => (None, None, Some(e.to_string()), 0.0, 0),
        };
        let chosen = parsed.unwrap_or_else(|| self.rng.index(actions.len()));
        self.telemetry.push(TelemetryRecord {
            policy: self.label.clone(),
            model: model.clone(),
            route: r,
            menu_size: actions.len(),
            latency_ms,
            attempts,
            valid: parsed.is_some(),
            chosen,
            reply,
            error,
        });
        Ok(chosen)
    }

    fn reset(&mut self, seed: u64) {
        self.rng = RngStream::new(seed);
    }
}

/// [`CoreFactory`] plus `llm` roster entries. Entry params `endpoint`,
/// `model` and `secondary_model` override the shared config.
pub struct LlmFactory {
    core: CoreFactory,
    config: Option<LlmConfig>,
    telemetry: Telemetry,
}

impl LlmFactory {
    pub fn new(config: Option<LlmConfig>) -> LlmFactory {
        LlmFactory { core: CoreFactory::new(), config, telemetry: Telemetry::new() }
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }
}

impl PolicyFactory for LlmFactory {
    fn build(&self, policy: &PolicyRef) -> Result<Box<dyn Policy>, String> {
        if policy.kind != PolicyKind::Llm {
            return self.core.build(policy);
        }
        let mut config = match (&self.config, policy.params.get("endpoint")) {
            (_, Some(url)) => self.config.clone().unwrap_or_default().with_endpoint(url.clone()),
            (Some(c), None) => c.clone(),
            (None, None) => return Err(format!("{}: no llm endpoint configured", policy.id)),
        };
        if let Some(m) = policy.params.get("model") {
            config.primary_model = m.clone();
        }
        if let Some(m) = policy.params.get("secondary_model") {
            config.secondary_model = m.clone();
        }
        let client = Arc::new(ChatClient::new(config));
        Ok(Box::new(LlmPolicy::new(client, self.telemetry.clone(), &policy.id)))
    }
}
