//! Chat-completions transport for language-model adversaries, plus a
//! scripted mock endpoint. Prompt text and reply parsing live in
//! `skirmish_core::llm`.

mod client;
mod mock;
mod policy;

pub use client::{message_text, ChatClient, ClientError, Completion, LlmConfig};
pub use mock::{LoggedRequest, MockReply, MockRule, MockScript, MockServer};
pub use policy::{LlmFactory, LlmPolicy, Telemetry, TelemetryRecord};
