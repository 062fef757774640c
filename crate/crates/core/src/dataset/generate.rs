//! Few-shot generation of entailed, contradictory and neutral hypotheses
//! through a chat-completion endpoint.

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{GeneratedItem, NliItem};
use crate::readings::Label;

/// The shipped prompt: system message, ten few-shot turns and a final
/// `Premise: {{premise}}` user turn.
pub const BUILTIN_PROMPT: &str = include_str!("../../assets/generation_prompt.json");

pub const PREMISE_PLACEHOLDER: &str = "{{premise}}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub messages: Vec<ChatMessage>,
}

impl PromptTemplate {
    pub fn builtin() -> PromptTemplate {
        PromptTemplate::from_json(BUILTIN_PROMPT).expect("shipped prompt is valid")
    }

    pub fn from_json(text: &str) -> Result<PromptTemplate, String> {
        let template: PromptTemplate = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match template.messages.last() {
            Some(m) if m.role == "user" && m.content.contains(PREMISE_PLACEHOLDER) => Ok(template),
            _ => Err(format!("last message must be a user turn containing {PREMISE_PLACEHOLDER}")),
        }
    }

    /// Messages with the premise substituted into the final turn.
    pub fn render(&self, premise: &str) -> Vec<ChatMessage> {
        let mut messages = self.messages.clone();
        if let Some(last) = messages.last_mut() {
            last.content = last.content.replace(PREMISE_PLACEHOLDER, premise);
        }
        messages
    }
}

/// `{"model", "messages", "stream": false}`.
pub fn request_body(model: &str, messages: &[ChatMessage]) -> Value {
    json!({ "model": model, "messages": messages, "stream": false })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
}

impl TransportError {
    /// Network errors, 429 and 5xx are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Status { status, .. } => *status == 429 || *status >= 500,
            TransportError::Network(_) => true,
        }
    }
}

/// Sends one request body and returns the raw response body.
pub trait ChatTransport: Sync {
    fn send(&self, body: &Value) -> Result<String, TransportError>;
}

#[cfg(feature = "http")]
pub use http::HttpTransport;

#[cfg(feature = "http")]
mod http {
    use std::time::Duration;

    use serde_json::Value;

    use super::{ChatTransport, TransportError};

    /// POSTs JSON to a fixed URL, with an optional bearer token.
    pub struct HttpTransport {
        endpoint: String,
        api_key: Option<String>,
        agent: ureq::Agent,
    }

    impl HttpTransport {
        pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
            let agent = ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .http_status_as_error(false)
                .build()
                .into();
            HttpTransport {
                endpoint: endpoint.into(),
                api_key,
                agent,
            }
        }
    }

    impl ChatTransport for HttpTransport {
        fn send(&self, body: &Value) -> Result<String, TransportError> {
            let mut request = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
            let mut response = request
                .send(body.to_string())
                .map_err(|e| TransportError::Network(e.to_string()))?;
            let status = response.status().as_u16();
            let text = response
                .body_mut()
                .read_to_string()
                .map_err(|e| TransportError::Network(e.to_string()))?;
            if (200..300).contains(&status) {
                Ok(text)
            } else {
                Err(TransportError::Status { status, body: text })
            }
        }
    }
}

/// Assistant text from an OpenAI-style (`choices[0].message.content`) or
/// Ollama-style (`message.content`) response.
pub fn extract_content(response: &str) -> Option<String> {
    let value: Value = serde_json::from_str(response).ok()?;
    value
        .pointer("/choices/0/message/content")
        .or_else(|| value.pointer("/message/content"))
        .and_then(Value::as_str)
        .map(str::to_owned)
}

/// The hypotheses for E, C and N, taken from the first JSON object in the
/// text that has all three keys as strings.
pub fn parse_generation(content: &str) -> Option<[(Label, String); 3]> {
    for (start, _) in content.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&content[start..]).into_iter::<Value>();
        let Some(Ok(value)) = stream.next() else { continue };
        let field = |l: Label| value.get(l.word()).and_then(Value::as_str).map(|s| s.trim().to_owned());
        if let (Some(e), Some(c), Some(n)) = (field(Label::E), field(Label::C), field(Label::N)) {
            if [&e, &c, &n].iter().all(|s| !s.is_empty()) {
                return Some([(Label::E, e), (Label::C, c), (Label::N, n)]);
            }
        }
    }
    None
}

#[derive(Debug, Clone)]
pub struct GenerationConfig {
    /// Model name sent in the request and recorded on each item.
    pub model: String,
    /// Extra attempts after a retryable transport error.
    pub http_retries: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
    /// Extra requests after a response that does not parse.
    pub reprompts: u32,
    pub concurrency: usize,
}

impl GenerationConfig {
    pub fn new(model: impl Into<String>) -> Self {
        GenerationConfig {
            model: model.into(),
            http_retries: 3,
            backoff: Duration::from_millis(500),
            reprompts: 1,
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationFailure {
    pub source_item_id: String,
    pub premise: String,
    pub requests: u32,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerationOutcome {
    /// In input order, E, C, N per source item.
    pub items: Vec<GeneratedItem>,
    pub failures: Vec<GenerationFailure>,
    /// Source items skipped because they were already completed.
    pub skipped: usize,
}

/// Generates three items per input item, using the item's hypothesis as the
/// new premise. Items whose id is in `completed` are skipped. Failures are
/// recorded and never stop the batch.
pub fn generate_items(
    items: &[NliItem],
    transport: &dyn ChatTransport,
    template: &PromptTemplate,
    config: &GenerationConfig,
    completed: &HashSet<String>,
) -> GenerationOutcome {
    let todo: Vec<&NliItem> = items.iter().filter(|i| !completed.contains(&i.id)).collect();
    let skipped = items.len() - todo.len();
    let results: Vec<Mutex<Option<Vec<GeneratedItem>>>> = todo.iter().map(|_| Mutex::new(None)).collect();
    let failures: Mutex<Vec<(usize, GenerationFailure)>> = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);

    thread::scope(|scope| {
        for _ in 0..config.concurrency.clamp(1, todo.len().max(1)) {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = todo.get(index) else { break };
                match generate_one(item, transport, template, config) {
                    Ok(generated) => *results[index].lock().unwrap() = Some(generated),
                    Err(failure) => failures.lock().unwrap().push((index, failure)),
                }
            });
        }
    });

    let mut failures = failures.into_inner().unwrap();
    failures.sort_by_key(|(i, _)| *i);
    GenerationOutcome {
        items: results
            .into_iter()
            .filter_map(|r| r.into_inner().unwrap())
            .flatten()
            .collect(),
        failures: failures.into_iter().map(|(_, f)| f).collect(),
        skipped,
    }
}

fn generate_one(
    item: &NliItem,
    transport: &dyn ChatTransport,
    template: &PromptTemplate,
    config: &GenerationConfig,
) -> Result<Vec<GeneratedItem>, GenerationFailure> {
    let premise = item.hypothesis.trim();
    let body = request_body(&config.model, &template.render(premise));
    let mut requests = 0;
    let mut last_error = String::new();
    for _ in 0..=config.reprompts {
        let response = match send_with_retries(transport, &body, config, &mut requests) {
            Ok(r) => r,
            Err(e) => {
                last_error = e.to_string();
                break;
            }
        };
        match extract_content(&response).as_deref().and_then(parse_generation) {
            Some(parsed) => {
                return Ok(parsed
                    .into_iter()
                    .map(|(label, hypothesis)| GeneratedItem {
                        id: format!("{}:{}", item.id, label.letter()),
                        premise: premise.to_owned(),
                        hypothesis,
                        label,
                        source_item_id: item.id.clone(),
                        generator: config.model.clone(),
                    })
                    .collect())
            }
            None => last_error = format!("unparseable response: {}", truncate(&response, 200)),
        }
    }
    Err(GenerationFailure {
        source_item_id: item.id.clone(),
        premise: premise.to_owned(),
        requests,
        error: last_error,
    })
}

fn send_with_retries(
    transport: &dyn ChatTransport,
    body: &Value,
    config: &GenerationConfig,
    requests: &mut u32,
) -> Result<String, TransportError> {
    let mut delay = config.backoff;
    let mut attempt = 0;
    loop {
        *requests += 1;
        match transport.send(body) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt < config.http_retries => {
                attempt += 1;
                thread::sleep(delay);
                delay *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Source;

    struct Scripted {
        replies: Mutex<Vec<Result<String, TransportError>>>,
        seen: Mutex<Vec<Value>>,
    }

    impl Scripted {
        fn new(mut replies: Vec<Result<String, TransportError>>) -> Self {
            replies.reverse();
            Scripted {
                replies: Mutex::new(replies),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl ChatTransport for Scripted {
        fn send(&self, body: &Value) -> Result<String, TransportError> {
            self.seen.lock().unwrap().push(body.clone());
            self.replies.lock().unwrap().pop().expect("unexpected request")
        }
    }

    fn openai(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    fn item(id: &str, h: &str) -> NliItem {
        NliItem {
            id: id.into(),
            premise: "A man.".into(),
            hypothesis: h.into(),
            gold_label: Some(Label::E),
            annotator_labels: vec![],
            caption_id: None,
            source: Source::Snli,
        }
    }

    fn config() -> GenerationConfig {
        GenerationConfig {
            backoff: Duration::ZERO,
            concurrency: 1,
            ..GenerationConfig::new("m")
        }
    }

    #[test]
    fn builtin_prompt_shape() {
        let t = PromptTemplate::builtin();
        assert_eq!(t.messages.len(), 22);
        assert_eq!(t.messages[0].role, "system");
        assert!(t.messages[0].content.contains("format your response as a JSON object"));
        let i = t
            .messages
            .iter()
            .position(|m| m.content == "Premise: A brown dog is running across the snowy ground.")
            .unwrap();
        assert_eq!(t.messages[i + 1].role, "assistant");
        let shot = parse_generation(&t.messages[i + 1].content).unwrap();
        assert_eq!(shot[0], (Label::E, "A dog is outside.".to_owned()));
        let rendered = t.render("P");
        assert_eq!(rendered.last().unwrap().content, "Premise: P");
        assert_eq!(rendered[..21], t.messages[..21]);
    }

    #[test]
    fn parses_embedded_object() {
        let text = "Here you go:\n```json\n{\"contradiction\": \"X\", \"entailment\": \"Y\", \"neutral\": \"Z\"}\n```";
        let parsed = parse_generation(text).unwrap();
        assert_eq!(parsed.map(|(l, s)| format!("{l}{s}")), ["EY", "CX", "NZ"]);
        assert!(parse_generation("sure, here you go…").is_none());
        assert!(parse_generation("{\"entailment\": \"Y\"}").is_none());
        assert_eq!(extract_content(r#"{"message":{"content":"hi"}}"#).as_deref(), Some("hi"));
        assert_eq!(extract_content("nope"), None);
    }

    #[test]
    fn retries_then_records_failures() {
        let good = openai(r#"{"contradiction":"X","entailment":"Y","neutral":"Z"}"#);
        let transport = Scripted::new(vec![
            Err(TransportError::Status { status: 503, body: String::new() }),
            Ok(good),
            Ok(openai("sure, here you go…")),
            Ok(openai("still no")),
            Err(TransportError::Status { status: 401, body: "denied".into() }),
        ]);
        let items = [item("1", " P "), item("2", "Q"), item("3", "R"), item("4", "S")];
        let done = HashSet::from(["4".to_owned()]);
        let out = generate_items(&items, &transport, &PromptTemplate::builtin(), &config(), &done);
        assert_eq!(out.skipped, 1);
        assert_eq!(out.items.len(), 3);
        assert!(out.items.iter().all(|g| g.premise == "P" && g.source_item_id == "1"));
        assert_eq!(out.items[1].label, Label::C);
        assert_eq!(out.items[1].hypothesis, "X");
        assert_eq!(out.failures.len(), 2);
        assert_eq!(out.failures[0].source_item_id, "2");
        assert_eq!(out.failures[0].requests, 2);
        assert_eq!(out.failures[1].requests, 1);
        assert!(out.failures[1].error.contains("401"));
        let seen = transport.seen.lock().unwrap();
        assert_eq!(seen.len(), 5);
        assert_eq!(seen[0]["stream"], json!(false));
        assert_eq!(seen[0]["model"], json!("m"));
    }
}
