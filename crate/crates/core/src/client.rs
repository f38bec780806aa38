//! Completion endpoints: a remote HTTP client and a seeded mock participant.
//!
//! Sessions talk to a [`Respondent`]. The remote client forwards the prompt to
//! an OpenAI-style completions (or chat) endpoint and ignores the trial
//! context; the mock ignores the prompt and answers from the trial context.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::seeding;
use crate::stimuli::{ExposureCondition, Phase, SyntacticRole, ThematicRole, TrialSlot, VerbClass};

pub const DEFAULT_MAX_TOKENS: u32 = 8;
pub const DEFAULT_STOP: &str = "\n";
pub const DEFAULT_API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("authentication failed (HTTP {status}): {message}")]
    Auth { status: u16, message: String },
    #[error("network failure after {attempts} attempts: {message}")]
    Network { attempts: u32, message: String },
    #[error("rate limit still exceeded after {attempts} attempts")]
    RateLimitExhausted { attempts: u32 },
    #[error("request rejected (HTTP {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("malformed response: {0}")]
    Protocol(String),
    #[error("client configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub model_name: String,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>, temperature: f64, model_name: impl Into<String>) -> Self {
        CompletionRequest {
            prompt: prompt.into(),
            temperature,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop_sequences: vec![DEFAULT_STOP.to_string()],
            model_name: model_name.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_tokens < 1 {
            return Err(ClientError::InvalidRequest("max_tokens must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(ClientError::InvalidRequest("temperature must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Content,
    Reference,
}

/// What the session is asking, alongside the prompt text.
#[derive(Debug, Clone, Copy)]
pub struct QueryContext<'a> {
    pub participant_id: &'a str,
    pub exposure_condition: ExposureCondition,
    pub slot: &'a TrialSlot,
    pub kind: QuestionKind,
}

/// Anything that can answer a session's questions.
pub trait Respondent: Send + Sync {
    fn respond(&self, request: &CompletionRequest, context: &QueryContext<'_>) -> Result<String, ClientError>;
}

// ---------------------------------------------------------------------------
// Remote endpoints

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    /// `POST {base}/completions` with a `prompt` field; reads `choices[0].text`.
    #[default]
    Completions,
    /// `POST {base}/chat/completions` with the whole prompt as one user message;
    /// reads `choices[0].message.content`.
    Chat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub provider: ProviderKind,
    pub api_key_env: String,
    pub requests_per_minute: f64,
    pub burst: u32,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
    pub timeout_secs: u64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    /// Prompts longer than this many characters abort the session.
    pub max_prompt_chars: Option<usize>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "text-davinci-003".into(),
            provider: ProviderKind::Completions,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            requests_per_minute: 60.0,
            burst: 1,
            max_retries: 5,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
            timeout_secs: 60,
            max_tokens: DEFAULT_MAX_TOKENS,
            stop_sequences: vec![DEFAULT_STOP.into()],
            max_prompt_chars: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// One POST of a JSON body. Errors are connection-level failures only;
/// HTTP error statuses come back as responses.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, api_key: &str, body: &Value) -> Result<HttpResponse, String>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(&self, url: &str, api_key: &str, body: &Value) -> Result<HttpResponse, String> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(api_key)
            .json(body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Token bucket shared by every session using one client.
pub struct RateLimiter {
    per_second: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(requests_per_minute: f64, burst: u32) -> Self {
        let capacity = f64::from(burst.max(1));
        RateLimiter {
            per_second: requests_per_minute / 60.0,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Block until a request token is available.
    pub fn acquire(&self) {
        if !(self.per_second > 0.0) || !self.per_second.is_finite() {
            return;
        }
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter poisoned");
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.per_second;
                state.0 = (state.0 + refill).min(self.capacity);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.per_second
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

pub struct RemoteClient {
    config: EndpointConfig,
    api_key: String,
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
    retries: AtomicU64,
    requests: AtomicU64,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("config", &self.config).finish_non_exhaustive()
    }
}

enum Attempt {
    Done(String),
    Fatal(ClientError),
    RateLimited,
    Transient(String),
}

impl RemoteClient {
    pub fn new(config: EndpointConfig, api_key: impl Into<String>, transport: Box<dyn Transport>) -> Self {
        let limiter = RateLimiter::new(config.requests_per_minute, config.burst);
        RemoteClient {
            config,
            api_key: api_key.into(),
            transport,
            limiter,
            retries: AtomicU64::new(0),
            requests: AtomicU64::new(0),
        }
    }

    /// Build a client reading the API key from the configured environment variable.
    pub fn from_env(config: EndpointConfig) -> Result<Self, ClientError> {
        let key = std::env::var(&config.api_key_env).map_err(|_| {
            ClientError::Config(format!("environment variable {} is not set", config.api_key_env))
        })?;
        if key.trim().is_empty() {
            return Err(ClientError::Config(format!("{} is empty", config.api_key_env)));
        }
        let transport = ReqwestTransport::new(Duration::from_secs(config.timeout_secs))?;
        Ok(Self::new(config, key, Box::new(transport)))
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    pub fn requests_sent(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn url(&self) -> String {
        let base = self.config.base_url.trim_end_matches('/');
        match self.config.provider {
            ProviderKind::Completions => format!("{base}/completions"),
            ProviderKind::Chat => format!("{base}/chat/completions"),
        }
    }

    pub fn request_body(&self, request: &CompletionRequest) -> Value {
        match self.config.provider {
            ProviderKind::Completions => json!({
                "model": request.model_name,
                "prompt": request.prompt,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "stop": request.stop_sequences,
            }),
            ProviderKind::Chat => json!({
                "model": request.model_name,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "stop": request.stop_sequences,
            }),
        }
    }

    fn extract_text(&self, body: &str) -> Result<String, ClientError> {
        let value: Value =
            serde_json::from_str(body).map_err(|e| ClientError::Protocol(e.to_string()))?;
        let choice = value
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| ClientError::Protocol("missing choices[0]".into()))?;
        let text = match self.config.provider {
            ProviderKind::Completions => choice.get("text"),
            ProviderKind::Chat => choice.get("message").and_then(|m| m.get("content")),
        };
        text.and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ClientError::Protocol("missing completion text".into()))
    }

    fn attempt(&self, url: &str, body: &Value) -> Attempt {
        self.limiter.acquire();
        self.requests.fetch_add(1, Ordering::Relaxed);
        match self.transport.post_json(url, &self.api_key, body) {
            Err(e) => Attempt::Transient(e),
            Ok(resp) => match resp.status {
                200..=299 => match self.extract_text(&resp.body) {
                    Ok(text) => Attempt::Done(text),
                    Err(e) => Attempt::Fatal(e),
                },
                401 | 403 => Attempt::Fatal(ClientError::Auth {
                    status: resp.status,
                    message: resp.body,
                }),
                429 => Attempt::RateLimited,
                408 | 500..=599 => Attempt::Transient(format!("HTTP {}: {}", resp.status, resp.body)),
                status => Attempt::Fatal(ClientError::Rejected {
                    status,
                    message: resp.body,
                }),
            },
        }
    }

    fn backoff(&self, retry: u32) -> Duration {
        let ms = self
            .config
            .backoff_base_ms
            .saturating_mul(1u64 << retry.min(20))
            .min(self.config.backoff_max_ms);
        Duration::from_millis(ms)
    }

    /// Send one completion request, retrying transient failures and rate
    /// limiting with exponential backoff. Authentication failures are never retried.
    pub fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        request.validate()?;
        if let Some(limit) = self.config.max_prompt_chars {
            if request.prompt.chars().count() > limit {
                return Err(ClientError::InvalidRequest(format!(
                    "prompt exceeds the {limit}-character context limit"
                )));
            }
        }
        let url = self.url();
        let body = self.request_body(request);
        let attempts = self.config.max_retries + 1;
        let mut last_rate_limited = false;
        let mut last_message = String::new();
        for attempt in 0..attempts {
            match self.attempt(&url, &body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::RateLimited => {
                    last_rate_limited = true;
                    log::warn!("rate limited on attempt {}", attempt + 1);
                }
                Attempt::Transient(msg) => {
                    last_rate_limited = false;
                    log::warn!("transient failure on attempt {}: {msg}", attempt + 1);
                    last_message = msg;
                }
            }
            if attempt + 1 < attempts {
                self.retries.fetch_add(1, Ordering::Relaxed);
                std::thread::sleep(self.backoff(attempt));
            }
        }
        if last_rate_limited {
            Err(ClientError::RateLimitExhausted { attempts })
        } else {
            Err(ClientError::Network {
                attempts,
                message: last_message,
            })
        }
    }

    /// One minimal request to surface bad credentials before any session starts.
    pub fn check_credentials(&self) -> Result<(), ClientError> {
        let mut probe = CompletionRequest::new("Say yes.", 0.0, self.config.model.clone());
        probe.max_tokens = 1;
        match self.attempt(&self.url(), &self.request_body(&probe)) {
            Attempt::Fatal(e @ ClientError::Auth { .. }) => Err(e),
            _ => Ok(()),
        }
    }
}

impl Respondent for RemoteClient {
    fn respond(&self, request: &CompletionRequest, _context: &QueryContext<'_>) -> Result<String, ClientError> {
        self.complete(request)
    }
}

// ---------------------------------------------------------------------------
// Mock participant

/// Behaviour of the mock participant.
///
/// Ambiguous reference questions are answered in two stages. With probability
/// `|2 * yes_rate_ambiguous - 1|` the answer is forced to the favoured verdict
/// (yes when the rate is above one half). Otherwise a referent is sampled: on
/// gs/sg items the goal with probability `goal_bias`, else the subject with
/// probability `subject_bias_by_exposure[condition]` (one half when absent);
/// the answer is yes iff the question names that referent. With foci split
/// evenly the referent stage answers yes half the time, so the marginal yes
/// rate equals `yes_rate_ambiguous`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockBias {
    pub yes_rate_ambiguous: f64,
    pub content_accuracy: f64,
    pub subject_bias_by_exposure: BTreeMap<ExposureCondition, f64>,
    pub goal_bias: f64,
    pub seed: u64,
}

impl Default for MockBias {
    fn default() -> Self {
        MockBias {
            yes_rate_ambiguous: 0.5,
            content_accuracy: 1.0,
            subject_bias_by_exposure: BTreeMap::new(),
            goal_bias: 0.0,
            seed: 0,
        }
    }
}

impl MockBias {
    pub fn validate(&self) -> Result<(), ClientError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let all = [self.yes_rate_ambiguous, self.content_accuracy, self.goal_bias];
        if !all.iter().copied().all(unit) || !self.subject_bias_by_exposure.values().copied().all(unit) {
            return Err(ClientError::Config("mock probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn subject_bias(&self, condition: ExposureCondition) -> f64 {
        self.subject_bias_by_exposure.get(&condition).copied().unwrap_or(0.5)
    }
}

fn verdict(yes: bool) -> String {
    if yes { "yes" } else { "no" }.to_string()
}

/// Answer one question as the mock participant. Pure in its arguments: the
/// random stream is keyed by (seed, participant, slot position, question kind).
pub fn mock_respond(
    participant_id: &str,
    exposure_condition: ExposureCondition,
    kind: QuestionKind,
    slot: &TrialSlot,
    bias: &MockBias,
) -> String {
    let label = format!("{participant_id}/{}/{kind:?}", slot.position);
    let mut rng = seeding::stream(bias.seed, &label);
    let item = &slot.item;
    match kind {
        QuestionKind::Content => {
            let correct = rng.random::<f64>() < bias.content_accuracy;
            let gold_yes = item.content_gold == crate::stimuli::YesNo::Yes;
            verdict(gold_yes == correct)
        }
        QuestionKind::Reference => {
            let named = slot.ref_focus.resolve(item.verb_class);
            if slot.phase == Phase::Exposure || !item.ambiguous {
                if let Some(truth) = item.truthful_answer(slot.ref_focus) {
                    return verdict(truth == crate::stimuli::YesNo::Yes);
                }
            }
            let forced = (2.0 * bias.yes_rate_ambiguous - 1.0).abs();
            if rng.random::<f64>() < forced {
                return verdict(bias.yes_rate_ambiguous > 0.5);
            }
            let goal_first = item.verb_class != VerbClass::Joint && rng.random::<f64>() < bias.goal_bias;
            let referent = if goal_first {
                item.verb_class.role_of(ThematicRole::Goal).expect("gs/sg item")
            } else if rng.random::<f64>() < bias.subject_bias(exposure_condition) {
                SyntacticRole::Subject
            } else {
                SyntacticRole::Nonsubject
            };
            verdict(named == Some(referent))
        }
    }
}

#[derive(Debug, Clone)]
pub struct MockParticipant {
    pub bias: MockBias,
}

impl MockParticipant {
    pub fn new(bias: MockBias) -> Result<Self, ClientError> {
        bias.validate()?;
        Ok(MockParticipant { bias })
    }
}

impl Respondent for MockParticipant {
    fn respond(&self, request: &CompletionRequest, context: &QueryContext<'_>) -> Result<String, ClientError> {
        request.validate()?;
        Ok(mock_respond(
            context.participant_id,
            context.exposure_condition,
            context.kind,
            context.slot,
            &self.bias,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimuli::{render_item, Continuation, Gender, QuestionFocus, VerbEntry, YesNo};
    use std::sync::Arc;

    /// Replays a fixed list of responses, one per POST.
    struct Scripted {
        responses: Mutex<Vec<Result<HttpResponse, String>>>,
        calls: Arc<AtomicU64>,
    }

    impl Scripted {
        fn new(mut script: Vec<Result<HttpResponse, String>>) -> (Self, Arc<AtomicU64>) {
            script.reverse();
            let calls = Arc::new(AtomicU64::new(0));
            (
                Scripted {
                    responses: Mutex::new(script),
                    calls: calls.clone(),
                },
                calls,
            )
        }
    }

    impl Transport for Scripted {
        fn post_json(&self, _url: &str, _key: &str, _body: &Value) -> Result<HttpResponse, String> {
            self.calls.fetch_add(1, Ordering::Relaxed);
            self.responses.lock().unwrap().pop().unwrap_or(Err("script exhausted".into()))
        }
    }

    fn ok(text: &str) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: 200,
            body: json!({"choices": [{"text": text}]}).to_string(),
        })
    }

    fn status(code: u16) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: code,
            body: "{}".into(),
        })
    }

    fn client(script: Vec<Result<HttpResponse, String>>, max_retries: u32) -> (RemoteClient, Arc<AtomicU64>) {
        let cfg = EndpointConfig {
            max_retries,
            backoff_base_ms: 0,
            requests_per_minute: 0.0,
            ..Default::default()
        };
        let (t, calls) = Scripted::new(script);
        (RemoteClient::new(cfg, "k", Box::new(t)), calls)
    }

    fn req() -> CompletionRequest {
        CompletionRequest::new("Q: Did Ana smile?\nA:", 0.5, "m")
    }

    #[test]
    fn transient_failure_is_retried_once() {
        let (c, calls) = client(vec![status(503), ok(" Yes")], 3);
        let r = req();
        let before = r.clone();
        assert_eq!(c.complete(&r).unwrap(), " Yes");
        assert_eq!(c.retries(), 1);
        assert_eq!(calls.load(Ordering::Relaxed), 2);
        assert_eq!(r, before);
    }

    #[test]
    fn auth_failure_is_not_retried() {
        let (c, calls) = client(vec![status(401), ok("Yes")], 3);
        assert!(matches!(c.complete(&req()), Err(ClientError::Auth { status: 401, .. })));
        assert_eq!(c.retries(), 0);
        assert_eq!(calls.load(Ordering::Relaxed), 1);
    }

    #[test]
    fn rate_limit_exhaustion() {
        let (c, calls) = client(vec![status(429), status(429), status(429)], 2);
        assert_eq!(c.complete(&req()), Err(ClientError::RateLimitExhausted { attempts: 3 }));
        assert_eq!(calls.load(Ordering::Relaxed), 3);
    }

    #[test]
    fn network_exhaustion_is_distinct() {
        let (c, _) = client(vec![Err("reset".into()), Err("reset".into())], 1);
        assert!(matches!(c.complete(&req()), Err(ClientError::Network { attempts: 2, .. })));
    }

    #[test]
    fn chat_body_wraps_prompt() {
        let (mut c, _) = client(vec![], 0);
        c.config.provider = ProviderKind::Chat;
        let body = c.request_body(&req());
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "Q: Did Ana smile?\nA:");
        assert_eq!(body["stop"][0], "\n");
        assert_eq!(body["max_tokens"], 8);
        let text = c.extract_text(r#"{"choices":[{"message":{"content":"No."}}]}"#).unwrap();
        assert_eq!(text, "No.");
    }

    #[test]
    fn invalid_requests_rejected() {
        let mut r = req();
        r.max_tokens = 0;
        assert!(r.validate().is_err());
        r.max_tokens = 1;
        r.temperature = -0.1;
        assert!(r.validate().is_err());
    }

    #[test]
    fn limiter_paces_requests() {
        let limiter = RateLimiter::new(600.0, 1);
        let start = Instant::now();
        for _ in 0..3 {
            limiter.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(190));
    }

    fn ambiguous_slot(focus: QuestionFocus, class: VerbClass) -> TrialSlot {
        let verb = VerbEntry {
            class,
            past: "received".into(),
            base: "receive".into(),
            object: if class == VerbClass::Joint { String::new() } else { "a letter".into() },
            preposition: "from".into(),
        };
        let cont = Continuation {
            past: "smiled".into(),
            base: "smile".into(),
        };
        let item = render_item(
            "x",
            &verb,
            &cont,
            ("Ana", Gender::Female),
            ("Liz", Gender::Female),
            Gender::Female,
            YesNo::Yes,
            "Matt",
        );
        TrialSlot {
            position: 3,
            item,
            phase: Phase::Critical,
            ref_focus: focus,
        }
    }

    #[test]
    fn certain_subject_bias_answers_yes_to_subject_focus() {
        let bias = MockBias {
            subject_bias_by_exposure: BTreeMap::from([(ExposureCondition::Subject, 1.0)]),
            ..Default::default()
        };
        for seed in 0..20 {
            let b = MockBias { seed, ..bias.clone() };
            let slot = ambiguous_slot(QuestionFocus::Subject, VerbClass::Joint);
            let slot_n = ambiguous_slot(QuestionFocus::Nonsubject, VerbClass::Joint);
            assert_eq!(mock_respond("p", ExposureCondition::Subject, QuestionKind::Reference, &slot, &b), "yes");
            assert_eq!(mock_respond("p", ExposureCondition::Subject, QuestionKind::Reference, &slot_n, &b), "no");
        }
    }

    #[test]
    fn goal_bias_overrides_on_transfer_verbs() {
        let bias = MockBias {
            goal_bias: 1.0,
            subject_bias_by_exposure: BTreeMap::from([(ExposureCondition::Goal, 0.0)]),
            ..Default::default()
        };
        let slot = ambiguous_slot(QuestionFocus::Goal, VerbClass::Gs);
        assert_eq!(mock_respond("p", ExposureCondition::Goal, QuestionKind::Reference, &slot, &bias), "yes");
        let slot = ambiguous_slot(QuestionFocus::Subject, VerbClass::Gs);
        assert_eq!(mock_respond("p", ExposureCondition::Goal, QuestionKind::Reference, &slot, &bias), "yes");
    }

    #[test]
    fn mock_is_deterministic() {
        let bias = MockBias { seed: 4, ..Default::default() };
        let slot = ambiguous_slot(QuestionFocus::Subject, VerbClass::Joint);
        let a = mock_respond("p", ExposureCondition::Subject, QuestionKind::Reference, &slot, &bias);
        let b = mock_respond("p", ExposureCondition::Subject, QuestionKind::Reference, &slot, &bias);
        assert_eq!(a, b);
    }

    #[test]
    fn mock_rejects_bad_probabilities() {
        let bias = MockBias { content_accuracy: 1.2, ..Default::default() };
        assert!(MockParticipant::new(bias).is_err());
    }
}
