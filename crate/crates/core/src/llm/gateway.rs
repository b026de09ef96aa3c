use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::transcript::{request_digest, Exchange, TranscriptStore};
use super::{BackendError, CompletionBackend, LlmError};
use crate::digest::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self { temperature: 0.2, max_tokens: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

impl std::str::FromStr for GatewayMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            other => Err(format!("unknown gateway mode {other:?} (expected live, record or replay)")),
        }
    }
}

struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> LimiterGuard<'_> {
        let mut free = self.free.lock().expect("limiter poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("limiter poisoned");
        }
        *free -= 1;
        LimiterGuard(self)
    }
}

struct LimiterGuard<'a>(&'a Limiter);

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// Single point through which every completion request passes.
///
/// Identical requests are told apart by an ordinal (the n-th time this exact
/// prompt was asked for in the run), so repeated sampling replays the same
/// sequence of responses it recorded.
pub struct Gateway {
    mode: GatewayMode,
    backend: Option<Arc<dyn CompletionBackend>>,
    store: TranscriptStore,
    pub params: DecodingParams,
    cap: Option<usize>,
    calls: AtomicUsize,
    backend_calls: AtomicUsize,
    budget_hit: AtomicBool,
    ordinals: Mutex<HashMap<String, usize>>,
    limiter: Limiter,
}

impl Gateway {
    pub fn new(
        mode: GatewayMode,
        backend: Option<Arc<dyn CompletionBackend>>,
        transcript: Option<&Path>,
    ) -> Result<Self, LlmError> {
        if mode != GatewayMode::Replay && backend.is_none() {
            return Err(LlmError::Config(format!("{mode:?} mode needs a completion backend")));
        }
        let store = TranscriptStore::open(mode, transcript)?;
        Ok(Self {
            mode,
            backend: if mode == GatewayMode::Replay { None } else { backend },
            store,
            params: DecodingParams::default(),
            cap: None,
            calls: AtomicUsize::new(0),
            backend_calls: AtomicUsize::new(0),
            budget_hit: AtomicBool::new(false),
            ordinals: Mutex::new(HashMap::new()),
            limiter: Limiter::new(4),
        })
    }

    pub fn replay(transcript: &Path) -> Result<Self, LlmError> {
        Self::new(GatewayMode::Replay, None, Some(transcript))
    }

    pub fn with_cap(mut self, cap: Option<usize>) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_in_flight_limit(mut self, n: usize) -> Self {
        self.limiter = Limiter::new(n);
        self
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    /// Completion requests made so far (replayed ones included).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Requests that actually reached a backend.
    pub fn backend_calls(&self) -> usize {
        self.backend_calls.load(Ordering::SeqCst)
    }

    pub fn budget_exhausted(&self) -> bool {
        self.budget_hit.load(Ordering::SeqCst)
    }

    fn reserve(&self) -> Result<(), LlmError> {
        let prev = self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(cap) = self.cap {
            if prev >= cap {
                self.calls.fetch_sub(1, Ordering::SeqCst);
                self.budget_hit.store(true, Ordering::SeqCst);
                return Err(LlmError::BudgetExceeded { cap });
            }
        }
        Ok(())
    }

    fn next_ordinal(&self, prompt: &str, params: &DecodingParams) -> usize {
        let key = sha256_hex(format!("{}\n{}\n{}", params.temperature, params.max_tokens, prompt));
        let mut ordinals = self.ordinals.lock().expect("ordinal table poisoned");
        let slot = ordinals.entry(key).or_insert(0);
        let ordinal = *slot;
        *slot += 1;
        ordinal
    }

    /// Completion with the gateway's default decoding parameters.
    pub fn ask(&self, prompt: &str) -> Result<String, LlmError> {
        let params = self.params;
        self.complete(prompt, &params)
    }

    pub fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String, LlmError> {
        self.reserve()?;
        let ordinal = self.next_ordinal(prompt, params);
        let digest = request_digest(prompt, params, ordinal);

        if self.mode == GatewayMode::Replay {
            return self
                .store
                .lookup(&digest)
                .map(|e| e.response.clone())
                .ok_or(LlmError::ReplayMiss { digest });
        }

        let backend = self.backend.as_ref().expect("non-replay gateway has a backend");
        let response = {
            let _slot = self.limiter.acquire();
            self.backend_calls.fetch_add(1, Ordering::SeqCst);
            match backend.complete(prompt, params) {
                Err(BackendError::Transport(first)) => {
                    // one retry, charged against the budget like any request
                    self.reserve()?;
                    self.backend_calls.fetch_add(1, Ordering::SeqCst);
                    backend
                        .complete(prompt, params)
                        .map_err(|e| LlmError::BackendUnavailable(format!("{e} (after retry; first: {first})")))?
                }
                Err(e) => return Err(LlmError::BackendUnavailable(e.to_string())),
                Ok(text) => text,
            }
        };

        if self.mode == GatewayMode::Record {
            let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            self.store.append(&Exchange {
                digest,
                ordinal,
                prompt: prompt.to_string(),
                temperature: params.temperature,
                max_tokens: params.max_tokens,
                response: response.clone(),
                backend_id: backend.id().to_string(),
                timestamp,
            })?;
        }
        Ok(response)
    }
}
