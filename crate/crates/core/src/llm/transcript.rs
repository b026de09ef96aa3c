use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{DecodingParams, GatewayMode, LlmError};
use crate::digest::sha256_hex;

/// One request/response pair. The response is stored exactly as received.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub digest: String,
    /// How many identical requests preceded this one in the run.
    pub ordinal: usize,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub response: String,
    pub backend_id: String,
    pub timestamp: u64,
}

/// Key of the `ordinal`-th identical request for `prompt` under `params`.
pub fn request_digest(prompt: &str, params: &DecodingParams, ordinal: usize) -> String {
    sha256_hex(format!("{}\n{}\n{}\n{}", params.temperature, params.max_tokens, ordinal, prompt))
}

/// Append-only JSON-lines transcript, loaded into memory for lookups.
pub struct TranscriptStore {
    mode: GatewayMode,
    path: Option<PathBuf>,
    records: HashMap<String, Exchange>,
    writer: Mutex<Option<File>>,
}

impl TranscriptStore {
    pub fn open(mode: GatewayMode, path: Option<&Path>) -> Result<Self, LlmError> {
        let mut store = Self { mode, path: path.map(Path::to_path_buf), records: HashMap::new(), writer: Mutex::new(None) };
        match (mode, path) {
            (GatewayMode::Live, _) => {}
            (_, None) => return Err(LlmError::Config(format!("{mode:?} mode needs a transcript path"))),
            (GatewayMode::Replay, Some(p)) => store.load(p)?,
            (GatewayMode::Record, Some(p)) => {
                if p.exists() {
                    store.load(p)?;
                }
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent).map_err(|source| LlmError::TranscriptIo { path: p.into(), source })?;
                }
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(p)
                    .map_err(|source| LlmError::TranscriptIo { path: p.into(), source })?;
                *store.writer.get_mut().expect("fresh mutex") = Some(file);
            }
        }
        Ok(store)
    }

    fn load(&mut self, path: &Path) -> Result<(), LlmError> {
        let file = File::open(path).map_err(|source| LlmError::TranscriptIo { path: path.into(), source })?;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| LlmError::TranscriptIo { path: path.into(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let exchange: Exchange = serde_json::from_str(&line).map_err(|e| LlmError::TranscriptMalformed {
                path: path.into(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
            self.records.entry(exchange.digest.clone()).or_insert(exchange);
        }
        Ok(())
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lookup(&self, digest: &str) -> Option<&Exchange> {
        self.records.get(digest)
    }

    /// Appends one record through the single writer. A no-op outside Record mode.
    pub fn append(&self, exchange: &Exchange) -> Result<(), LlmError> {
        let mut guard = self.writer.lock().expect("transcript writer poisoned");
        if let Some(file) = guard.as_mut() {
            let path = self.path.clone().unwrap_or_default();
            let mut line = serde_json::to_string(exchange).expect("exchange serialises");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| LlmError::TranscriptIo { path, source })?;
        }
        Ok(())
    }
}
