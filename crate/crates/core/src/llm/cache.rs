//! Persistent generator-response cache and the backends built on it.
//!
//! The cache is a content-addressed map from (backend id, prompt, k) to a
//! recorded [`GeneratorOutput`], persisted as append-only JSON lines. It
//! serves two purposes: a [`CachingBackend`] wraps a live generator so
//! repeated prompts are answered locally, and a [`ReplayBackend`] runs an
//! experiment entirely from recorded responses.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::llm::backend::{GeneratorBackend, GeneratorOutput, OutputEntry};
use crate::{Error, Result};

/// Content-addressed key for one (backend id, prompt, k) request.
///
/// Parts are length-prefixed before hashing so no two distinct requests
/// can collide by concatenation.
pub fn cache_key(backend_id: &str, prompt: &str, k: usize) -> String {
    let mut hasher = Sha256::new();
    for part in [backend_id.as_bytes(), prompt.as_bytes()] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.update((k as u64).to_le_bytes());
    let digest = hasher.finalize();
    let mut key = String::with_capacity(2 * digest.len());
    for byte in digest {
        write!(key, "{byte:02x}").expect("writing to a string cannot fail");
    }
    key
}

/// One persisted cache line. The prompt and k are stored alongside the
/// key so the file stays inspectable and re-keyable.
#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    key_hash: String,
    prompt: String,
    k: usize,
    entries: Vec<OutputEntry>,
}

/// Append-only response store safe for concurrent readers; writes are
/// serialized through a lock.
pub struct ResponseCache {
    path: PathBuf,
    map: Mutex<HashMap<String, GeneratorOutput>>,
    writer: Mutex<File>,
}

impl ResponseCache {
    /// Opens a cache file, creating it if missing. Lines that fail to
    /// parse or validate are logged and treated as misses rather than
    /// aborting the run.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let shown = path.display().to_string();

        let mut map = HashMap::new();
        match File::open(&path) {
            Ok(file) => {
                for (number, line) in BufReader::new(file).lines().enumerate() {
                    let line = line.map_err(|e| Error::io(&shown, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<CacheLine>(&line)
                        .map_err(Error::from)
                        .and_then(|parsed| Ok((parsed.key_hash, GeneratorOutput::new(parsed.entries)?)))
                    {
                        Ok((key, output)) => {
                            map.insert(key, output);
                        }
                        Err(e) => log::warn!(
                            "skipping corrupt cache line {} in {shown}: {e}",
                            number + 1
                        ),
                    }
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(Error::io(&shown, e)),
        }

        let writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&shown, e))?;
        Ok(Self { path, map: Mutex::new(map), writer: Mutex::new(writer) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of recorded responses.
    pub fn len(&self) -> usize {
        self.map.lock().expect("cache map lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the recorded output for a key, if any.
    pub fn lookup(&self, key: &str) -> Option<GeneratorOutput> {
        self.map.lock().expect("cache map lock").get(key).cloned()
    }

    /// Records one response: appended to the file, then published to the
    /// in-memory map.
    pub fn store(
        &self,
        key: &str,
        prompt: &str,
        k: usize,
        output: &GeneratorOutput,
    ) -> Result<()> {
        let line = serde_json::to_string(&CacheLine {
            key_hash: key.to_string(),
            prompt: prompt.to_string(),
            k,
            entries: output.entries().to_vec(),
        })?;
        {
            let mut writer = self.writer.lock().expect("cache writer lock");
            writeln!(writer, "{line}")
                .and_then(|()| writer.flush())
                .map_err(|e| Error::io(self.path.display().to_string(), e))?;
        }
        self.map
            .lock()
            .expect("cache map lock")
            .insert(key.to_string(), output.clone());
        Ok(())
    }
}

/// Wraps a live backend with read-through caching: hits are answered from
/// the cache, misses are forwarded and recorded.
pub struct CachingBackend<B> {
    inner: B,
    cache: Arc<ResponseCache>,
}

impl<B: GeneratorBackend> CachingBackend<B> {
    pub fn new(inner: B, cache: Arc<ResponseCache>) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }
}

impl<B: GeneratorBackend> GeneratorBackend for CachingBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput> {
        let key = cache_key(self.inner.id(), prompt, k);
        if let Some(hit) = self.cache.lookup(&key) {
            return Ok(hit);
        }
        let output = self.inner.generate(prompt, k)?;
        self.cache.store(&key, prompt, k, &output)?;
        Ok(output)
    }
}

/// Serves recorded responses only; a prompt absent from the cache is a
/// backend error. `recorded_id` must be the id of the backend that
/// produced the recording, since it is part of every key.
pub struct ReplayBackend {
    cache: Arc<ResponseCache>,
    recorded_id: String,
}

impl ReplayBackend {
    pub fn new(cache: Arc<ResponseCache>, recorded_id: impl Into<String>) -> Self {
        Self { cache, recorded_id: recorded_id.into() }
    }
}

impl GeneratorBackend for ReplayBackend {
    fn id(&self) -> &str {
        &self.recorded_id
    }

    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput> {
        let key = cache_key(&self.recorded_id, prompt, k);
        self.cache.lookup(&key).ok_or_else(|| {
            Error::Backend(format!(
                "replay cache {} has no entry for key {key}",
                self.cache.path().display()
            ))
        })
    }
}
