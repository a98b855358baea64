//! Deterministic record/replay fixtures.
//!
//! A fixture is JSON-lines, one record per request key (the SHA-256 of the
//! canonicalized request). Replaying answers queries purely from the
//! fixture and fails loudly on misses, so experiments run byte-identically
//! offline.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::client::{Backend, Request, Response};
use crate::error::{BackendError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub key: String,
    pub request: Request,
    pub response: Response,
}

/// Answers requests from a fixture file; misses name the request hash.
pub struct ReplayBackend {
    entries: HashMap<String, Response>,
}

impl ReplayBackend {
    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Result<Self> {
        let mut entries = HashMap::new();
        for record in records {
            if record.request.key() != record.key {
                return Err(BackendError::CorruptFixtureEntry { key: record.key });
            }
            entries.insert(record.key, record.response);
        }
        Ok(Self { entries })
    }

    pub fn from_reader(reader: impl Read) -> Result<Self> {
        let mut records = Vec::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str::<FixtureRecord>(&line)?);
        }
        Self::from_records(records)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn execute(&self, request: &Request) -> Result<Response> {
        let key = request.key();
        self.entries
            .get(&key)
            .cloned()
            .ok_or(BackendError::MissingFixtureEntry { key })
    }
}

/// Wraps a live backend, executing each distinct request once and caching
/// the result. The accumulated records serialize to a replay fixture.
pub struct RecordingBackend<B> {
    inner: B,
    records: Mutex<BTreeMap<String, FixtureRecord>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            records: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.records.lock().expect("recorder poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// JSON-lines fixture, sorted by request key for stable bytes.
    pub fn write_fixture(&self, mut writer: impl Write) -> Result<()> {
        let records = self.records.lock().expect("recorder poisoned");
        for record in records.values() {
            serde_json::to_writer(&mut writer, record)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn into_records(self) -> Vec<FixtureRecord> {
        self.records
            .into_inner()
            .expect("recorder poisoned")
            .into_values()
            .collect()
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn execute(&self, request: &Request) -> Result<Response> {
        let key = request.key();
        if let Some(record) = self
            .records
            .lock()
            .expect("recorder poisoned")
            .get(&key)
        {
            return Ok(record.response.clone());
        }
        let response = self.inner.execute(request)?;
        self.records
            .lock()
            .expect("recorder poisoned")
            .entry(key.clone())
            .or_insert(FixtureRecord {
                key,
                request: request.clone(),
                response: response.clone(),
            });
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct CannedBackend;

    impl Backend for CannedBackend {
        fn execute(&self, request: &Request) -> Result<Response> {
            match request {
                Request::NextToken { prompt, .. } => Ok(Response::NextToken {
                    top_logprobs: vec![(format!("{}!", prompt.len()), -0.5)],
                }),
                Request::Score { .. } => Ok(Response::Score {
                    tokens: vec![("x".into(), -1.0)],
                }),
                Request::Embed { texts, .. } => Ok(Response::Embed {
                    vectors: texts.iter().map(|_| vec![1.0, 0.0]).collect(),
                }),
            }
        }
    }

    fn request(prompt: &str) -> Request {
        Request::NextToken {
            model: "m".into(),
            prompt: prompt.into(),
            top_k: 5,
        }
    }

    #[test]
    fn record_then_replay_is_identical() {
        let recorder = RecordingBackend::new(CannedBackend);
        let first = recorder.execute(&request("hello")).unwrap();
        let second = recorder.execute(&request("hello")).unwrap();
        assert_eq!(first, second);
        assert_eq!(recorder.len(), 1); // executed once, cached after

        let mut fixture = Vec::new();
        recorder.write_fixture(&mut fixture).unwrap();
        let replay = ReplayBackend::from_reader(fixture.as_slice()).unwrap();
        assert_eq!(replay.execute(&request("hello")).unwrap(), first);
    }

    #[test]
    fn fixture_round_trip_is_byte_identical() {
        let recorder = RecordingBackend::new(CannedBackend);
        recorder.execute(&request("a")).unwrap();
        recorder.execute(&request("b")).unwrap();
        let mut first = Vec::new();
        recorder.write_fixture(&mut first).unwrap();

        let replayed = ReplayBackend::from_reader(first.as_slice()).unwrap();
        let re_recorder = RecordingBackend::new(replayed);
        re_recorder.execute(&request("b")).unwrap();
        re_recorder.execute(&request("a")).unwrap();
        let mut second = Vec::new();
        re_recorder.write_fixture(&mut second).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn replay_miss_names_the_hash() {
        let replay = ReplayBackend::from_records([]).unwrap();
        let req = request("unknown");
        match replay.execute(&req) {
            Err(BackendError::MissingFixtureEntry { key }) => assert_eq!(key, req.key()),
            other => panic!("expected a fixture miss, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_fixture_detected() {
        let record = FixtureRecord {
            key: "0".repeat(64),
            request: request("p"),
            response: Response::NextToken { top_logprobs: vec![] },
        };
        assert!(matches!(
            ReplayBackend::from_records([record]),
            Err(BackendError::CorruptFixtureEntry { .. })
        ));
    }
}
