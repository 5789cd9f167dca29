//! Annotation sessions as append-only event logs.
//!
//! A session is fully described by its events: one `created` event carrying
//! the frozen queue, then one `verdict` event per submission. Replaying the
//! log reconstructs the session exactly, so a restarted service resumes with
//! the same queue and cursor.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::msp;
use crate::ranking::{QueueItem, QueueOrdering, Thresholds, Verdict, VerdictValue};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("key {0:?} is not in the session queue")]
    KeyNotInQueue(String),
    #[error("session log must start with a created event")]
    MissingCreated,
    #[error("duplicate created event")]
    DuplicateCreated,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Decode {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workflow {
    ExpertNoLabels,
    ExpertWithLabels,
}

impl Workflow {
    pub fn ordering(self) -> QueueOrdering {
        match self {
            Workflow::ExpertNoLabels => QueueOrdering::ByCount,
            Workflow::ExpertWithLabels => QueueOrdering::ByMetrics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub session_size: usize,
    pub examples_per_item: usize,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created { id: String, workflow: Workflow, params: SessionParams, queue: Vec<QueueItem> },
    Verdict { key: String, verdict: Verdict },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedVerdict {
    pub key: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub session_size: usize,
    pub annotated: usize,
    pub cursor: usize,
    pub yes: usize,
    pub no: usize,
    pub maybe: usize,
    pub msp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub workflow: Workflow,
    pub params: SessionParams,
    pub queue: Vec<QueueItem>,
    /// First queue position without a verdict.
    pub cursor: usize,
    /// Every submission in arrival order, including overwritten ones.
    pub log: Vec<LoggedVerdict>,
    current: BTreeMap<String, Verdict>,
    positions: HashMap<String, usize>,
}

impl Session {
    pub fn new(id: String, workflow: Workflow, params: SessionParams, queue: Vec<QueueItem>) -> Self {
        let positions = queue.iter().enumerate().map(|(i, q)| (q.key.clone(), i)).collect();
        Session { id, workflow, params, queue, cursor: 0, log: Vec::new(), current: BTreeMap::new(), positions }
    }

    pub fn created_event(&self) -> SessionEvent {
        SessionEvent::Created {
            id: self.id.clone(),
            workflow: self.workflow,
            params: self.params.clone(),
            queue: self.queue.clone(),
        }
    }

    /// Records a verdict and returns the event to persist. A resubmission
    /// replaces the current verdict; the log keeps both.
    pub fn submit(&mut self, key: &str, verdict: Verdict) -> Result<SessionEvent, SessionError> {
        if !self.positions.contains_key(key) {
            return Err(SessionError::KeyNotInQueue(key.to_string()));
        }
        self.current.insert(key.to_string(), verdict.clone());
        self.log.push(LoggedVerdict { key: key.to_string(), verdict: verdict.clone() });
        while self.cursor < self.queue.len() && self.current.contains_key(&self.queue[self.cursor].key) {
            self.cursor += 1;
        }
        Ok(SessionEvent::Verdict { key: key.to_string(), verdict })
    }

    pub fn replay<I: IntoIterator<Item = SessionEvent>>(events: I) -> Result<Self, SessionError> {
        let mut events = events.into_iter();
        let mut session = match events.next() {
            Some(SessionEvent::Created { id, workflow, params, queue }) => Session::new(id, workflow, params, queue),
            _ => return Err(SessionError::MissingCreated),
        };
        for e in events {
            match e {
                SessionEvent::Created { .. } => return Err(SessionError::DuplicateCreated),
                SessionEvent::Verdict { key, verdict } => {
                    session.submit(&key, verdict)?;
                }
            }
        }
        Ok(session)
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn verdict(&self, key: &str) -> Option<&Verdict> {
        self.current.get(key)
    }

    /// Up to `n` items without a verdict, starting at the cursor. Does not
    /// move the cursor.
    pub fn next_items(&self, n: usize) -> Vec<(usize, &QueueItem)> {
        self.queue.iter().enumerate().skip(self.cursor).filter(|(_, q)| !self.current.contains_key(&q.key)).take(n).collect()
    }

    pub fn current_values(&self) -> Vec<VerdictValue> {
        self.current.values().map(|v| v.value).collect()
    }

    pub fn msp(&self) -> Option<f64> {
        msp(&self.current_values()).ok()
    }

    pub fn stats(&self) -> SessionStats {
        let count = |v: VerdictValue| self.current.values().filter(|x| x.value == v).count();
        SessionStats {
            session_size: self.queue.len(),
            annotated: self.current.len(),
            cursor: self.cursor,
            yes: count(VerdictValue::Yes),
            no: count(VerdictValue::No),
            maybe: count(VerdictValue::Maybe),
            msp: self.msp(),
        }
    }

    /// Keys whose current verdict is Yes.
    pub fn accepted_keys(&self) -> BTreeSet<String> {
        self.current.iter().filter(|(_, v)| v.value == VerdictValue::Yes).map(|(k, _)| k.clone()).collect()
    }

    pub fn annotated_keys(&self) -> impl Iterator<Item = &String> {
        self.current.keys()
    }
}

/// Directory of `<session id>.ndjson` event logs.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| SessionError::Io { path: dir.display().to_string(), source })?;
        Ok(SessionStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.ndjson"))
    }

    pub fn append(&self, id: &str, event: &SessionEvent) -> Result<(), SessionError> {
        let path = self.log_path(id);
        let io = |source| SessionError::Io { path: path.display().to_string(), source };
        let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        let mut line = serde_json::to_vec(event).expect("event serializes");
        line.push(b'\n');
        file.write_all(&line).map_err(io)?;
        file.sync_data().map_err(io)
    }

    pub fn load(&self, id: &str) -> Result<Session, SessionError> {
        let path = self.log_path(id);
        let io = |source| SessionError::Io { path: path.display().to_string(), source };
        let file = fs::File::open(&path).map_err(io)?;
        let mut events = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line).map_err(|source| SessionError::Decode {
                path: path.display().to_string(),
                line: i + 1,
                source,
            })?);
        }
        Session::replay(events)
    }

    /// Every session in the directory, ordered by id.
    pub fn load_all(&self) -> Result<Vec<Session>, SessionError> {
        let entries =
            fs::read_dir(&self.dir).map_err(|source| SessionError::Io { path: self.dir.display().to_string(), source })?;
        let mut ids: Vec<String> = entries
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                name.strip_suffix(".ndjson").map(str::to_string)
            })
            .collect();
        ids.sort();
        ids.iter().map(|id| self.load(id)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn item(key: &str) -> QueueItem {
        QueueItem { key: key.into(), pair_count: 1, cluster_id: None, metrics: None, examples: vec![] }
    }

    fn verdict(v: VerdictValue, t: i64) -> Verdict {
        Verdict { value: v, annotator: "expert".into(), timestamp: chrono::Utc.timestamp_opt(t, 0).unwrap() }
    }

    fn session(n: usize) -> Session {
        let params = SessionParams { session_size: n, examples_per_item: 20, thresholds: None, seed: 1 };
        Session::new("s0001".into(), Workflow::ExpertNoLabels, params, (0..n).map(|i| item(&format!("k{i}"))).collect())
    }

    #[test]
    fn cursor_tracks_contiguous_prefix() {
        let mut s = session(4);
        s.submit("k1", verdict(VerdictValue::Yes, 1)).unwrap();
        assert_eq!(s.cursor, 0);
        assert_eq!(s.next_items(10).iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![0, 2, 3]);
        s.submit("k0", verdict(VerdictValue::No, 2)).unwrap();
        assert_eq!(s.cursor, 2);
        assert_eq!(s.next_items(1)[0].0, 2);
        assert!(matches!(s.submit("zz", verdict(VerdictValue::No, 3)), Err(SessionError::KeyNotInQueue(_))));
    }

    #[test]
    fn running_msp_and_overwrites() {
        let mut s = session(3);
        s.submit("k0", verdict(VerdictValue::Yes, 1)).unwrap();
        assert_eq!(s.msp(), Some(1.0));
        s.submit("k1", verdict(VerdictValue::No, 2)).unwrap();
        s.submit("k2", verdict(VerdictValue::Maybe, 3)).unwrap();
        assert!((s.msp().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        s.submit("k1", verdict(VerdictValue::Yes, 4)).unwrap();
        assert_eq!(s.log.len(), 4);
        assert_eq!(s.verdict("k1").unwrap().value, VerdictValue::Yes);
        assert_eq!(s.accepted_keys().len(), 2);
        assert!(s.next_items(5).is_empty());
    }

    #[test]
    fn store_replays_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let mut s = session(3);
        store.append(&s.id, &s.created_event()).unwrap();
        for (k, v) in [("k0", VerdictValue::Yes), ("k2", VerdictValue::No), ("k0", VerdictValue::Maybe)] {
            let e = s.submit(k, verdict(v, 5)).unwrap();
            store.append(&s.id, &e).unwrap();
        }
        let back = store.load("s0001").unwrap();
        assert_eq!(back, s);
        assert_eq!(store.load_all().unwrap().len(), 1);
    }

    #[test]
    fn replay_requires_created_first() {
        let e = SessionEvent::Verdict { key: "k".into(), verdict: verdict(VerdictValue::Yes, 0) };
        assert!(matches!(Session::replay([e]), Err(SessionError::MissingCreated)));
    }
}
