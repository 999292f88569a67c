//! Job records with an optional append-only JSON-lines backing file.
//!
//! Every status change appends the full record, so replaying the file and
//! keeping the last line per id restores the store.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_final(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }

    /// queued → running → done | failed; nothing else.
    pub fn can_become(self, next: JobStatus) -> bool {
        matches!(
            (self, next),
            (JobStatus::Queued, JobStatus::Running) | (JobStatus::Running, JobStatus::Done) | (JobStatus::Running, JobStatus::Failed)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobRequest {
    pub spec_hash: String,
    pub operation: String,
    pub parameters: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    /// Milliseconds since the Unix epoch.
    pub created: u64,
    pub started: Option<u64>,
    pub finished: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobRecord {
    pub job_id: String,
    pub request: JobRequest,
    pub status: JobStatus,
    pub result: Option<Value>,
    pub error: Option<String>,
    pub timestamps: Timestamps,
}

#[derive(Debug, thiserror::Error)]
pub enum JobError {
    #[error("unknown job `{0}`")]
    Unknown(String),
    #[error("job `{id}` cannot go from {from:?} to {to:?}")]
    Transition { id: String, from: JobStatus, to: JobStatus },
    #[error("job store: {0}")]
    Io(#[from] std::io::Error),
    #[error("job store: {0}")]
    Json(#[from] serde_json::Error),
}

fn epoch_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

struct Inner {
    jobs: BTreeMap<String, JobRecord>,
    next: u64,
    file: Option<File>,
}

pub struct JobStore {
    inner: Mutex<Inner>,
    changed: Condvar,
    path: Option<PathBuf>,
}

impl Default for JobStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl JobStore {
    pub fn in_memory() -> Self {
        JobStore {
            inner: Mutex::new(Inner { jobs: BTreeMap::new(), next: 1, file: None }),
            changed: Condvar::new(),
            path: None,
        }
    }

    /// Opens (or creates) a backing file and replays it. Jobs that were
    /// queued or running when the file was last written are marked failed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JobError> {
        let path = path.as_ref().to_path_buf();
        let mut jobs: BTreeMap<String, JobRecord> = BTreeMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JobRecord = serde_json::from_str(&line)?;
                jobs.insert(rec.job_id.clone(), rec);
            }
        }
        let next = jobs.keys().filter_map(|k| k.strip_prefix("job-")?.parse::<u64>().ok()).max().unwrap_or(0) + 1;
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let store = JobStore { inner: Mutex::new(Inner { jobs, next, file: Some(file) }), changed: Condvar::new(), path: Some(path) };
        let stale: Vec<String> =
            store.inner.lock().unwrap().jobs.values().filter(|r| !r.status.is_final()).map(|r| r.job_id.clone()).collect();
        for id in stale {
            let mut inner = store.inner.lock().unwrap();
            let rec = inner.jobs.get_mut(&id).unwrap();
            rec.status = JobStatus::Failed;
            rec.error = Some("interrupted by a restart".into());
            rec.timestamps.finished = Some(epoch_millis());
            let rec = rec.clone();
            Self::persist(&mut inner, &rec)?;
        }
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn persist(inner: &mut Inner, rec: &JobRecord) -> Result<(), JobError> {
        if let Some(f) = inner.file.as_mut() {
            let mut line = serde_json::to_string(rec)?;
            line.push('\n');
            f.write_all(line.as_bytes())?;
            f.flush()?;
        }
        Ok(())
    }

    pub fn create(&self, request: JobRequest) -> Result<JobRecord, JobError> {
        let mut inner = self.inner.lock().unwrap();
        let id = format!("job-{}", inner.next);
        inner.next += 1;
        let rec = JobRecord {
            job_id: id.clone(),
            request,
            status: JobStatus::Queued,
            result: None,
            error: None,
            timestamps: Timestamps { created: epoch_millis(), ..Timestamps::default() },
        };
        Self::persist(&mut inner, &rec)?;
        inner.jobs.insert(id, rec.clone());
        Ok(rec)
    }

    fn transition(&self, id: &str, to: JobStatus, result: Option<Value>, error: Option<String>) -> Result<JobRecord, JobError> {
        let mut inner = self.inner.lock().unwrap();
        let rec = inner.jobs.get_mut(id).ok_or_else(|| JobError::Unknown(id.into()))?;
        if !rec.status.can_become(to) {
            return Err(JobError::Transition { id: id.into(), from: rec.status, to });
        }
        rec.status = to;
        match to {
            JobStatus::Running => rec.timestamps.started = Some(epoch_millis()),
            _ => rec.timestamps.finished = Some(epoch_millis()),
        }
        rec.result = result;
        rec.error = error;
        let rec = rec.clone();
        Self::persist(&mut inner, &rec)?;
        drop(inner);
        self.changed.notify_all();
        Ok(rec)
    }

    pub fn start(&self, id: &str) -> Result<JobRecord, JobError> {
        self.transition(id, JobStatus::Running, None, None)
    }

    pub fn finish(&self, id: &str, result: Value) -> Result<JobRecord, JobError> {
        self.transition(id, JobStatus::Done, Some(result), None)
    }

    pub fn fail(&self, id: &str, error: impl Into<String>) -> Result<JobRecord, JobError> {
        self.transition(id, JobStatus::Failed, None, Some(error.into()))
    }

    pub fn get(&self, id: &str) -> Option<JobRecord> {
        self.inner.lock().unwrap().jobs.get(id).cloned()
    }

    pub fn list(&self) -> Vec<JobRecord> {
        self.inner.lock().unwrap().jobs.values().cloned().collect()
    }

    /// Blocks until the job is final or `timeout` passes.
    pub fn wait(&self, id: &str, timeout: Duration) -> Option<JobRecord> {
        let deadline = std::time::Instant::now() + timeout;
        let mut inner = self.inner.lock().unwrap();
        loop {
            let rec = inner.jobs.get(id)?.clone();
            let now = std::time::Instant::now();
            if rec.status.is_final() || now >= deadline {
                return Some(rec);
            }
            inner = self.changed.wait_timeout(inner, deadline - now).unwrap().0;
        }
    }
}
