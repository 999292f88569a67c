//! Transport-independent request handling for the HTTP service.
//!
//! [`Api::handle`] maps `(method, path, query, body)` to a status code and
//! a JSON body; the axum server in [`crate::server`] is a thin wrapper, and
//! tests drive the API directly.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;

use agrmc_core::parser::parse_parts;
use agrmc_core::{compose_with, parse_spec, validate_spec, Assumption, Error, GlobalModel, Limits, ModuleDecl, SpecDocument};
use serde::Deserialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::export::{export_page, model_dot, module_dot};
use crate::jobs::{JobRequest, JobStore};
use crate::report::{self, limits_from_env, parse_engine, Mode, VerifyRequest};

pub const DEFAULT_PAGE_SIZE: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: u16,
    pub body: Value,
}

impl Response {
    fn ok(body: Value) -> Self {
        Response { status: 200, body }
    }

    fn error(status: u16, message: impl std::fmt::Display) -> Self {
        Response { status, body: json!({ "error": message.to_string() }) }
    }
}

#[derive(Debug, Clone)]
pub struct ApiConfig {
    pub workers: usize,
    pub limits: Limits,
    pub page_size: usize,
    pub job_file: Option<PathBuf>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig { workers: 2, limits: Limits::default(), page_size: DEFAULT_PAGE_SIZE, job_file: None }
    }
}

impl ApiConfig {
    /// Worker count from `AGRMC_WORKERS`, caps from `AGRMC_STATE_CAP` and
    /// `AGRMC_TRANS_CAP`.
    pub fn from_env() -> Self {
        let workers = std::env::var("AGRMC_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| thread::available_parallelism().map(|n| n.get().min(4)).unwrap_or(2));
        ApiConfig { workers, limits: limits_from_env(), ..ApiConfig::default() }
    }
}

/// SHA-256 of the spec text, hex encoded.
pub fn spec_id(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A single module given as spec text, e.g. a hand-written assumption.
pub fn parse_module(text: &str) -> Result<ModuleDecl, Error> {
    let (mut modules, _) = parse_parts(text)?;
    if modules.len() != 1 {
        return Err(Error::InvalidAssumption(format!("expected exactly one module, found {}", modules.len())));
    }
    Ok(modules.remove(0))
}

struct StoredSpec {
    id: String,
    doc: SpecDocument,
    model: Mutex<Option<Arc<GlobalModel>>>,
}

struct StoredAssumption {
    spec: String,
    assumption: Assumption,
}

struct Work {
    job: String,
    spec: Arc<StoredSpec>,
    request: VerifyRequest,
}

struct Shared {
    specs: Mutex<HashMap<String, Arc<StoredSpec>>>,
    assumptions: Mutex<HashMap<String, StoredAssumption>>,
    jobs: Arc<JobStore>,
    queue: Mutex<Sender<Work>>,
    config: ApiConfig,
}

#[derive(Clone)]
pub struct Api {
    shared: Arc<Shared>,
}

fn error_status(e: &Error) -> u16 {
    match e {
        Error::InvalidParameter(_) => 400,
        _ => 422,
    }
}

fn worker(rx: Arc<Mutex<Receiver<Work>>>, jobs: Arc<JobStore>) {
    loop {
        let work = match rx.lock().unwrap().recv() {
            Ok(w) => w,
            Err(_) => return,
        };
        if jobs.start(&work.job).is_err() {
            continue;
        }
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| report::verify(&work.spec.doc, &work.request)));
        let _ = match outcome {
            Ok(Ok(r)) => match serde_json::to_value(&r) {
                Ok(v) => jobs.finish(&work.job, v),
                Err(e) => jobs.fail(&work.job, e.to_string()),
            },
            Ok(Err(e)) => jobs.fail(&work.job, e.to_string()),
            Err(_) => jobs.fail(&work.job, "verification panicked"),
        };
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct AssumptionBody {
    spec_id: String,
    module: String,
    #[serde(default = "one")]
    distance: usize,
    /// A hand-written assumption instead of a generated one.
    text: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct VerifyBody {
    spec_id: String,
    mode: Mode,
    engine: String,
    #[serde(default = "one")]
    distance: usize,
    assumption_id: Option<OneOrMany>,
}

fn query_param<'q>(query: &'q str, key: &str) -> Option<&'q str> {
    query.split('&').filter_map(|kv| kv.split_once('=')).find(|(k, _)| *k == key).map(|(_, v)| v)
}

impl Api {
    pub fn new(config: ApiConfig) -> Result<Self, crate::jobs::JobError> {
        let jobs = Arc::new(match &config.job_file {
            Some(path) => JobStore::open(path)?,
            None => JobStore::in_memory(),
        });
        let (tx, rx) = channel();
        let rx = Arc::new(Mutex::new(rx));
        for _ in 0..config.workers.max(1) {
            let (rx, jobs) = (rx.clone(), jobs.clone());
            thread::spawn(move || worker(rx, jobs));
        }
        Ok(Api {
            shared: Arc::new(Shared {
                specs: Mutex::new(HashMap::new()),
                assumptions: Mutex::new(HashMap::new()),
                jobs,
                queue: Mutex::new(tx),
                config,
            }),
        })
    }

    pub fn jobs(&self) -> &JobStore {
        &self.shared.jobs
    }

    pub fn handle(&self, method: &str, path: &str, query: &str, body: &[u8]) -> Response {
        let segments: Vec<&str> = path.trim_matches('/').split('/').collect();
        match (method, segments.as_slice()) {
            ("POST", ["api", "spec"]) => self.post_spec(body),
            ("GET", ["api", "spec", id]) => self.with_spec(id, |s| Response::ok(self.spec_summary(s))),
            ("GET", ["api", "spec", id, "model"]) => self.get_model(id, query),
            ("POST", ["api", "assumption"]) => self.post_assumption(body),
            ("POST", ["api", "verify"]) => self.post_verify(body),
            ("GET", ["api", "jobs"]) => Response::ok(json!(self.shared.jobs.list())),
            ("GET", ["api", "job", id]) => match self.shared.jobs.get(id) {
                Some(rec) => Response::ok(json!(rec)),
                None => Response::error(404, format!("unknown job `{id}`")),
            },
            ("GET", ["api", "job", id, "result"]) => self.get_result(id),
            (_, ["api", ..]) => Response::error(404, format!("no route for {method} {path}")),
            _ => Response::error(404, "not found"),
        }
    }

    fn spec(&self, id: &str) -> Option<Arc<StoredSpec>> {
        self.shared.specs.lock().unwrap().get(id).cloned()
    }

    fn with_spec(&self, id: &str, f: impl FnOnce(&Arc<StoredSpec>) -> Response) -> Response {
        match self.spec(id) {
            Some(s) => f(&s),
            None => Response::error(404, format!("unknown spec `{id}`")),
        }
    }

    fn spec_summary(&self, s: &StoredSpec) -> Value {
        let report = validate_spec(&s.doc);
        let gaps: Vec<Value> =
            report.gaps.iter().map(|g| json!({ "module": g.module, "state": g.state, "inputs": g.inputs.0 })).collect();
        json!({
            "specId": s.id,
            "modules": s.doc.modules().iter().map(|m| &m.name).collect::<Vec<_>>(),
            "groups": s.doc.groups().iter().map(|g| json!({
                "name": g.name,
                "members": g.members,
                "goal": g.goal.as_ref().map(|f| f.to_string()),
            })).collect::<Vec<_>>(),
            "validation": { "total": report.is_total(), "gaps": gaps },
        })
    }

    fn post_spec(&self, body: &[u8]) -> Response {
        let Ok(text) = std::str::from_utf8(body) else { return Response::error(400, "body is not UTF-8") };
        // Either raw spec text or `{"spec": "..."}`.
        let text = match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(o)) => match o.get("spec").and_then(Value::as_str) {
                Some(t) => t.to_string(),
                None => return Response::error(400, "expected a `spec` string field"),
            },
            _ => text.to_string(),
        };
        if text.trim().is_empty() {
            return Response::error(400, "empty specification");
        }
        let doc = match parse_spec(&text) {
            Ok(d) => d,
            Err(e) => return Response::error(422, e),
        };
        let id = spec_id(&text);
        let stored = self
            .shared
            .specs
            .lock()
            .unwrap()
            .entry(id.clone())
            .or_insert_with(|| Arc::new(StoredSpec { id, doc, model: Mutex::new(None) }))
            .clone();
        Response::ok(self.spec_summary(&stored))
    }

    fn model(&self, s: &StoredSpec) -> Result<Arc<GlobalModel>, Error> {
        let mut slot = s.model.lock().unwrap();
        if let Some(m) = slot.as_ref() {
            return Ok(m.clone());
        }
        let m = Arc::new(compose_with(&s.doc, self.shared.config.limits)?);
        *slot = Some(m.clone());
        Ok(m)
    }

    fn get_model(&self, id: &str, query: &str) -> Response {
        let Some(s) = self.spec(id) else { return Response::error(404, format!("unknown spec `{id}`")) };
        let page = match query_param(query, "page").map(str::parse::<usize>) {
            None => 0,
            Some(Ok(p)) => p,
            Some(Err(_)) => return Response::error(400, "`page` must be a non-negative integer"),
        };
        let size = match query_param(query, "pageSize").map(str::parse::<usize>) {
            None => self.shared.config.page_size,
            Some(Ok(p)) if p > 0 => p,
            Some(_) => return Response::error(400, "`pageSize` must be a positive integer"),
        };
        let m = match self.model(&s) {
            Ok(m) => m,
            Err(e) => return Response::error(error_status(&e), e),
        };
        match query_param(query, "format") {
            None | Some("json") => Response::ok(json!(export_page(&m, page, size))),
            Some("dot") => Response::ok(json!({ "dot": model_dot(&m) })),
            Some(other) => Response::error(400, format!("unknown format `{other}`")),
        }
    }

    fn post_assumption(&self, body: &[u8]) -> Response {
        let req: AssumptionBody = match serde_json::from_slice(body) {
            Ok(r) => r,
            Err(e) => return Response::error(400, e),
        };
        let Some(s) = self.spec(&req.spec_id) else { return Response::error(404, format!("unknown spec `{}`", req.spec_id)) };
        let limits = self.shared.config.limits;
        let built = match &req.text {
            Some(text) => parse_module(text).and_then(|m| Assumption::user_defined(&s.doc, &req.module, m)).and_then(|a| {
                let sizes = report::assumption_sizes(&s.doc, &a, true, limits)?;
                Ok((a, sizes))
            }),
            None => report::generate(&s.doc, &req.module, req.distance, limits),
        };
        let (a, sizes) = match built {
            Ok(x) => x,
            Err(e) => return Response::error(error_status(&e), e),
        };
        let key = match &req.text {
            Some(text) => format!("{}:{}:user:{}", s.id, req.module, spec_id(text)),
            None => format!("{}:{}:d{}", s.id, req.module, req.distance),
        };
        let id = spec_id(&key)[..16].to_string();
        let dot = module_dot(&a.module);
        self.shared.assumptions.lock().unwrap().insert(id.clone(), StoredAssumption { spec: s.id.clone(), assumption: a });
        Response::ok(json!({ "assumptionId": id, "assumption": sizes, "dot": dot }))
    }

    fn post_verify(&self, body: &[u8]) -> Response {
        let req: VerifyBody = match serde_json::from_slice(body) {
            Ok(r) => r,
            Err(e) => return Response::error(400, e),
        };
        let Some(engine) = parse_engine(&req.engine) else {
            return Response::error(400, format!("unknown engine `{}`", req.engine));
        };
        if req.distance == 0 {
            return Response::error(400, "distance must be at least 1");
        }
        let Some(s) = self.spec(&req.spec_id) else { return Response::error(404, format!("unknown spec `{}`", req.spec_id)) };
        let ids = match &req.assumption_id {
            None => Vec::new(),
            Some(OneOrMany::One(id)) => vec![id.clone()],
            Some(OneOrMany::Many(ids)) => ids.clone(),
        };
        let mut assumptions = BTreeMap::new();
        {
            let stored = self.shared.assumptions.lock().unwrap();
            for id in &ids {
                match stored.get(id) {
                    Some(a) if a.spec == s.id => {
                        assumptions.insert(a.assumption.target.clone(), a.assumption.module.clone());
                    }
                    Some(_) => return Response::error(400, format!("assumption `{id}` belongs to another spec")),
                    None => return Response::error(404, format!("unknown assumption `{id}`")),
                }
            }
        }
        let parameters = json!({
            "mode": req.mode,
            "engine": engine.name(),
            "distance": req.distance,
            "assumptionIds": ids,
        });
        let rec = match self.shared.jobs.create(JobRequest { spec_hash: s.id.clone(), operation: "verify".into(), parameters }) {
            Ok(r) => r,
            Err(e) => return Response::error(500, e),
        };
        let request = VerifyRequest { mode: req.mode, engine, distance: req.distance, assumptions, limits: self.shared.config.limits };
        let work = Work { job: rec.job_id.clone(), spec: s, request };
        if self.shared.queue.lock().unwrap().send(work).is_err() {
            let _ = self.shared.jobs.start(&rec.job_id);
            let _ = self.shared.jobs.fail(&rec.job_id, "worker pool is gone");
        }
        Response { status: 202, body: json!({ "jobId": rec.job_id, "status": rec.status }) }
    }

    fn get_result(&self, id: &str) -> Response {
        use crate::jobs::JobStatus;
        match self.shared.jobs.get(id) {
            None => Response::error(404, format!("unknown job `{id}`")),
            Some(rec) => match rec.status {
                JobStatus::Queued | JobStatus::Running => Response::error(409, format!("job `{id}` is {:?}", rec.status)),
                JobStatus::Done => Response::ok(rec.result.unwrap_or(Value::Null)),
                JobStatus::Failed => Response::error(422, rec.error.unwrap_or_default()),
            },
        }
    }
}
