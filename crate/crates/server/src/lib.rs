//! JSON-over-HTTP session service for live coding.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/health` | liveness |
//! | GET | `/corpora` | registered corpora |
//! | POST | `/sessions` | create a session (201) |
//! | GET | `/sessions` | list sessions |
//! | GET | `/sessions/{id}` | session summary |
//! | GET | `/sessions/{id}/next?code=C` | pending item of a code |
//! | POST | `/sessions/{id}/validate` | submit a validation or correction |
//! | GET | `/sessions/{id}/metrics` | progress time series |
//! | GET | `/sessions/{id}/export[?format=jsonl]` | coded items and models |
//! | GET | `/sessions/{id}/debug/pool?code=C` | current scores of every item |
//! | POST | `/sessions/{id}/finish` | close the session |
//!
//! Every session change is appended to an event log in the data directory
//! before it is acknowledged; on start-up the logs are replayed.

mod error;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use verbacode::corpus::{declared_codeframe, load_corpus, Format};
use verbacode::experiment::Dataset;
use verbacode::features::FeatureSpace;
use verbacode::learners::{Label, LinearModel};
use verbacode::policies::Policy;
use verbacode::session::{CodedItem, MetricPoint, Pending, Session, SessionConfig, Status};

pub use error::{ApiError, StartError};
use store::EventLog;

/// How the service is started.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// JSONL corpora; each is registered under its file stem.
    pub corpora: Vec<PathBuf>,
    /// Warm-start model(s) used when a creation request brings none.
    pub model: Option<PathBuf>,
    /// Where event logs live; sessions are kept in memory only when unset.
    pub data_dir: Option<PathBuf>,
    /// Directory served for every path the API does not claim.
    pub static_dir: Option<PathBuf>,
    /// Report truth-based pooled F1 from the corpus labels.
    pub demo: bool,
    pub space: FeatureSpace,
}

/// One model for every code, or a model per code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WarmModels {
    One(Box<LinearModel>),
    PerCode(BTreeMap<String, LinearModel>),
}

impl WarmModels {
    pub fn load(path: &Path) -> Result<Self, StartError> {
        let err = |message: String| StartError::Model {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    fn models(&self) -> Vec<&LinearModel> {
        match self {
            WarmModels::One(m) => vec![m],
            WarmModels::PerCode(ms) => ms.values().collect(),
        }
    }

    /// Initial models for `codes`; codes without one start cold.
    fn for_codes(&self, codes: &[String]) -> BTreeMap<String, LinearModel> {
        match self {
            WarmModels::One(m) => codes.iter().map(|c| (c.clone(), (**m).clone())).collect(),
            WarmModels::PerCode(ms) => ms
                .iter()
                .filter(|(c, _)| codes.contains(c))
                .map(|(c, m)| (c.clone(), m.clone()))
                .collect(),
        }
    }
}

struct CorpusEntry {
    data: Arc<Dataset>,
    /// Declared codes without labelled instances.
    extra_codes: Vec<String>,
}

impl CorpusEntry {
    fn all_codes(&self) -> Vec<String> {
        self.data
            .corpus
            .codeframe
            .iter()
            .chain(&self.extra_codes)
            .cloned()
            .collect()
    }
}

struct Live {
    session: Session,
    log: Option<EventLog>,
}

type Slot = Arc<Mutex<Live>>;

struct Inner {
    corpora: BTreeMap<String, CorpusEntry>,
    default_warm: Option<WarmModels>,
    sessions_dir: Option<PathBuf>,
    demo: bool,
    sessions: RwLock<HashMap<String, Slot>>,
}

/// Shared service state.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl AppState {
    /// Loads corpora and the default model, then replays stored sessions.
    /// Nothing is bound yet, so a bad corpus fails before the port is taken.
    pub fn load(config: &ServerConfig) -> Result<Self, StartError> {
        let mut corpora = BTreeMap::new();
        for path in &config.corpora {
            let corpus_err = |source| StartError::Corpus {
                path: path.display().to_string(),
                source,
            };
            let corpus = load_corpus(path, Format::Jsonl).map_err(corpus_err)?;
            let declared = declared_codeframe(path).map_err(corpus_err)?.unwrap_or_default();
            let extra_codes = declared
                .into_iter()
                .filter(|c| !corpus.codeframe.contains(c))
                .collect();
            let name = corpus.name.clone();
            let data = Dataset::new(corpus, config.space).map_err(corpus_err)?;
            log::info!("corpus `{name}`: {} items, {} codes", data.len(), data.tasks.len());
            let entry = CorpusEntry {
                data: Arc::new(data),
                extra_codes,
            };
            if corpora.insert(name.clone(), entry).is_some() {
                return Err(StartError::DuplicateCorpus(name));
            }
        }
        let default_warm = match &config.model {
            Some(path) => {
                let warm = WarmModels::load(path)?;
                for m in warm.models() {
                    config.space.check_compatible(&m.space).map_err(|e| StartError::Model {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                }
                Some(warm)
            }
            None => None,
        };
        let sessions_dir = match &config.data_dir {
            Some(d) => Some(store::sessions_dir(d)?),
            None => None,
        };
        let state = AppState(Arc::new(Inner {
            corpora,
            default_warm,
            sessions_dir,
            demo: config.demo,
            sessions: RwLock::new(HashMap::new()),
        }));
        state.restore()?;
        Ok(state)
    }

    fn restore(&self) -> std::io::Result<()> {
        let Some(dir) = &self.0.sessions_dir else {
            return Ok(());
        };
        let mut sessions = self.0.sessions.write().expect("session table lock");
        for (id, events) in store::read_all(dir)? {
            let corpus = match events.first() {
                Some(verbacode::session::Event::Created { config, .. }) => config.corpus.clone(),
                _ => {
                    log::warn!("session {id}: log does not start with `created`; skipped");
                    continue;
                }
            };
            let Some(entry) = self.0.corpora.get(&corpus) else {
                log::warn!("session {id}: corpus `{corpus}` is not registered; skipped");
                continue;
            };
            match Session::replay(&events, entry.data.clone(), &entry.extra_codes, self.0.demo) {
                Ok(session) => {
                    log::info!("session {id}: replayed {} events", events.len());
                    let log = EventLog::open(dir, &id)?;
                    sessions.insert(id, Arc::new(Mutex::new(Live { session, log: Some(log) })));
                }
                Err(e) => log::warn!("session {id}: replay failed: {e}; skipped"),
            }
        }
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<Slot, ApiError> {
        self.0
            .sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }
}

/// The API routes, plus static files when a directory is configured.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/corpora", get(list_corpora))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/validate", post(validate))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/debug/pool", get(debug_pool))
        .route("/sessions/{id}/finish", post(finish))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Loads everything, binds `addr` and serves until the process stops.
pub async fn serve(config: ServerConfig, addr: SocketAddr) -> Result<(), StartError> {
    let state = AppState::load(&config)?;
    let app = router(state, config.static_dir.as_deref());
    let bind_err = |source| StartError::Bind {
        addr: addr.to_string(),
        source,
    };
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(bind_err)?;
    log::info!("listening on http://{}", listener.local_addr().map_err(bind_err)?);
    axum::serve(listener, app).await.map_err(bind_err)
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

#[derive(Serialize)]
struct CorpusView {
    name: String,
    items: usize,
    codes: Vec<String>,
}

async fn list_corpora(State(state): State<AppState>) -> Json<Vec<CorpusView>> {
    Json(
        state
            .0
            .corpora
            .iter()
            .map(|(name, e)| CorpusView {
                name: name.clone(),
                items: e.data.len(),
                codes: e.all_codes(),
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct CreateRequest {
    #[serde(flatten)]
    config: SessionConfig,
    #[serde(default)]
    warm_model: Option<WarmModels>,
}

#[derive(Serialize)]
struct CodeView {
    code: String,
    validated: usize,
    remaining_budget: usize,
    pending: Option<String>,
}

#[derive(Serialize)]
struct SessionView {
    id: String,
    corpus: String,
    status: Status,
    policy: Policy,
    seed: u64,
    items: usize,
    demo: bool,
    created_at_ms: u64,
    updated_at_ms: u64,
    events: usize,
    codes: Vec<CodeView>,
}

fn session_view(s: &Session) -> SessionView {
    let codes = s
        .codes()
        .map(|c| CodeView {
            code: c.to_owned(),
            validated: s.pool(c).map_or(0, |p| p.validated_count()),
            remaining_budget: s.remaining_budget(c).unwrap_or(0),
            pending: s.next(c).ok().map(|p| p.item_id),
        })
        .collect();
    SessionView {
        id: s.id.clone(),
        corpus: s.config.corpus.clone(),
        status: s.status,
        policy: s.config.policy,
        seed: s.config.seed,
        items: s.dataset().len(),
        demo: s.demo,
        created_at_ms: s.created_at_ms,
        updated_at_ms: s.updated_at_ms,
        events: s.event_count(),
        codes,
    }
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let inner = &state.0;
    let entry = inner
        .corpora
        .get(&req.config.corpus)
        .ok_or_else(|| ApiError::not_found(format!("no corpus `{}`", req.config.corpus)))?;
    let codes = if req.config.codes.is_empty() {
        entry.all_codes()
    } else {
        req.config.codes.clone()
    };
    let warm = req
        .warm_model
        .as_ref()
        .or(inner.default_warm.as_ref())
        .map(|w| w.for_codes(&codes))
        .unwrap_or_default();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let (session, created) = Session::create(
        id.clone(),
        entry.data.clone(),
        &entry.extra_codes,
        req.config,
        warm,
        inner.demo,
        now_ms(),
    )?;
    let log = match &inner.sessions_dir {
        Some(dir) => {
            let mut log = EventLog::open(dir, &id)?;
            log.append(&created)?;
            Some(log)
        }
        None => None,
    };
    let view = session_view(&session);
    inner
        .sessions
        .write()
        .expect("session table lock")
        .insert(id, Arc::new(Mutex::new(Live { session, log })));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<SessionView>> {
    let slots: Vec<Slot> = state.0.sessions.read().expect("session table lock").values().cloned().collect();
    let mut views: Vec<SessionView> = slots
        .iter()
        .map(|s| session_view(&s.lock().expect("session lock").session))
        .collect();
    views.sort_by(|a, b| a.created_at_ms.cmp(&b.created_at_ms).then_with(|| a.id.cmp(&b.id)));
    Json(views)
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ApiError> {
    let slot = state.slot(&id)?;
    let live = slot.lock().expect("session lock");
    Ok(Json(session_view(&live.session)))
}

#[derive(Deserialize)]
struct CodeQuery {
    code: Option<String>,
    format: Option<String>,
}

/// The requested code, or the only code of the session.
fn resolve_code(s: &Session, code: Option<String>) -> Result<String, ApiError> {
    if let Some(c) = code {
        return Ok(c);
    }
    let codes: Vec<&str> = s.codes().collect();
    match codes.as_slice() {
        [only] => Ok((*only).to_owned()),
        _ => Err(ApiError::bad_request("query parameter `code` is required")),
    }
}

async fn next_item(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<CodeQuery>,
) -> Result<Json<Pending>, ApiError> {
    let slot = state.slot(&id)?;
    let live = slot.lock().expect("session lock");
    let code = resolve_code(&live.session, q.code)?;
    Ok(Json(live.session.next(&code)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateRequest {
    code: Option<String>,
    item_id: String,
    label: Label,
    #[serde(default)]
    correction: bool,
}

#[derive(Serialize)]
struct ValidateResponse {
    code: String,
    item_id: String,
    label: Label,
    correction: bool,
    /// False when a correction repeated the current label.
    changed: bool,
    validated: usize,
    remaining_budget: usize,
    latency_ms: f64,
    prequential: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pooled_f1: Option<f64>,
    next: Option<Pending>,
}

async fn validate(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<ValidateResponse>, ApiError> {
    let req: ValidateRequest = parse_body(&body)?;
    let slot = state.slot(&id)?;
    let mut live = slot.lock().expect("session lock");
    let code = resolve_code(&live.session, req.code)?;
    let (v, event) = live
        .session
        .validate(&code, &req.item_id, req.label, req.correction, now_ms())?;
    if let Some(log) = &mut live.log {
        log.append(&event)?;
    }
    let next = live.session.next(&code).ok();
    Ok(Json(ValidateResponse {
        code: v.code,
        item_id: v.point.item_id,
        label: v.point.label,
        correction: v.point.correction,
        changed: v.changed,
        validated: v.validated,
        remaining_budget: v.remaining_budget,
        latency_ms: v.point.latency_ms,
        prequential: v.point.prequential,
        pooled_f1: v.point.pooled_f1,
        next,
    }))
}

#[derive(Serialize)]
struct CodeMetrics {
    code: String,
    items: usize,
    validated: usize,
    remaining_budget: usize,
    prequential: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pooled_f1: Option<f64>,
    mean_latency_ms: Option<f64>,
    max_latency_ms: Option<f64>,
    history: Vec<MetricPoint>,
}

#[derive(Serialize)]
struct MetricsView {
    id: String,
    status: Status,
    codes: Vec<CodeMetrics>,
}

async fn metrics(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<MetricsView>, ApiError> {
    let slot = state.slot(&id)?;
    let live = slot.lock().expect("session lock");
    let s = &live.session;
    let mut codes = Vec::new();
    for code in s.codes() {
        let history = s.history(code)?.to_vec();
        let latencies: Vec<f64> = history.iter().map(|p| p.latency_ms).collect();
        let pooled_f1 = if s.demo { s.pooled_f1(code)? } else { None };
        codes.push(CodeMetrics {
            code: code.to_owned(),
            items: s.dataset().len(),
            validated: s.pool(code)?.validated_count(),
            remaining_budget: s.remaining_budget(code)?,
            prequential: history.iter().rev().find_map(|p| p.prequential),
            pooled_f1,
            mean_latency_ms: (!latencies.is_empty()).then(|| latencies.iter().sum::<f64>() / latencies.len() as f64),
            max_latency_ms: latencies.iter().copied().reduce(f64::max),
            history,
        });
    }
    Ok(Json(MetricsView {
        id: s.id.clone(),
        status: s.status,
        codes,
    }))
}

#[derive(Serialize)]
struct ExportView {
    id: String,
    corpus: String,
    items: Vec<CodedItem>,
    /// Current model per code; the map can be passed to `--model`.
    models: BTreeMap<String, LinearModel>,
}

async fn export(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<CodeQuery>,
) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let live = slot.lock().expect("session lock");
    let s = &live.session;
    let items = s.coded_items();
    match q.format.as_deref() {
        None | Some("json") => {
            let models = s
                .codes()
                .map(|c| Ok((c.to_owned(), s.model(c)?.clone())))
                .collect::<Result<_, ApiError>>()?;
            Ok(Json(ExportView {
                id: s.id.clone(),
                corpus: s.config.corpus.clone(),
                items,
                models,
            })
            .into_response())
        }
        Some("jsonl") => {
            let mut out = String::new();
            for item in &items {
                out.push_str(&serde_json::to_string(item).map_err(|e| ApiError::internal(e.to_string()))?);
                out.push('\n');
            }
            Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], out).into_response())
        }
        Some(other) => Err(ApiError::bad_request(format!("unknown export format `{other}`"))),
    }
}

#[derive(Serialize)]
struct PoolItem {
    item_id: String,
    validated: Option<Label>,
    margin: f64,
    confidence: f64,
    autocode: Label,
}

#[derive(Serialize)]
struct PoolDump {
    code: String,
    pending: Option<String>,
    items: Vec<PoolItem>,
}

/// Scores as the server holds them; validated items keep the scores they
/// had when validated.
async fn debug_pool(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<CodeQuery>,
) -> Result<Json<PoolDump>, ApiError> {
    let slot = state.slot(&id)?;
    let live = slot.lock().expect("session lock");
    let s = &live.session;
    let code = resolve_code(s, q.code)?;
    let pool = s.pool(&code)?;
    let items = s
        .dataset()
        .corpus
        .verbatims
        .iter()
        .enumerate()
        .map(|(i, v)| PoolItem {
            item_id: v.id.clone(),
            validated: pool.status(i),
            margin: pool.margin(i),
            confidence: pool.confidence(i),
            autocode: Label::from_bool(pool.autocode(i)),
        })
        .collect();
    Ok(Json(PoolDump {
        pending: s.next(&code).ok().map(|p| p.item_id),
        code,
        items,
    }))
}

async fn finish(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ApiError> {
    let slot = state.slot(&id)?;
    let mut live = slot.lock().expect("session lock");
    let event = live.session.finish(now_ms())?;
    if let Some(log) = &mut live.log {
        log.append(&event)?;
    }
    Ok(Json(session_view(&live.session)))
}
