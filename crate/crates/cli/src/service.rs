//! Local JSON API over one corpus directory.
//!
//! Every response carries the session `version`. Mutations bump it and
//! clear cached results; a request whose `If-Version` header does not match
//! the current version is answered with 409.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Path as UrlPath, Query as UrlQuery, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use biblioscope_core::corpus::{load_corpus, load_sets, save_set, Corpus, WriterLock};
use biblioscope_core::dedup::{
    now_timestamp, suggest_clusters, ClusterStatus, Decision, MergeMap, RefCluster, RefTable, DEFAULT_THRESHOLD,
};
use biblioscope_core::graph::{
    cluster_graph, country_coauthorship, keyword_cooccurrence, overlay_mean_year, to_graph_json, BiblioGraph,
};
use biblioscope_core::query::{parse_script, run_script, SetTable};
use biblioscope_core::rpys::{spectrum, DEFAULT_BANDS};
use biblioscope_core::trend::annual_counts;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{full_cr_table, load_merges, Failure, MERGES_FILE};

pub const VERSION_HEADER: &str = "if-version";

pub struct Session {
    dir: Option<PathBuf>,
    corpus: Arc<Corpus>,
    sets: Arc<SetTable>,
    merges: Arc<MergeMap>,
    version: u64,
    cache: HashMap<String, Arc<Value>>,
    /// parameters of the last cluster listing; decisions refer to its ids
    cluster_params: (f64, bool),
    _lock: Option<WriterLock>,
}

impl Session {
    /// Opens `dir` for exclusive writing.
    pub fn open(dir: &Path) -> Result<Self, Failure> {
        let corpus = load_corpus(dir).map_err(|e| Failure::User(format!("{}: {e}", dir.display())))?;
        let lock = WriterLock::acquire(dir).map_err(|e| Failure::User(e.to_string()))?;
        let sets = load_sets(dir).map_err(|e| Failure::User(e.to_string()))?;
        let merges = load_merges(dir)?;
        let mut s = Session::in_memory(corpus, sets, merges);
        s.dir = Some(dir.to_path_buf());
        s._lock = Some(lock);
        Ok(s)
    }

    /// A session that never touches the disk.
    pub fn in_memory(corpus: Corpus, sets: SetTable, merges: MergeMap) -> Self {
        Session {
            dir: None,
            corpus: Arc::new(corpus),
            sets: Arc::new(sets),
            merges: Arc::new(merges),
            version: 1,
            cache: HashMap::new(),
            cluster_params: (DEFAULT_THRESHOLD, false),
            _lock: None,
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn merges(&self) -> &MergeMap {
        &self.merges
    }

    fn bump(&mut self) {
        self.version += 1;
        self.cache.clear();
    }
}

pub type Shared = Arc<Mutex<Session>>;

#[derive(Clone)]
struct Snapshot {
    corpus: Arc<Corpus>,
    sets: Arc<SetTable>,
    merges: Arc<MergeMap>,
    version: u64,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    version: Option<u64>,
}

impl ApiError {
    fn bad_request(m: impl ToString) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: m.to_string(), version: None }
    }

    fn not_found(m: impl ToString) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, message: m.to_string(), version: None }
    }

    fn internal(m: impl ToString) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, message: m.to_string(), version: None }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(v) = self.version {
            body["version"] = json!(v);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn lock(state: &Shared) -> MutexGuard<'_, Session> {
    state.lock().unwrap_or_else(|p| p.into_inner())
}

fn check_version(headers: &HeaderMap, current: u64) -> Result<(), ApiError> {
    let Some(raw) = headers.get(VERSION_HEADER) else {
        return Ok(());
    };
    let wanted: u64 = raw
        .to_str()
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| ApiError::bad_request("If-Version must be an integer"))?;
    if wanted != current {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            message: format!("stale version {wanted}, current is {current}"),
            version: Some(current),
        });
    }
    Ok(())
}

/// Looks up `key` in the cache or computes it off the async runtime. The
/// result is only cached if no mutation happened meanwhile.
async fn cached<F>(state: &Shared, headers: &HeaderMap, key: String, compute: F) -> ApiResult
where
    F: FnOnce(&Snapshot) -> Result<Value, ApiError> + Send + 'static,
{
    let snap = {
        let s = lock(state);
        check_version(headers, s.version)?;
        if let Some(hit) = s.cache.get(&key) {
            return Ok(Json(with_version(hit, s.version)));
        }
        Snapshot { corpus: s.corpus.clone(), sets: s.sets.clone(), merges: s.merges.clone(), version: s.version }
    };
    let version = snap.version;
    let value = tokio::task::spawn_blocking(move || compute(&snap))
        .await
        .map_err(ApiError::internal)??;
    let value = Arc::new(value);
    let mut s = lock(state);
    if s.version == version {
        s.cache.insert(key, value.clone());
    }
    Ok(Json(with_version(&value, version)))
}

fn with_version(body: &Value, version: u64) -> Value {
    let mut out = body.clone();
    out["version"] = json!(version);
    out
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/spectrum", get(get_spectrum))
        .route("/crtable", get(get_crtable))
        .route("/clusters", get(get_clusters))
        .route("/clusters/{id}/decision", post(post_decision))
        .route("/graph/keywords", get(get_keywords))
        .route("/graph/countries", get(get_countries))
        .route("/trends/counts", get(get_counts))
        .route("/query", post(post_query))
        .with_state(state)
}

fn params<T>(q: Result<UrlQuery<T>, axum::extract::rejection::QueryRejection>) -> Result<T, ApiError> {
    q.map(|UrlQuery(t)| t).map_err(|e| ApiError::bad_request(e.body_text()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpectrumParams {
    #[serde(default = "default_min_rpy")]
    min_rpy: i32,
    #[serde(default = "default_min_count")]
    min_count: u64,
}

fn default_min_rpy() -> i32 {
    1900
}

fn default_min_count() -> u64 {
    1
}

async fn get_spectrum(
    State(state): State<Shared>,
    headers: HeaderMap,
    q: Result<UrlQuery<SpectrumParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let p = params(q)?;
    let key = format!("spectrum:{}:{}", p.min_rpy, p.min_count);
    cached(&state, &headers, key, move |snap| {
        let table = biblioscope_core::rpys::build_cr_table(&snap.corpus, &snap.merges, p.min_rpy, p.min_count)
            .map_err(ApiError::bad_request)?;
        Ok(json!({
            "min_rpy": p.min_rpy,
            "min_count": p.min_count,
            "merge_map_version": table.provenance.merge_map_version,
            "points": spectrum(&table),
        }))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CrTableParams {
    #[serde(default = "default_min_rpy")]
    min_rpy: i32,
    #[serde(default = "default_min_count")]
    min_count: u64,
    band: Option<String>,
    #[serde(default)]
    selected_only: bool,
}

async fn get_crtable(
    State(state): State<Shared>,
    headers: HeaderMap,
    q: Result<UrlQuery<CrTableParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let p = params(q)?;
    let bands = p.band.clone().unwrap_or_else(|| DEFAULT_BANDS.to_string());
    let key = format!("crtable:{}:{}:{}:{}", p.min_rpy, p.min_count, bands, p.selected_only);
    cached(&state, &headers, key, move |snap| {
        let mut table = full_cr_table(&snap.corpus, &snap.merges, p.min_rpy, p.min_count, &bands)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        if p.selected_only {
            table.rows.retain(|r| r.selected);
        }
        let rows: Vec<Value> = table
            .rows
            .iter()
            .map(|r| {
                json!({
                    "cr": r.canonical_ref.raw,
                    "rpy": r.rpy,
                    "n_cr": r.n_cr,
                    "n_top10": r.n_top10,
                    "selected": r.selected,
                    "first_author": r.canonical_ref.first_author,
                    "source": r.canonical_ref.source,
                    "doi": r.canonical_ref.doi,
                })
            })
            .collect();
        Ok(json!({ "bands": bands, "provenance": table.provenance, "rows": rows }))
    })
    .await
}

/// Status of a cluster as recorded in the merge audit: the most recent
/// decision touching one of its members.
fn cluster_status(cluster: &RefCluster, merges: &MergeMap) -> ClusterStatus {
    merges
        .audit()
        .iter()
        .rev()
        .find(|e| cluster.contains(&e.variant))
        .map_or(ClusterStatus::Pending, |e| match e.decision {
            Decision::Accept => ClusterStatus::Accepted,
            Decision::Reject => ClusterStatus::Rejected,
            Decision::Edit => ClusterStatus::Edited,
        })
}

/// Clusters over the unmerged variants, so ids stay stable while the curator
/// records decisions.
fn clusters_for(corpus: &Corpus, merges: &MergeMap, threshold: f64, volume_page: bool) -> Result<Vec<RefCluster>, ApiError> {
    let table = RefTable::from_corpus(corpus);
    let mut clusters = suggest_clusters(&table.rows, threshold, volume_page).map_err(ApiError::bad_request)?;
    for c in &mut clusters {
        c.status = cluster_status(c, merges);
    }
    Ok(clusters)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterParams {
    status: Option<ClusterStatus>,
    threshold: Option<f64>,
    volume_page: Option<bool>,
}

async fn get_clusters(
    State(state): State<Shared>,
    headers: HeaderMap,
    q: Result<UrlQuery<ClusterParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let p = params(q)?;
    let (threshold, volume_page) = {
        let mut s = lock(&state);
        let t = p.threshold.unwrap_or(s.cluster_params.0);
        let vp = p.volume_page.unwrap_or(s.cluster_params.1);
        if !(0.0..=1.0).contains(&t) {
            return Err(ApiError::bad_request(format!("threshold {t} outside [0, 1]")));
        }
        s.cluster_params = (t, vp);
        (t, vp)
    };
    let key = format!("clusters:{threshold}:{volume_page}:{:?}", p.status);
    cached(&state, &headers, key, move |snap| {
        let clusters = clusters_for(&snap.corpus, &snap.merges, threshold, volume_page)?;
        let list: Vec<Value> = clusters
            .iter()
            .filter(|c| p.status.is_none_or(|s| s == c.status))
            .map(|c| cluster_json(c, &snap.merges))
            .collect();
        Ok(json!({ "threshold": threshold, "volume_page": volume_page, "clusters": list }))
    })
    .await
}

fn cluster_json(c: &RefCluster, merges: &MergeMap) -> Value {
    let members: Vec<Value> = c
        .members
        .iter()
        .map(|m| {
            json!({
                "raw": m.raw(),
                "count": m.count,
                "first_author": m.fields.first_author,
                "source": m.fields.source,
                "volume": m.fields.volume,
                "page": m.fields.page,
                "doi": m.fields.doi,
                "canonical": merges.canonical(m.raw()),
            })
        })
        .collect();
    json!({
        "cluster_id": c.cluster_id,
        "rpy": c.rpy,
        "status": c.status,
        "suggested_canonical": c.suggested(),
        "members": members,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    decision: Decision,
    canonical: Option<String>,
}

async fn post_decision(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Result<Json<DecisionBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult {
    let id: u32 = id.parse().map_err(|_| ApiError::bad_request(format!("invalid cluster id {id:?}")))?;
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let state2 = state.clone();
    // decisions are serialized: the whole read-modify-write holds the lock
    tokio::task::spawn_blocking(move || {
        let mut s = lock(&state2);
        check_version(&headers, s.version)?;
        let (threshold, vp) = s.cluster_params;
        let clusters = clusters_for(&s.corpus, &s.merges, threshold, vp)?;
        let cluster = clusters
            .iter()
            .find(|c| c.cluster_id == id)
            .ok_or_else(|| ApiError::not_found(format!("no cluster {id}")))?;
        let mut merges = (*s.merges).clone();
        let status = merges
            .decide(cluster, body.decision, body.canonical.as_deref(), &now_timestamp())
            .map_err(ApiError::bad_request)?;
        if let Some(dir) = &s.dir {
            merges.save(&dir.join(MERGES_FILE)).map_err(ApiError::internal)?;
        }
        let merge_map_version = merges.version();
        s.merges = Arc::new(merges);
        s.bump();
        Ok(Json(json!({
            "version": s.version,
            "cluster_id": id,
            "status": status,
            "merge_map_version": merge_map_version,
        })))
    })
    .await
    .map_err(ApiError::internal)?
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordParams {
    #[serde(default = "default_min_occ")]
    min_occ: u64,
    max_nodes: Option<usize>,
    #[serde(default = "default_resolution")]
    resolution: f64,
    #[serde(default)]
    seed: u64,
}

fn default_min_occ() -> u64 {
    10
}

fn default_resolution() -> f64 {
    1.0
}

fn graph_body(graph: BiblioGraph, corpus: &Corpus, resolution: f64, seed: u64) -> Result<Value, ApiError> {
    let graph = overlay_mean_year(&graph, corpus);
    let graph = if graph.nodes.is_empty() {
        graph
    } else {
        cluster_graph(&graph, resolution, seed).map_err(ApiError::bad_request)?
    };
    Ok(to_graph_json(&graph))
}

async fn get_keywords(
    State(state): State<Shared>,
    headers: HeaderMap,
    q: Result<UrlQuery<KeywordParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let p = params(q)?;
    let key = format!("keywords:{}:{:?}:{}:{}", p.min_occ, p.max_nodes, p.resolution, p.seed);
    cached(&state, &headers, key, move |snap| {
        let g = keyword_cooccurrence(&snap.corpus, p.min_occ, p.max_nodes).map_err(ApiError::bad_request)?;
        graph_body(g, &snap.corpus, p.resolution, p.seed)
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountryParams {
    #[serde(default = "default_min_pubs")]
    min_pubs: u64,
    #[serde(default = "default_max_countries")]
    max_countries: usize,
    #[serde(default = "default_true")]
    drop_disconnected: bool,
    #[serde(default = "default_resolution")]
    resolution: f64,
    #[serde(default)]
    seed: u64,
}

fn default_min_pubs() -> u64 {
    5
}

fn default_max_countries() -> usize {
    25
}

fn default_true() -> bool {
    true
}

async fn get_countries(
    State(state): State<Shared>,
    headers: HeaderMap,
    q: Result<UrlQuery<CountryParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let p = params(q)?;
    let key = format!(
        "countries:{}:{}:{}:{}:{}",
        p.min_pubs, p.max_countries, p.drop_disconnected, p.resolution, p.seed
    );
    cached(&state, &headers, key, move |snap| {
        let g = country_coauthorship(&snap.corpus, p.min_pubs, p.max_countries, p.drop_disconnected)
            .map_err(ApiError::bad_request)?;
        graph_body(g, &snap.corpus, p.resolution, p.seed)
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountsParams {
    set: Option<String>,
}

async fn get_counts(
    State(state): State<Shared>,
    headers: HeaderMap,
    q: Result<UrlQuery<CountsParams>, axum::extract::rejection::QueryRejection>,
) -> ApiResult {
    let p = params(q)?;
    let key = format!("counts:{:?}", p.set);
    cached(&state, &headers, key, move |snap| {
        let set = match &p.set {
            None => snap.corpus.all("all"),
            Some(name) => snap.sets.get(name).cloned().ok_or_else(|| ApiError::not_found(format!("no saved set {name}")))?,
        };
        let series = annual_counts(&set, &snap.corpus).map_err(ApiError::bad_request)?;
        let points: Vec<Value> = series.iter().map(|(year, count)| json!({ "year": year, "count": count })).collect();
        Ok(json!({ "set": set.name, "series": points }))
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    script: String,
}

async fn post_query(
    State(state): State<Shared>,
    headers: HeaderMap,
    body: Result<Json<QueryBody>, axum::extract::rejection::JsonRejection>,
) -> ApiResult {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let statements = parse_script(&body.script).map_err(ApiError::bad_request)?;
    let state2 = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut s = lock(&state2);
        check_version(&headers, s.version)?;
        let mut sets = (*s.sets).clone();
        let outcomes = run_script(&statements, &s.corpus, &mut sets).map_err(ApiError::bad_request)?;
        if let Some(dir) = &s.dir {
            for o in &outcomes {
                save_set(dir, &sets[&o.name]).map_err(ApiError::internal)?;
            }
        }
        s.sets = Arc::new(sets);
        s.bump();
        Ok(Json(json!({ "version": s.version, "sets": outcomes })))
    })
    .await
    .map_err(ApiError::internal)?
}

async fn serve(addr: SocketAddr, state: Shared) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

/// Runs the service until the process is interrupted.
pub fn serve_blocking(dir: &Path, host: &str, port: u16) -> Result<(), Failure> {
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| Failure::User(format!("invalid address {host}:{port}: {e}")))?;
    let session = Session::open(dir)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    runtime
        .block_on(serve(addr, Arc::new(Mutex::new(session))))
        .map_err(|e| Failure::User(format!("{addr}: {e}")))
}
