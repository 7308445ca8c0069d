//! HTTP API over the event tree engine.
//!
//! Sessions hold one model each. Clients create a session from a model
//! document, generate and reduce its tree, evaluate partitions, and fork
//! what-if sessions with a duplicated component. Rendered artifacts are
//! served as plain text.

mod error;
mod session;

use std::path::Path as FsPath;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use etma_core::document::{
    directives_from_json, model_from_json, partition_from_json, probs_from_json,
};
use etma_core::render::paths_report_with_table;
use etma_core::{
    add_parallel_redundancy, enumerate_paths, histogram_data, partition, partition_probability,
    paths_report, redundant_table, to_dot, validate_model, validate_probabilities, EventTree,
    LabelStyle, PartitionQuery, Probabilities, RenderOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

pub use error::ApiError;
pub use session::{HistoryEntry, Session, Store};

#[derive(Clone)]
pub struct AppState {
    store: Arc<Store>,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self {
            store: Arc::new(store),
        }
    }

    pub fn in_memory() -> Self {
        Self::new(Store::in_memory())
    }

    pub fn open(dir: impl AsRef<FsPath>) -> std::io::Result<Self> {
        Ok(Self::new(Store::open(dir)?))
    }

    pub fn store(&self) -> &Store {
        &self.store
    }
}

/// Builds the router. With `cors_origin` set, cross-origin requests from
/// that origin are allowed.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Result<Router, ApiError> {
    let app = Router::new()
        .route("/api/health", get(health))
        .route("/api/models", post(create_model))
        .route("/api/models/{id}", get(show_session))
        .route("/api/models/{id}/generate", post(generate))
        .route("/api/models/{id}/reduce", post(reduce))
        .route("/api/models/{id}/evaluate", post(evaluate))
        .route("/api/models/{id}/whatif", post(whatif))
        .route("/api/models/{id}/tree.dot", get(tree_dot))
        .route("/api/models/{id}/paths", get(paths_text))
        .route("/api/models/{id}/histogram.csv", get(histogram_csv))
        .with_state(state);
    Ok(match cors_origin {
        Some(origin) => {
            let origin: HeaderValue = origin
                .parse()
                .map_err(|_| ApiError::bad_request(format!("invalid CORS origin `{origin}`")))?;
            app.layer(
                CorsLayer::new()
                    .allow_origin(origin)
                    .allow_methods([Method::GET, Method::POST])
                    .allow_headers(Any),
            )
        }
        None => app,
    })
}

/// Serves the API on an already bound listener until the task is dropped.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    cors_origin: Option<&str>,
) -> std::io::Result<()> {
    let app = router(state, cors_origin)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.message))?;
    axum::serve(listener, app).await
}

type ApiResult<T> = Result<T, ApiError>;

fn text(content_type: &'static str, body: String) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

fn non_empty(body: &Bytes) -> ApiResult<&str> {
    let s = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    if s.trim().is_empty() {
        return Err(ApiError::bad_request("empty request body"));
    }
    Ok(s)
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_str(non_empty(body)?).map_err(|e| ApiError::bad_request(e.to_string()))
}

#[derive(Serialize)]
struct TreeSummary {
    id: String,
    path_count: usize,
    complete_path_count: Option<String>,
    directive_count: usize,
    dot_url: String,
    paths_url: String,
}

fn summary(id: &str, tree: &EventTree) -> TreeSummary {
    TreeSummary {
        id: id.to_owned(),
        path_count: tree.leaf_count(),
        complete_path_count: tree.model().complete_path_count().map(|n| n.to_string()),
        directive_count: tree.directives().len(),
        dot_url: format!("/api/models/{id}/tree.dot"),
        paths_url: format!("/api/models/{id}/paths"),
    }
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_model(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let model = model_from_json(non_empty(&body)?)?;
    let report = validate_model(&model);
    if report.has_errors() {
        return Err(ApiError::invalid("model failed validation", report));
    }
    let session = Session::new(model, None);
    let id = session.id.clone();
    state.store.insert(session).await?;
    tracing::info!(%id, "session created");
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": id, "warnings": report.violations })),
    )
        .into_response())
}

async fn show_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let handle = state.store.get(&id).await?;
    let s = handle.lock().await;
    Ok(Json(json!({
        "id": s.id,
        "parent": s.parent,
        "model": s.model,
        "generated": s.generated,
        "path_count": s.tree().map(|t| t.leaf_count()),
        "directives": s.directives(),
        "has_table": s.table.is_some(),
        "evaluations": s.evaluations,
        "history": s.history,
    })))
}

async fn generate(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Json<TreeSummary>> {
    let handle = state.store.get(&id).await?;
    let mut s = handle.lock().await;
    let out = summary(&id, s.generate()?);
    state.store.persist(&s)?;
    Ok(Json(out))
}

async fn reduce(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<TreeSummary>> {
    let directives = directives_from_json(non_empty(&body)?)?;
    let handle = state.store.get(&id).await?;
    let mut s = handle.lock().await;
    let out = summary(&id, s.reduce(directives)?);
    state.store.persist(&s)?;
    Ok(Json(out))
}

/// Parses an embedded document by round-tripping it through text.
fn embedded<T>(value: &Value, parse: fn(&str) -> etma_core::Result<T>) -> ApiResult<T> {
    Ok(parse(&value.to_string())?)
}

fn checked_table(session: &Session, table: Option<&Value>) -> ApiResult<Probabilities> {
    let table = match table {
        Some(v) => embedded(v, probs_from_json)?,
        None => session
            .table
            .clone()
            .ok_or_else(|| ApiError::unprocessable("no probability table supplied or stored"))?,
    };
    let report = validate_probabilities(&session.model, &table);
    if report.has_errors() {
        return Err(ApiError::invalid("probability table failed validation", report));
    }
    Ok(table)
}

fn evaluate_query(
    session: &Session,
    query: &PartitionQuery,
    table: &Probabilities,
) -> ApiResult<(f64, f64, Vec<usize>)> {
    query.validate(&session.model)?;
    let tree = session
        .tree()
        .ok_or_else(|| ApiError::internal("tree missing after generation"))?;
    let paths = enumerate_paths(tree);
    let result = partition(&paths, query)?;
    let (sel, comp) = partition_probability(&paths, &result, table)?;
    Ok((sel, comp, result.selected.into_iter().collect()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateRequest {
    partition: Value,
    #[serde(default)]
    table: Option<Value>,
    #[serde(default)]
    label: Option<String>,
}

async fn evaluate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let req: EvaluateRequest = json_body(&body)?;
    let query = embedded(&req.partition, partition_from_json)?;
    let handle = state.store.get(&id).await?;
    let mut s = handle.lock().await;
    let table = checked_table(&s, req.table.as_ref())?;
    s.ensure_tree()?;
    let (sel, comp, selected) = evaluate_query(&s, &query, &table)?;
    let label = req
        .label
        .unwrap_or_else(|| format!("partition {}", s.evaluations.len() + 1));
    s.table = Some(table);
    s.evaluations.push((label.clone(), sel));
    s.record(format!("evaluate {label}"));
    state.store.persist(&s)?;
    Ok(Json(json!({
        "label": label,
        "p_selected": sel,
        "p_complement": comp,
        "selected_indices": selected,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Comparison {
    label: String,
    before: Value,
    after: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfRequest {
    duplicate: String,
    #[serde(default)]
    table: Option<Value>,
    #[serde(default)]
    comparisons: Vec<Comparison>,
}

/// Forks a session with one component duplicated in parallel. The source
/// session is left as it was.
async fn whatif(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: WhatIfRequest = json_body(&body)?;
    let queries = req
        .comparisons
        .iter()
        .map(|c| {
            Ok((
                c.label.clone(),
                embedded(&c.before, partition_from_json)?,
                embedded(&c.after, partition_from_json)?,
            ))
        })
        .collect::<ApiResult<Vec<_>>>()?;

    let handle = state.store.get(&id).await?;
    let mut source = handle.lock().await.clone();
    if source.model.component(&req.duplicate).is_none() {
        return Err(ApiError::not_found(format!(
            "no component `{}` in the model",
            req.duplicate
        )));
    }
    source.ensure_tree()?;
    let directives = source.directives();
    let (model, rewritten) = add_parallel_redundancy(&source.model, &directives, &req.duplicate)?;

    let table = match (&req.table, &source.table) {
        (None, None) if queries.is_empty() => None,
        _ => Some(checked_table(&source, req.table.as_ref())?),
    };
    let mut fork = Session::new(model, Some(source.id.clone()));
    fork.table = table
        .as_ref()
        .map(|t| redundant_table(t, &req.duplicate))
        .transpose()?;
    fork.reduce(rewritten)?;
    fork.record(format!("whatif duplicate {}", req.duplicate));

    let mut comparisons = Vec::new();
    if let (Some(before_table), Some(after_table)) = (&table, fork.table.clone()) {
        for (label, before, after) in &queries {
            let (b, _, _) = evaluate_query(&source, before, before_table)?;
            let (a, _, _) = evaluate_query(&fork, after, &after_table)?;
            fork.evaluations.push((label.clone(), a));
            comparisons.push(json!({
                "label": label,
                "before": b,
                "after": a,
                "delta": a - b,
            }));
        }
    }

    let tree = fork.tree().expect("reduced above");
    let out = json!({
        "id": fork.id,
        "parent": source.id,
        "path_count": tree.leaf_count(),
        "complete_path_count": tree.model().complete_path_count().map(|n| n.to_string()),
        "components": fork.model.components.iter().map(|c| c.id.clone()).collect::<Vec<_>>(),
        "comparisons": comparisons,
    });
    state.store.insert(fork).await?;
    Ok((StatusCode::CREATED, Json(out)).into_response())
}

async fn generated_tree(state: &AppState, id: &str) -> ApiResult<Session> {
    let handle = state.store.get(id).await?;
    let s = handle.lock().await.clone();
    if s.tree().is_none() {
        return Err(ApiError::not_found(format!(
            "session `{id}` has no generated tree"
        )));
    }
    Ok(s)
}

async fn tree_dot(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = generated_tree(&state, &id).await?;
    let dot = to_dot(s.tree().expect("checked"), &RenderOptions::default());
    Ok(text("text/vnd.graphviz; charset=utf-8", dot))
}

async fn paths_text(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = generated_tree(&state, &id).await?;
    let paths = enumerate_paths(s.tree().expect("checked"));
    let body = match &s.table {
        Some(table) => paths_report_with_table(&paths, LabelStyle::Compact, table)?,
        None => paths_report(&paths, LabelStyle::Compact),
    };
    Ok(text("text/plain; charset=utf-8", body))
}

async fn histogram_csv(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let s = generated_tree(&state, &id).await?;
    Ok(text("text/csv; charset=utf-8", histogram_data(&s.evaluations)?))
}
