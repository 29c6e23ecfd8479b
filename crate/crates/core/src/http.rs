//! JSON over HTTP.
//!
//! Reads run concurrently against the current database. Writes go through
//! a single writer slot; a write arriving while another is in progress is
//! refused with 409 rather than queued.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};
use tokio::sync::{Mutex, MutexGuard, RwLock};

use crate::session::{tuples_info, Compiled, Session, SessionError};
use crate::sql::Schema;
use crate::value::Value;

pub struct AppState {
    session: RwLock<Session>,
    writer: Mutex<()>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<Self> {
        Arc::new(AppState {
            session: RwLock::new(session),
            writer: Mutex::new(()),
        })
    }

    /// Claims the writer slot, or `None` if a write is in progress.
    pub fn try_begin_write(&self) -> Option<MutexGuard<'_, ()>> {
        self.writer.try_lock().ok()
    }

    pub async fn snapshot(&self) -> Session {
        self.session.read().await.clone()
    }
}

pub enum ApiError {
    BadRequest { kind: String, message: String },
    Conflict,
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::BadRequest {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest {
            kind: "BadRequest".into(),
            message: e.body_text(),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::BadRequest {
            kind: "BadRequest".into(),
            message: e.body_text(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::BadRequest { kind, message } => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": { "kind": kind, "message": message } })),
            )
                .into_response(),
            ApiError::Conflict => (
                StatusCode::CONFLICT,
                Json(json!({ "error": { "kind": "WriteConflict", "message": "another write is in progress" } })),
            )
                .into_response(),
        }
    }
}

type ApiResult = Result<Json<JsonValue>, ApiError>;

fn value_json(v: &Value) -> JsonValue {
    match v {
        Value::Int(i) => json!(i),
        Value::Float(f) => json!(f.into_inner()),
        Value::Str(s) => json!(s),
    }
}

fn schema_json(s: &Schema) -> JsonValue {
    json!({
        "relation": s.relation,
        "display": s.to_string(),
        "columns": s.columns.iter().map(|c| json!({
            "name": c.name,
            "type": c.ty.to_string(),
            "provenance": c.provenance,
        })).collect::<Vec<_>>(),
    })
}

fn compiled_json(c: &Compiled) -> JsonValue {
    json!({ "schema": schema_json(&c.schema), "compiledProgram": c.listing() })
}

#[derive(Deserialize)]
struct SqlBody {
    sql: String,
}

#[derive(Deserialize)]
struct ProgramBody {
    program: String,
}

#[derive(Deserialize)]
struct DdlBody {
    stmt: String,
}

async fn query(State(st): State<Arc<AppState>>, body: Result<Json<SqlBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let answer = st.session.read().await.query(&body.sql)?;
    let grouped = answer.grouped();
    let compiled = Compiled {
        schema: answer.schema.clone(),
        rules: answer.compiled.clone(),
    };
    Ok(Json(json!({
        "schema": schema_json(&answer.schema),
        "rows": grouped.iter().map(|(t, _)| t.iter().map(value_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "multiplicities": grouped.iter().map(|(_, n)| n).collect::<Vec<_>>(),
        "compiledProgram": compiled.listing(),
        "info": tuples_info(answer.rows.len()),
    })))
}

async fn compile(
    State(st): State<Arc<AppState>>,
    params: Result<Query<SqlBody>, QueryRejection>,
) -> ApiResult {
    let Query(params) = params?;
    let compiled = st.session.read().await.compile(&params.sql)?;
    Ok(Json(compiled_json(&compiled)))
}

async fn catalog(State(st): State<Arc<AppState>>) -> ApiResult {
    let session = st.session.read().await;
    let db = session.database();
    let relations: Vec<JsonValue> = db
        .catalog()
        .iter()
        .map(|s| {
            let mut j = schema_json(s);
            j["name"] = json!(s.relation);
            j["rows"] = json!(db.facts().get(&s.relation).map_or(0, Vec::len));
            j
        })
        .collect();
    Ok(Json(json!({ "relations": relations })))
}

async fn ddl(State(st): State<Arc<AppState>>, body: Result<Json<DdlBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let _slot = st.try_begin_write().ok_or(ApiError::Conflict)?;
    let info = st.session.write().await.ddl(&body.stmt)?;
    Ok(Json(json!({ "info": info })))
}

async fn datalog(State(st): State<Arc<AppState>>, body: Result<Json<ProgramBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let _slot = st.try_begin_write().ok_or(ApiError::Conflict)?;
    let output = st.session.write().await.datalog_program(&body.program)?;
    Ok(Json(json!({ "info": output })))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/query", post(query))
        .route("/datalog", post(datalog))
        .route("/catalog", get(catalog))
        .route("/ddl", post(ddl))
        .route("/compile", get(compile))
        .with_state(state)
}

/// Serves the API on `0.0.0.0:port` until the process ends.
pub async fn serve(session: Session, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(AppState::new(session))).await
}
