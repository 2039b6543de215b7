//! The publisher daemon's HTTP interface.

use std::io;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use super::ApiError;
use crate::claim::{Claim, ClaimDocument};
use crate::deployment::Deployment;
use crate::link::ContentLink;
use crate::receipt::ReceiptDocument;

type SaveHook = Arc<dyn Fn(&PublisherState) -> io::Result<()> + Send + Sync>;

pub struct PublisherState {
    pub world: Deployment,
    /// Which of the world's publishers this daemon speaks for.
    pub index: usize,
    pub on_change: Option<SaveHook>,
}

pub type SharedPublisher = Arc<Mutex<PublisherState>>;

impl PublisherState {
    pub fn new(world: Deployment, index: usize) -> Self {
        Self { world, index, on_change: None }
    }
}

pub fn publisher_router(state: SharedPublisher) -> Router {
    Router::new()
        .route("/issue", post(issue))
        .route("/claim/{link}", get(claim))
        .route("/health", get(health))
        .route("/stats", get(stats))
        .with_state(state)
}

fn lock(state: &SharedPublisher) -> std::sync::MutexGuard<'_, PublisherState> {
    state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn bearer(headers: &HeaderMap) -> Option<String> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
}

async fn issue(
    State(state): State<SharedPublisher>,
    headers: HeaderMap,
    Json(doc): Json<ClaimDocument>,
) -> Result<Json<ReceiptDocument>, ApiError> {
    let claim = Claim::from_document(&doc).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_claim", e.to_string()))?;
    let token = bearer(&headers);
    let mut guard = lock(&state);
    let s = &mut *guard;
    let now = s.world.now();
    let (node, store, ledger) = s.world.parts(s.index);
    let receipt = node.handle_issuance(store, ledger, &claim, &claim.creator_id, token.as_deref(), now)?;
    if let Some(save) = &s.on_change {
        save(s).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?;
    }
    Ok(Json(receipt.to_document()))
}

async fn claim(State(state): State<SharedPublisher>, Path(link): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let link: ContentLink = link.parse().map_err(|e: crate::link::LinkParseError| ApiError::bad_request(e.to_string()))?;
    let mut guard = lock(&state);
    let s = &mut *guard;
    let (node, store, _) = s.world.parts(s.index);
    let bytes = node.serve_claim(store, &link)?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], Bytes::from(bytes)))
}

async fn health(State(state): State<SharedPublisher>) -> Json<Value> {
    let s = lock(&state);
    let p = &s.world.publishers()[s.index];
    let status = if p.is_online() { "ok" } else { "offline" };
    Json(json!({ "status": status, "endpoint": p.endpoint(), "address": p.address(), "now": s.world.now() }))
}

async fn stats(State(state): State<SharedPublisher>) -> Json<Value> {
    let s = lock(&state);
    let p = &s.world.publishers()[s.index];
    let mut out = serde_json::to_value(p.stats()).expect("stats serialize");
    out["queue_depth"] = json!(p.queue_depth());
    Json(out)
}
