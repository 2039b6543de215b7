//! The local client service used by the CLI and the annotation UI.

use std::io;
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::ApiError;
use crate::claim::{Address, AnnotationBody, ClaimUid, Identity, Topic};
use crate::client::{ClientError, TopicReport, Verdict, Whitelist};
use crate::deployment::{Deployment, IssuancePath, IssueOutcome, Issued};
use crate::receipt::{IssuanceReceipt, ReceiptDocument};
use crate::store::NodeId;

type SaveHook = Arc<dyn Fn(&ClientState) -> io::Result<()> + Send + Sync>;

pub struct ClientState {
    pub world: Deployment,
    pub identity: Identity,
    pub node: NodeId,
    pub whitelist: Whitelist,
    pub receipts: Vec<IssuanceReceipt>,
    pub default_path: IssuancePath,
    /// Called after every successful state change.
    pub on_change: Option<SaveHook>,
}

pub type SharedClient = Arc<Mutex<ClientState>>;

impl ClientState {
    pub fn new(world: Deployment, identity: Identity, node: NodeId, default_path: IssuancePath) -> Self {
        let whitelist = [identity.address()].into_iter().collect();
        Self { world, identity, node, whitelist, receipts: Vec::new(), default_path, on_change: None }
    }

    fn changed(&self) -> Result<(), ApiError> {
        match &self.on_change {
            Some(save) => save(self).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string())),
            None => Ok(()),
        }
    }
}

pub fn client_router(state: SharedClient) -> Router {
    Router::new()
        .route("/annotations", post(create_annotation).get(list_annotations))
        .route("/revocations", post(create_revocation))
        .route("/receipts", get(list_receipts))
        .route("/complaints", post(create_complaint))
        .route("/whitelist", get(get_whitelist).put(put_whitelist))
        .route("/publishers", get(list_publishers))
        .with_state(state)
}

fn lock(state: &SharedClient) -> std::sync::MutexGuard<'_, ClientState> {
    state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct PathChoice {
    publisher: Option<String>,
    direct: bool,
}

impl PathChoice {
    fn resolve(&self, default: &IssuancePath) -> IssuancePath {
        match (&self.publisher, self.direct) {
            (_, true) => IssuancePath::Direct,
            (Some(p), false) => IssuancePath::Publisher(p.clone()),
            (None, false) => default.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationRequest {
    url: String,
    text: Option<String>,
    verdict: Option<bool>,
    #[serde(flatten)]
    path: PathChoice,
}

/// JSON view of an issued claim: the claim document, its link and either the
/// receipt or the ledger record with the fee paid.
pub fn issued_json(issued: &Issued) -> Result<Value, ClientError> {
    let claim = issued.claim.to_document()?;
    let link = issued.claim.link()?.to_string();
    let mut out = json!({ "claim": claim, "link": link });
    match &issued.outcome {
        IssueOutcome::Record { record, fee_usd } => {
            out["record"] = serde_json::to_value(record).expect("records serialize");
            out["feeUsd"] = json!(fee_usd);
        }
        IssueOutcome::Receipt(r) => out["receipt"] = serde_json::to_value(r.to_document()).expect("receipts serialize"),
    }
    Ok(out)
}

fn remember(s: &mut ClientState, issued: &Issued) {
    if let IssueOutcome::Receipt(r) = &issued.outcome {
        s.receipts.push(r.clone());
    }
}

async fn create_annotation(
    State(state): State<SharedClient>,
    Json(req): Json<AnnotationRequest>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let body = match (req.text, req.verdict) {
        (Some(t), None) => AnnotationBody::Text(t),
        (None, Some(v)) => AnnotationBody::Verdict(v),
        _ => return Err(ApiError::bad_request("give exactly one of `text` or `verdict`")),
    };
    let mut guard = lock(&state);
    let s = &mut *guard;
    let path = req.path.resolve(&s.default_path);
    let issued = s.world.annotate(&s.identity, &s.node, &req.url, body, &path)?;
    remember(s, &issued);
    s.changed()?;
    Ok((StatusCode::CREATED, Json(issued_json(&issued)?)))
}

#[derive(Debug, Deserialize)]
struct RevocationRequest {
    target: String,
    url: Option<String>,
    #[serde(flatten)]
    path: PathChoice,
}

async fn create_revocation(
    State(state): State<SharedClient>,
    Json(req): Json<RevocationRequest>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let target: ClaimUid = req.target.parse().map_err(|e: crate::claim::ClaimError| ApiError::bad_request(e.to_string()))?;
    let topic = req.url.as_deref().map(Topic::of_url).transpose().map_err(ClientError::from)?;
    let mut guard = lock(&state);
    let s = &mut *guard;
    let path = req.path.resolve(&s.default_path);
    let issued = s.world.revoke(&s.identity, &s.node, target, topic, &path)?;
    remember(s, &issued);
    s.changed()?;
    Ok((StatusCode::CREATED, Json(issued_json(&issued)?)))
}

#[derive(Debug, Deserialize)]
struct ViewQuery {
    url: String,
    #[serde(default)]
    all: bool,
}

fn annotation_entry(vc: &crate::client::VerifiedClaim) -> Value {
    let mut entry = json!({
        "link": vc.link.to_string(),
        "verdict": vc.verdict.as_str(),
        "issuer": vc.record.issuer,
        "timestamp": vc.record.timestamp,
    });
    if let Some(claim) = &vc.claim {
        entry["creator"] = json!(claim.creator_id);
        entry["kind"] = json!(claim.kind().token());
        if let Some(a) = claim.annotation_payload() {
            match &a.body {
                AnnotationBody::Verdict(v) => entry["classification"] = json!(v),
                AnnotationBody::Text(t) => entry["text"] = json!(t),
            }
        }
        if let Ok(doc) = claim.to_document() {
            entry["claim"] = serde_json::to_value(doc).expect("documents serialize");
        }
    }
    entry
}

/// JSON view of a topic. Only accepted annotations are listed unless `all` is set.
pub fn report_json(url: &str, report: &TopicReport, all: bool) -> Value {
    let claims: Vec<Value> = report
        .claims
        .iter()
        .filter(|c| all || (c.verdict == Verdict::Accepted && c.claim.as_ref().is_some_and(|cl| cl.annotation_payload().is_some())))
        .map(annotation_entry)
        .collect();
    json!({
        "url": url,
        "topic": report.topic.to_hex(),
        "claims": claims,
        "counters": report.counters,
    })
}

async fn list_annotations(
    State(state): State<SharedClient>,
    Query(q): Query<ViewQuery>,
) -> Result<Json<Value>, ApiError> {
    let mut guard = lock(&state);
    let s = &mut *guard;
    let report = s.world.verify_topic(&q.url, &s.whitelist, &s.node)?;
    Ok(Json(report_json(&q.url, &report, q.all)))
}

fn receipt_status(world: &mut Deployment, r: &IssuanceReceipt) -> String {
    match world.audit(r) {
        Ok(result) => result.as_str().to_string(),
        Err(ClientError::DeadlineNotReached { .. }) => "pending".into(),
        Err(_) => "unknown".into(),
    }
}

async fn list_receipts(State(state): State<SharedClient>) -> Json<Value> {
    let mut guard = lock(&state);
    let s = &mut *guard;
    let receipts: Vec<Value> = s
        .receipts
        .clone()
        .iter()
        .map(|r| json!({ "receipt": r.to_document(), "status": receipt_status(&mut s.world, r) }))
        .collect();
    Json(json!({ "now": s.world.now(), "receipts": receipts }))
}

#[derive(Debug, Deserialize)]
struct ComplaintRequest {
    receipt: ReceiptDocument,
}

async fn create_complaint(
    State(state): State<SharedClient>,
    Json(req): Json<ComplaintRequest>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let receipt = IssuanceReceipt::from_document(&req.receipt).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut guard = lock(&state);
    let s = &mut *guard;
    let filed = s.world.complain(&s.identity, &s.node, &receipt)?;
    s.changed()?;
    let doc = filed.claim.to_document().map_err(ClientError::from)?;
    let link = filed.claim.link().map_err(ClientError::from)?.to_string();
    Ok((
        StatusCode::CREATED,
        Json(json!({ "complaint": doc, "link": link, "fault": filed.fault, "tx": filed.tx })),
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct WhitelistBody {
    addresses: Vec<Address>,
}

async fn get_whitelist(State(state): State<SharedClient>) -> Json<WhitelistBody> {
    let s = lock(&state);
    Json(WhitelistBody { addresses: s.whitelist.iter().copied().collect() })
}

async fn put_whitelist(
    State(state): State<SharedClient>,
    Json(body): Json<WhitelistBody>,
) -> Result<Json<WhitelistBody>, ApiError> {
    let mut s = lock(&state);
    s.whitelist = body.addresses.into_iter().collect();
    s.changed()?;
    Ok(Json(WhitelistBody { addresses: s.whitelist.iter().copied().collect() }))
}

async fn list_publishers(State(state): State<SharedClient>) -> Json<Value> {
    let s = lock(&state);
    let list: Vec<Value> = s
        .world
        .ledger
        .list_publishers()
        .iter()
        .map(|p| {
            json!({
                "address": p.address,
                "endpoint": p.endpoint,
                "status": p.status,
                "complaints": s.world.ledger.complaints_against(&p.address).len(),
            })
        })
        .collect();
    Json(json!({ "publishers": list }))
}
