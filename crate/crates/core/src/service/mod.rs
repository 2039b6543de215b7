//! HTTP+JSON front ends for the client and publisher roles.
//!
//! Both routers wrap a [`Deployment`](crate::Deployment) behind a mutex.
//! Handlers never hold the lock across an await point, so a plain
//! `std::sync::Mutex` is enough.

mod client_api;
mod publisher_api;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

pub use client_api::{client_router, issued_json, report_json, ClientState, SharedClient};
pub use publisher_api::{publisher_router, PublisherState, SharedPublisher};

use crate::client::ClientError;
use crate::publisher::PublisherError;

/// Error body: `{"error": <kind>, "message": <text>}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self { status, kind, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.kind, "message": self.message }))).into_response()
    }
}

impl From<ClientError> for ApiError {
    fn from(e: ClientError) -> Self {
        let (status, kind) = match &e {
            ClientError::Claim(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_claim"),
            ClientError::EmptyBody => (StatusCode::UNPROCESSABLE_ENTITY, "empty_body"),
            ClientError::Unsigned | ClientError::MissingTopic => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_claim"),
            ClientError::StoreFailure(_) => (StatusCode::BAD_GATEWAY, "store_failure"),
            ClientError::LedgerRejection(_) => (StatusCode::CONFLICT, "ledger_rejection"),
            ClientError::LedgerUnavailable => (StatusCode::SERVICE_UNAVAILABLE, "ledger_unavailable"),
            ClientError::PublisherNotRegistered(_) => (StatusCode::NOT_FOUND, "publisher_not_registered"),
            ClientError::PublisherUnreachable(_) => (StatusCode::BAD_GATEWAY, "publisher_unreachable"),
            ClientError::PublisherRejected(_) => (StatusCode::BAD_GATEWAY, "publisher_rejected"),
            ClientError::BadReceipt(_) => (StatusCode::BAD_GATEWAY, "bad_receipt"),
            ClientError::DeadlineNotReached { .. } => (StatusCode::TOO_EARLY, "deadline_not_reached"),
            ClientError::InvalidFault => (StatusCode::CONFLICT, "no_fault"),
            ClientError::UnknownTarget(_) => (StatusCode::NOT_FOUND, "unknown_target"),
        };
        Self::new(status, kind, e.to_string())
    }
}

impl From<PublisherError> for ApiError {
    fn from(e: PublisherError) -> Self {
        let (status, kind) = match &e {
            PublisherError::Offline => (StatusCode::SERVICE_UNAVAILABLE, "offline"),
            PublisherError::Unauthorized(_) => (StatusCode::UNAUTHORIZED, "unauthorized"),
            PublisherError::RateLimited(_) => (StatusCode::TOO_MANY_REQUESTS, "rate_limited"),
            PublisherError::InvalidClaim(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_claim"),
            PublisherError::Store(crate::store::StoreError::NotFound(_)) => (StatusCode::NOT_FOUND, "not_found"),
            PublisherError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "store_failure"),
            PublisherError::LedgerRejection(_) => (StatusCode::SERVICE_UNAVAILABLE, "ledger_rejection"),
            PublisherError::InvalidConfig(_) => (StatusCode::INTERNAL_SERVER_ERROR, "invalid_config"),
        };
        Self::new(status, kind, e.to_string())
    }
}
