use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use redactor_core::corpus::CorpusError;
use redactor_core::ledger::LedgerError;
use redactor_core::substitute::SubstituteError;

/// A span named by its offsets, as listed in validation errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct SpanRef {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("document {doc_id} has no span [{start}, {end})")]
    UnknownSpan { doc_id: String, start: usize, end: usize },
    #[error("document {doc_id} is leased to {holder} until {expires_at_ms}")]
    Leased {
        doc_id: String,
        holder: String,
        expires_at_ms: u64,
    },
    #[error("missing X-Reviewer header")]
    MissingReviewer,
    #[error("{reviewer} holds no lease on {doc_id}")]
    NoLease { doc_id: String, reviewer: String },
    #[error("document {doc_id} has {} undecided span(s)", spans.len())]
    Undecided { doc_id: String, spans: Vec<SpanRef> },
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Substitute(#[from] SubstituteError),
    #[error("audit log {path}: {message}")]
    AuditLog { path: String, message: String },
}

impl ReviewError {
    pub fn status(&self) -> StatusCode {
        match self {
            ReviewError::UnknownDocument(_) | ReviewError::UnknownSpan { .. } => StatusCode::NOT_FOUND,
            ReviewError::Leased { .. } => StatusCode::CONFLICT,
            ReviewError::MissingReviewer => StatusCode::UNAUTHORIZED,
            ReviewError::NoLease { .. } => StatusCode::FORBIDDEN,
            ReviewError::Undecided { .. } | ReviewError::InvalidPatch(_) | ReviewError::UnknownStrategy(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ReviewError::Ledger(LedgerError::Conflict { .. } | LedgerError::Injectivity { .. }) => StatusCode::CONFLICT,
            ReviewError::Ledger(LedgerError::InvalidReplacement { .. }) => StatusCode::UNPROCESSABLE_ENTITY,
            ReviewError::Substitute(SubstituteError::PoolExhausted { .. } | SubstituteError::TooShort { .. }) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ReviewError::UnknownDocument(_) => "unknown_document",
            ReviewError::UnknownSpan { .. } => "unknown_span",
            ReviewError::Leased { .. } => "leased",
            ReviewError::MissingReviewer => "missing_reviewer",
            ReviewError::NoLease { .. } => "no_lease",
            ReviewError::Undecided { .. } => "undecided_spans",
            ReviewError::InvalidPatch(_) => "invalid_patch",
            ReviewError::UnknownStrategy(_) => "unknown_strategy",
            ReviewError::Ledger(LedgerError::Conflict { .. } | LedgerError::Injectivity { .. }) => "ledger_conflict",
            ReviewError::Ledger(_) => "ledger",
            ReviewError::Corpus(_) => "corpus",
            ReviewError::Substitute(_) => "substitute",
            ReviewError::AuditLog { .. } => "audit_log",
        }
    }
}

impl IntoResponse for ReviewError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        let extra = match &self {
            ReviewError::Leased {
                holder, expires_at_ms, ..
            } => json!({ "holder": holder, "expires_at_ms": expires_at_ms }),
            ReviewError::Undecided { spans, .. } => json!({ "spans": spans }),
            ReviewError::Ledger(LedgerError::Conflict {
                original,
                category,
                existing,
                requested,
            }) => json!({
                "existing": { "original_surface": original, "pii_category": category, "replacement": existing },
                "requested": requested,
            }),
            ReviewError::Ledger(LedgerError::Injectivity {
                replacement,
                category,
                owner,
                original,
            }) => json!({
                "existing": { "original_surface": owner, "pii_category": category, "replacement": replacement },
                "requested_for": original,
            }),
            _ => json!({}),
        };
        if let (Some(body), Some(extra)) = (body.as_object_mut(), extra.as_object()) {
            body.extend(extra.clone());
        }
        (self.status(), Json(body)).into_response()
    }
}
