//! HTTP review service: reviewers lease documents, correct spans, roles,
//! decisions and replacements, and commit. Every action is appended to a
//! JSONL audit log that replays to the persisted state.
//!
//! There are no accounts. The reviewer id is read from the `X-Reviewer`
//! header; put the service behind your own authentication proxy.

pub mod clock;
pub mod error;
pub mod http;
pub mod service;

pub use clock::{Clock, ManualClock, SystemClock};
pub use error::{ReviewError, SpanRef};
pub use http::{router, serve, serve_on, REVIEWER_HEADER};
pub use service::{
    apply_commit, apply_patch, read_audit_log, replay, Action, AuditRecord, Checkout, DocAudit, DocStatus, DocSummary,
    Lease, LedgerSuggestion, PatchOutcome, Preview, ReviewConfig, ReviewService, SpanPatch, Suggestion,
};
